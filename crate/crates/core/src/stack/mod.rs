//! Epitaxial stack data model.
//!
//! A stack is an ordered list of layer groups from the substrate (bottom) to air (top).
//! Each group repeats its sublayer sequence `repeat` times. The substrate group has one
//! sublayer without a thickness (semi-infinite); the air group has no sublayers.

mod design_vector;
mod file;
mod profile;

pub use design_vector::{Binding, DesignBounds, DesignScale, DesignVector, Field, ParamBounds};
pub use file::{parse_stack, serialize_stack};
pub use profile::{
    build_index_profile, build_profiles, Grid, IndexProfile, LayerSpan, ProfileChannels, ProfileLayout, ProfileOptions,
    SubstrateModel,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grad::Real;
use crate::materials::{is_transparent, Composition, MaterialError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StackError {
    #[error("stack document: {message} at `{path}` (line {line}, column {column})")]
    Schema { path: String, line: usize, column: usize, message: String },
    #[error("invalid stack: {layer}: {message}")]
    Validation { layer: String, message: String },
    #[error("layer {layer} (Al {al_fraction}) absorbs at {lambda_nm} nm")]
    Absorbing { layer: String, al_fraction: f64, lambda_nm: f64 },
    #[error("grid spacing {spacing_nm} nm too coarse: must be <= {max_nm} nm (a quarter of the thinnest layer)")]
    Resolution { spacing_nm: f64, max_nm: f64 },
    #[error("smoothing width {width_nm} nm too large: must be < {max_nm} nm (half the thinnest layer)")]
    Smoothing { width_nm: f64, max_nm: f64 },
    #[error(transparent)]
    Material(#[from] MaterialError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Substrate,
    BraggBottom,
    Buffer,
    Core,
    BraggTop,
    Air,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Substrate => "substrate",
            Role::BraggBottom => "bragg_bottom",
            Role::Buffer => "buffer",
            Role::Core => "core",
            Role::BraggTop => "bragg_top",
            Role::Air => "air",
        }
    }

    /// Roles whose sublayers carry a thickness and enter the design vector.
    pub fn is_finite_layer(self) -> bool {
        !matches!(self, Role::Substrate | Role::Air)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sublayer {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thickness_nm: Option<f64>,
    pub al_fraction: Composition,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerGroup {
    pub role: Role,
    pub repeat: u32,
    pub sublayers: Vec<Sublayer>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignWavelengths {
    pub pump: f64,
    pub te: f64,
    pub tm: f64,
}

impl DesignWavelengths {
    /// Signal 1092 nm (TE), idler 1550 nm (TM), pump from energy conservation.
    pub fn ion_interface() -> Self {
        DesignWavelengths { pump: crate::design::pump_wavelength(1092.0, 1550.0), te: 1092.0, tm: 1550.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpitaxialStack {
    pub design_wavelengths_nm: DesignWavelengths,
    pub groups: Vec<LayerGroup>,
}

/// One physical layer after expanding repeats.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlatLayer<T> {
    pub role: Role,
    pub group: usize,
    pub sublayer: usize,
    pub period: u32,
    pub thickness_nm: T,
    pub al_fraction: T,
}

/// Per-sublayer `(thickness, al_fraction)` values, indexed as `groups[g][s]`.
///
/// This is the shape the design path works in: the structure (roles, repeats) comes
/// from a stack, the numbers may be taped.
#[derive(Debug, Clone)]
pub struct StackParams<T> {
    pub groups: Vec<Vec<(T, T)>>,
}

impl StackParams<f64> {
    pub fn from_stack(stack: &EpitaxialStack) -> Self {
        StackParams {
            groups: stack
                .groups
                .iter()
                .map(|g| {
                    g.sublayers.iter().map(|s| (s.thickness_nm.unwrap_or(0.0), s.al_fraction.al_fraction())).collect()
                })
                .collect(),
        }
    }
}

impl<T: Real> StackParams<T> {
    pub fn values(&self) -> StackParams<f64> {
        StackParams {
            groups: self.groups.iter().map(|g| g.iter().map(|(t, a)| (t.value(), a.value())).collect()).collect(),
        }
    }
}

pub(crate) fn layer_name(group: usize, role: Role, sublayer: usize) -> String {
    format!("group {group} ({}) sublayer {sublayer}", role.as_str())
}

impl EpitaxialStack {
    /// The published ion-photon interface structure (48/4/36 periods).
    pub fn table1() -> Self {
        parse_stack(include_str!("../../data/table1.json")).expect("bundled Table 1 stack is valid")
    }

    pub fn validate(&self) -> Result<(), StackError> {
        let bad = |layer: String, message: String| Err(StackError::Validation { layer, message });
        let n = self.groups.len();
        if n < 3 {
            return bad("stack".into(), format!("needs substrate, at least one layer group and air; found {n} groups"));
        }
        if self.groups[0].role != Role::Substrate {
            return bad("group 0".into(), "first group must be the substrate".into());
        }
        if self.groups[n - 1].role != Role::Air {
            return bad(format!("group {}", n - 1), "last group must be air".into());
        }
        let w = self.design_wavelengths_nm;
        for (name, v) in [("pump", w.pump), ("te", w.te), ("tm", w.tm)] {
            if !(v.is_finite() && v > 0.0) {
                return bad("design_wavelengths_nm".into(), format!("{name} wavelength {v} must be positive"));
            }
        }
        for (gi, g) in self.groups.iter().enumerate() {
            let gname = format!("group {gi} ({})", g.role.as_str());
            if g.repeat < 1 {
                return bad(gname, "repeat count must be at least 1".into());
            }
            if (1..n - 1).contains(&gi) && !g.role.is_finite_layer() {
                return bad(gname, "substrate and air may only appear at the ends".into());
            }
            match g.role {
                Role::Substrate => {
                    if g.sublayers.len() != 1 || g.repeat != 1 {
                        return bad(gname, "substrate must be a single sublayer with repeat 1".into());
                    }
                    if g.sublayers[0].thickness_nm.is_some() {
                        return bad(gname, "substrate is semi-infinite and takes no thickness".into());
                    }
                }
                Role::Air => {
                    if !g.sublayers.is_empty() || g.repeat != 1 {
                        return bad(gname, "air takes no sublayers and repeat 1".into());
                    }
                }
                _ => {
                    if g.sublayers.is_empty() {
                        return bad(gname, "layer group needs at least one sublayer".into());
                    }
                    for (si, s) in g.sublayers.iter().enumerate() {
                        match s.thickness_nm {
                            Some(t) if t.is_finite() && t > 0.0 => {}
                            Some(t) => {
                                return bad(layer_name(gi, g.role, si), format!("thickness {t} nm must be positive"))
                            }
                            None => return bad(layer_name(gi, g.role, si), "missing thickness_nm".into()),
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Rejects any finite layer that absorbs at the pump wavelength.
    pub fn check_pump_transparency(&self) -> Result<(), StackError> {
        let lp = self.design_wavelengths_nm.pump;
        for (gi, g) in self.groups.iter().enumerate().filter(|(_, g)| g.role.is_finite_layer()) {
            for (si, s) in g.sublayers.iter().enumerate() {
                if !is_transparent(s.al_fraction, lp) {
                    return Err(StackError::Absorbing {
                        layer: layer_name(gi, g.role, si),
                        al_fraction: s.al_fraction.al_fraction(),
                        lambda_nm: lp,
                    });
                }
            }
        }
        Ok(())
    }

    /// Sum over all finite layers, repeats expanded.
    pub fn total_thickness(&self) -> f64 {
        self.groups
            .iter()
            .filter(|g| g.role.is_finite_layer())
            .map(|g| g.repeat as f64 * g.sublayers.iter().filter_map(|s| s.thickness_nm).sum::<f64>())
            .sum()
    }

    pub fn flatten(&self) -> Vec<FlatLayer<f64>> {
        flatten_params(self, &StackParams::from_stack(self))
    }

    pub fn group_of(&self, role: Role) -> Option<usize> {
        self.groups.iter().position(|g| g.role == role)
    }

    pub fn substrate(&self) -> Composition {
        self.groups[0].sublayers[0].al_fraction
    }

    /// Stack with every finite sublayer replaced by `params`.
    pub fn with_params(&self, params: &StackParams<f64>) -> Result<Self, StackError> {
        let mut out = self.clone();
        for (g, pg) in out.groups.iter_mut().zip(&params.groups) {
            if !g.role.is_finite_layer() {
                continue;
            }
            for (s, &(t, a)) in g.sublayers.iter_mut().zip(pg) {
                s.thickness_nm = Some(t);
                s.al_fraction = Composition::new(a)?;
            }
        }
        out.validate()?;
        Ok(out)
    }
}

/// Expands repeats of the finite groups, bottom to top.
pub fn flatten_params<T: Real>(stack: &EpitaxialStack, params: &StackParams<T>) -> Vec<FlatLayer<T>> {
    let mut out = Vec::new();
    for (gi, g) in stack.groups.iter().enumerate().filter(|(_, g)| g.role.is_finite_layer()) {
        for period in 0..g.repeat {
            for (si, &(t, a)) in params.groups[gi].iter().enumerate() {
                out.push(FlatLayer { role: g.role, group: gi, sublayer: si, period, thickness_nm: t, al_fraction: a });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table1_layout() {
        let s = EpitaxialStack::table1();
        let repeats: Vec<_> = s.groups.iter().map(|g| (g.role, g.repeat)).collect();
        assert_eq!(
            repeats,
            vec![
                (Role::Substrate, 1),
                (Role::BraggBottom, 48),
                (Role::Buffer, 1),
                (Role::Core, 4),
                (Role::Buffer, 1),
                (Role::BraggTop, 36),
                (Role::Air, 1)
            ]
        );
        assert!(s.check_pump_transparency().is_ok());
        assert_eq!(s.flatten().len(), 96 + 1 + 8 + 1 + 72);
    }

    #[test]
    fn table1_total_thickness() {
        let t = EpitaxialStack::table1().total_thickness();
        let expected = 48.0 * (48.4 + 58.6) + 120.7 + 4.0 * (91.7 + 96.4) + 120.7 + 36.0 * (58.6 + 48.4);
        assert!((t - expected).abs() < 1e-9);
        assert!((t - 9981.8).abs() < 1e-9, "{t}");
    }

    #[test]
    fn doubling_repeats_doubles_periodic_part() {
        let s = EpitaxialStack::table1();
        let mut d = s.clone();
        for g in d.groups.iter_mut().filter(|g| g.role.is_finite_layer()) {
            g.repeat *= 2;
        }
        assert!((d.total_thickness() - 2.0 * s.total_thickness()).abs() < 1e-9);
    }

    #[test]
    fn absorbing_layer_is_named() {
        let mut s = EpitaxialStack::table1();
        s.groups[3].sublayers[0].al_fraction = Composition::new(0.2).unwrap();
        match s.check_pump_transparency() {
            Err(StackError::Absorbing { layer, .. }) => assert_eq!(layer, "group 3 (core) sublayer 0"),
            r => panic!("{r:?}"),
        }
    }

    #[test]
    fn misplaced_air_is_rejected() {
        let mut s = EpitaxialStack::table1();
        s.groups.swap(5, 6);
        assert!(matches!(s.validate(), Err(StackError::Validation { .. })));
    }
}
