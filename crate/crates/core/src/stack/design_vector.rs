use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{layer_name, EpitaxialStack, Role, StackError, StackParams};
use crate::grad::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Field {
    Thickness,
    AlFraction,
}

/// Which sublayer field a design entry controls. All periods of the group share it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Binding {
    pub group: usize,
    pub sublayer: usize,
    pub field: Field,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamBounds {
    pub lo: f64,
    pub hi: f64,
}

impl ParamBounds {
    pub fn new(lo: f64, hi: f64) -> Self {
        assert!(lo < hi, "bounds need lo < hi, got [{lo}, {hi}]");
        ParamBounds { lo, hi }
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignBounds {
    pub al_fraction: ParamBounds,
    pub bragg_thickness_nm: ParamBounds,
    pub buffer_thickness_nm: ParamBounds,
    pub core_thickness_nm: ParamBounds,
}

impl Default for DesignBounds {
    fn default() -> Self {
        DesignBounds {
            al_fraction: ParamBounds::new(0.5, 0.9),
            bragg_thickness_nm: ParamBounds::new(20.0, 200.0),
            buffer_thickness_nm: ParamBounds::new(20.0, 200.0),
            core_thickness_nm: ParamBounds::new(20.0, 200.0),
        }
    }
}

impl DesignBounds {
    pub fn thickness(&self, role: Role) -> ParamBounds {
        match role {
            Role::BraggBottom | Role::BraggTop => self.bragg_thickness_nm,
            Role::Buffer => self.buffer_thickness_nm,
            _ => self.core_thickness_nm,
        }
    }
}

/// Physical change per unit of design value at the middle of each range.
///
/// Adam's step is roughly `lr` in design units, so these set the per-iteration
/// movement of thicknesses and compositions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignScale {
    pub thickness_nm: f64,
    pub al_fraction: f64,
}

impl Default for DesignScale {
    fn default() -> Self {
        DesignScale { thickness_nm: 1000.0, al_fraction: 1.0 }
    }
}

/// Unconstrained design coordinates with their binding to a template stack.
///
/// Entry `i` decodes to `lo + (hi - lo) * σ(4 unit u / (hi - lo))`, so the slope at the
/// middle of the range is `unit` and the bounds are reached only asymptotically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignVector {
    pub values: Vec<f64>,
    pub binding: Vec<Binding>,
    pub bounds: Vec<ParamBounds>,
    pub units: Vec<f64>,
    pub template: EpitaxialStack,
}

/// Encoded values stop this far (as a fraction of the range) inside each bound, so a
/// layer sitting on a bound keeps a finite coordinate.
const BOUND_INSET: f64 = 1e-14;

fn squash<T: Real>(u: T, b: ParamBounds, unit: f64) -> T {
    let w = b.hi - b.lo;
    (u * (4.0 * unit / w)).logistic() * w + b.lo
}

fn unsquash(x: f64, b: ParamBounds, unit: f64) -> f64 {
    let w = b.hi - b.lo;
    let t = ((x - b.lo) / w).clamp(BOUND_INSET, 1.0 - BOUND_INSET);
    w / (4.0 * unit) * (t / (1.0 - t)).ln()
}

impl DesignVector {
    /// One entry per (group, sublayer, field) of every finite group.
    pub fn encode(stack: &EpitaxialStack, bounds: &DesignBounds, scale: &DesignScale) -> Result<Self, StackError> {
        let mut dv = DesignVector {
            values: Vec::new(),
            binding: Vec::new(),
            bounds: Vec::new(),
            units: Vec::new(),
            template: stack.clone(),
        };
        for (gi, g) in stack.groups.iter().enumerate().filter(|(_, g)| g.role.is_finite_layer()) {
            for (si, s) in g.sublayers.iter().enumerate() {
                let t = s.thickness_nm.unwrap_or(0.0);
                let a = s.al_fraction.al_fraction();
                for (field, x, b, unit) in [
                    (Field::Thickness, t, bounds.thickness(g.role), scale.thickness_nm),
                    (Field::AlFraction, a, bounds.al_fraction, scale.al_fraction),
                ] {
                    if !b.contains(x) {
                        return Err(StackError::Validation {
                            layer: layer_name(gi, g.role, si),
                            message: format!("{field:?} {x} outside design bounds [{}, {}]", b.lo, b.hi),
                        });
                    }
                    dv.values.push(unsquash(x, b, unit));
                    dv.binding.push(Binding { group: gi, sublayer: si, field });
                    dv.bounds.push(b);
                    dv.units.push(unit);
                }
            }
        }
        Ok(dv)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn with_values(&self, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), self.values.len());
        DesignVector { values, ..self.clone() }
    }

    /// Physical sublayer values for design coordinates `u` (taped or plain).
    pub fn decode_params<T: Real>(&self, u: &[T]) -> StackParams<T> {
        assert_eq!(u.len(), self.values.len());
        let base = StackParams::from_stack(&self.template);
        let mut groups: Vec<Vec<(T, T)>> =
            base.groups.iter().map(|g| g.iter().map(|&(t, a)| (T::constant(t), T::constant(a))).collect()).collect();
        for (i, b) in self.binding.iter().enumerate() {
            let x = squash(u[i], self.bounds[i], self.units[i]);
            let slot = &mut groups[b.group][b.sublayer];
            match b.field {
                Field::Thickness => slot.0 = x,
                Field::AlFraction => slot.1 = x,
            }
        }
        StackParams { groups }
    }

    pub fn decode(&self) -> EpitaxialStack {
        let p = self.decode_params(&self.values);
        self.template.with_params(&p).expect("decoded values lie within bounds")
    }

    /// SHA-256 over the little-endian bytes of the decoded layer values.
    pub fn fingerprint(&self) -> String {
        let p = self.decode_params(&self.values);
        let mut h = Sha256::new();
        for g in &p.groups {
            for &(t, a) in g {
                h.update(t.to_le_bytes());
                h.update(a.to_le_bytes());
            }
        }
        hex::encode(&h.finalize()[..8])
    }
}
