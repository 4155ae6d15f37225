//! Optical constants of Al_xGa_{1-x}As.
//!
//! Refractive indices come from closed-form dispersion models written generic over
//! [`Real`] so that the composition can be a design variable. The transparency test
//! uses the direct (Γ) bandgap at 300 K; the second-order nonlinearity is a linear
//! interpolation between configurable binary endpoints.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grad::Real;

/// `h c` in eV·nm.
pub const HC_EV_NM: f64 = 1_239.841_984;

/// Dispersion-model validity is restricted to this wavelength interval (nm).
pub const MODEL_WINDOW_NM: (f64, f64) = (500.0, 2000.0);

/// Photon energies closer than this to a model's own gap parameter are rejected.
const MODEL_GAP_GUARD_EV: f64 = 0.03;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MaterialError {
    #[error("Al fraction {0} outside [0, 1]")]
    Composition(f64),
    #[error(
        "wavelength {lambda_nm} nm outside the {model:?} window for x = {x}: valid for {min_nm:.1} nm <= λ <= {max_nm:.1} nm"
    )]
    Range { model: DispersionModel, x: f64, lambda_nm: f64, min_nm: f64, max_nm: f64 },
}

/// Aluminum fraction `x` of Al_xGa_{1-x}As.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Composition(f64);

impl Composition {
    pub const GAAS: Composition = Composition(0.0);
    pub const ALAS: Composition = Composition(1.0);

    pub fn new(x: f64) -> Result<Self, MaterialError> {
        if (0.0..=1.0).contains(&x) {
            Ok(Composition(x))
        } else {
            Err(MaterialError::Composition(x))
        }
    }

    pub fn al_fraction(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Composition {
    type Error = MaterialError;
    fn try_from(x: f64) -> Result<Self, Self::Error> {
        Composition::new(x)
    }
}

impl From<Composition> for f64 {
    fn from(c: Composition) -> f64 {
        c.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DispersionModel {
    /// Modified single-oscillator model, M. A. Afromowitz, Solid State Commun. 15, 59 (1974).
    #[default]
    Afromowitz,
    /// E0/E0+Δ0 critical-point model, S. Adachi, J. Appl. Phys. 58, R1 (1985).
    Adachi,
}

impl DispersionModel {
    /// Energy (eV) of the lowest singularity of the model at composition `x`.
    fn gap_parameter(self, x: f64) -> f64 {
        match self {
            DispersionModel::Afromowitz => 1.424 + 1.266 * x + 0.26 * x * x,
            DispersionModel::Adachi => 1.425 + 1.155 * x + 0.37 * x * x,
        }
    }

    /// Validity interval (nm) at composition `x`.
    pub fn window_nm(self, x: f64) -> (f64, f64) {
        let edge = HC_EV_NM / (self.gap_parameter(x) - MODEL_GAP_GUARD_EV);
        (MODEL_WINDOW_NM.0.max(edge), MODEL_WINDOW_NM.1)
    }

    pub fn check_window(self, x: f64, lambda_nm: f64) -> Result<(), MaterialError> {
        let (min_nm, max_nm) = self.window_nm(x);
        if lambda_nm >= min_nm && lambda_nm <= max_nm {
            Ok(())
        } else {
            Err(MaterialError::Range { model: self, x, lambda_nm, min_nm, max_nm })
        }
    }
}

/// Refractive index at composition `x` and vacuum wavelength `lambda_nm`.
pub fn refractive_index(x: Composition, lambda_nm: f64, model: DispersionModel) -> Result<f64, MaterialError> {
    model.check_window(x.0, lambda_nm)?;
    Ok(index_unchecked(x.0, lambda_nm, model))
}

/// Generic evaluation without the window check; callers validate `x` and `lambda_nm` first.
pub fn index_unchecked<T: Real>(x: T, lambda_nm: f64, model: DispersionModel) -> T {
    let e = HC_EV_NM / lambda_nm;
    let e2 = e * e;
    match model {
        DispersionModel::Afromowitz => {
            let x2 = x * x;
            let e0 = x * 0.871 + x2 * 0.179 + 3.65;
            let ed = (x * -2.45) + 36.1;
            let eg = x * 1.266 + x2 * 0.26 + 1.424;
            let e0_2 = e0 * e0;
            let e0_3 = e0_2 * e0;
            let eg_2 = eg * eg;
            let eta = ed * std::f64::consts::PI / (e0_3 * (e0_2 - eg_2) * 2.0);
            let ef_2 = e0_2 * 2.0 - eg_2;
            let log = ((ef_2 - e2) / (eg_2 - e2)).ln();
            let eps = ed / e0 + ed * e2 / e0_3 + eta * (e2 * e2 / std::f64::consts::PI) * log + 1.0;
            eps.sqrt()
        }
        DispersionModel::Adachi => {
            let x2 = x * x;
            let e0 = x * 1.155 + x2 * 0.37 + 1.425;
            let e0d = x * 1.115 + x2 * 0.37 + 1.765;
            let a0 = x * 19.0 + 6.3;
            let b0 = (x * -10.2) + 9.4;
            let f = |chi: T| {
                let s_plus = (chi + 1.0).sqrt();
                let s_minus = chi.rsub(1.0).sqrt();
                (s_plus + s_minus).rsub(2.0) / (chi * chi)
            };
            let ratio = e0 / e0d;
            let so_weight = (ratio * ratio * ratio).sqrt() * 0.5;
            let eps = a0 * (f(e0.rdiv(e)) + so_weight * f(e0d.rdiv(e))) + b0;
            eps.sqrt()
        }
    }
}

/// Direct (Γ) bandgap of Al_xGa_{1-x}As at 300 K in eV.
///
/// Binary gaps from Varshni fits (GaAs: 1.519 eV, α = 0.5405 meV/K, β = 204 K;
/// AlAs: 3.099 eV, α = 0.885 meV/K, β = 530 K) with bowing −0.127 + 1.310x,
/// I. Vurgaftman et al., J. Appl. Phys. 89, 5815 (2001).
pub fn gamma_gap_ev(x: f64) -> f64 {
    let t = 300.0;
    let gaas = 1.519 - 0.5405e-3 * t * t / (t + 204.0);
    let alas = 3.099 - 0.885e-3 * t * t / (t + 530.0);
    let bowing = -0.127 + 1.310 * x;
    (1.0 - x) * gaas + x * alas - x * (1.0 - x) * bowing
}

/// Default safety margin below the bandgap for the transparency test.
pub const DEFAULT_TRANSPARENCY_MARGIN_EV: f64 = 0.050;

/// True iff the photon energy at `lambda_nm` lies below the Γ gap minus `margin_ev`.
pub fn is_transparent_with_margin(x: Composition, lambda_nm: f64, margin_ev: f64) -> bool {
    HC_EV_NM / lambda_nm < gamma_gap_ev(x.0) - margin_ev
}

pub fn is_transparent(x: Composition, lambda_nm: f64) -> bool {
    is_transparent_with_margin(x, lambda_nm, DEFAULT_TRANSPARENCY_MARGIN_EV)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Chi2Interpolation {
    #[default]
    Linear,
}

/// Effective second-order nonlinearity versus composition, in pm/V.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Chi2Model {
    pub d14_gaas_pm_per_v: f64,
    pub d14_alas_pm_per_v: f64,
    #[serde(default)]
    pub interpolation: Chi2Interpolation,
}

impl Default for Chi2Model {
    fn default() -> Self {
        Chi2Model { d14_gaas_pm_per_v: 119.0, d14_alas_pm_per_v: 32.0, interpolation: Chi2Interpolation::Linear }
    }
}

impl Chi2Model {
    pub fn at<T: Real>(&self, x: T) -> T {
        match self.interpolation {
            Chi2Interpolation::Linear => x * (self.d14_alas_pm_per_v - self.d14_gaas_pm_per_v) + self.d14_gaas_pm_per_v,
        }
    }
}

/// χ² samples (pm/V) for composition samples on a grid.
pub fn chi2_profile(compositions: &[f64], model: &Chi2Model) -> Vec<f64> {
    compositions.iter().map(|&x| model.at(x)).collect()
}


#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn chi2_is_affine(x1 in 0.0..1.0f64, x2 in 0.0..1.0f64, a in 0.0..1.0f64) {
            let m = Chi2Model::default();
            let lhs = m.at(a * x1 + (1.0 - a) * x2);
            let rhs = a * m.at(x1) + (1.0 - a) * m.at(x2);
            prop_assert!((lhs - rhs).abs() < 1e-10);
        }

        #[test]
        fn index_is_finite_and_above_one(x in 0.0..1.0f64, lambda in 500.0..2000.0f64) {
            let c = Composition::new(x).unwrap();
            for model in [DispersionModel::Afromowitz, DispersionModel::Adachi] {
                if let Ok(v) = refractive_index(c, lambda, model) {
                    prop_assert!(v.is_finite() && v > 1.0);
                }
            }
        }
    }
}
