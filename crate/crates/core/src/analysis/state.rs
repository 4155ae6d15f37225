use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{AnalysisError, JointSpectralAmplitude};

/// Polarization part of the pair state after tracing out frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiphotonPolarizationState {
    pub c_hv: Complex64,
    pub c_vh: Complex64,
    /// `⟨φ_VH|φ_HV⟩` between the unit-norm channel amplitudes.
    pub overlap: Complex64,
    /// `1 − |overlap|²`, the which-frequency information left after tracing.
    pub distinguishability: f64,
    pub concurrence: f64,
}

pub fn polarization_state(jsa: &JointSpectralAmplitude) -> Result<BiphotonPolarizationState, AnalysisError> {
    let da = jsa.d_omega * jsa.d_omega;
    let nh: f64 = jsa.phi_hv.iter().map(|v| v.norm_sqr()).sum::<f64>() * da;
    let nv: f64 = jsa.phi_vh.iter().map(|v| v.norm_sqr()).sum::<f64>() * da;
    let total = nh + nv;
    if !(total > 0.0 && total.is_finite()) {
        return Err(AnalysisError::Domain("zero-norm joint spectral amplitude".into()));
    }
    let overlap = if nh > 0.0 && nv > 0.0 {
        let raw: Complex64 = jsa.phi_hv.iter().zip(&jsa.phi_vh).map(|(h, v)| h * v.conj()).sum::<Complex64>() * da;
        let o = raw / (nh * nv).sqrt();
        // Cauchy-Schwarz holds exactly; clamp rounding.
        if o.norm() > 1.0 {
            o / o.norm()
        } else {
            o
        }
    } else {
        Complex64::new(0.0, 0.0)
    };
    let c_hv = Complex64::new((nh / total).sqrt(), 0.0);
    let c_vh = Complex64::new((nv / total).sqrt(), 0.0);
    let concurrence = 2.0 * (c_hv * c_vh).norm() * overlap.norm() / (c_hv.norm_sqr() + c_vh.norm_sqr());
    Ok(BiphotonPolarizationState { c_hv, c_vh, overlap, distinguishability: 1.0 - overlap.norm_sqr(), concurrence })
}

/// Ion Zeeman level entangled with the photon helicity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IonPhotonState {
    pub amplitude_sigma_minus: f64,
    pub amplitude_sigma_plus: f64,
    pub level_sigma_minus: String,
    pub level_sigma_plus: String,
}

impl Default for IonPhotonState {
    fn default() -> Self {
        IonPhotonState {
            amplitude_sigma_minus: 3f64.sqrt() / 2.0,
            amplitude_sigma_plus: 0.5,
            level_sigma_minus: "D3/2, m=-3/2".into(),
            level_sigma_plus: "D3/2, m=+1/2".into(),
        }
    }
}

/// State record and concurrence `2|a₋ a₊|`. Without `renormalize` the amplitudes must
/// already be normalized to 1e-9.
pub fn ion_photon_state(
    amp_minus: f64,
    amp_plus: f64,
    renormalize: bool,
) -> Result<(IonPhotonState, f64), AnalysisError> {
    let n = amp_minus * amp_minus + amp_plus * amp_plus;
    if !(n > 0.0 && n.is_finite()) {
        return Err(AnalysisError::Domain("both ion-photon amplitudes are zero".into()));
    }
    let (a, b) = if renormalize {
        (amp_minus / n.sqrt(), amp_plus / n.sqrt())
    } else if (n - 1.0).abs() > 1e-9 {
        return Err(AnalysisError::Domain(format!("amplitudes have norm² {n}; pass renormalize")));
    } else {
        (amp_minus, amp_plus)
    };
    let state = IonPhotonState { amplitude_sigma_minus: a, amplitude_sigma_plus: b, ..IonPhotonState::default() };
    Ok((state, 2.0 * (a * b).abs()))
}
