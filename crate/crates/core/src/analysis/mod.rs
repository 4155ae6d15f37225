//! Spectral and quantum-state analysis of a designed source.

mod dispersion;
mod jsa;
mod rate;
mod state;
mod tuning;

pub use dispersion::{CubicTable, DispersionConfig, ModeDispersion};
pub use jsa::{
    count_lobes, filter_jsa, jsa, marginal, Axis, FilteredJsa, JointSpectralAmplitude, JsaConfig, MarginalSample,
};
pub use rate::{collection_fraction, rate_budget, FactorKind, RateFactor, RateItem, RateLedger, RateReport};
pub use state::{ion_photon_state, polarization_state, BiphotonPolarizationState, IonPhotonState};
pub use tuning::{branch_splitting, crossing_angle_deg, tuning_curves, Process, TuningCurve, TuningSample};

use thiserror::Error;

use crate::modes::ModeError;
use crate::stack::StackError;

/// Speed of light in m/s.
pub const C_M_PER_S: f64 = 299_792_458.0;

/// Angular frequency in rad/s of a vacuum wavelength in nm.
pub fn omega_of_nm(lambda_nm: f64) -> f64 {
    2.0 * std::f64::consts::PI * C_M_PER_S / (lambda_nm * 1e-9)
}

/// Inverse of [`omega_of_nm`].
pub fn nm_of_omega(omega: f64) -> f64 {
    2.0 * std::f64::consts::PI * C_M_PER_S / omega * 1e9
}

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("grid too coarse: {points_across:.2} points across the phase-matching main lobe, need at least 8")]
    Resolution { points_across: f64 },
    #[error("filter window keeps no amplitude")]
    DegenerateFilter,
    #[error("domain error: {0}")]
    Domain(String),
    #[error("{lambda_nm} nm lies outside the tabulated window [{lo}, {hi}] nm")]
    OutsideTable { lambda_nm: f64, lo: f64, hi: f64 },
    #[error(transparent)]
    Stack(#[from] StackError),
    #[error(transparent)]
    Mode(#[from] ModeError),
}
