//! Figure of merit, phase matching, initialization and the design loop.

mod fom;
mod init;
mod optimize;

pub use fom::{
    efficiency_ratio, overlap_fom, overlap_integral, phase_matching_angle, phase_matching_sine, pump_wavelength,
    FigureOfMerit,
};
pub use init::{base_thickness, mean_al, sample_initial_stack, InitRanges};
pub use optimize::{
    audit_discrepancy, optimize, pretrain_surrogates, surrogate_gradient, trajectory_csv, FineTuneEvent,
    OptimizeConfig, OptimizeOutcome, StopReason, SurrogatePlan, TrajectoryRecord,
};

use thiserror::Error;

use crate::grad::{Cx, GradError, Real};
use crate::modes::{fundamental_mode, GuidedMode, ModeError, Polarization};
use crate::pump::solve_s;
use crate::quad::normalize_unit_power;
use crate::quad::unit_power;
use crate::stack::{
    build_profiles, DesignVector, EpitaxialStack, IndexProfile, ProfileOptions, StackError, StackParams,
};
use crate::surrogate::{Encoding, SurrogateError, SurrogateModel, TrainingSample};

#[derive(Debug, Error)]
pub enum DesignError {
    #[error("no real phase-matching angle: sin θ = {sine}")]
    NoRealAngle { sine: f64 },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("non-finite figure of merit or gradient at iteration {iteration}")]
    NonFinite { iteration: usize },
    #[error("reference overlap {reference} pm/V too small for a relative discrepancy")]
    IndeterminateDiscrepancy { reference: f64 },
    #[error(transparent)]
    Stack(#[from] StackError),
    #[error(transparent)]
    Mode(#[from] ModeError),
    #[error(transparent)]
    Surrogate(#[from] SurrogateError),
    #[error(transparent)]
    Grad(#[from] GradError),
}

/// Scalars of one figure-of-merit evaluation.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PathValues {
    pub gamma_abs: f64,
    pub n_te: f64,
    pub n_tm: f64,
    pub sin_theta: f64,
    pub theta_deg: f64,
}

/// `E = D/ε`, rescaled to unit power.
pub fn tm_efield_unit_power(d: &[f64], n: &[f64], h: f64) -> Vec<f64> {
    let mut e: Vec<f64> = d.iter().zip(n).map(|(d, n)| d / (n * n)).collect();
    normalize_unit_power(&mut e, h);
    e
}

/// Everything the reference path computes for one structure.
#[derive(Debug, Clone)]
pub struct ReferenceEvaluation {
    pub values: PathValues,
    pub fom: FigureOfMerit,
    pub te_profile: IndexProfile,
    pub tm_profile: IndexProfile,
    pub te: GuidedMode,
    pub tm: GuidedMode,
}

impl ReferenceEvaluation {
    /// Surrogate training samples of this structure, TE then TM.
    pub fn samples(&self, te_enc: &Encoding, tm_enc: &Encoding) -> (TrainingSample, TrainingSample) {
        let make = |p: &IndexProfile, m: &GuidedMode, e: &Encoding| TrainingSample {
            input: e.inputs(&p.n, &p.grid, p.substrate_index, p.cover_index),
            target_field: e.targets(&m.field, &m.grid),
            target_neff: m.n_eff,
        };
        (make(&self.te_profile, &self.te, te_enc), make(&self.tm_profile, &self.tm, tm_enc))
    }
}

/// Reference path: mode solver for both idler and signal, transfer matrix for the pump.
pub fn reference_fom(
    stack: &EpitaxialStack,
    opts: &ProfileOptions,
) -> Result<(PathValues, FigureOfMerit), DesignError> {
    let r = reference_evaluation(stack, opts)?;
    Ok((r.values, r.fom))
}

pub fn reference_evaluation(stack: &EpitaxialStack, opts: &ProfileOptions) -> Result<ReferenceEvaluation, DesignError> {
    let wl = stack.design_wavelengths_nm;
    let ch = build_profiles(stack, &StackParams::from_stack(stack), &[wl.pump, wl.te, wl.tm], opts)?;
    let te_profile = ch.index_profile(1);
    let tm_profile = ch.index_profile(2);
    let te = fundamental_mode(&te_profile, Polarization::TE)?;
    let tm = fundamental_mode(&tm_profile, Polarization::TM)?;
    let h = ch.grid.spacing_nm;
    let tm_e = tm_efield_unit_power(&tm.field, &ch.n[2], h);
    let s = phase_matching_sine(te.n_eff, tm.n_eff, wl.te, wl.tm, wl.pump);
    if !(s >= 0.0 && s < 1.0) {
        return Err(DesignError::NoRealAngle { sine: s });
    }
    let sol = solve_s(&ch.n[0], &ch.grid, ch.substrate_index[0], wl.pump, s);
    let theta_deg = s.asin().to_degrees();
    let pump: Vec<Cx<f64>> = (0..ch.grid.len).map(|i| sol.total(i)).collect();
    let fom = overlap_fom(&ch.chi2, &pump, &te.field, &tm_e, h, theta_deg)?;
    let values = PathValues { gamma_abs: fom.gamma_abs, n_te: te.n_eff, n_tm: tm.n_eff, sin_theta: s, theta_deg };
    Ok(ReferenceEvaluation { values, fom, te_profile, tm_profile, te, tm })
}

/// The TE model at the signal wavelength and the TM model at the idler wavelength.
#[derive(Debug, Clone, PartialEq)]
pub struct Surrogates {
    pub te: SurrogateModel,
    pub tm: SurrogateModel,
}

impl Surrogates {
    /// Version tag of the pair, the sum of both model versions.
    pub fn version(&self) -> u32 {
        self.te.version() + self.tm.version()
    }
}

/// Scalars of the surrogate path, in the scalar type of the design coordinates.
#[derive(Debug, Clone, Copy)]
pub struct SurrogatePath<T> {
    pub gamma_abs: T,
    pub n_te: T,
    pub n_tm: T,
    pub sin_theta: T,
}

impl<T: Real> SurrogatePath<T> {
    pub fn values(&self) -> PathValues {
        let s = self.sin_theta.value();
        PathValues {
            gamma_abs: self.gamma_abs.value(),
            n_te: self.n_te.value(),
            n_tm: self.n_tm.value(),
            sin_theta: s,
            theta_deg: s.asin().to_degrees(),
        }
    }
}

/// Surrogate path at design coordinates `u`: predicted modes and indices, the
/// phase-matching angle they imply, then the transfer-matrix pump at that angle.
pub fn surrogate_fom<T: Real>(
    dv: &DesignVector,
    u: &[T],
    models: &Surrogates,
    opts: &ProfileOptions,
) -> Result<SurrogatePath<T>, DesignError> {
    let wl = dv.template.design_wavelengths_nm;
    let params = dv.decode_params(u);
    let ch = build_profiles(&dv.template, &params, &[wl.pump, wl.te, wl.tm], opts)?;
    let h = ch.grid.spacing_nm;
    let air = T::constant(1.0);
    let te = models.te.predict_samples(&ch.n[1], &ch.grid, ch.substrate_index[1], air)?;
    let tm = models.tm.predict_samples(&ch.n[2], &ch.grid, ch.substrate_index[2], air)?;
    let e_tm: Vec<T> = tm.field.iter().zip(&ch.n[2]).map(|(d, n)| *d / (*n * *n)).collect();
    let e_tm = unit_power(&e_tm, h);
    let s = phase_matching_sine(te.n_eff, tm.n_eff, wl.te, wl.tm, wl.pump);
    if !(s.value() >= 0.0 && s.value() < 1.0) {
        return Err(DesignError::NoRealAngle { sine: s.value() });
    }
    let sol = solve_s(&ch.n[0], &ch.grid, ch.substrate_index[0], wl.pump, s);
    let pump: Vec<Cx<T>> = (0..ch.grid.len).map(|i| sol.total(i)).collect();
    let g = overlap_integral(&ch.chi2, &pump, &te.field, &e_tm, h)?;
    Ok(SurrogatePath { gamma_abs: g.abs(), n_te: te.n_eff, n_tm: tm.n_eff, sin_theta: s })
}

/// `|a − b| / max(b, ε)` with `ε = 1e-12`.
pub fn relative_discrepancy(surrogate: f64, reference: f64) -> f64 {
    (surrogate - reference).abs() / reference.max(1e-12)
}
