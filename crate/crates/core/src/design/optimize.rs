//! Adam ascent on the surrogate figure of merit with reference audits and periodic
//! fine-tuning of the surrogates.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{reference_evaluation, relative_discrepancy, surrogate_fom, DesignError, PathValues, Surrogates};
use crate::grad::{evaluate_with_gradient, Adam, AdamConfig, GradError};
use crate::modes::Polarization;
use crate::stack::{DesignBounds, DesignScale, DesignVector, EpitaxialStack, ProfileOptions};
use crate::surrogate::{
    fine_tune, generate_dataset, train, DatasetConfig, Encoding, Sampler, SurrogateModel, TrainConfig, TrainingSample,
    DEFAULT_HIDDEN,
};

/// How surrogates are built and kept current during a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SurrogatePlan {
    pub encoding: Encoding,
    pub hidden: Vec<usize>,
    pub pretrain_samples: usize,
    /// Half-width of the design-coordinate box the training structures are drawn from.
    pub neighborhood: f64,
    pub train: TrainConfig,
    pub finetune_every: usize,
    /// Audit discrepancy that triggers an immediate fine-tune.
    pub finetune_threshold: f64,
    pub finetune_epochs: usize,
    pub finetune_lr: f64,
    /// Fresh neighborhood structures per fine-tune, on top of the audited designs.
    pub finetune_neighbors: usize,
    /// Most recent samples replayed during fine-tuning.
    pub replay: usize,
}

impl Default for SurrogatePlan {
    fn default() -> Self {
        SurrogatePlan {
            encoding: Encoding::default(),
            hidden: DEFAULT_HIDDEN.to_vec(),
            pretrain_samples: 200,
            neighborhood: 0.002,
            train: TrainConfig { epochs: 500, ..TrainConfig::default() },
            finetune_every: 25,
            finetune_threshold: 0.02,
            finetune_epochs: 50,
            finetune_lr: 1e-4,
            finetune_neighbors: 8,
            replay: 240,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizeConfig {
    pub adam: AdamConfig,
    pub max_iters: usize,
    pub audit_every: usize,
    /// Stop after this many iterations without a 0.1% gain in the best surrogate value.
    pub stall_iters: usize,
    pub stall_tolerance: f64,
    pub seed: u64,
    pub bounds: DesignBounds,
    pub scale: DesignScale,
    pub profile: ProfileOptions,
    pub surrogate: SurrogatePlan,
}

impl Default for OptimizeConfig {
    fn default() -> Self {
        OptimizeConfig {
            adam: AdamConfig::default(),
            max_iters: 300,
            audit_every: 1,
            stall_iters: 50,
            stall_tolerance: 1e-3,
            seed: 0,
            bounds: DesignBounds::default(),
            scale: DesignScale::default(),
            profile: ProfileOptions::default(),
            surrogate: SurrogatePlan::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub iter: usize,
    pub fom_surrogate: f64,
    pub fom_reference: Option<f64>,
    pub rel_discrepancy: Option<f64>,
    pub theta_deg: f64,
    pub n_te: f64,
    pub n_tm: f64,
    pub sin_theta: f64,
    pub model_version: u32,
    pub design_hash: String,
    /// Skips and fine-tunes.
    pub note: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MaxIterations,
    Stalled,
    NoRealAngle,
    NonFinite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FineTuneEvent {
    pub iter: usize,
    pub trigger_discrepancy: Option<f64>,
    pub te_epochs: usize,
    pub tm_epochs: usize,
    pub te_mse: (f64, f64),
    pub tm_mse: (f64, f64),
    pub version: u32,
}

#[derive(Debug, Clone)]
pub struct OptimizeOutcome {
    pub trajectory: Vec<TrajectoryRecord>,
    /// Design coordinates of every record.
    pub designs: Vec<Vec<f64>>,
    pub initial: DesignVector,
    pub best: DesignVector,
    pub best_reference_fom: f64,
    pub initial_reference_fom: f64,
    pub stop: StopReason,
    pub finetunes: Vec<FineTuneEvent>,
    pub models: Surrogates,
}

/// Value and gradient of the surrogate `|Γ|` with the path scalars.
pub fn surrogate_gradient(
    dv: &DesignVector,
    u: &[f64],
    models: &Surrogates,
    opts: &ProfileOptions,
) -> Result<(PathValues, Vec<f64>), DesignError> {
    let mut values = None;
    let out = evaluate_with_gradient(u, |_, x| {
        let p = surrogate_fom(dv, x, models, opts)?;
        values = Some(p.values());
        Ok::<_, DesignError>(p.gamma_abs)
    })?;
    Ok((values.expect("set on success"), out.gradient))
}

/// `|Γ_s − Γ_r| / Γ_r` at the design's current coordinates.
pub fn audit_discrepancy(dv: &DesignVector, models: &Surrogates, opts: &ProfileOptions) -> Result<f64, DesignError> {
    let s = surrogate_fom(dv, &dv.values, models, opts)?.gamma_abs;
    let r = reference_evaluation(&dv.decode(), opts)?.values.gamma_abs;
    if r < 1e-12 {
        return Err(DesignError::IndeterminateDiscrepancy { reference: r });
    }
    Ok(relative_discrepancy(s, r))
}

fn neighborhood_samples(
    center: &DesignVector,
    n: usize,
    pol: Polarization,
    lambda_nm: f64,
    plan: &SurrogatePlan,
    opts: &ProfileOptions,
    seed: u64,
) -> Result<Vec<TrainingSample>, DesignError> {
    if n == 0 {
        return Ok(Vec::new());
    }
    let cfg = DatasetConfig {
        n,
        lambda_nm,
        polarization: pol,
        seed,
        validation_fraction: 0.2,
        encoding: plan.encoding,
        profile: *opts,
        sampler: Sampler::Neighborhood { center: center.clone(), half_width: plan.neighborhood },
    };
    Ok(generate_dataset(&cfg)?.samples)
}

/// Trains both surrogates on structures around `center`. Returns the models and their
/// training samples (TE, TM).
pub fn pretrain_surrogates(
    center: &DesignVector,
    plan: &SurrogatePlan,
    opts: &ProfileOptions,
    seed: u64,
) -> Result<(Surrogates, Vec<TrainingSample>, Vec<TrainingSample>), DesignError> {
    let wl = center.template.design_wavelengths_nm;
    let mut out = Vec::new();
    for (k, (pol, lambda)) in [(Polarization::TE, wl.te), (Polarization::TM, wl.tm)].into_iter().enumerate() {
        let cfg = DatasetConfig {
            n: plan.pretrain_samples,
            lambda_nm: lambda,
            polarization: pol,
            seed: seed.wrapping_add(k as u64),
            validation_fraction: 0.2,
            encoding: plan.encoding,
            profile: *opts,
            sampler: Sampler::Neighborhood { center: center.clone(), half_width: plan.neighborhood },
        };
        let ds = generate_dataset(&cfg)?;
        let mut model =
            SurrogateModel::new(pol, lambda, opts.grid_spacing_nm, plan.encoding, &plan.hidden, &ds.samples, seed)?;
        train(&mut model, &ds, &TrainConfig { seed, ..plan.train })?;
        out.push((model, ds.samples));
    }
    let (tm, tm_samples) = out.pop().unwrap();
    let (te, te_samples) = out.pop().unwrap();
    Ok((Surrogates { te, tm }, te_samples, tm_samples))
}

fn keep_recent(pool: &mut Vec<TrainingSample>, max: usize) {
    if pool.len() > max {
        pool.drain(..pool.len() - max);
    }
}

/// Runs the design loop from `initial`. When `models` is `None` the surrogates are
/// pretrained around the initial design first.
pub fn optimize(
    initial: &EpitaxialStack,
    cfg: &OptimizeConfig,
    models: Option<Surrogates>,
) -> Result<OptimizeOutcome, DesignError> {
    let opts = &cfg.profile;
    let plan = &cfg.surrogate;
    let wl = initial.design_wavelengths_nm;
    let dv0 = DesignVector::encode(initial, &cfg.bounds, &cfg.scale)?;
    let (mut models, mut pool_te, mut pool_tm) = match models {
        Some(m) => (m, Vec::new(), Vec::new()),
        None => pretrain_surrogates(&dv0, plan, opts, cfg.seed)?,
    };
    keep_recent(&mut pool_te, plan.replay);
    keep_recent(&mut pool_tm, plan.replay);

    let mut u = dv0.values.clone();
    let mut adam = Adam::new(cfg.adam, u.len());
    let mut trajectory: Vec<TrajectoryRecord> = Vec::new();
    let mut designs = Vec::new();
    let mut finetunes = Vec::new();
    let (mut fresh_te, mut fresh_tm) = (Vec::new(), Vec::new());
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut initial_reference = None;
    let mut best_surrogate = f64::NEG_INFINITY;
    let mut last_gain = 0;
    let mut stop = StopReason::MaxIterations;
    let audit_every = cfg.audit_every.max(1);

    for iter in 0..=cfg.max_iters {
        let dv = dv0.with_values(u.clone());
        let (values, mut grad) = match surrogate_gradient(&dv, &u, &models, opts) {
            Ok(v) => v,
            Err(DesignError::NoRealAngle { sine }) => {
                trajectory.push(TrajectoryRecord {
                    iter,
                    fom_surrogate: 0.0,
                    fom_reference: None,
                    rel_discrepancy: None,
                    theta_deg: f64::NAN,
                    n_te: f64::NAN,
                    n_tm: f64::NAN,
                    sin_theta: sine,
                    model_version: models.version(),
                    design_hash: dv.fingerprint(),
                    note: Some(format!("skipped: no real phase-matching angle (sin θ = {sine})")),
                });
                designs.push(u.clone());
                stop = StopReason::NoRealAngle;
                break;
            }
            Err(DesignError::Grad(GradError::NonFinite { .. })) => {
                stop = StopReason::NonFinite;
                break;
            }
            Err(e) => return Err(e),
        };

        let mut record = TrajectoryRecord {
            iter,
            fom_surrogate: values.gamma_abs,
            fom_reference: None,
            rel_discrepancy: None,
            theta_deg: values.theta_deg,
            n_te: values.n_te,
            n_tm: values.n_tm,
            sin_theta: values.sin_theta,
            model_version: models.version(),
            design_hash: dv.fingerprint(),
            note: None,
        };
        if iter % audit_every == 0 || iter == cfg.max_iters {
            match reference_evaluation(&dv.decode(), opts) {
                Ok(r) => {
                    let g = r.values.gamma_abs;
                    record.fom_reference = Some(g);
                    record.rel_discrepancy = Some(relative_discrepancy(values.gamma_abs, g));
                    initial_reference.get_or_insert(g);
                    if best.as_ref().map_or(true, |(b, _)| g > *b) {
                        best = Some((g, u.clone()));
                    }
                    let (s_te, s_tm) = r.samples(&models.te.encoding, &models.tm.encoding);
                    fresh_te.push(s_te);
                    fresh_tm.push(s_tm);
                }
                Err(e) => record.note = Some(format!("audit failed: {e}")),
            }
        }

        if values.gamma_abs > best_surrogate * (1.0 + cfg.stall_tolerance) || iter == 0 {
            last_gain = iter;
        }
        best_surrogate = best_surrogate.max(values.gamma_abs);
        let stalled = iter - last_gain >= cfg.stall_iters;
        let last = iter == cfg.max_iters || stalled;

        let over = record.rel_discrepancy.filter(|d| *d > plan.finetune_threshold);
        let scheduled = iter > 0 && plan.finetune_every > 0 && iter % plan.finetune_every == 0;
        if !last && (scheduled || over.is_some()) && plan.finetune_epochs > 0 {
            let seed = cfg.seed ^ (0x9e37_79b9_7f4a_7c15u64.wrapping_mul(iter as u64 + 1));
            fresh_te.extend(neighborhood_samples(
                &dv,
                plan.finetune_neighbors,
                Polarization::TE,
                wl.te,
                plan,
                opts,
                seed,
            )?);
            fresh_tm.extend(neighborhood_samples(
                &dv,
                plan.finetune_neighbors,
                Polarization::TM,
                wl.tm,
                plan,
                opts,
                seed ^ 1,
            )?);
            let tc = TrainConfig { lr: plan.finetune_lr, seed, ..plan.train };
            let rte = fine_tune(&mut models.te, &fresh_te, &pool_te, plan.finetune_epochs, &tc)?;
            let rtm = fine_tune(&mut models.tm, &fresh_tm, &pool_tm, plan.finetune_epochs, &tc)?;
            pool_te.append(&mut fresh_te);
            pool_tm.append(&mut fresh_tm);
            keep_recent(&mut pool_te, plan.replay);
            keep_recent(&mut pool_tm, plan.replay);
            finetunes.push(FineTuneEvent {
                iter,
                trigger_discrepancy: over,
                te_epochs: rte.epochs,
                tm_epochs: rtm.epochs,
                te_mse: (rte.mse_before, rte.mse_after),
                tm_mse: (rtm.mse_before, rtm.mse_after),
                version: models.version(),
            });
            record.note = Some(format!("fine-tuned to version {}", models.version()));
            grad = surrogate_gradient(&dv, &u, &models, opts)?.1;
        }
        trajectory.push(record);
        designs.push(u.clone());
        if last {
            if stalled {
                stop = StopReason::Stalled;
            }
            break;
        }
        if grad.iter().any(|g| !g.is_finite()) {
            stop = StopReason::NonFinite;
            break;
        }
        let ascent: Vec<f64> = grad.iter().map(|g| -g).collect();
        adam.step(&mut u, &ascent);
    }

    let (best_reference_fom, best_u) = best.unwrap_or((f64::NAN, dv0.values.clone()));
    Ok(OptimizeOutcome {
        trajectory,
        designs,
        initial: dv0.clone(),
        best: dv0.with_values(best_u),
        best_reference_fom,
        initial_reference_fom: initial_reference.unwrap_or(f64::NAN),
        stop,
        finetunes,
        models,
    })
}

fn opt_cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

/// Trajectory log with one row per record.
pub fn trajectory_csv(records: &[TrajectoryRecord]) -> String {
    let mut s =
        String::from("iter,fom_surrogate_pmV,fom_reference_pmV,rel_discrepancy,theta_deg,model_version,design_hash\n");
    for r in records {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.iter,
            r.fom_surrogate,
            opt_cell(r.fom_reference),
            opt_cell(r.rel_discrepancy),
            r.theta_deg,
            r.model_version,
            r.design_hash
        );
    }
    s
}
