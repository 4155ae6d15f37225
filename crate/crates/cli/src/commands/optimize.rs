use std::fs::File;
use std::io::BufWriter;

use serde::{Deserialize, Serialize};

use nlwg::design::{optimize, sample_initial_stack, trajectory_csv, StopReason, Surrogates};
use nlwg::stack::serialize_stack;
use nlwg::surrogate::write_checkpoint;

use super::load_checkpoint;
use crate::config::{load_stack, OptimizeRun};
use crate::output::RunDir;
use crate::plot::{LinePlot, Series};
use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeSummary {
    pub iterations: usize,
    pub initial_reference_fom_pm_per_v: f64,
    pub best_reference_fom_pm_per_v: f64,
    pub ratio: f64,
    pub max_rel_discrepancy: f64,
    pub finetunes: usize,
    pub max_finetune_epochs: usize,
    pub stop: StopReason,
}

/// Writes the trajectory, start and best stacks, surrogate checkpoints and plots.
pub fn cmd_optimize(cfg: &OptimizeRun, out: &RunDir) -> Result<OptimizeSummary, CliError> {
    let mut oc = cfg.optimize.clone();
    oc.seed = cfg.seed;
    let resolved = OptimizeRun { optimize: oc.clone(), ..cfg.clone() };
    out.write_json("run_config.json", &resolved)?;
    let initial = match &cfg.stack {
        Some(p) => load_stack(Some(p))?,
        None => {
            let t = load_stack(cfg.template.as_deref())?;
            sample_initial_stack(cfg.seed, t.design_wavelengths_nm.pump, &t, &cfg.init, oc.profile.dispersion)
        }
    };
    let models = match (&cfg.te_checkpoint, &cfg.tm_checkpoint) {
        (Some(te), Some(tm)) => Some(Surrogates { te: load_checkpoint(te)?, tm: load_checkpoint(tm)? }),
        (None, None) => None,
        _ => return Err(CliError::Config("give both te_checkpoint and tm_checkpoint or neither".into())),
    };
    let res = optimize(&initial, &oc, models)?;
    out.write("initial_stack.json", serialize_stack(&initial))?;
    out.write("best_stack.json", serialize_stack(&res.best.decode()))?;
    out.write("trajectory.csv", trajectory_csv(&res.trajectory))?;
    out.write_json("finetunes.json", &res.finetunes)?;
    for (name, m) in [("te.ckpt", &res.models.te), ("tm.ckpt", &res.models.tm)] {
        let p = out.path(name);
        let f = File::create(&p).map_err(|e| CliError::io(&p, e))?;
        write_checkpoint(m, BufWriter::new(f))?;
    }

    let iter = |f: &dyn Fn(&nlwg::design::TrajectoryRecord) -> Option<f64>| -> Vec<(f64, f64)> {
        res.trajectory.iter().filter_map(|r| f(r).map(|v| (r.iter as f64, v))).collect()
    };
    let fom = LinePlot {
        title: "Figure of merit".into(),
        x_label: "iteration".into(),
        y_label: "|Γ| (pm/V)".into(),
        series: vec![
            Series { name: "surrogate".into(), points: iter(&|r| Some(r.fom_surrogate)) },
            Series { name: "reference".into(), points: iter(&|r| r.fom_reference) },
        ],
        log_y: false,
    };
    out.write("fom.svg", fom.to_svg())?;
    let disc = LinePlot {
        title: "Surrogate vs reference".into(),
        x_label: "iteration".into(),
        y_label: "relative discrepancy".into(),
        series: vec![Series {
            name: "|Γs − Γr| / Γr".into(),
            points: iter(&|r| r.rel_discrepancy.filter(|d| *d > 0.0)),
        }],
        log_y: true,
    };
    out.write("discrepancy.svg", disc.to_svg())?;

    let summary = OptimizeSummary {
        iterations: res.trajectory.len().saturating_sub(1),
        initial_reference_fom_pm_per_v: res.initial_reference_fom,
        best_reference_fom_pm_per_v: res.best_reference_fom,
        ratio: res.best_reference_fom / res.initial_reference_fom,
        max_rel_discrepancy: res.trajectory.iter().filter_map(|r| r.rel_discrepancy).fold(0.0, f64::max),
        finetunes: res.finetunes.len(),
        max_finetune_epochs: res.finetunes.iter().map(|f| f.te_epochs.max(f.tm_epochs)).max().unwrap_or(0),
        stop: res.stop,
    };
    out.write_json("summary.json", &summary)?;
    Ok(summary)
}
