use serde::{Deserialize, Serialize};

use nlwg::stack::DesignVector;
use nlwg::surrogate::{generate_dataset, DatasetConfig, Sampler};

use crate::config::{load_stack, DatasetRun, SamplerKind};
use crate::output::RunDir;
use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub id: String,
    pub n: usize,
    pub train: usize,
    pub validation: usize,
    pub neff_min: f64,
    pub neff_max: f64,
}

/// Writes `dataset.json` and `summary.json`.
pub fn cmd_dataset(cfg: &DatasetRun, out: &RunDir) -> Result<DatasetSummary, CliError> {
    if cfg.n == 0 {
        return Err(CliError::Config("n must be at least 1".into()));
    }
    out.write_json("run_config.json", cfg)?;
    let template = load_stack(cfg.stack.as_deref())?;
    let sampler = match cfg.sampler {
        SamplerKind::Initial => Sampler::Initial { template, ranges: cfg.ranges },
        SamplerKind::Neighborhood => Sampler::Neighborhood {
            center: DesignVector::encode(&template, &cfg.bounds, &cfg.scale)?,
            half_width: cfg.half_width,
        },
    };
    let dc = DatasetConfig {
        n: cfg.n,
        lambda_nm: cfg.lambda_nm,
        polarization: cfg.polarization,
        seed: cfg.seed,
        validation_fraction: cfg.validation_fraction,
        encoding: cfg.encoding,
        profile: cfg.profile,
        sampler,
    };
    let ds = generate_dataset(&dc)?;
    let (tr, va) = ds.split();
    let (neff_min, neff_max) = ds.neff_range();
    let summary =
        DatasetSummary { id: ds.id(), n: ds.samples.len(), train: tr.len(), validation: va.len(), neff_min, neff_max };
    let text = serde_json::to_string(&ds).map_err(|e| CliError::Config(e.to_string()))?;
    out.write("dataset.json", text)?;
    out.write_json("summary.json", &summary)?;
    Ok(summary)
}
