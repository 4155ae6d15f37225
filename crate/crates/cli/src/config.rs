//! Run configurations. Files are JSON documents with the same conventions as stack
//! files: snake_case keys, unknown keys rejected, omitted keys take the defaults below.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use nlwg::analysis::{DispersionConfig, JsaConfig, RateLedger};
use nlwg::design::{InitRanges, OptimizeConfig};
use nlwg::modes::Polarization;
use nlwg::stack::{parse_stack, DesignBounds, DesignScale, EpitaxialStack, ProfileOptions};
use nlwg::surrogate::{Encoding, TrainConfig, DEFAULT_HIDDEN};

use crate::output::read_to_string;
use crate::CliError;

/// Reads a config file, or the defaults when `path` is `None`.
pub fn load<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T, CliError> {
    let Some(path) = path else { return Ok(T::default()) };
    let text = read_to_string(path)?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de)
        .map_err(|e| CliError::Config(format!("{}: at `{}`: {}", path.display(), e.path(), e.inner())))
}

/// The stack at `path`, or the bundled ion-interface structure.
pub fn load_stack(path: Option<&Path>) -> Result<EpitaxialStack, CliError> {
    match path {
        Some(p) => Ok(parse_stack(&read_to_string(p)?)?),
        None => Ok(EpitaxialStack::table1()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    /// Fresh quarter-wave initializations of the template.
    Initial,
    /// Small perturbations of the template's design coordinates.
    Neighborhood,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetRun {
    pub seed: u64,
    /// Number of samples, at least 1. Default 500.
    pub n: usize,
    /// Default 1092 nm with TE; use 1550 nm with TM for the idler model.
    pub lambda_nm: f64,
    pub polarization: Polarization,
    /// Default 0.2.
    pub validation_fraction: f64,
    /// Template stack file; the bundled structure when absent.
    pub stack: Option<PathBuf>,
    /// Default `initial`.
    pub sampler: SamplerKind,
    pub ranges: InitRanges,
    /// Neighborhood half-width in design coordinates. Default 0.002.
    pub half_width: f64,
    pub bounds: DesignBounds,
    pub scale: DesignScale,
    pub encoding: Encoding,
    pub profile: ProfileOptions,
}

impl Default for DatasetRun {
    fn default() -> Self {
        DatasetRun {
            seed: 0,
            n: 500,
            lambda_nm: 1092.0,
            polarization: Polarization::TE,
            validation_fraction: 0.2,
            stack: None,
            sampler: SamplerKind::Initial,
            ranges: InitRanges::default(),
            half_width: 0.002,
            bounds: DesignBounds::default(),
            scale: DesignScale::default(),
            encoding: Encoding::default(),
            profile: ProfileOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainRun {
    pub seed: u64,
    /// Dataset file written by `nlwg dataset`. Required.
    pub dataset: Option<PathBuf>,
    /// Hidden layer widths. Default [128, 128, 128].
    pub hidden: Vec<usize>,
    /// Default: 2000 epochs, lr 1e-3, batch 32, patience 300, threshold 1e-6.
    pub train: TrainConfig,
    /// Checkpoint to continue from instead of a fresh network.
    pub resume: Option<PathBuf>,
}

impl Default for TrainRun {
    fn default() -> Self {
        TrainRun {
            seed: 0,
            dataset: None,
            hidden: DEFAULT_HIDDEN.to_vec(),
            train: TrainConfig::default(),
            resume: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FinetuneRun {
    pub seed: u64,
    /// Checkpoint to update. Required.
    pub checkpoint: Option<PathBuf>,
    /// Fresh samples. Required.
    pub dataset: Option<PathBuf>,
    /// Older samples mixed into each epoch.
    pub replay: Option<PathBuf>,
    /// Epoch budget. Default 50.
    pub epochs: usize,
    /// Default lr 1e-4; `epochs` above overrides `train.epochs`.
    pub train: TrainConfig,
}

impl Default for FinetuneRun {
    fn default() -> Self {
        FinetuneRun {
            seed: 0,
            checkpoint: None,
            dataset: None,
            replay: None,
            epochs: 50,
            train: TrainConfig { lr: 1e-4, ..TrainConfig::default() },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizeRun {
    pub seed: u64,
    /// Starting stack; drawn from `template` with `init` and `seed` when absent.
    pub stack: Option<PathBuf>,
    /// Template for the random start; the bundled structure when absent.
    pub template: Option<PathBuf>,
    pub init: InitRanges,
    /// Default: 300 Adam iterations at lr 5e-4, audits every iteration, fine-tunes every 25.
    pub optimize: OptimizeConfig,
    /// Pretrained surrogates; both or neither.
    pub te_checkpoint: Option<PathBuf>,
    pub tm_checkpoint: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalyzeRun {
    pub seed: u64,
    /// The bundled structure when absent.
    pub stack: Option<PathBuf>,
    pub profile: ProfileOptions,
    /// Signal band 1062-1122 nm on 16 points.
    pub dispersion: DispersionConfig,
    /// Default (30, 38) degrees on 81 points.
    pub theta_range_deg: (f64, f64),
    pub theta_points: usize,
    /// Empty pump angles mean both design-pair angles. Default 241 points at 5 GHz,
    /// 1 GHz pump, 1 mm.
    pub jsa: JsaConfig,
    /// Default 1091.6-1092.4 nm.
    pub filter_signal_nm: (f64, f64),
    /// Default 1549.2-1550.8 nm.
    pub filter_idler_nm: (f64, f64),
    /// Share of the peak that counts as JSI support. Default 0.1.
    pub lobe_threshold: f64,
    /// σ⁻ and σ⁺ amplitudes. Default (√3/2, 1/2).
    pub ion_amplitudes: (f64, f64),
    pub ledger: RateLedger,
}

impl Default for AnalyzeRun {
    fn default() -> Self {
        AnalyzeRun {
            seed: 0,
            stack: None,
            profile: ProfileOptions::default(),
            dispersion: DispersionConfig::default(),
            theta_range_deg: (30.0, 38.0),
            theta_points: 81,
            jsa: JsaConfig::default(),
            filter_signal_nm: (1091.6, 1092.4),
            filter_idler_nm: (1549.2, 1550.8),
            lobe_threshold: 0.1,
            ion_amplitudes: (3f64.sqrt() / 2.0, 0.5),
            ledger: RateLedger::ion_interface(),
        }
    }
}
