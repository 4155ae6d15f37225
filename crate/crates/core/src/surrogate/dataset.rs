//! Training data from the reference mode solver.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Encoding, SurrogateError};
use crate::design::{sample_initial_stack, InitRanges};
use crate::modes::{fundamental_mode, Polarization};
use crate::parallel::par_map;
use crate::stack::{build_index_profile, DesignVector, EpitaxialStack, ProfileOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSample {
    /// Window-averaged index profile.
    pub input: Vec<f64>,
    /// Unit-power mode field at the encoding nodes, positive at its largest magnitude.
    pub target_field: Vec<f64>,
    pub target_neff: f64,
}

/// Where sample structures come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampler {
    /// Fresh initial structures around the quarter-wave recipe.
    Initial { template: EpitaxialStack, ranges: InitRanges },
    /// Uniform perturbations of design coordinates, `|du| ≤ half_width`.
    Neighborhood { center: DesignVector, half_width: f64 },
}

impl Sampler {
    pub fn draw(&self, seed: u64, opts: &ProfileOptions) -> EpitaxialStack {
        match self {
            Sampler::Initial { template, ranges } => {
                sample_initial_stack(seed, template.design_wavelengths_nm.pump, template, ranges, opts.dispersion)
            }
            Sampler::Neighborhood { center, half_width } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let u = center.values.iter().map(|v| v + rng.gen_range(-1.0..=1.0) * half_width).collect();
                center.with_values(u).decode()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub n: usize,
    pub lambda_nm: f64,
    pub polarization: Polarization,
    pub seed: u64,
    pub validation_fraction: f64,
    pub encoding: Encoding,
    pub profile: ProfileOptions,
    pub sampler: Sampler,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub config: DatasetConfig,
    pub samples: Vec<TrainingSample>,
}

impl Dataset {
    /// Short SHA-256 over the little-endian sample bytes.
    pub fn id(&self) -> String {
        sample_hash(&self.samples)
    }

    /// Training and validation parts; a split too small to hold a sample validates on
    /// the training part.
    pub fn split(&self) -> (&[TrainingSample], &[TrainingSample]) {
        let n_val = (self.samples.len() as f64 * self.config.validation_fraction).floor() as usize;
        if n_val == 0 {
            return (&self.samples, &self.samples);
        }
        self.samples.split_at(self.samples.len() - n_val)
    }

    /// Spread of effective-index targets.
    pub fn neff_range(&self) -> (f64, f64) {
        self.samples
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| (lo.min(s.target_neff), hi.max(s.target_neff)))
    }
}

pub(crate) fn sample_hash(samples: &[TrainingSample]) -> String {
    let mut h = Sha256::new();
    for s in samples {
        for v in s.input.iter().chain(&s.target_field).chain([&s.target_neff]) {
            h.update(v.to_le_bytes());
        }
    }
    hex::encode(&h.finalize()[..8])
}

/// Reference-solver sample of one structure.
pub fn sample_from_stack(
    stack: &EpitaxialStack,
    lambda_nm: f64,
    polarization: Polarization,
    encoding: &Encoding,
    opts: &ProfileOptions,
) -> Result<TrainingSample, SurrogateError> {
    let p = build_index_profile(stack, lambda_nm, opts)?;
    let m = fundamental_mode(&p, polarization)?;
    Ok(TrainingSample {
        input: encoding.inputs(&p.n, &p.grid, p.substrate_index, p.cover_index),
        target_field: encoding.targets(&m.field, &m.grid),
        target_neff: m.n_eff,
    })
}

pub fn generate_dataset(config: &DatasetConfig) -> Result<Dataset, SurrogateError> {
    if config.n == 0 {
        return Err(SurrogateError::Config("dataset size must be at least 1".into()));
    }
    if !(config.validation_fraction > 0.0 && config.validation_fraction <= 0.5) {
        return Err(SurrogateError::Config(format!(
            "validation fraction {} outside (0, 0.5]",
            config.validation_fraction
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut samples: Vec<TrainingSample> = Vec::with_capacity(config.n);
    let mut attempts = 0;
    let max_attempts = 100 * config.n;
    while samples.len() < config.n {
        if attempts >= max_attempts {
            return Err(SurrogateError::Generation { attempts, wanted: config.n });
        }
        let batch = (config.n - samples.len()).min(max_attempts - attempts);
        let seeds: Vec<u64> = (0..batch).map(|_| rng.gen()).collect();
        attempts += batch;
        let results = par_map(seeds, |s| {
            let stack = config.sampler.draw(s, &config.profile);
            sample_from_stack(&stack, config.lambda_nm, config.polarization, &config.encoding, &config.profile).ok()
        });
        for s in results.into_iter().flatten() {
            if samples.len() < config.n && !samples.iter().any(|o| o.input == s.input) {
                samples.push(s);
            }
        }
    }
    Ok(Dataset { config: config.clone(), samples })
}
