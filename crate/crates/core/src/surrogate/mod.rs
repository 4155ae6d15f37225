//! Neural surrogates for the fundamental TE and TM modes.
//!
//! A model maps the index profile inside a fixed window around the core to the mode
//! field at evenly spaced nodes plus its effective index. Inputs and outputs are
//! standardized with statistics of the first training set. The network is a tanh MLP
//! plus a linear shortcut; the shortcut is solved by ridge least squares before each
//! training pass and the MLP learns what it leaves over.

mod checkpoint;
mod dataset;
mod encoding;
mod mlp;
mod train;

pub use checkpoint::{read_checkpoint, write_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use dataset::{generate_dataset, sample_from_stack, Dataset, DatasetConfig, Sampler, TrainingSample};
pub use encoding::Encoding;
pub use mlp::{LinearHead, Mlp};
pub use train::{fine_tune, train, train_on, EpochLoss, FineTuneReport, TrainConfig, TrainReport};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grad::Real;
use crate::modes::{ModeError, Polarization};
use crate::stack::{Grid, IndexProfile, StackError};

#[derive(Debug, Error)]
pub enum SurrogateError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("no guidable structure after {attempts} attempts for {wanted} samples")]
    Generation { attempts: usize, wanted: usize },
    #[error(
        "training diverged at epoch {epoch}: loss {loss:.3e} exceeds 1e3 × {reference:.3e}; reduce the learning rate"
    )]
    /// `reference` is the starting loss, floored at the MSE threshold.
    Diverged { epoch: usize, loss: f64, reference: f64 },
    #[error("empty dataset")]
    EmptyDataset,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Stack(#[from] StackError),
    #[error(transparent)]
    Mode(#[from] ModeError),
}

/// Affine maps between physical and network coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub input_mean: Vec<f64>,
    /// One pooled scale for all inputs.
    pub input_scale: f64,
    /// Field nodes followed by the effective index.
    pub output_mean: Vec<f64>,
    pub field_scale: f64,
    pub neff_scale: f64,
}

fn pooled_std(rows: &[&[f64]], mean: &[f64]) -> f64 {
    let n = rows.len() as f64;
    let var: f64 = rows.iter().map(|r| r.iter().zip(mean).map(|(v, m)| (v - m).powi(2)).sum::<f64>()).sum::<f64>()
        / (n * mean.len() as f64);
    let s = var.sqrt();
    if s > 1e-12 {
        s
    } else {
        1.0
    }
}

fn column_mean(rows: &[&[f64]]) -> Vec<f64> {
    let mut m = vec![0.0; rows[0].len()];
    for r in rows {
        for (a, v) in m.iter_mut().zip(r.iter()) {
            *a += v;
        }
    }
    m.iter_mut().for_each(|a| *a /= rows.len() as f64);
    m
}

impl Standardization {
    pub fn fit(samples: &[TrainingSample]) -> Self {
        let inputs: Vec<&[f64]> = samples.iter().map(|s| s.input.as_slice()).collect();
        let fields: Vec<&[f64]> = samples.iter().map(|s| s.target_field.as_slice()).collect();
        let input_mean = column_mean(&inputs);
        let input_scale = pooled_std(&inputs, &input_mean);
        let field_mean = column_mean(&fields);
        let field_scale = pooled_std(&fields, &field_mean);
        let neff: Vec<[f64; 1]> = samples.iter().map(|s| [s.target_neff]).collect();
        let neff_rows: Vec<&[f64]> = neff.iter().map(|r| r.as_slice()).collect();
        let neff_mean = column_mean(&neff_rows);
        let neff_scale = pooled_std(&neff_rows, &neff_mean);
        let mut output_mean = field_mean;
        output_mean.push(neff_mean[0]);
        Standardization { input_mean, input_scale, output_mean, field_scale, neff_scale }
    }

    pub fn input<T: Real>(&self, x: &[T]) -> Vec<T> {
        x.iter().zip(&self.input_mean).map(|(v, m)| (*v - *m) * (1.0 / self.input_scale)).collect()
    }

    pub fn target(&self, field: &[f64], neff: f64) -> Vec<f64> {
        let nf = field.len();
        let mut y: Vec<f64> = field.iter().zip(&self.output_mean).map(|(v, m)| (v - m) / self.field_scale).collect();
        y.push((neff - self.output_mean[nf]) / self.neff_scale);
        y
    }

    /// Network output back to (field nodes, n_eff).
    pub fn output<T: Real>(&self, y: &[T]) -> (Vec<T>, T) {
        let nf = y.len() - 1;
        let field = (0..nf).map(|k| y[k] * self.field_scale + self.output_mean[k]).collect();
        (field, y[nf] * self.neff_scale + self.output_mean[nf])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMetadata {
    pub epochs: usize,
    pub final_mse: f64,
    pub dataset_id: String,
    pub seed: u64,
    /// Starts at 1 after training; each fine-tune adds one.
    pub version: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateModel {
    pub polarization: Polarization,
    pub lambda_nm: f64,
    /// Fine-grid spacing the inputs were averaged from.
    pub grid_spacing_nm: f64,
    pub encoding: Encoding,
    pub standardization: Standardization,
    pub network: Mlp,
    /// Linear shortcut from the standardized inputs to the standardized outputs.
    pub shortcut: LinearHead,
    pub metadata: ModelMetadata,
}

/// Prediction on the fine grid: unit-power field (E for TE, D for TM) and effective index.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction<T> {
    pub field: Vec<T>,
    pub n_eff: T,
}

/// Default hidden layers of the desk-scale network.
pub const DEFAULT_HIDDEN: [usize; 3] = [128, 128, 128];

impl SurrogateModel {
    /// Untrained model with standardization fitted to `samples`.
    pub fn new(
        polarization: Polarization,
        lambda_nm: f64,
        grid_spacing_nm: f64,
        encoding: Encoding,
        hidden: &[usize],
        samples: &[TrainingSample],
        seed: u64,
    ) -> Result<Self, SurrogateError> {
        if samples.is_empty() {
            return Err(SurrogateError::EmptyDataset);
        }
        let mut sizes = vec![encoding.n_inputs];
        sizes.extend_from_slice(hidden);
        sizes.push(encoding.n_nodes + 1);
        let mut network = Mlp::new(&sizes, seed);
        network.zero_output_layer();
        Ok(SurrogateModel {
            polarization,
            lambda_nm,
            grid_spacing_nm,
            encoding,
            standardization: Standardization::fit(samples),
            network,
            shortcut: LinearHead::zeros(encoding.n_inputs, encoding.n_nodes + 1),
            metadata: ModelMetadata { epochs: 0, final_mse: f64::NAN, dataset_id: String::new(), seed, version: 0 },
        })
    }

    pub fn version(&self) -> u32 {
        self.metadata.version
    }

    fn check_grid(&self, grid: &Grid) -> Result<(), SurrogateError> {
        if (grid.spacing_nm - self.grid_spacing_nm).abs() > 1e-12 * self.grid_spacing_nm {
            return Err(SurrogateError::Shape(format!(
                "grid spacing {} nm, model expects {} nm",
                grid.spacing_nm, self.grid_spacing_nm
            )));
        }
        Ok(())
    }

    /// Raw network output for encoded inputs: node field and effective index.
    pub fn predict_nodes<T: Real>(&self, inputs: &[T]) -> Result<(Vec<T>, T), SurrogateError> {
        if inputs.len() != self.encoding.n_inputs {
            return Err(SurrogateError::Shape(format!(
                "{} inputs, model expects {}",
                inputs.len(),
                self.encoding.n_inputs
            )));
        }
        let x = self.standardization.input(inputs);
        let y: Vec<T> =
            self.network.forward(&x).into_iter().zip(self.shortcut.forward(&x)).map(|(a, b)| a + b).collect();
        Ok(self.standardization.output(&y))
    }

    /// Differentiable prediction from index samples on `grid`.
    pub fn predict_samples<T: Real>(
        &self,
        n: &[T],
        grid: &Grid,
        below: T,
        above: T,
    ) -> Result<Prediction<T>, SurrogateError> {
        self.check_grid(grid)?;
        if n.len() != grid.len {
            return Err(SurrogateError::Shape(format!("{} samples on a grid of {}", n.len(), grid.len)));
        }
        let inputs = self.encoding.inputs(n, grid, below, above);
        let (nodes, n_eff) = self.predict_nodes(&inputs)?;
        let field = crate::quad::unit_power(&self.encoding.expand(&nodes, grid), grid.spacing_nm);
        Ok(Prediction { field, n_eff })
    }

    pub fn predict(&self, profile: &IndexProfile) -> Result<Prediction<f64>, SurrogateError> {
        self.predict_samples(&profile.n, &profile.grid, profile.substrate_index, profile.cover_index)
    }
}
