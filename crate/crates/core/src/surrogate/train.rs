//! Mini-batch Adam training and short fine-tuning passes.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dataset::sample_hash;
use super::mlp::BatchTrace;
use super::{Dataset, LinearHead, SurrogateError, SurrogateModel, TrainingSample};
use crate::grad::{Adam, AdamConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    /// Epochs without a new best validation loss before stopping.
    pub patience: usize,
    pub mse_threshold: f64,
    pub seed: u64,
    /// Relative ridge penalty of the linear shortcut.
    pub ridge: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { epochs: 2000, lr: 1e-3, batch_size: 32, patience: 300, mse_threshold: 1e-6, seed: 0, ridge: 1e-4 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub train_mse: f64,
    pub validation_mse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub initial_mse: f64,
    /// Validation loss before the first epoch, the starting point of the best-state search.
    pub initial_validation_mse: f64,
    pub history: Vec<EpochLoss>,
    pub best_validation_mse: f64,
    pub reached_threshold: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FineTuneReport {
    pub epochs: usize,
    pub mse_before: f64,
    pub mse_after: f64,
    pub version: u32,
}

struct Batch {
    x: Vec<f64>,
    y: Vec<f64>,
    /// Shortcut output for `x`.
    base: Vec<f64>,
    rows: usize,
}

fn standardized(model: &SurrogateModel, samples: &[TrainingSample]) -> Batch {
    let st = &model.standardization;
    let mut x = Vec::with_capacity(samples.len() * model.encoding.n_inputs);
    let mut y = Vec::with_capacity(samples.len() * (model.encoding.n_nodes + 1));
    for s in samples {
        x.extend(st.input(&s.input));
        y.extend(st.target(&s.target_field, s.target_neff));
    }
    let base = model.shortcut.forward_batch(&x, samples.len());
    Batch { x, y, base, rows: samples.len() }
}

/// Solves the shortcut for what the current MLP leaves over on `b`, then refreshes `b.base`.
fn refit_shortcut(model: &mut SurrogateModel, b: &mut Batch, ridge: f64) {
    let tr = model.network.forward_batch(&b.x, b.rows);
    let resid: Vec<f64> = b.y.iter().zip(tr.output()).map(|(y, o)| y - o).collect();
    let (n_in, n_out) = (model.encoding.n_inputs, model.encoding.n_nodes + 1);
    model.shortcut = LinearHead::fit(&b.x, &resid, b.rows, n_in, n_out, ridge);
    b.base = model.shortcut.forward_batch(&b.x, b.rows);
}

fn total_output(model: &SurrogateModel, b: &Batch) -> (BatchTrace, Vec<f64>) {
    let tr = model.network.forward_batch(&b.x, b.rows);
    let out = tr.output().iter().zip(&b.base).map(|(a, c)| a + c).collect();
    (tr, out)
}

/// Per-sample loss `mean(field error²) + (n_eff error)²`, averaged over rows.
fn mse(model: &SurrogateModel, b: &Batch) -> f64 {
    if b.rows == 0 {
        return 0.0;
    }
    let (_, out) = total_output(model, b);
    loss_and_grad(&out, &b.y, b.rows, model.encoding.n_nodes, false).0
}

fn loss_and_grad(out: &[f64], y: &[f64], rows: usize, nf: usize, want_grad: bool) -> (f64, Vec<f64>) {
    let width = nf + 1;
    let mut loss = 0.0;
    let mut g = if want_grad { vec![0.0; out.len()] } else { Vec::new() };
    for r in 0..rows {
        for k in 0..width {
            let e = out[r * width + k] - y[r * width + k];
            let w = if k < nf { 1.0 / nf as f64 } else { 1.0 };
            loss += w * e * e;
            if want_grad {
                g[r * width + k] = 2.0 * w * e / rows as f64;
            }
        }
    }
    (loss / rows as f64, g)
}

fn gather(b: &Batch, idx: &[usize], n_in: usize, n_out: usize) -> Batch {
    let mut x = Vec::with_capacity(idx.len() * n_in);
    let mut y = Vec::with_capacity(idx.len() * n_out);
    let mut base = Vec::with_capacity(idx.len() * n_out);
    for &i in idx {
        x.extend_from_slice(&b.x[i * n_in..(i + 1) * n_in]);
        y.extend_from_slice(&b.y[i * n_out..(i + 1) * n_out]);
        base.extend_from_slice(&b.base[i * n_out..(i + 1) * n_out]);
    }
    Batch { x, y, base, rows: idx.len() }
}

fn epoch_step(model: &mut SurrogateModel, adam: &mut Adam, data: &Batch, batch_size: usize, rng: &mut ChaCha8Rng) {
    let (n_in, n_out) = (model.encoding.n_inputs, model.encoding.n_nodes + 1);
    let mut order: Vec<usize> = (0..data.rows).collect();
    order.shuffle(rng);
    for chunk in order.chunks(batch_size.max(1)) {
        let mb = gather(data, chunk, n_in, n_out);
        let (tr, out) = total_output(model, &mb);
        let (_, d) = loss_and_grad(&out, &mb.y, mb.rows, model.encoding.n_nodes, true);
        let grad = model.network.backward_batch(&tr, &d);
        adam.step(&mut model.network.params, &grad);
    }
}

fn adam_for(model: &SurrogateModel, lr: f64) -> Adam {
    Adam::new(AdamConfig { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8 }, model.network.params.len())
}

pub fn train(model: &mut SurrogateModel, dataset: &Dataset, cfg: &TrainConfig) -> Result<TrainReport, SurrogateError> {
    let (tr, va) = dataset.split();
    let report = train_on(model, tr, va, cfg)?;
    model.metadata.dataset_id = dataset.id();
    Ok(report)
}

/// Trains until the validation loss drops below the threshold, stalls for `patience`
/// epochs, or the budget runs out. The best validation parameters are kept.
pub fn train_on(
    model: &mut SurrogateModel,
    train_set: &[TrainingSample],
    validation: &[TrainingSample],
    cfg: &TrainConfig,
) -> Result<TrainReport, SurrogateError> {
    if train_set.is_empty() {
        return Err(SurrogateError::EmptyDataset);
    }
    let validation = if validation.is_empty() { train_set } else { validation };
    let mut data = standardized(model, train_set);
    refit_shortcut(model, &mut data, cfg.ridge);
    let val = standardized(model, validation);
    let mut adam = adam_for(model, cfg.lr);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let initial = mse(model, &data);
    let reference = initial.max(cfg.mse_threshold).max(f64::MIN_POSITIVE);
    let initial_validation_mse = mse(model, &val);
    let mut best = (initial_validation_mse, model.network.params.clone());
    let mut history = Vec::new();
    let mut stall = 0;
    let mut reached = best.0 < cfg.mse_threshold;
    for epoch in 1..=cfg.epochs {
        if reached {
            break;
        }
        epoch_step(model, &mut adam, &data, cfg.batch_size, &mut rng);
        let train_mse = mse(model, &data);
        let validation_mse = mse(model, &val);
        history.push(EpochLoss { epoch, train_mse, validation_mse });
        if !train_mse.is_finite() || train_mse > 1e3 * reference {
            model.network.params = best.1;
            return Err(SurrogateError::Diverged { epoch, loss: train_mse, reference });
        }
        if validation_mse < best.0 {
            best = (validation_mse, model.network.params.clone());
            stall = 0;
        } else {
            stall += 1;
        }
        reached = validation_mse < cfg.mse_threshold;
        if stall >= cfg.patience {
            break;
        }
    }
    model.network.params = best.1;
    model.metadata.epochs += history.len();
    model.metadata.final_mse = best.0;
    model.metadata.seed = cfg.seed;
    model.metadata.dataset_id = sample_hash(train_set);
    model.metadata.version = model.metadata.version.max(1);
    Ok(TrainReport {
        initial_mse: initial,
        initial_validation_mse,
        history,
        best_validation_mse: best.0,
        reached_threshold: reached,
    })
}

/// Short pass on fresh samples (plus optional replay data) at most `budget` epochs long.
/// The shortcut is re-solved on the combined set first. Stops once the loss on `fresh`
/// is below the threshold and keeps the best state seen on the combined set.
pub fn fine_tune(
    model: &mut SurrogateModel,
    fresh: &[TrainingSample],
    replay: &[TrainingSample],
    budget: usize,
    cfg: &TrainConfig,
) -> Result<FineTuneReport, SurrogateError> {
    if fresh.is_empty() {
        return Err(SurrogateError::EmptyDataset);
    }
    let local = standardized(model, fresh);
    let before = mse(model, &local);
    if budget == 0 {
        return Ok(FineTuneReport { epochs: 0, mse_before: before, mse_after: before, version: model.version() });
    }
    let mut all: Vec<TrainingSample> = fresh.to_vec();
    all.extend_from_slice(replay);
    let mut data = standardized(model, &all);
    refit_shortcut(model, &mut data, cfg.ridge);
    let local = standardized(model, fresh);
    let mut adam = adam_for(model, cfg.lr);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let initial = mse(model, &data);
    let reference = initial.max(cfg.mse_threshold).max(f64::MIN_POSITIVE);
    let mut best = (initial, model.network.params.clone());
    let mut epochs = 0;
    let mut local_mse = mse(model, &local);
    while epochs < budget && local_mse >= cfg.mse_threshold {
        epoch_step(model, &mut adam, &data, cfg.batch_size, &mut rng);
        epochs += 1;
        let m = mse(model, &data);
        if !m.is_finite() || m > 1e3 * reference {
            model.network.params = best.1;
            return Err(SurrogateError::Diverged { epoch: epochs, loss: m, reference });
        }
        local_mse = mse(model, &local);
        if m < best.0 {
            best = (m, model.network.params.clone());
        }
    }
    model.network.params = best.1;
    let after = mse(model, &local);
    model.metadata.epochs += epochs;
    model.metadata.final_mse = after;
    model.metadata.version += 1;
    Ok(FineTuneReport { epochs, mse_before: before, mse_after: after, version: model.version() })
}
