use std::fs::File;
use std::io::BufWriter;

use nlwg::surrogate::{fine_tune, train, write_checkpoint, EpochLoss, FineTuneReport, SurrogateModel, TrainReport};

use super::{load_checkpoint, load_dataset, required};
use crate::config::{FinetuneRun, TrainRun};
use crate::output::RunDir;
use crate::CliError;

fn save_checkpoint(model: &SurrogateModel, out: &RunDir) -> Result<(), CliError> {
    let p = out.path("model.ckpt");
    let f = File::create(&p).map_err(|e| CliError::io(&p, e))?;
    Ok(write_checkpoint(model, BufWriter::new(f))?)
}

/// Rows of an earlier `loss.csv` next to `resume`, if there is one.
fn prior_rows(resume: &std::path::Path) -> Result<Vec<csv::StringRecord>, CliError> {
    let Some(p) = resume.parent().map(|d| d.join("loss.csv")).filter(|p| p.exists()) else {
        return Ok(Vec::new());
    };
    let mut r = csv::Reader::from_path(&p)?;
    Ok(r.records().collect::<Result<_, _>>()?)
}

/// Writes `model.ckpt`, `loss.csv` and `report.json`. Epoch numbers continue from the
/// checkpoint when resuming; the last row's running best equals the checkpoint's `final_mse`.
pub fn cmd_train(cfg: &TrainRun, out: &RunDir) -> Result<TrainReport, CliError> {
    let ds_path = required(&cfg.dataset, "dataset path")?;
    out.write_json("run_config.json", cfg)?;
    let ds = load_dataset(ds_path)?;
    let tc = nlwg::surrogate::TrainConfig { seed: cfg.seed, ..cfg.train };
    let (mut model, prior) = match &cfg.resume {
        Some(p) => (load_checkpoint(p)?, prior_rows(p)?),
        None => {
            let c = &ds.config;
            let spacing = c.profile.grid_spacing_nm;
            let m = SurrogateModel::new(
                c.polarization,
                c.lambda_nm,
                spacing,
                c.encoding,
                &cfg.hidden,
                &ds.samples,
                cfg.seed,
            )?;
            (m, Vec::new())
        }
    };
    let start = model.metadata.epochs;
    let report = train(&mut model, &ds, &tc)?;
    save_checkpoint(&model, out)?;

    let mut w = csv::Writer::from_path(out.path("loss.csv"))?;
    w.write_record(["epoch", "train_mse", "validation_mse", "best_validation_mse"])?;
    for r in &prior {
        w.write_record(r)?;
    }
    let mut best = report.initial_validation_mse;
    for EpochLoss { epoch, train_mse, validation_mse } in &report.history {
        best = best.min(*validation_mse);
        w.write_record([
            (start + epoch).to_string(),
            train_mse.to_string(),
            validation_mse.to_string(),
            best.to_string(),
        ])?;
    }
    w.flush().map_err(|e| CliError::io(out.path("loss.csv"), e))?;
    out.write_json("report.json", &report)?;
    Ok(report)
}

/// Writes `model.ckpt`, `finetune.csv` and `report.json`.
pub fn cmd_finetune(cfg: &FinetuneRun, out: &RunDir) -> Result<FineTuneReport, CliError> {
    let ck = required(&cfg.checkpoint, "checkpoint path")?;
    let ds_path = required(&cfg.dataset, "dataset path")?;
    out.write_json("run_config.json", cfg)?;
    let mut model = load_checkpoint(ck)?;
    let fresh = load_dataset(ds_path)?;
    let replay = match &cfg.replay {
        Some(p) => load_dataset(p)?.samples,
        None => Vec::new(),
    };
    let tc = nlwg::surrogate::TrainConfig { seed: cfg.seed, epochs: cfg.epochs, ..cfg.train };
    let start = model.metadata.epochs;
    let report = fine_tune(&mut model, &fresh.samples, &replay, cfg.epochs, &tc)?;
    save_checkpoint(&model, out)?;
    let mut w = csv::Writer::from_path(out.path("finetune.csv"))?;
    w.write_record(["first_epoch", "epochs", "mse_before", "mse_after", "version"])?;
    w.write_record([
        (start + 1).to_string(),
        report.epochs.to_string(),
        report.mse_before.to_string(),
        report.mse_after.to_string(),
        report.version.to_string(),
    ])?;
    w.flush().map_err(|e| CliError::io(out.path("finetune.csv"), e))?;
    out.write_json("report.json", &report)?;
    Ok(report)
}
