mod analyze;
mod dataset;
mod optimize;
mod train;

pub use analyze::{cmd_analyze, AnalyzeSummary};
pub use dataset::{cmd_dataset, DatasetSummary};
pub use optimize::{cmd_optimize, OptimizeSummary};
pub use train::{cmd_finetune, cmd_train};

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use nlwg::surrogate::{read_checkpoint, Dataset, SurrogateModel};

use crate::output::read_to_string;
use crate::CliError;

pub(crate) fn required<'a>(value: &'a Option<std::path::PathBuf>, what: &str) -> Result<&'a Path, CliError> {
    value.as_deref().ok_or_else(|| CliError::Config(format!("missing {what}")))
}

pub(crate) fn load_dataset(path: &Path) -> Result<Dataset, CliError> {
    let text = read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: not a dataset file: {e}", path.display())))
}

pub(crate) fn load_checkpoint(path: &Path) -> Result<SurrogateModel, CliError> {
    let f = File::open(path).map_err(|e| CliError::io(path, e))?;
    Ok(read_checkpoint(BufReader::new(f))?)
}
