use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::CliError;

/// Output directory of one command run.
pub struct RunDir {
    pub root: PathBuf,
    started: Instant,
    started_unix: u64,
}

impl RunDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        let started_unix = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        Ok(RunDir { root: root.to_path_buf(), started: Instant::now(), started_unix })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write(&self, name: &str, contents: impl AsRef<[u8]>) -> Result<PathBuf, CliError> {
        let p = self.path(name);
        fs::write(&p, contents).map_err(|e| CliError::io(&p, e))?;
        Ok(p)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Config(e.to_string()))?;
        s.push('\n');
        self.write(name, s)
    }

    /// Timing and host details; the only output that varies between identical runs.
    pub fn write_meta(&self, command: &str) -> Result<(), CliError> {
        let meta = serde_json::json!({
            "command": command,
            "version": env!("CARGO_PKG_VERSION"),
            "started_unix_s": self.started_unix,
            "elapsed_s": self.started.elapsed().as_secs_f64(),
            "threads": nlwg::parallel::thread_count(),
        });
        self.write_json("run_meta.json", &meta).map(|_| ())
    }
}

pub fn read_to_string(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}
