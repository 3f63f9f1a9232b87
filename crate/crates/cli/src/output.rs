//! Output directory handling, CSV/JSON serialization and the run manifest.

use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use cs2::SignalBuffer;

use crate::{sigfile, CliError};

/// 17 significant digits: lossless for `f64`.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EmittedFile {
    pub role: String,
    pub path: String,
    pub sha256: String,
}

/// Record of one command invocation, written as `manifest.json`.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: &'static str,
    pub config_path: Option<String>,
    pub output_dir: String,
    pub seed: u64,
    pub emitted_files: Vec<EmittedFile>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub struct OutputDir {
    dir: PathBuf,
    manifest: RunManifest,
}

impl OutputDir {
    pub fn create(dir: &Path, command: &'static str, config_path: Option<&Path>, seed: u64) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            manifest: RunManifest {
                command,
                config_path: config_path.map(|p| p.display().to_string()),
                output_dir: dir.display().to_string(),
                seed,
                emitted_files: Vec::new(),
            },
        })
    }

    pub fn write(&mut self, role: &str, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        self.manifest.emitted_files.push(EmittedFile {
            role: role.to_string(),
            path: name.to_string(),
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    pub fn signal(&mut self, role: &str, name: &str, signal: &SignalBuffer) -> Result<(), CliError> {
        self.write(role, name, &sigfile::encode(signal))
    }

    /// Writes `signal` as a two-column `t,value` CSV.
    pub fn signal_csv(&mut self, role: &str, name: &str, signal: &SignalBuffer) -> Result<(), CliError> {
        let rows = signal.samples().iter().enumerate().map(|(t, &v)| vec![t.to_string(), num(v)]);
        self.csv(role, name, &["t", "value"], rows)
    }

    pub fn csv<I>(&mut self, role: &str, name: &str, header: &[&str], rows: I) -> Result<(), CliError>
    where
        I: IntoIterator<Item = Vec<String>>,
    {
        let mut w = csv::Writer::from_writer(Vec::new());
        let to_err = |e: csv::Error| CliError::Io(format!("{name}: {e}"));
        w.write_record(header).map_err(to_err)?;
        for row in rows {
            w.write_record(&row).map_err(to_err)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(format!("{name}: {e}")))?;
        self.write(role, name, &bytes)
    }

    pub fn json<T: Serialize>(&mut self, role: &str, name: &str, value: &T) -> Result<(), CliError> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::Io(format!("{name}: {e}")))?;
        bytes.push(b'\n');
        self.write(role, name, &bytes)
    }

    /// Writes `manifest.json` listing every file emitted so far.
    pub fn finish(self) -> Result<RunManifest, CliError> {
        let path = self.dir.join("manifest.json");
        let mut bytes =
            serde_json::to_vec_pretty(&self.manifest).map_err(|e| CliError::Io(format!("manifest: {e}")))?;
        bytes.push(b'\n');
        std::fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        Ok(self.manifest)
    }
}
