//! Provenance stamped on every output file.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Result;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::usage;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const GIT_DESCRIBE: &str = env!("CGFIT_GIT_DESCRIBE");

#[derive(Clone, Debug, Serialize)]
pub struct Meta {
    pub command: String,
    pub version: String,
    pub build: String,
    pub seed: Option<u64>,
    /// SHA-256 of the resolved settings (output paths and thread count excluded).
    pub config_hash: String,
    pub settings: serde_json::Value,
}

impl Meta {
    pub fn new(command: &str, seed: Option<u64>, settings: &impl Serialize) -> Result<Self> {
        let settings = serde_json::to_value(settings)?;
        let canonical = serde_json::to_string(&serde_json::json!({
            "command": command,
            "seed": seed,
            "settings": settings,
        }))?;
        let digest = Sha256::digest(canonical.as_bytes());
        let config_hash = digest.iter().map(|b| format!("{b:02x}")).collect();
        Ok(Meta {
            command: command.to_string(),
            version: VERSION.to_string(),
            build: GIT_DESCRIBE.to_string(),
            seed,
            config_hash,
            settings,
        })
    }

    /// `key=value` lines for CSV comment headers.
    pub fn lines(&self) -> Vec<String> {
        vec![
            format!("cgfit={} build={}", self.version, self.build),
            format!("command={}", self.command),
            format!("seed={}", self.seed.map_or_else(|| "none".into(), |s| s.to_string())),
            format!("config_hash={}", self.config_hash),
        ]
    }

    /// JSON sidecar next to a data file: `<file>.meta.json`.
    pub fn write_sidecar(&self, data_path: &Path) -> Result<PathBuf> {
        let mut name = data_path.as_os_str().to_owned();
        name.push(".meta.json");
        let path = PathBuf::from(name);
        let mut w = create(&path)?;
        serde_json::to_writer_pretty(&mut w, self)?;
        writeln!(w)?;
        w.flush()?;
        Ok(path)
    }
}

/// Open an output file; failure is a usage error (exit code 2).
pub fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| usage(format!("cannot write {}: {e}", path.display())))
}

pub fn open(path: &Path) -> Result<std::io::BufReader<File>> {
    File::open(path)
        .map(std::io::BufReader::new)
        .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}

/// Write through `f` into `path`, flushing at the end.
pub fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    let mut w = create(path)?;
    f(&mut w)?;
    w.flush()?;
    Ok(())
}
