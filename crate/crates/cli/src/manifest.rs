use std::fs;
use std::path::{Path, PathBuf};

use rocket_lab::{Error, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::FileConfig;

#[derive(Debug, Clone, Serialize)]
pub struct InputDigest {
    pub path: PathBuf,
    pub sha256: String,
}

/// Provenance record written with every run. Passing it back through
/// `--config` reproduces the run's settings.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: String,
    pub config: FileConfig,
    pub seed: u64,
    pub inputs: Vec<InputDigest>,
    pub timestamp: String,
}

impl RunManifest {
    pub fn new(subcommand: &str, config: FileConfig, seed: u64) -> Self {
        Self {
            schema_version: rocket_lab::SCHEMA_VERSION,
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            subcommand: subcommand.to_string(),
            config,
            seed,
            inputs: Vec::new(),
            timestamp: chrono::Utc::now().to_rfc3339(),
        }
    }

    pub fn add_input(&mut self, path: &Path) -> Result<()> {
        let bytes = fs::read(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        self.inputs.push(InputDigest {
            path: path.to_path_buf(),
            sha256: hex::encode(Sha256::digest(&bytes)),
        });
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_file(path, &serde_json::to_string_pretty(self)?)
    }
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// `<path>.manifest.json`
pub fn sidecar(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    path.with_file_name(name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_of_known_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.txt");
        fs::write(&p, b"abc").unwrap();
        let mut m = RunManifest::new("transform", FileConfig::default(), 1);
        m.add_input(&p).unwrap();
        assert_eq!(
            m.inputs[0].sha256,
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn sidecar_name() {
        assert_eq!(sidecar(Path::new("out/f.csv")), PathBuf::from("out/f.csv.manifest.json"));
    }
}
