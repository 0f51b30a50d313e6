//! `manifest.json`: what was run, with which configuration, and checksums of
//! every output file.

use std::path::Path;
use std::time::Duration;

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::Config;

#[derive(Serialize)]
struct FileEntry {
    name: String,
    bytes: u64,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: &'a str,
    config: &'a Config,
    config_file: Option<String>,
    config_sha256: Option<String>,
    seed: u64,
    threads: usize,
    elapsed_seconds: f64,
    outputs: Vec<FileEntry>,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(format!("{:x}", Sha256::digest(&bytes)))
}

pub fn write(
    out: &Path,
    command: &str,
    cfg: &Config,
    config_file: Option<&Path>,
    outputs: &[String],
    elapsed: Duration,
) -> Result<()> {
    let files = outputs
        .iter()
        .map(|name| {
            let p = out.join(name);
            Ok(FileEntry { name: name.clone(), bytes: std::fs::metadata(&p)?.len(), sha256: sha256_file(&p)? })
        })
        .collect::<Result<Vec<_>>>()?;
    let m = Manifest {
        command,
        version: env!("CARGO_PKG_VERSION"),
        config: cfg,
        config_file: config_file.map(|p| p.display().to_string()),
        config_sha256: config_file.map(sha256_file).transpose()?,
        seed: cfg.seed,
        threads: rayon::current_num_threads(),
        elapsed_seconds: elapsed.as_secs_f64(),
        outputs: files,
    };
    let path = out.join("manifest.json");
    std::fs::write(&path, serde_json::to_string_pretty(&m)?).with_context(|| format!("writing {}", path.display()))
}
