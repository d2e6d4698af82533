//! `manifest.json`, written next to the outputs of every run.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context as _, Result};
use serde_json::json;

pub struct Context {
    pub threads: Option<usize>,
    pub out: PathBuf,
    /// `--out` or `BPL_OUT_DIR` was given rather than defaulted.
    pub out_explicit: bool,
    argv: Vec<String>,
}

impl Context {
    pub fn new(threads: Option<usize>, out: PathBuf, out_explicit: bool) -> Self {
        Self {
            threads,
            out,
            out_explicit,
            argv: std::env::args().collect(),
        }
    }

    pub fn write_manifest(
        &self,
        dir: &Path,
        command: &str,
        config: &BTreeMap<String, String>,
        seed: Option<u64>,
        outputs: &[PathBuf],
    ) -> Result<PathBuf> {
        std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        let manifest = json!({
            "command": command,
            "argv": self.argv,
            "config": config,
            "seed": seed,
            "threads": self.threads.unwrap_or_else(rayon::current_num_threads),
            "version": env!("CARGO_PKG_VERSION"),
            "outputs": outputs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
        });
        let path = dir.join("manifest.json");
        std::fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")
            .with_context(|| format!("cannot write {}", path.display()))?;
        Ok(path)
    }
}
