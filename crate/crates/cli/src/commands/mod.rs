mod batch;
mod defend;
mod evaluate;
mod inspect;
mod simulate;

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Common, Formats};
use crate::inputs;

pub use batch::run as batch;
pub use defend::run as defend;
pub use evaluate::run as evaluate;
pub use inspect::run as inspect;
pub use simulate::run as simulate;

/// Counts of units of work that succeeded and failed.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct Tally {
    pub ok: usize,
    pub failed: usize,
}

impl Tally {
    pub fn add(&mut self, other: Tally) {
        self.ok += other.ok;
        self.failed += other.failed;
    }

    pub fn success(&self) -> bool {
        self.failed == 0
    }
}

pub fn with_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .context("building worker pool")?;
    Ok(pool.install(f))
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

/// Runs `unit` on every expanded input in parallel and reports failures in
/// input order. Globs that matched nothing count as failures.
pub fn for_each_input<T: Send>(
    common: &Common,
    unit: impl Fn(&Path) -> Result<T> + Sync,
) -> Result<(Vec<(PathBuf, T)>, Tally)> {
    let expanded = inputs::expand(&common.inputs);
    inputs::check_unique_stems(&expanded.files)?;
    let mut tally = Tally {
        ok: 0,
        failed: expanded.errors.len(),
    };
    for e in &expanded.errors {
        eprintln!("error: {e}");
    }
    let results: Vec<(PathBuf, Result<T>)> = with_pool(common.workers, || {
        expanded.files.par_iter().map(|f| (f.clone(), unit(f))).collect()
    })?;
    let mut done = Vec::new();
    for (path, r) in results {
        match r {
            Ok(v) => {
                tally.ok += 1;
                done.push((path, v));
            }
            Err(e) => {
                tally.failed += 1;
                eprintln!("error: {}: {e:#}", path.display());
            }
        }
    }
    Ok((done, tally))
}

pub fn image_paths(dir: &Path, stem: &str, formats: &Formats) -> Vec<PathBuf> {
    formats
        .image_exts()
        .into_iter()
        .map(|ext| dir.join(format!("{stem}.{ext}")))
        .collect()
}

/// The settings a run actually used, written next to its outputs.
#[derive(Debug, Serialize)]
pub struct Effective<'a, T: Serialize> {
    pub command: &'a str,
    pub inputs: Vec<String>,
    pub output: &'a Path,
    pub workers: usize,
    pub emit: &'a Formats,
    #[serde(flatten)]
    pub settings: T,
}

pub const EFFECTIVE_CONFIG: &str = "effective_config.toml";

pub fn write_effective<T: Serialize>(command: &str, common: &Common, files: &[PathBuf], settings: T) -> Result<()> {
    let eff = Effective {
        command,
        inputs: files.iter().map(|f| f.display().to_string()).collect(),
        output: &common.output,
        workers: common.workers,
        emit: &common.formats,
        settings,
    };
    let text = toml::to_string_pretty(&eff).context("serializing effective config")?;
    ensure_dir(&common.output)?;
    let path = common.output.join(EFFECTIVE_CONFIG);
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn summary_line(command: &str, tally: Tally, output: &Path) {
    println!(
        "{command}: {} succeeded, {} failed; output in {}",
        tally.ok,
        tally.failed,
        output.display()
    );
}
