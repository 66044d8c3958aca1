//! Input expansion and output naming.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Result};

/// Sorted, de-duplicated input files plus one error per glob that matched
/// nothing or was malformed.
#[derive(Debug, Default)]
pub struct Inputs {
    pub files: Vec<PathBuf>,
    pub errors: Vec<String>,
}

fn is_pattern(s: &str) -> bool {
    s.contains(['*', '?', '['])
}

pub fn expand(patterns: &[String]) -> Inputs {
    let mut out = Inputs::default();
    for p in patterns {
        if !is_pattern(p) {
            out.files.push(PathBuf::from(p));
            continue;
        }
        match glob::glob(p) {
            Ok(paths) => {
                let before = out.files.len();
                out.files.extend(paths.filter_map(|e| e.ok()).filter(|f| f.is_file()));
                if out.files.len() == before {
                    out.errors.push(format!("no files match glob '{p}'"));
                }
            }
            Err(e) => out.errors.push(format!("invalid glob '{p}': {e}")),
        }
    }
    out.files.sort();
    out.files.dedup();
    out
}

pub fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "image".into())
}

/// Outputs are named by file stem, so two inputs may not share one.
pub fn check_unique_stems(files: &[PathBuf]) -> Result<()> {
    let mut seen: BTreeMap<String, &Path> = BTreeMap::new();
    for f in files {
        if let Some(prev) = seen.insert(stem(f), f) {
            bail!(
                "inputs {} and {} would write the same output name",
                prev.display(),
                f.display()
            );
        }
    }
    Ok(())
}
