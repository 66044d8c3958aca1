use std::path::Path;

use anyhow::{bail, Result};
use lgs_core::patchsim::simulate;
use lgs_core::{load_image, save_image, save_plane, PatchSpec};
use serde::Serialize;

use super::{ensure_dir, for_each_input, image_paths, summary_line, write_effective, Tally};
use crate::args::{GlobalArgs, SimulateArgs};
use crate::config::{resolve_common, resolve_patches, FileConfig};
use crate::inputs::stem;

#[derive(Serialize)]
struct Settings {
    patch: PatchSpec,
}

pub fn run(args: &SimulateArgs, global: &GlobalArgs, file: &FileConfig) -> Result<Tally> {
    let common = resolve_common(&args.io, global, file)?;
    let specs = resolve_patches(&args.patch, file)?;
    let [spec] = specs[..] else {
        bail!("simulate takes one patch, got {}", specs.len());
    };
    let out = &common.output;

    // nothing is written for an input until its patch is known to fit
    let (done, tally) = for_each_input(&common, |path: &Path| {
        let img = load_image(path)?;
        let (patched, mask) = simulate(&img, &spec)?;
        let name = stem(path);
        ensure_dir(out)?;
        for target in image_paths(out, &name, &common.formats) {
            save_image(&patched, target)?;
        }
        save_plane(&mask.to_plane(), out.join(format!("{name}_mask.pgm")))?;
        Ok(())
    })?;

    let files: Vec<_> = done.into_iter().map(|(p, _)| p).collect();
    if tally.ok > 0 {
        write_effective("simulate", &common, &files, Settings { patch: spec })?;
    }
    summary_line("simulate", tally, out);
    Ok(tally)
}
