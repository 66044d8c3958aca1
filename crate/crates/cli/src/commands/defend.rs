use std::path::Path;

use anyhow::Result;
use lgs_core::lgs::lgs_trace;
use lgs_core::{load_image, save_image, save_plane, DefenseConfig};
use serde::Serialize;

use super::{ensure_dir, for_each_input, image_paths, summary_line, write_effective, Tally};
use crate::args::{DefendArgs, GlobalArgs};
use crate::config::{resolve_common, resolve_defense, FileConfig};
use crate::inputs::stem;

#[derive(Serialize)]
struct Settings {
    dump_intermediates: bool,
    defense: DefenseConfig,
}

pub fn run(args: &DefendArgs, global: &GlobalArgs, file: &FileConfig) -> Result<Tally> {
    let common = resolve_common(&args.io, global, file)?;
    let defense = resolve_defense(&args.defense, file.defense.as_ref(), None)?;
    let dump = args.dump_intermediates || file.dump_intermediates;
    if dump && !matches!(defense, DefenseConfig::Lgs(_)) {
        eprintln!(
            "warning: --dump-intermediates only applies to lgs; ignored for {}",
            defense.kind()
        );
    }
    let out = &common.output;

    let (done, tally) = for_each_input(&common, |path: &Path| {
        let img = load_image(path)?;
        let name = stem(path);
        let result = match (&defense, dump) {
            (DefenseConfig::Lgs(p), true) => {
                let trace = lgs_trace(&img, p)?;
                ensure_dir(out)?;
                save_plane(&trace.normalized.to_plane(), out.join(format!("{name}_grad.pgm")))?;
                save_plane(
                    &trace.filtered.to_plane(),
                    out.join(format!("{name}_grad_filtered.pgm")),
                )?;
                save_plane(&trace.mask.to_plane(), out.join(format!("{name}_lgs_mask.pgm")))?;
                trace.output
            }
            _ => defense.apply(&img)?.image,
        };
        ensure_dir(out)?;
        for target in image_paths(out, &name, &common.formats) {
            save_image(&result, target)?;
        }
        Ok(())
    })?;

    let files: Vec<_> = done.into_iter().map(|(p, _)| p).collect();
    if tally.ok > 0 {
        write_effective(
            "defend",
            &common,
            &files,
            Settings {
                dump_intermediates: dump,
                defense,
            },
        )?;
    }
    summary_line("defend", tally, out);
    Ok(tally)
}
