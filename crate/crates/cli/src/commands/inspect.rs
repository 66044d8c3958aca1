use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use lgs_core::lgs::lgs_trace;
use lgs_core::{load_image, save_image, save_plane, DefenseConfig, ImagePlane, LgsParams};
use serde::Serialize;

use super::{ensure_dir, for_each_input, summary_line, write_effective, Tally};
use crate::args::{GlobalArgs, InspectArgs};
use crate::config::{resolve_common, resolve_defense, FileConfig};
use crate::inputs::stem;

#[derive(Serialize)]
struct Settings {
    defense: DefenseConfig,
}

#[derive(Debug, Serialize)]
struct Stats {
    image: String,
    height: usize,
    width: usize,
    params: LgsParams,
    windows: usize,
    kept_windows: usize,
    mask_fraction: f64,
    normalized_mean: f64,
    filtered_mean: f64,
    mean_multiplier: f64,
    runtime_ms: f64,
}

pub fn run(args: &InspectArgs, global: &GlobalArgs, file: &FileConfig) -> Result<Tally> {
    let common = resolve_common(&args.io, global, file)?;
    let defense = resolve_defense(&args.defense, file.defense.as_ref(), None)?;
    let DefenseConfig::Lgs(params) = defense else {
        bail!("inspect shows the lgs pipeline; got defense {}", defense.kind());
    };
    let out = &common.output;
    let (plane_ext, image_ext) = if common.formats.png {
        ("png", "png")
    } else {
        ("pgm", "ppm")
    };

    let (done, tally) = for_each_input(&common, |path: &Path| {
        let img = load_image(path)?;
        let start = Instant::now();
        let trace = lgs_trace(&img, &params)?;
        let runtime_ms = start.elapsed().as_secs_f64() * 1e3;
        let (h, w) = img.dims();
        let name = stem(path);
        let n = (h * w) as f64;
        let stats = Stats {
            image: path.display().to_string(),
            height: h,
            width: w,
            params,
            windows: trace.grid.len(),
            kept_windows: trace.kept_windows,
            mask_fraction: trace.mask.count() as f64 / n,
            normalized_mean: trace.normalized.mean(),
            filtered_mean: trace.filtered.mean(),
            mean_multiplier: trace.multiplier.iter().sum::<f64>() / n,
            runtime_ms,
        };

        ensure_dir(out)?;
        save_image(&img, out.join(format!("{name}_input.{image_ext}")))?;
        save_plane(
            &trace.normalized.to_plane(),
            out.join(format!("{name}_grad.{plane_ext}")),
        )?;
        save_plane(
            &trace.filtered.to_plane(),
            out.join(format!("{name}_grad_filtered.{plane_ext}")),
        )?;
        save_plane(&trace.mask.to_plane(), out.join(format!("{name}_mask.{plane_ext}")))?;
        let multiplier = ImagePlane::new(h, w, trace.multiplier.clone())?;
        save_plane(&multiplier, out.join(format!("{name}_multiplier.{plane_ext}")))?;
        save_image(&trace.output, out.join(format!("{name}_lgs.{image_ext}")))?;
        let json = serde_json::to_string_pretty(&stats)?;
        let stats_path = out.join(format!("{name}_stats.json"));
        std::fs::write(&stats_path, json + "\n").with_context(|| format!("writing {}", stats_path.display()))?;
        Ok(())
    })?;

    let files: Vec<_> = done.into_iter().map(|(p, _)| p).collect();
    if tally.ok > 0 {
        write_effective("inspect", &common, &files, Settings { defense })?;
    }
    summary_line("inspect", tally, out);
    Ok(tally)
}
