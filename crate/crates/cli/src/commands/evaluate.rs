use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use lgs_core::metrics::{sort_reports, summarize, write_csv, write_json_lines, write_summary_csv};
use lgs_core::{evaluate, load_image, DefenseConfig, EvalReport, ImageRgb, PatchSpec};
use rayon::prelude::*;
use serde::Serialize;

use super::{ensure_dir, with_pool, write_effective, Tally};
use crate::args::{EvaluateArgs, GlobalArgs};
use crate::config::{resolve_common, resolve_defense_grid, resolve_patches, FileConfig};
use crate::inputs;

pub const REPORTS_JSON: &str = "reports.jsonl";
pub const REPORTS_CSV: &str = "reports.csv";
pub const SUMMARY_CSV: &str = "summary.csv";
pub const SUMMARY_JSON: &str = "summary.json";

#[derive(Serialize)]
struct Settings<'a> {
    patches: &'a [PatchSpec],
    defenses: &'a [DefenseConfig],
}

pub fn run(args: &EvaluateArgs, global: &GlobalArgs, file: &FileConfig) -> Result<Tally> {
    let common = resolve_common(&args.io, global, file)?;
    let patches = resolve_patches(&args.patch, file)?;
    let defenses = resolve_defense_grid(&args.defense, &args.grid, file)?;
    let expanded = inputs::expand(&common.inputs);
    let mut tally = Tally {
        ok: 0,
        failed: expanded.errors.len(),
    };
    for e in &expanded.errors {
        eprintln!("error: {e}");
    }
    if expanded.files.is_empty() {
        bail!("no input images to evaluate");
    }

    let per_image = patches.len() * defenses.len();
    let (patch_list, defense_list) = (&patches, &defenses);
    let (images, results) = with_pool(common.workers, || {
        let images: Vec<(PathBuf, Result<ImageRgb>)> = expanded
            .files
            .par_iter()
            .map(|f| (f.clone(), load_image(f).map_err(Into::into)))
            .collect();
        let units: Vec<(usize, &PatchSpec, &DefenseConfig)> = images
            .iter()
            .enumerate()
            .filter(|(_, (_, img))| img.is_ok())
            .flat_map(move |(i, _)| {
                patch_list
                    .iter()
                    .flat_map(move |p| defense_list.iter().map(move |d| (i, p, d)))
            })
            .collect();
        let results: Vec<(usize, &PatchSpec, &DefenseConfig, lgs_core::Result<EvalReport>)> = units
            .into_par_iter()
            .map(|(i, p, d)| {
                let img = images[i].1.as_ref().expect("filtered to loaded images");
                (i, p, d, evaluate(img, p, d))
            })
            .collect();
        (images, results)
    })?;

    for (path, img) in &images {
        if let Err(e) = img {
            tally.failed += per_image;
            eprintln!("error: {}: {e:#}", path.display());
        }
    }
    let mut reports = Vec::new();
    for (i, p, d, r) in results {
        let name = images[i].0.display().to_string();
        match r {
            Ok(mut rep) => {
                rep.image = Some(name);
                reports.push(rep);
                tally.ok += 1;
            }
            Err(e) => {
                tally.failed += 1;
                eprintln!("error: {name} [{} / {}]: {e}", p.label(), d.label());
            }
        }
    }
    sort_reports(&mut reports);

    let out = &common.output;
    if !reports.is_empty() {
        ensure_dir(out)?;
        let create = |name: &str| -> Result<BufWriter<File>> {
            let path = out.join(name);
            Ok(BufWriter::new(
                File::create(&path).with_context(|| format!("creating {}", path.display()))?,
            ))
        };
        let summary = summarize(&reports);
        if common.formats.json {
            write_json_lines(&reports, create(REPORTS_JSON)?)?;
            serde_json::to_writer_pretty(create(SUMMARY_JSON)?, &summary).context("writing summary")?;
        }
        if common.formats.csv {
            write_csv(&reports, create(REPORTS_CSV)?)?;
            write_summary_csv(&summary, create(SUMMARY_CSV)?)?;
        }
        let files: Vec<PathBuf> = images
            .iter()
            .filter(|(_, r)| r.is_ok())
            .map(|(p, _)| p.clone())
            .collect();
        write_effective(
            "evaluate",
            &common,
            &files,
            Settings {
                patches: &patches,
                defenses: &defenses,
            },
        )?;
        for row in &summary {
            println!(
                "{:<10} {:<40} n={:<4} suppression={:.4} psnr_outside={:.2} coverage={} excess={}",
                row.defense,
                row.params,
                row.count,
                row.suppression_ratio,
                row.psnr_outside_mask,
                fmt_opt(row.localization_coverage),
                fmt_opt(row.localization_excess),
            );
        }
    }
    super::summary_line("evaluate", tally, out);
    Ok(tally)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.3}")).unwrap_or_else(|| "-".into())
}
