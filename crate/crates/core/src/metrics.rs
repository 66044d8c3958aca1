//! Proxy measurements of defense behavior.
//!
//! - gradient energy inside the (eroded) patch before and after a defense
//! - structural change away from the patch (PSNR, mean absolute change)
//! - how well the LGS window search covers the true patch
//!
//! Reports serialize to JSON lines and to CSV with a fixed column order.
//! PSNR of identical content is `+inf`, written as the string `"inf"` in
//! JSON.

use std::collections::BTreeMap;
use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::baselines::DefenseConfig;
use crate::error::{Error, Result};
use crate::gradients::luminance_grad_magnitude;
use crate::imagecore::ImageRgb;
use crate::lgs::estimate_mask;
use crate::patchsim::{simulate, BinaryMask, PatchSpec};

/// Metrics of one (image, patch, defense) evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image: Option<String>,
    pub defense: DefenseConfig,
    pub patch: Option<PatchSpec>,
    /// Resolved patch anchor.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub patch_anchor: Option<(usize, usize)>,
    pub grad_energy_before: f64,
    pub grad_energy_after: f64,
    pub suppression_ratio: f64,
    #[serde(with = "float_or_inf")]
    pub psnr_outside_mask: f64,
    pub mean_abs_change_outside: f64,
    /// Only defenses that estimate a noise location (LGS) report these.
    pub localization_coverage: Option<f64>,
    pub localization_excess: Option<f64>,
    pub runtime_ms: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tvm_iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tvm_converged: Option<bool>,
}

mod float_or_inf {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() && *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) if t == "inf" => Ok(f64::INFINITY),
            Repr::Text(t) => Err(serde::de::Error::custom(format!(
                "expected number or \"inf\", got {t:?}"
            ))),
        }
    }
}

fn check_dims(a: (usize, usize), b: (usize, usize)) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch { expected: a, actual: b });
    }
    Ok(())
}

/// Mean un-normalized luminance gradient magnitude over the 1-pixel erosion
/// of `mask`.
pub fn masked_grad_energy(img: &ImageRgb, mask: &BinaryMask) -> Result<f64> {
    check_dims(img.dims(), mask.dims())?;
    let interior = mask.eroded();
    let n = interior.count();
    if n == 0 {
        return Err(Error::EmptyRegion("mask interior is empty after erosion".into()));
    }
    let g = luminance_grad_magnitude(img);
    let sum: f64 = g
        .data()
        .iter()
        .zip(interior.data())
        .filter(|(_, &m)| m)
        .map(|(v, _)| v)
        .sum();
    Ok(sum / n as f64)
}

fn region_stats(a: &ImageRgb, b: &ImageRgb, region: Option<&BinaryMask>) -> Result<(f64, f64)> {
    check_dims(a.dims(), b.dims())?;
    if let Some(m) = region {
        check_dims(a.dims(), m.dims())?;
    }
    let (h, w) = a.dims();
    let included = |i: usize| region.is_none_or(|m| m.data()[i]);
    let count = (0..h * w).filter(|&i| included(i)).count();
    if count == 0 {
        return Err(Error::EmptyRegion("comparison region is empty".into()));
    }
    let (mut sq, mut abs) = (0.0, 0.0);
    for (pa, pb) in a.planes().iter().zip(b.planes()) {
        for (i, (x, y)) in pa.data().iter().zip(pb.data()).enumerate() {
            if included(i) {
                let d = x - y;
                sq += d * d;
                abs += d.abs();
            }
        }
    }
    let n = (3 * count) as f64;
    Ok((sq / n, abs / n))
}

/// `10 log10(1 / MSE)` over `region` (all pixels when `None`), peak 1.0.
/// Identical content gives `+inf`.
pub fn psnr(a: &ImageRgb, b: &ImageRgb, region: Option<&BinaryMask>) -> Result<f64> {
    let (mse, _) = region_stats(a, b, region)?;
    Ok(if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (1.0 / mse).log10()
    })
}

pub fn mean_abs_change(a: &ImageRgb, b: &ImageRgb, region: Option<&BinaryMask>) -> Result<f64> {
    Ok(region_stats(a, b, region)?.1)
}

/// `(|est ∩ truth| / |truth|, |est \ truth| / |est|)`; each ratio is 0 when
/// its denominator is.
pub fn localization_scores(estimated: &BinaryMask, truth: &BinaryMask) -> Result<(f64, f64)> {
    check_dims(truth.dims(), estimated.dims())?;
    let (mut both, mut est_only) = (0usize, 0usize);
    for (&e, &t) in estimated.data().iter().zip(truth.data()) {
        match (e, t) {
            (true, true) => both += 1,
            (true, false) => est_only += 1,
            _ => {}
        }
    }
    let truth_n = truth.count();
    let est_n = both + est_only;
    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    Ok((ratio(both, truth_n), ratio(est_only, est_n)))
}

fn suppression_ratio(before: f64, after: f64) -> f64 {
    if before == 0.0 && after == 0.0 {
        1.0
    } else {
        after / before
    }
}

/// Patches `img` per `spec`, runs `defense` and measures the result.
///
/// Structural metrics use the pixels outside the 1-pixel dilation of the
/// patch mask: the ring just outside the patch carries the patch edge in
/// its gradient and is legitimately touched by gradient-based defenses.
pub fn evaluate(img: &ImageRgb, spec: &PatchSpec, defense: &DefenseConfig) -> Result<EvalReport> {
    defense.validate()?;
    let anchor = spec.resolve(img.height(), img.width())?;
    let (patched, mask) = simulate(img, spec)?;
    let start = Instant::now();
    let out = defense.apply(&patched)?;
    let runtime_ms = start.elapsed().as_secs_f64() * 1e3;

    let before = masked_grad_energy(&patched, &mask)?;
    let after = masked_grad_energy(&out.image, &mask)?;
    let outside = mask.dilated().not();
    let (coverage, excess) = match defense {
        DefenseConfig::Lgs(p) => {
            let est = estimate_mask(&patched, p)?;
            let (c, e) = localization_scores(&est, &mask)?;
            (Some(c), Some(e))
        }
        _ => (None, None),
    };
    Ok(EvalReport {
        image: None,
        defense: *defense,
        patch: Some(*spec),
        patch_anchor: Some(anchor),
        grad_energy_before: before,
        grad_energy_after: after,
        suppression_ratio: suppression_ratio(before, after),
        psnr_outside_mask: psnr(&patched, &out.image, Some(&outside))?,
        mean_abs_change_outside: mean_abs_change(&patched, &out.image, Some(&outside))?,
        localization_coverage: coverage,
        localization_excess: excess,
        runtime_ms,
        tvm_iterations: out.tvm.as_ref().map(|t| t.iterations.into_iter().max().unwrap_or(0)),
        tvm_converged: out.tvm.as_ref().map(|t| t.converged),
    })
}

/// Runs `defense` on an unpatched image; energies and PSNR cover the whole
/// image.
pub fn evaluate_benign(img: &ImageRgb, defense: &DefenseConfig) -> Result<EvalReport> {
    defense.validate()?;
    let start = Instant::now();
    let out = defense.apply(img)?;
    let runtime_ms = start.elapsed().as_secs_f64() * 1e3;
    let before = luminance_grad_magnitude(img).mean();
    let after = luminance_grad_magnitude(&out.image).mean();
    Ok(EvalReport {
        image: None,
        defense: *defense,
        patch: None,
        patch_anchor: None,
        grad_energy_before: before,
        grad_energy_after: after,
        suppression_ratio: suppression_ratio(before, after),
        psnr_outside_mask: psnr(img, &out.image, None)?,
        mean_abs_change_outside: mean_abs_change(img, &out.image, None)?,
        localization_coverage: None,
        localization_excess: None,
        runtime_ms,
        tvm_iterations: out.tvm.as_ref().map(|t| t.iterations.into_iter().max().unwrap_or(0)),
        tvm_converged: out.tvm.as_ref().map(|t| t.converged),
    })
}

impl EvalReport {
    pub fn patch_label(&self) -> String {
        match (&self.patch, self.patch_anchor) {
            (Some(p), Some((t, l))) => format!("{} -> ({t},{l})", p.label()),
            (Some(p), None) => p.label(),
            (None, _) => "none".into(),
        }
    }

    /// Ordering key: image, defense kind, parameters, patch.
    pub fn sort_key(&self) -> (String, &'static str, String, String) {
        (
            self.image.clone().unwrap_or_default(),
            self.defense.kind(),
            self.defense.params_string(),
            self.patch_label(),
        )
    }
}

/// Stable sort by [`EvalReport::sort_key`].
pub fn sort_reports(reports: &mut [EvalReport]) {
    reports.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
}

pub const CSV_HEADER: [&str; 12] = [
    "image",
    "defense",
    "params",
    "patch",
    "grad_energy_before",
    "grad_energy_after",
    "suppression_ratio",
    "psnr_outside_mask",
    "mean_abs_change_outside",
    "localization_coverage",
    "localization_excess",
    "runtime_ms",
];

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn csv_err(e: impl std::fmt::Display) -> Error {
    Error::Report(e.to_string())
}

pub fn write_csv<W: Write>(reports: &[EvalReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in reports {
        w.write_record([
            r.image.clone().unwrap_or_default(),
            r.defense.kind().to_string(),
            r.defense.params_string(),
            r.patch_label(),
            r.grad_energy_before.to_string(),
            r.grad_energy_after.to_string(),
            r.suppression_ratio.to_string(),
            r.psnr_outside_mask.to_string(),
            r.mean_abs_change_outside.to_string(),
            fmt_opt(r.localization_coverage),
            fmt_opt(r.localization_excess),
            r.runtime_ms.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(csv_err)
}

/// One JSON object per line.
pub fn write_json_lines<W: Write>(reports: &[EvalReport], mut out: W) -> Result<()> {
    for r in reports {
        serde_json::to_writer(&mut out, r).map_err(csv_err)?;
        out.write_all(b"\n").map_err(csv_err)?;
    }
    Ok(())
}

/// Per-(defense, params) means over a set of reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub defense: String,
    pub params: String,
    pub count: usize,
    pub grad_energy_before: f64,
    pub grad_energy_after: f64,
    pub suppression_ratio: f64,
    /// Mean over finite values; `inf` when every value is infinite.
    pub psnr_outside_mask: f64,
    pub mean_abs_change_outside: f64,
    pub localization_coverage: Option<f64>,
    pub localization_excess: Option<f64>,
    pub runtime_ms: f64,
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (mut s, mut n) = (0.0, 0usize);
    for x in xs {
        s += x;
        n += 1;
    }
    (n > 0).then(|| s / n as f64)
}

pub fn summarize(reports: &[EvalReport]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(&'static str, String), Vec<&EvalReport>> = BTreeMap::new();
    for r in reports {
        groups
            .entry((r.defense.kind(), r.defense.params_string()))
            .or_default()
            .push(r);
    }
    groups
        .into_iter()
        .map(|((kind, params), rs)| SummaryRow {
            defense: kind.to_string(),
            params,
            count: rs.len(),
            grad_energy_before: mean(rs.iter().map(|r| r.grad_energy_before)).unwrap_or(0.0),
            grad_energy_after: mean(rs.iter().map(|r| r.grad_energy_after)).unwrap_or(0.0),
            suppression_ratio: mean(rs.iter().map(|r| r.suppression_ratio)).unwrap_or(0.0),
            psnr_outside_mask: mean(rs.iter().map(|r| r.psnr_outside_mask).filter(|v| v.is_finite()))
                .unwrap_or(f64::INFINITY),
            mean_abs_change_outside: mean(rs.iter().map(|r| r.mean_abs_change_outside)).unwrap_or(0.0),
            localization_coverage: mean(rs.iter().filter_map(|r| r.localization_coverage)),
            localization_excess: mean(rs.iter().filter_map(|r| r.localization_excess)),
            runtime_ms: mean(rs.iter().map(|r| r.runtime_ms)).unwrap_or(0.0),
        })
        .collect()
}

pub fn write_summary_csv<W: Write>(rows: &[SummaryRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "defense",
        "params",
        "count",
        "grad_energy_before",
        "grad_energy_after",
        "suppression_ratio",
        "psnr_outside_mask",
        "mean_abs_change_outside",
        "localization_coverage",
        "localization_excess",
        "runtime_ms",
    ])
    .map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.defense.clone(),
            r.params.clone(),
            r.count.to_string(),
            r.grad_energy_before.to_string(),
            r.grad_energy_after.to_string(),
            r.suppression_ratio.to_string(),
            r.psnr_outside_mask.to_string(),
            r.mean_abs_change_outside.to_string(),
            fmt_opt(r.localization_coverage),
            fmt_opt(r.localization_excess),
            r.runtime_ms.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(csv_err)
}
