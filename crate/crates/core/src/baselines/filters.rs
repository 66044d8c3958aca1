//! Smoothing filters and bit-depth reduction. All windows use replicate
//! border padding.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::imagecore::{ImagePlane, ImageRgb};

fn check_window(window: usize) -> Result<()> {
    if window == 0 || window.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!("window {window} must be odd and >= 1")));
    }
    Ok(())
}

#[inline]
fn clamped(i: usize, d: isize, len: usize) -> usize {
    (i as isize + d).clamp(0, len as isize - 1) as usize
}

fn rows_par(plane: &ImagePlane, f: impl Fn(usize, usize) -> f64 + Sync) -> ImagePlane {
    let (h, w) = plane.dims();
    let data: Vec<f64> = (0..h)
        .into_par_iter()
        .flat_map_iter(|r| (0..w).map(move |c| (r, c)))
        .map(|(r, c)| f(r, c))
        .collect();
    ImagePlane::from_clamped(h, w, data).expect("dimensions are consistent")
}

pub fn median_plane(plane: &ImagePlane, window: usize) -> ImagePlane {
    let (h, w) = plane.dims();
    let rad = (window / 2) as isize;
    rows_par(plane, |r, c| {
        let mut buf = Vec::with_capacity(window * window);
        for dr in -rad..=rad {
            let rr = clamped(r, dr, h);
            for dc in -rad..=rad {
                buf.push(plane.get(rr, clamped(c, dc, w)));
            }
        }
        let mid = buf.len() / 2;
        *buf.select_nth_unstable_by(mid, f64::total_cmp).1
    })
}

/// Per-channel median of each `window x window` neighbourhood.
pub fn median_filter(img: &ImageRgb, window: usize) -> Result<ImageRgb> {
    check_window(window)?;
    Ok(img.map_planes(|p| median_plane(p, window)))
}

/// Sampled Gaussian of odd length, renormalized to unit sum.
pub fn gaussian_kernel(window: usize, sigma: f64) -> Result<Vec<f64>> {
    check_window(window)?;
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!("sigma {sigma} must be > 0")));
    }
    let rad = (window / 2) as f64;
    let raw: Vec<f64> = (0..window)
        .map(|i| {
            let x = i as f64 - rad;
            (-x * x / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let sum: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|v| v / sum).collect())
}

fn convolve_separable(plane: &ImagePlane, kernel: &[f64]) -> ImagePlane {
    let (h, w) = plane.dims();
    let rad = (kernel.len() / 2) as isize;
    let horizontal = rows_par(plane, |r, c| {
        kernel
            .iter()
            .enumerate()
            .map(|(k, &wt)| wt * plane.get(r, clamped(c, k as isize - rad, w)))
            .sum()
    });
    rows_par(&horizontal, |r, c| {
        kernel
            .iter()
            .enumerate()
            .map(|(k, &wt)| wt * horizontal.get(clamped(r, k as isize - rad, h), c))
            .sum()
    })
}

/// Default Gaussian sigma for a window: `window / 6`.
pub fn default_sigma(window: usize) -> f64 {
    window as f64 / 6.0
}

pub fn gaussian_filter(img: &ImageRgb, window: usize, sigma: f64) -> Result<ImageRgb> {
    let kernel = gaussian_kernel(window, sigma)?;
    Ok(img.map_planes(|p| convolve_separable(p, &kernel)))
}

/// Default range sigma for the bilateral filter.
pub const DEFAULT_SIGMA_RANGE: f64 = 0.1;

pub fn bilateral_filter(img: &ImageRgb, window: usize, sigma_space: f64, sigma_range: f64) -> Result<ImageRgb> {
    check_window(window)?;
    for (name, s) in [("sigma_space", sigma_space), ("sigma_range", sigma_range)] {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::InvalidParameter(format!("{name} {s} must be > 0")));
        }
    }
    let rad = (window / 2) as isize;
    let spatial: Vec<f64> = (-rad..=rad)
        .flat_map(|dr| (-rad..=rad).map(move |dc| (dr, dc)))
        .map(|(dr, dc)| (-((dr * dr + dc * dc) as f64) / (2.0 * sigma_space * sigma_space)).exp())
        .collect();
    let range_den = 2.0 * sigma_range * sigma_range;
    Ok(img.map_planes(|plane| {
        let (h, w) = plane.dims();
        rows_par(plane, |r, c| {
            let center = plane.get(r, c);
            let (mut acc, mut norm) = (0.0, 0.0);
            let mut k = 0;
            for dr in -rad..=rad {
                let rr = clamped(r, dr, h);
                for dc in -rad..=rad {
                    let v = plane.get(rr, clamped(c, dc, w));
                    let d = v - center;
                    let wt = spatial[k] * (-d * d / range_den).exp();
                    acc += wt * v;
                    norm += wt;
                    k += 1;
                }
            }
            acc / norm
        })
    }))
}

/// Uniform quantization to `2^depth` levels, round-half-up.
pub fn bit_depth_reduce(img: &ImageRgb, depth: u8) -> Result<ImageRgb> {
    if !(1..=8).contains(&depth) {
        return Err(Error::InvalidParameter(format!("depth {depth} outside 1..=8")));
    }
    let levels = ((1u32 << depth) - 1) as f64;
    Ok(img.map_planes(|p| p.map(|v| (v * levels + 0.5).floor() / levels)))
}
