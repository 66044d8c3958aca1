//! Local gradients smoothing.
//!
//! The pipeline on an RGB image `x`:
//!
//! 1. luminance `p`, gradient magnitude, min-max normalized to `g` in `[0, 1]`
//! 2. `g` is cut into overlapping `block x block` windows at stride
//!    `block - overlap`; a window is kept when its mean is strictly above
//!    `threshold`
//! 3. the kept windows are collated keep-if-any: a pixel keeps its `g` value
//!    if any covering window is kept, otherwise it becomes 0 (`g_bar`)
//! 4. every channel is multiplied by `1 - clip(lambda * g_bar, 0, 1)`
//!
//! Window means are summed in row-major order inside each window so the
//! result does not depend on how windows are scheduled.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gradients::{grad_magnitude, normalize, GradMap};
use crate::imagecore::{to_luminance, ImagePlane, ImageRgb};
use crate::patchsim::BinaryMask;

/// Window search and suppression parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LgsParams {
    /// Smoothing factor.
    pub lambda: f64,
    /// Window side in pixels.
    pub block: usize,
    /// Overlap between consecutive windows in pixels.
    pub overlap: usize,
    /// Minimum window mean (exclusive) for a window to be kept.
    pub threshold: f64,
}

impl Default for LgsParams {
    fn default() -> Self {
        Self {
            lambda: 2.3,
            block: 15,
            overlap: 5,
            threshold: 0.1,
        }
    }
}

impl LgsParams {
    pub fn with_lambda(lambda: f64) -> Self {
        Self {
            lambda,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.block == 0 {
            return Err(Error::InvalidParameter("block must be >= 1".into()));
        }
        if self.overlap >= self.block {
            return Err(Error::InvalidParameter(format!(
                "overlap {} must be smaller than block {}",
                self.overlap, self.block
            )));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!("lambda {} must be >= 0", self.lambda)));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::InvalidParameter(format!(
                "threshold {} outside [0, 1]",
                self.threshold
            )));
        }
        Ok(())
    }

    pub fn stride(&self) -> usize {
        self.block - self.overlap
    }
}

/// Window anchors covering an image. A window spans
/// `[row, row + block_rows) x [col, col + block_cols)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockGrid {
    pub height: usize,
    pub width: usize,
    pub block_rows: usize,
    pub block_cols: usize,
    pub row_anchors: Vec<usize>,
    pub col_anchors: Vec<usize>,
}

impl BlockGrid {
    /// Number of windows `K`.
    pub fn len(&self) -> usize {
        self.row_anchors.len() * self.col_anchors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All `(row, col)` anchors, row-major.
    pub fn anchors(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.row_anchors
            .iter()
            .flat_map(move |&r| self.col_anchors.iter().map(move |&c| (r, c)))
    }
}

fn axis_anchors(dim: usize, block: usize, stride: usize) -> Vec<usize> {
    if dim <= block {
        return vec![0];
    }
    let last = dim - block;
    let mut anchors: Vec<usize> = (0..=last).step_by(stride).collect();
    if anchors.last() != Some(&last) {
        anchors.push(last);
    }
    anchors
}

/// Anchors at `0, s, 2s, ...` with `s = block - overlap`, plus a final anchor
/// clamped to `dim - block` per axis. An axis shorter than `block` gets a
/// single window spanning the whole axis.
pub fn make_grid(height: usize, width: usize, params: &LgsParams) -> BlockGrid {
    let stride = params.stride().max(1);
    let block = params.block.max(1);
    BlockGrid {
        height,
        width,
        block_rows: block.min(height),
        block_cols: block.min(width),
        row_anchors: axis_anchors(height, block, stride),
        col_anchors: axis_anchors(width, block, stride),
    }
}

fn window_mean(g: &GradMap, grid: &BlockGrid, top: usize, left: usize) -> f64 {
    let w = g.width();
    let data = g.data();
    let mut sum = 0.0;
    for r in top..top + grid.block_rows {
        for &v in &data[r * w + left..r * w + left + grid.block_cols] {
            sum += v;
        }
    }
    sum / (grid.block_rows * grid.block_cols) as f64
}

/// Pixels covered by at least one window whose mean exceeds `threshold`.
pub fn kept_mask(g: &GradMap, grid: &BlockGrid, threshold: f64) -> BinaryMask {
    let (h, w) = g.dims();
    let anchors: Vec<(usize, usize)> = grid.anchors().collect();
    let kept: Vec<(usize, usize)> = anchors
        .par_iter()
        .copied()
        .filter(|&(t, l)| window_mean(g, grid, t, l) > threshold)
        .collect();
    let mut data = vec![false; h * w];
    for (t, l) in kept {
        for r in t..t + grid.block_rows {
            data[r * w + l..r * w + l + grid.block_cols].fill(true);
        }
    }
    BinaryMask::new(h, w, data).expect("dimensions are consistent")
}

/// `g_bar`: the original value wherever a covering window is kept, else 0.
pub fn filter_blocks(g: &GradMap, grid: &BlockGrid, threshold: f64) -> GradMap {
    let mask = kept_mask(g, grid, threshold);
    let data = g
        .data()
        .iter()
        .zip(mask.data())
        .map(|(&v, &keep)| if keep { v } else { 0.0 })
        .collect();
    GradMap::from_vec(g.height(), g.width(), data)
}

/// Intermediate maps of one run.
#[derive(Debug, Clone)]
pub struct LgsTrace {
    /// Normalized gradient magnitude `g`.
    pub normalized: GradMap,
    /// `g` after window filtering.
    pub filtered: GradMap,
    pub mask: BinaryMask,
    pub grid: BlockGrid,
    pub kept_windows: usize,
    /// `1 - clip(lambda * g_bar, 0, 1)`.
    pub multiplier: Vec<f64>,
    pub output: ImageRgb,
}

/// Runs the full pipeline and keeps every intermediate.
pub fn lgs_trace(img: &ImageRgb, params: &LgsParams) -> Result<LgsTrace> {
    params.validate()?;
    let (h, w) = img.dims();
    let normalized = normalize(&grad_magnitude(&to_luminance(img)));
    let grid = make_grid(h, w, params);
    let kept_windows = grid
        .anchors()
        .filter(|&(t, l)| window_mean(&normalized, &grid, t, l) > params.threshold)
        .count();
    let mask = kept_mask(&normalized, &grid, params.threshold);
    let filtered_data: Vec<f64> = normalized
        .data()
        .iter()
        .zip(mask.data())
        .map(|(&v, &keep)| if keep { v } else { 0.0 })
        .collect();
    let multiplier: Vec<f64> = filtered_data
        .iter()
        .map(|&v| 1.0 - (params.lambda * v).clamp(0.0, 1.0))
        .collect();
    let filtered = GradMap::from_vec(h, w, filtered_data);
    let output = apply_multiplier(img, &multiplier);
    Ok(LgsTrace {
        normalized,
        filtered,
        mask,
        grid,
        kept_windows,
        multiplier,
        output,
    })
}

fn apply_multiplier(img: &ImageRgb, multiplier: &[f64]) -> ImageRgb {
    let (h, w) = img.dims();
    let planes = img.planes().clone().map(|p| {
        let data = p.data().iter().zip(multiplier).map(|(&v, &m)| v * m).collect();
        ImagePlane::new(h, w, data).expect("product of [0, 1] values")
    });
    ImageRgb::from_planes(planes).expect("dimensions are consistent")
}

/// Suppresses high-gradient windows; the output never exceeds the input.
pub fn lgs_transform(img: &ImageRgb, params: &LgsParams) -> Result<ImageRgb> {
    Ok(lgs_trace(img, params)?.output)
}

/// The kept-window union: the defense's estimate of where noise sits.
pub fn estimate_mask(img: &ImageRgb, params: &LgsParams) -> Result<BinaryMask> {
    params.validate()?;
    let (h, w) = img.dims();
    let g = normalize(&grad_magnitude(&to_luminance(img)));
    Ok(kept_mask(&g, &make_grid(h, w, params), params.threshold))
}
