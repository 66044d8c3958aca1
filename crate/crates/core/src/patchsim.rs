//! Localized noise patches composed with a binary mask:
//! `x' = (1 - m) * x + m * delta`.
//!
//! Optimized attack noise needs a classifier, so patches are filled from
//! deterministic generators instead. [`NoiseSource::UniformRandom`] is the
//! high-frequency stand-in; checkerboard and solid fills probe frequency
//! selectivity.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imagecore::{ImagePlane, ImageRgb};
use crate::rng::CounterRng;

/// Square patch sides used by the experimental presets.
pub const PRESET_SIZES: [usize; 4] = [42, 52, 60, 95];

/// Border band width used when none is given.
pub const DEFAULT_MARGIN: usize = 75;

/// Per-pixel {0, 1} mask, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    height: usize,
    width: usize,
    data: Vec<bool>,
}

impl BinaryMask {
    pub fn new(height: usize, width: usize, data: Vec<bool>) -> Result<Self> {
        if data.len() != height * width {
            return Err(Error::InvalidRaster(format!(
                "{} mask entries for {height}x{width}",
                data.len()
            )));
        }
        Ok(Self { height, width, data })
    }

    pub fn empty(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            data: vec![false; height * width],
        }
    }

    pub fn full(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            data: vec![true; height * width],
        }
    }

    /// Ones on `[top, top + rows) x [left, left + cols)`, clipped to bounds.
    pub fn rect(height: usize, width: usize, top: usize, left: usize, rows: usize, cols: usize) -> Self {
        let mut m = Self::empty(height, width);
        for r in top..(top + rows).min(height) {
            for c in left..(left + cols).min(width) {
                m.data[r * width + c] = true;
            }
        }
        m
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut data = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                data.push(f(r, c));
            }
        }
        Self { height, width, data }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        self.data[row * self.width + col]
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.data.iter().any(|&b| b)
    }

    pub fn not(&self) -> Self {
        Self {
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|b| !b).collect(),
        }
    }

    /// 3x3 erosion; pixels outside the image count as unset.
    pub fn eroded(&self) -> Self {
        let (h, w) = self.dims();
        Self::from_fn(h, w, |r, c| {
            (r > 0 && c > 0 && r + 1 < h && c + 1 < w)
                && (r - 1..=r + 1).all(|rr| (c - 1..=c + 1).all(|cc| self.get(rr, cc)))
        })
    }

    /// 3x3 dilation.
    pub fn dilated(&self) -> Self {
        let (h, w) = self.dims();
        Self::from_fn(h, w, |r, c| {
            (r.saturating_sub(1)..=(r + 1).min(h - 1))
                .any(|rr| (c.saturating_sub(1)..=(c + 1).min(w - 1)).any(|cc| self.get(rr, cc)))
        })
    }

    /// 0.0 / 1.0 plane for export.
    pub fn to_plane(&self) -> ImagePlane {
        ImagePlane::from_fn(self.height, self.width, |r, c| if self.get(r, c) { 1.0 } else { 0.0 })
    }
}

/// Patch content generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseSource {
    /// iid uniform over the 256 8-bit levels `k / 255`, per pixel and channel.
    UniformRandom { seed: u64 },
    /// Black/white squares of side `period` pixels, aligned to the image origin.
    Checkerboard { period: usize },
    /// A flat fill of the given value in every channel.
    SolidContrast { value: f64 },
}

impl NoiseSource {
    /// The value of `delta` at an image position.
    #[inline]
    pub fn sample(&self, channel: usize, row: usize, col: usize) -> f64 {
        match *self {
            NoiseSource::UniformRandom { seed } => {
                let counter = ((row as u64) << 32) | col as u64;
                (CounterRng::new(seed).u64_at(channel as u64, counter) >> 56) as f64 / 255.0
            }
            NoiseSource::Checkerboard { period } => {
                let p = period.max(1);
                if (row / p + col / p).is_multiple_of(2) {
                    1.0
                } else {
                    0.0
                }
            }
            NoiseSource::SolidContrast { value } => value.clamp(0.0, 1.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            NoiseSource::Checkerboard { period: 0 } => {
                Err(Error::InvalidParameter("checkerboard period must be >= 1".into()))
            }
            NoiseSource::SolidContrast { value } if !(0.0..=1.0).contains(&value) => Err(Error::InvalidParameter(
                format!("solid contrast value {value} outside [0, 1]"),
            )),
            _ => Ok(()),
        }
    }

    pub fn label(&self) -> String {
        match self {
            NoiseSource::UniformRandom { seed } => format!("uniform(seed={seed})"),
            NoiseSource::Checkerboard { period } => format!("checker(period={period})"),
            NoiseSource::SolidContrast { value } => format!("solid(value={value})"),
        }
    }
}

/// Where a patch goes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    Explicit {
        top: usize,
        left: usize,
    },
    /// Uniform over anchors whose rectangle stays inside the band of width
    /// `margin` along the image border.
    BorderBand {
        margin: usize,
        seed: u64,
    },
}

/// Square localized patch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatchSpec {
    pub size: usize,
    pub noise: NoiseSource,
    pub placement: Placement,
}

impl PatchSpec {
    /// Named presets `lavan42`, `lavan52`, `lavan60`, `patch95`: uniform
    /// noise placed in a border band of [`DEFAULT_MARGIN`], widened to the
    /// patch side when the patch is larger.
    pub fn preset(name: &str, seed: u64) -> Option<Self> {
        let size = match name {
            "lavan42" => 42,
            "lavan52" => 52,
            "lavan60" => 60,
            "patch95" => 95,
            _ => return None,
        };
        Some(Self {
            size,
            noise: NoiseSource::UniformRandom { seed },
            placement: Placement::BorderBand {
                margin: DEFAULT_MARGIN.max(size),
                seed,
            },
        })
    }

    pub fn explicit(size: usize, top: usize, left: usize, noise: NoiseSource) -> Self {
        Self {
            size,
            noise,
            placement: Placement::Explicit { top, left },
        }
    }

    /// Top-left anchor inside a `height x width` image.
    pub fn resolve(&self, height: usize, width: usize) -> Result<(usize, usize)> {
        self.noise.validate()?;
        match self.placement {
            Placement::Explicit { top, left } => {
                if top + self.size > height || left + self.size > width {
                    return Err(Error::Geometry(format!(
                        "{0}x{0} patch at ({top}, {left}) exceeds {height}x{width} image",
                        self.size
                    )));
                }
                Ok((top, left))
            }
            Placement::BorderBand { margin, seed } => sample_border_location(self.size, height, width, margin, seed),
        }
    }

    pub fn label(&self) -> String {
        let place = match self.placement {
            Placement::Explicit { top, left } => format!("at({top},{left})"),
            Placement::BorderBand { margin, seed } => format!("border(margin={margin},seed={seed})"),
        };
        format!("{0}x{0} {1} {place}", self.size, self.noise.label())
    }
}

/// Ones on the patch rectangle.
pub fn make_mask(spec: &PatchSpec, height: usize, width: usize) -> Result<BinaryMask> {
    let (top, left) = spec.resolve(height, width)?;
    Ok(BinaryMask::rect(height, width, top, left, spec.size, spec.size))
}

fn rows_hit_center(top: usize, size: usize, lo: usize, hi: usize) -> bool {
    size > 0 && top < hi && top + size > lo
}

/// Uniformly random anchor whose `size x size` rectangle is in bounds and
/// misses the central `(height - 2 margin) x (width - 2 margin)` region.
pub fn sample_border_location(
    size: usize,
    height: usize,
    width: usize,
    margin: usize,
    seed: u64,
) -> Result<(usize, usize)> {
    if size > height || size > width {
        return Err(Error::Geometry(format!(
            "{size}x{size} patch does not fit a {height}x{width} image"
        )));
    }
    let (row_lo, row_hi) = (margin.min(height), height.saturating_sub(margin));
    let (col_lo, col_hi) = (margin.min(width), width.saturating_sub(margin));
    let center_empty = row_lo >= row_hi || col_lo >= col_hi;
    let lefts = width - size + 1;
    // anchors per top row: all of them, or only those clear of the center columns
    let valid_lefts = |top: usize| -> Vec<usize> {
        if center_empty || !rows_hit_center(top, size, row_lo, row_hi) {
            (0..lefts).collect()
        } else {
            (0..lefts)
                .filter(|&l| !rows_hit_center(l, size, col_lo, col_hi))
                .collect()
        }
    };
    let counts: Vec<u64> = (0..height - size + 1).map(|t| valid_lefts(t).len() as u64).collect();
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::Geometry(format!(
            "no {size}x{size} anchor fits a border band of {margin} in {height}x{width}"
        )));
    }
    let mut k = CounterRng::new(seed).below(0, total);
    for (top, &n) in counts.iter().enumerate() {
        if k < n {
            return Ok((top, valid_lefts(top)[k as usize]));
        }
        k -= n;
    }
    unreachable!("index below total")
}

/// Replaces masked pixels by `noise`; others are copied bit-for-bit.
pub fn apply_patch(img: &ImageRgb, mask: &BinaryMask, noise: &NoiseSource) -> Result<ImageRgb> {
    if img.dims() != mask.dims() {
        return Err(Error::DimensionMismatch {
            expected: img.dims(),
            actual: mask.dims(),
        });
    }
    let (h, w) = img.dims();
    Ok(ImageRgb::from_fn(h, w, |ch, r, c| {
        if mask.get(r, c) {
            noise.sample(ch, r, c)
        } else {
            img.plane(ch).get(r, c)
        }
    }))
}

/// Resolves the mask of `spec` and composes the patch. Returns the patched
/// image and the ground-truth mask.
pub fn simulate(img: &ImageRgb, spec: &PatchSpec) -> Result<(ImageRgb, BinaryMask)> {
    let mask = make_mask(spec, img.height(), img.width())?;
    let patched = apply_patch(img, &mask, &spec.noise)?;
    Ok((patched, mask))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mask_area() {
        let spec = PatchSpec::explicit(42, 0, 0, NoiseSource::SolidContrast { value: 1.0 });
        let m = make_mask(&spec, 299, 299).unwrap();
        assert_eq!(m.count(), 1764);
        let full = PatchSpec::explicit(299, 0, 0, NoiseSource::SolidContrast { value: 1.0 });
        assert_eq!(make_mask(&full, 299, 299).unwrap().count(), 299 * 299);
        let zero = PatchSpec::explicit(0, 10, 10, NoiseSource::SolidContrast { value: 1.0 });
        assert!(make_mask(&zero, 299, 299).unwrap().is_empty());
    }

    #[test]
    fn out_of_bounds_rejected() {
        let spec = PatchSpec::explicit(95, 250, 0, NoiseSource::UniformRandom { seed: 1 });
        assert!(matches!(make_mask(&spec, 299, 299), Err(Error::Geometry(_))));
        assert!(sample_border_location(300, 299, 299, 75, 0).is_err());
        // band of 10 cannot hold a 42 patch
        assert!(sample_border_location(42, 299, 299, 10, 0).is_err());
    }

    #[test]
    fn whole_image_band_allows_any_anchor() {
        let mut seen_center = false;
        for seed in 0..200 {
            let (t, l) = sample_border_location(10, 40, 40, 20, seed).unwrap();
            assert!(t <= 30 && l <= 30);
            seen_center |= (10..20).contains(&t) && (10..20).contains(&l);
        }
        assert!(seen_center);
    }

    #[test]
    fn border_samples_avoid_center() {
        for seed in 0..2000 {
            let (t, l) = sample_border_location(42, 299, 299, 60, seed).unwrap();
            let hits = rows_hit_center(t, 42, 60, 239) && rows_hit_center(l, 42, 60, 239);
            assert!(!hits, "seed {seed}: ({t}, {l})");
        }
        assert_eq!(
            sample_border_location(42, 299, 299, 60, 9).unwrap(),
            sample_border_location(42, 299, 299, 60, 9).unwrap()
        );
    }

    #[test]
    fn composition_extremes() {
        let img = ImageRgb::from_fn(8, 8, |ch, r, c| (ch + r + c) as f64 / 20.0);
        let noise = NoiseSource::UniformRandom { seed: 3 };
        assert_eq!(apply_patch(&img, &BinaryMask::empty(8, 8), &noise).unwrap(), img);
        let full = apply_patch(&img, &BinaryMask::full(8, 8), &noise).unwrap();
        for ch in 0..3 {
            for r in 0..8 {
                for c in 0..8 {
                    assert_eq!(full.plane(ch).get(r, c), noise.sample(ch, r, c));
                }
            }
        }
        assert!(apply_patch(&img, &BinaryMask::empty(8, 9), &noise).is_err());
    }

    #[test]
    fn checkerboard_and_solid() {
        let cb = NoiseSource::Checkerboard { period: 2 };
        assert_eq!(cb.sample(0, 0, 0), 1.0);
        assert_eq!(cb.sample(0, 0, 2), 0.0);
        assert_eq!(cb.sample(2, 3, 3), 1.0);
        assert_eq!(NoiseSource::SolidContrast { value: 0.25 }.sample(1, 5, 5), 0.25);
        assert!(NoiseSource::Checkerboard { period: 0 }.validate().is_err());
    }

    #[test]
    fn erosion_and_dilation() {
        let m = BinaryMask::rect(10, 10, 2, 2, 4, 4);
        assert_eq!(m.eroded().count(), 4);
        assert_eq!(m.dilated().count(), 36);
        let corner = BinaryMask::rect(10, 10, 0, 0, 4, 4);
        assert_eq!(corner.eroded().count(), 4);
        assert_eq!(corner.dilated().count(), 25);
    }

    #[test]
    fn presets() {
        for (name, size) in [("lavan42", 42), ("lavan52", 52), ("lavan60", 60), ("patch95", 95)] {
            let p = PatchSpec::preset(name, 1).unwrap();
            assert_eq!(p.size, size);
            assert!(PRESET_SIZES.contains(&p.size));
            p.resolve(299, 299).unwrap();
        }
        assert!(PatchSpec::preset("lavan43", 1).is_none());
    }
}
