//! First-order gradient magnitude and min-max normalization.
//!
//! Derivatives use central differences `(v[i+1] - v[i-1]) / 2` at interior
//! samples and the one-sided full step on the first and last line of each
//! axis. An axis of length 1 has zero derivative.

use crate::imagecore::{ImagePlane, ImageRgb};

/// Per-pixel non-negative gradient magnitude, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GradMap {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl GradMap {
    /// Wraps raw values. Panics on a length mismatch or a negative/NaN value.
    pub fn from_vec(height: usize, width: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), height * width, "gradient map length");
        assert!(
            data.iter().all(|&v| v >= 0.0),
            "gradient magnitudes must be non-negative"
        );
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
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn min_max(&self) -> Option<(f64, f64)> {
        let mut it = self.data.iter().copied();
        let first = it.next()?;
        Some(it.fold((first, first), |(lo, hi), v| (lo.min(v), hi.max(v))))
    }

    pub fn mean(&self) -> f64 {
        if self.data.is_empty() {
            return 0.0;
        }
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    /// Grayscale view for export; values above 1 are clamped.
    pub fn to_plane(&self) -> ImagePlane {
        ImagePlane::from_clamped(self.height, self.width, self.data.clone()).expect("dimensions are consistent")
    }
}

#[inline]
fn derivative(prev: Option<f64>, here: f64, next: Option<f64>) -> f64 {
    match (prev, next) {
        (Some(p), Some(n)) => (n - p) / 2.0,
        (None, Some(n)) => n - here,
        (Some(p), None) => here - p,
        (None, None) => 0.0,
    }
}

/// `sqrt(d_col^2 + d_row^2)` per pixel.
pub fn grad_magnitude(plane: &ImagePlane) -> GradMap {
    let (h, w) = plane.dims();
    let v = plane.data();
    let mut data = vec![0.0; h * w];
    for r in 0..h {
        let row = &v[r * w..(r + 1) * w];
        for c in 0..w {
            let here = row[c];
            let dx = derivative(c.checked_sub(1).map(|k| row[k]), here, (c + 1 < w).then(|| row[c + 1]));
            let dy = derivative(
                r.checked_sub(1).map(|k| v[k * w + c]),
                here,
                (r + 1 < h).then(|| v[(r + 1) * w + c]),
            );
            data[r * w + c] = (dx * dx + dy * dy).sqrt();
        }
    }
    GradMap {
        height: h,
        width: w,
        data,
    }
}

/// Gradient magnitude of the Rec. 601 luminance.
pub fn luminance_grad_magnitude(img: &ImageRgb) -> GradMap {
    grad_magnitude(&crate::imagecore::to_luminance(img))
}

/// `(g - min) / (max - min)` over the whole map; a constant map becomes
/// all zeros.
pub fn normalize(g: &GradMap) -> GradMap {
    let data = match g.min_max() {
        Some((lo, hi)) if hi > lo => {
            let range = hi - lo;
            g.data.iter().map(|&v| (v - lo) / range).collect()
        }
        _ => vec![0.0; g.data.len()],
    };
    GradMap {
        height: g.height,
        width: g.width,
        data,
    }
}
