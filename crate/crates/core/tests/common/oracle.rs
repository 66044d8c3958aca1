//! Straight-line reference for the LGS pipeline. Plain scalar loops over
//! flat buffers, with no grid type and no shared helpers from the library.

#![allow(clippy::manual_clamp, clippy::needless_range_loop)]

use lgs_core::ImageRgb;

pub struct OracleOutput {
    pub channels: [Vec<f64>; 3],
    pub mask: Vec<bool>,
    pub magnitude: Vec<f64>,
    pub normalized: Vec<f64>,
}

pub fn lgs(img: &ImageRgb, lambda: f64, block: usize, overlap: usize, gamma: f64) -> OracleOutput {
    let h = img.height();
    let w = img.width();
    let r = img.plane(0).data();
    let g = img.plane(1).data();
    let b = img.plane(2).data();

    // luminance
    let mut lum = vec![0.0; h * w];
    for i in 0..h * w {
        let y = (299.0 * r[i] + 587.0 * g[i] + 114.0 * b[i]) / 1000.0;
        lum[i] = y.max(0.0).min(1.0);
    }

    // gradient magnitude
    let mut mag = vec![0.0; h * w];
    for row in 0..h {
        for col in 0..w {
            let i = row * w + col;
            let dx = if w == 1 {
                0.0
            } else if col == 0 {
                lum[i + 1] - lum[i]
            } else if col == w - 1 {
                lum[i] - lum[i - 1]
            } else {
                (lum[i + 1] - lum[i - 1]) / 2.0
            };
            let dy = if h == 1 {
                0.0
            } else if row == 0 {
                lum[i + w] - lum[i]
            } else if row == h - 1 {
                lum[i] - lum[i - w]
            } else {
                (lum[i + w] - lum[i - w]) / 2.0
            };
            mag[i] = (dx * dx + dy * dy).sqrt();
        }
    }

    // min-max normalization
    let mut lo = mag[0];
    let mut hi = mag[0];
    for &m in &mag {
        if m < lo {
            lo = m;
        }
        if m > hi {
            hi = m;
        }
    }
    let mut norm = vec![0.0; h * w];
    if hi > lo {
        for i in 0..h * w {
            norm[i] = (mag[i] - lo) / (hi - lo);
        }
    }

    // anchors: every multiple of the stride that fits, plus the last fit
    let stride = block - overlap;
    let anchors = |dim: usize| -> (Vec<usize>, usize) {
        if dim <= block {
            return (vec![0], dim);
        }
        let mut a = Vec::new();
        for pos in 0..=dim - block {
            if pos % stride == 0 || pos == dim - block {
                a.push(pos);
            }
        }
        (a, block)
    };
    let (rows, bh) = anchors(h);
    let (cols, bw) = anchors(w);

    let mut keep = vec![false; h * w];
    for &top in &rows {
        for &left in &cols {
            let mut sum = 0.0;
            for rr in top..top + bh {
                for cc in left..left + bw {
                    sum += norm[rr * w + cc];
                }
            }
            let mean = sum / (bh * bw) as f64;
            if mean > gamma {
                for rr in top..top + bh {
                    for cc in left..left + bw {
                        keep[rr * w + cc] = true;
                    }
                }
            }
        }
    }

    let mut channels = [vec![0.0; h * w], vec![0.0; h * w], vec![0.0; h * w]];
    for i in 0..h * w {
        let gbar = if keep[i] { norm[i] } else { 0.0 };
        let mut s = lambda * gbar;
        if s < 0.0 {
            s = 0.0;
        }
        if s > 1.0 {
            s = 1.0;
        }
        let m = 1.0 - s;
        channels[0][i] = r[i] * m;
        channels[1][i] = g[i] * m;
        channels[2][i] = b[i] * m;
    }
    OracleOutput {
        channels,
        mask: keep,
        magnitude: mag,
        normalized: norm,
    }
}

/// Bit-for-bit comparison against a library output.
pub fn matches(out: &OracleOutput, img: &ImageRgb) -> bool {
    (0..3).all(|ch| {
        out.channels[ch]
            .iter()
            .zip(img.plane(ch).data())
            .all(|(a, b)| a.to_bits() == b.to_bits())
    })
}

/// Median by full sort of each replicate-padded neighbourhood.
pub fn median(plane: &[f64], h: usize, w: usize, window: usize) -> Vec<f64> {
    let rad = (window / 2) as i64;
    let mut out = vec![0.0; h * w];
    for r in 0..h as i64 {
        for c in 0..w as i64 {
            let mut vals = Vec::new();
            for dr in -rad..=rad {
                for dc in -rad..=rad {
                    let rr = (r + dr).clamp(0, h as i64 - 1) as usize;
                    let cc = (c + dc).clamp(0, w as i64 - 1) as usize;
                    vals.push(plane[rr * w + cc]);
                }
            }
            vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
            out[r as usize * w + c as usize] = vals[vals.len() / 2];
        }
    }
    out
}
