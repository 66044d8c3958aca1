//! In-memory JPEG-style compression: the lossy half of a baseline codec
//! without entropy coding.
//!
//! RGB -> YCbCr (full range), 4:2:0 chroma averaging, 8x8 DCT per channel,
//! quantization with the Annex K tables scaled by quality, then the inverse
//! path with nearest-neighbour chroma upsampling.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::imagecore::{ImagePlane, ImageRgb};

#[rustfmt::skip]
const LUMA_TABLE: [u16; 64] = [
    16, 11, 10, 16, 24, 40, 51, 61,
    12, 12, 14, 19, 26, 58, 60, 55,
    14, 13, 16, 24, 40, 57, 69, 56,
    14, 17, 22, 29, 51, 87, 80, 62,
    18, 22, 37, 56, 68, 109, 103, 77,
    24, 35, 55, 64, 81, 104, 113, 92,
    49, 64, 78, 87, 103, 121, 120, 101,
    72, 92, 95, 98, 112, 100, 103, 99,
];

#[rustfmt::skip]
const CHROMA_TABLE: [u16; 64] = [
    17, 18, 24, 47, 99, 99, 99, 99,
    18, 21, 26, 66, 99, 99, 99, 99,
    24, 26, 56, 99, 99, 99, 99, 99,
    47, 66, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99,
];

/// Quality in 1..=100 to the percentage applied to the base tables.
pub fn quality_scale(quality: u8) -> u32 {
    let q = quality.clamp(1, 100) as u32;
    if q < 50 {
        5000 / q
    } else {
        200 - 2 * q
    }
}

fn scaled_table(base: &[u16; 64], quality: u8) -> [f64; 64] {
    let scale = quality_scale(quality);
    // baseline tables are 8-bit: clamp to [1, 255]
    base.map(|b| ((b as u32 * scale + 50) / 100).clamp(1, 255) as f64)
}

/// Luma and chroma quantization tables for a quality.
pub fn quant_tables(quality: u8) -> ([f64; 64], [f64; 64]) {
    (scaled_table(&LUMA_TABLE, quality), scaled_table(&CHROMA_TABLE, quality))
}

/// `basis[x][u] = C(u)/2 * cos((2x + 1) u pi / 16)`, `C(0) = 1/sqrt 2`.
fn basis() -> &'static [[f64; 8]; 8] {
    static BASIS: OnceLock<[[f64; 8]; 8]> = OnceLock::new();
    BASIS.get_or_init(|| {
        let mut b = [[0.0; 8]; 8];
        for (x, row) in b.iter_mut().enumerate() {
            for (u, v) in row.iter_mut().enumerate() {
                let cu = if u == 0 { 1.0 / 2f64.sqrt() } else { 1.0 };
                *v = cu / 2.0 * ((2 * x + 1) as f64 * u as f64 * PI / 16.0).cos();
            }
        }
        b
    })
}

/// Orthonormal 8x8 DCT-II, row-major `[y][x]` -> `[v][u]`.
pub fn fdct(block: &[f64; 64]) -> [f64; 64] {
    let b = basis();
    let mut tmp = [0.0; 64];
    for y in 0..8 {
        for u in 0..8 {
            tmp[y * 8 + u] = (0..8).map(|x| b[x][u] * block[y * 8 + x]).sum();
        }
    }
    let mut out = [0.0; 64];
    for v in 0..8 {
        for u in 0..8 {
            out[v * 8 + u] = (0..8).map(|y| b[y][v] * tmp[y * 8 + u]).sum();
        }
    }
    out
}

pub fn idct(coef: &[f64; 64]) -> [f64; 64] {
    let b = basis();
    let mut tmp = [0.0; 64];
    for v in 0..8 {
        for x in 0..8 {
            tmp[v * 8 + x] = (0..8).map(|u| b[x][u] * coef[v * 8 + u]).sum();
        }
    }
    let mut out = [0.0; 64];
    for y in 0..8 {
        for x in 0..8 {
            out[y * 8 + x] = (0..8).map(|v| b[y][v] * tmp[v * 8 + x]).sum();
        }
    }
    out
}

/// A plane on the 0..255 scale, any size.
struct Samples {
    h: usize,
    w: usize,
    data: Vec<f64>,
}

impl Samples {
    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r.min(self.h - 1) * self.w + c.min(self.w - 1)]
    }
}

/// Level shift, DCT, quantize/dequantize, inverse DCT on every 8x8 block.
/// Partial blocks are padded by edge replication.
fn compress_plane(s: &Samples, table: &[f64; 64]) -> Samples {
    let mut out = vec![0.0; s.h * s.w];
    for by in (0..s.h).step_by(8) {
        for bx in (0..s.w).step_by(8) {
            let mut block = [0.0; 64];
            for y in 0..8 {
                for x in 0..8 {
                    block[y * 8 + x] = s.at(by + y, bx + x) - 128.0;
                }
            }
            let mut coef = fdct(&block);
            for (c, q) in coef.iter_mut().zip(table) {
                *c = (*c / q).round() * q;
            }
            let rec = idct(&coef);
            for y in 0..8.min(s.h - by) {
                for x in 0..8.min(s.w - bx) {
                    out[(by + y) * s.w + bx + x] = rec[y * 8 + x] + 128.0;
                }
            }
        }
    }
    Samples {
        h: s.h,
        w: s.w,
        data: out,
    }
}

fn subsample(s: &Samples) -> Samples {
    let (h, w) = (s.h.div_ceil(2), s.w.div_ceil(2));
    let mut data = Vec::with_capacity(h * w);
    for r in 0..h {
        for c in 0..w {
            let (r2, c2) = (2 * r, 2 * c);
            data.push((s.at(r2, c2) + s.at(r2, c2 + 1) + s.at(r2 + 1, c2) + s.at(r2 + 1, c2 + 1)) / 4.0);
        }
    }
    Samples { h, w, data }
}

/// Compress-decompress round trip at `quality` (1..=100).
pub fn jpeg_transform(img: &ImageRgb, quality: u8) -> Result<ImageRgb> {
    if !(1..=100).contains(&quality) {
        return Err(Error::InvalidParameter(format!("quality {quality} outside 1..=100")));
    }
    let (h, w) = img.dims();
    let n = h * w;
    let (rp, gp, bp) = (img.plane(0).data(), img.plane(1).data(), img.plane(2).data());
    let mut y = Vec::with_capacity(n);
    let mut cb = Vec::with_capacity(n);
    let mut cr = Vec::with_capacity(n);
    for i in 0..n {
        let (r, g, b) = (rp[i] * 255.0, gp[i] * 255.0, bp[i] * 255.0);
        y.push(0.299 * r + 0.587 * g + 0.114 * b);
        cb.push(128.0 - 0.168_736 * r - 0.331_264 * g + 0.5 * b);
        cr.push(128.0 + 0.5 * r - 0.418_688 * g - 0.081_312 * b);
    }
    let (luma_q, chroma_q) = quant_tables(quality);
    let y = compress_plane(&Samples { h, w, data: y }, &luma_q);
    let cb = compress_plane(&subsample(&Samples { h, w, data: cb }), &chroma_q);
    let cr = compress_plane(&subsample(&Samples { h, w, data: cr }), &chroma_q);

    let mut out = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    for r in 0..h {
        for c in 0..w {
            let i = r * w + c;
            let yy = y.data[i];
            let cbv = cb.at(r / 2, c / 2) - 128.0;
            let crv = cr.at(r / 2, c / 2) - 128.0;
            out[0][i] = (yy + 1.402 * crv) / 255.0;
            out[1][i] = (yy - 0.344_136 * cbv - 0.714_136 * crv) / 255.0;
            out[2][i] = (yy + 1.772 * cbv) / 255.0;
        }
    }
    let planes = out.map(|d| ImagePlane::from_clamped(h, w, d).expect("dimensions are consistent"));
    ImageRgb::from_planes(planes)
}
