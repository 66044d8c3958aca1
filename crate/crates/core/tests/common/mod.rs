#![allow(dead_code)]

pub mod oracle;

use lgs_core::rng::CounterRng;
use lgs_core::ImageRgb;

/// Small deterministic stream for test-case generation.
pub struct Draws {
    rng: CounterRng,
    n: u64,
}

impl Draws {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: CounterRng::new(seed),
            n: 0,
        }
    }

    pub fn unit(&mut self) -> f64 {
        self.n += 1;
        self.rng.unit_at(0xD1A5, self.n)
    }

    pub fn range(&mut self, lo: usize, hi_inclusive: usize) -> usize {
        lo + (self.unit() * (hi_inclusive - lo + 1) as f64) as usize
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + self.unit() * (hi - lo)
    }
}

/// A mix of scene types: iid noise, smooth ramps, piecewise-constant
/// blocks, and a smooth background with a noisy square.
pub fn random_image(d: &mut Draws, h: usize, w: usize) -> ImageRgb {
    let kind = d.range(0, 3);
    let seed = (d.unit() * 1e9) as u64;
    let rng = CounterRng::new(seed);
    let noise = move |ch: usize, r: usize, c: usize| rng.unit_at(ch as u64, (r * w + c) as u64);
    match kind {
        0 => ImageRgb::from_fn(h, w, noise),
        1 => {
            let (a, b, o) = (d.uniform(-0.5, 0.5), d.uniform(-0.5, 0.5), d.uniform(0.2, 0.8));
            ImageRgb::from_fn(h, w, move |ch, r, c| {
                o + a * r as f64 / h as f64 + b * c as f64 / w as f64 + 0.05 * ch as f64
            })
        }
        2 => {
            let cell = d.range(3, 24);
            ImageRgb::from_fn(h, w, move |ch, r, c| {
                let k = (r / cell) * 131 + (c / cell) * 71 + ch * 17;
                (k % 11) as f64 / 10.0
            })
        }
        _ => {
            let size = d.range(8, (h.min(w) / 2).max(8));
            let (top, left) = (d.range(0, h - size), d.range(0, w - size));
            ImageRgb::from_fn(h, w, move |ch, r, c| {
                if (top..top + size).contains(&r) && (left..left + size).contains(&c) {
                    noise(ch, r, c)
                } else {
                    0.3 + 0.4 * (r + c) as f64 / (h + w) as f64
                }
            })
        }
    }
}

pub fn max_abs_diff(a: &ImageRgb, b: &ImageRgb) -> f64 {
    a.planes()
        .iter()
        .zip(b.planes())
        .flat_map(|(p, q)| p.data().iter().zip(q.data()).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max)
}

type PixelFn = fn(usize, usize) -> [u32; 3];

/// Expected 8-bit content of the checked-in fixtures.
pub fn fixture_pixels(name: &str) -> ImageRgb {
    let (h, w, f): (usize, usize, PixelFn) = match name {
        "ramp" => (4, 6, |r, c| {
            [
                (c as u32 * 51) % 256,
                (r as u32 * 60 + c as u32 * 7) % 256,
                255 - c as u32 * 40,
            ]
        }),
        "gray" => (3, 5, |r, c| [(r as u32 * 5 + c as u32) * 17; 3]),
        "checker" => (8, 8, |r, c| {
            if (r / 2 + c / 2).is_multiple_of(2) {
                [255, 200, 180]
            } else {
                [10, 0, 30]
            }
        }),
        _ => panic!("unknown fixture {name}"),
    };
    let bytes: Vec<u8> = (0..h * w).flat_map(|i| f(i / w, i % w).map(|v| v as u8)).collect();
    ImageRgb::from_rgb8(h, w, &bytes).unwrap()
}
