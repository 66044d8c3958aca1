//! Comparison defenses and the shared [`DefenseConfig`] schema.
//!
//! A config serializes as `{ kind = { params } }`, e.g. in TOML:
//!
//! ```toml
//! [defense.jpeg]
//! quality = 30
//! ```

pub mod filters;
pub mod jpeg;
pub mod tvm;

use serde::{Deserialize, Serialize};

pub use filters::{bilateral_filter, bit_depth_reduce, gaussian_filter, gaussian_kernel, median_filter};
pub use jpeg::jpeg_transform;
pub use tvm::{tvm_denoise, TvmInfo};

use crate::error::{Error, Result};
use crate::imagecore::ImageRgb;
use crate::lgs::{lgs_transform, LgsParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MedianParams {
    pub window: usize,
}

impl Default for MedianParams {
    fn default() -> Self {
        Self { window: 3 }
    }
}

/// `sigma` defaults to `window / 6`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaussianParams {
    pub window: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
}

impl Default for GaussianParams {
    fn default() -> Self {
        Self { window: 5, sigma: None }
    }
}

impl GaussianParams {
    pub fn sigma(&self) -> f64 {
        self.sigma.unwrap_or_else(|| filters::default_sigma(self.window))
    }
}

/// `sigma_space` defaults to `window / 6`, `sigma_range` to 0.1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BilateralParams {
    pub window: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_space: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_range: Option<f64>,
}

impl Default for BilateralParams {
    fn default() -> Self {
        Self {
            window: 5,
            sigma_space: None,
            sigma_range: None,
        }
    }
}

impl BilateralParams {
    pub fn sigma_space(&self) -> f64 {
        self.sigma_space.unwrap_or_else(|| filters::default_sigma(self.window))
    }

    pub fn sigma_range(&self) -> f64 {
        self.sigma_range.unwrap_or(filters::DEFAULT_SIGMA_RANGE)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BitDepthParams {
    pub depth: u8,
}

impl Default for BitDepthParams {
    fn default() -> Self {
        Self { depth: 3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JpegParams {
    pub quality: u8,
}

impl Default for JpegParams {
    fn default() -> Self {
        Self { quality: 30 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TvmParams {
    pub weight: f64,
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for TvmParams {
    fn default() -> Self {
        Self {
            weight: 10.0,
            max_iters: tvm::DEFAULT_MAX_ITERS,
            tol: tvm::DEFAULT_TOL,
        }
    }
}

/// One defense and its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DefenseConfig {
    Lgs(LgsParams),
    Median(MedianParams),
    Gaussian(GaussianParams),
    Bilateral(BilateralParams),
    BitDepth(BitDepthParams),
    Jpeg(JpegParams),
    Tvm(TvmParams),
}

/// Output image plus any solver metadata.
#[derive(Debug, Clone)]
pub struct DefenseOutput {
    pub image: ImageRgb,
    pub tvm: Option<TvmInfo>,
}

impl DefenseConfig {
    /// Short kind key as used in config files.
    pub fn kind(&self) -> &'static str {
        match self {
            DefenseConfig::Lgs(_) => "lgs",
            DefenseConfig::Median(_) => "median",
            DefenseConfig::Gaussian(_) => "gaussian",
            DefenseConfig::Bilateral(_) => "bilateral",
            DefenseConfig::BitDepth(_) => "bit_depth",
            DefenseConfig::Jpeg(_) => "jpeg",
            DefenseConfig::Tvm(_) => "tvm",
        }
    }

    /// Builds the default config for a kind key or its short alias
    /// (`mf`, `gf`, `bf`, `br`).
    pub fn default_for(kind: &str) -> Option<Self> {
        Some(match kind.to_ascii_lowercase().as_str() {
            "lgs" => DefenseConfig::Lgs(LgsParams::default()),
            "median" | "mf" => DefenseConfig::Median(MedianParams::default()),
            "gaussian" | "gf" => DefenseConfig::Gaussian(GaussianParams::default()),
            "bilateral" | "bf" => DefenseConfig::Bilateral(BilateralParams::default()),
            "bit_depth" | "bitdepth" | "br" => DefenseConfig::BitDepth(BitDepthParams::default()),
            "jpeg" => DefenseConfig::Jpeg(JpegParams::default()),
            "tvm" => DefenseConfig::Tvm(TvmParams::default()),
            _ => return None,
        })
    }

    /// Semicolon-separated effective parameters, defaults resolved.
    pub fn params_string(&self) -> String {
        match self {
            DefenseConfig::Lgs(p) => format!(
                "lambda={};block={};overlap={};gamma={}",
                p.lambda, p.block, p.overlap, p.threshold
            ),
            DefenseConfig::Median(p) => format!("window={}", p.window),
            DefenseConfig::Gaussian(p) => format!("window={};sigma={}", p.window, p.sigma()),
            DefenseConfig::Bilateral(p) => format!(
                "window={};sigma_space={};sigma_range={}",
                p.window,
                p.sigma_space(),
                p.sigma_range()
            ),
            DefenseConfig::BitDepth(p) => format!("depth={}", p.depth),
            DefenseConfig::Jpeg(p) => format!("quality={}", p.quality),
            DefenseConfig::Tvm(p) => format!("weight={};max_iters={};tol={}", p.weight, p.max_iters, p.tol),
        }
    }

    /// Table-style label, e.g. `LGS [lambda=2.3]`.
    pub fn label(&self) -> String {
        match self {
            DefenseConfig::Lgs(p) => format!("LGS [lambda={}]", p.lambda),
            DefenseConfig::Median(p) => format!("MF [window={}]", p.window),
            DefenseConfig::Gaussian(p) => format!("GF [window={}]", p.window),
            DefenseConfig::Bilateral(p) => format!("BF [window={}]", p.window),
            DefenseConfig::BitDepth(p) => format!("BR [depth={}]", p.depth),
            DefenseConfig::Jpeg(p) => format!("JPEG [quality={}]", p.quality),
            DefenseConfig::Tvm(p) => format!("TVM [weights={}]", p.weight),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let odd = |window: usize| {
            if window == 0 || window.is_multiple_of(2) {
                Err(Error::InvalidParameter(format!("window {window} must be odd and >= 1")))
            } else {
                Ok(())
            }
        };
        let positive = |name: &str, v: Option<f64>| match v {
            Some(s) if !(s > 0.0 && s.is_finite()) => Err(Error::InvalidParameter(format!("{name} {s} must be > 0"))),
            _ => Ok(()),
        };
        match self {
            DefenseConfig::Lgs(p) => p.validate(),
            DefenseConfig::Median(p) => odd(p.window),
            DefenseConfig::Gaussian(p) => {
                odd(p.window)?;
                positive("sigma", p.sigma)
            }
            DefenseConfig::Bilateral(p) => {
                odd(p.window)?;
                positive("sigma_space", p.sigma_space)?;
                positive("sigma_range", p.sigma_range)
            }
            DefenseConfig::BitDepth(p) if !(1..=8).contains(&p.depth) => {
                Err(Error::InvalidParameter(format!("depth {} outside 1..=8", p.depth)))
            }
            DefenseConfig::Jpeg(p) if !(1..=100).contains(&p.quality) => Err(Error::InvalidParameter(format!(
                "quality {} outside 1..=100",
                p.quality
            ))),
            DefenseConfig::Tvm(p) => {
                positive("weight", Some(p.weight))?;
                if p.max_iters == 0 {
                    return Err(Error::InvalidParameter("max_iters must be >= 1".into()));
                }
                if p.tol.is_nan() || p.tol < 0.0 {
                    return Err(Error::InvalidParameter(format!("tol {} must be >= 0", p.tol)));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn apply(&self, img: &ImageRgb) -> Result<DefenseOutput> {
        self.validate()?;
        let plain = |image| DefenseOutput { image, tvm: None };
        Ok(match self {
            DefenseConfig::Lgs(p) => plain(lgs_transform(img, p)?),
            DefenseConfig::Median(p) => plain(median_filter(img, p.window)?),
            DefenseConfig::Gaussian(p) => plain(gaussian_filter(img, p.window, p.sigma())?),
            DefenseConfig::Bilateral(p) => plain(bilateral_filter(img, p.window, p.sigma_space(), p.sigma_range())?),
            DefenseConfig::BitDepth(p) => plain(bit_depth_reduce(img, p.depth)?),
            DefenseConfig::Jpeg(p) => plain(jpeg_transform(img, p.quality)?),
            DefenseConfig::Tvm(p) => {
                let (image, info) = tvm_denoise(img, p.weight, p.max_iters, p.tol)?;
                DefenseOutput { image, tvm: Some(info) }
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_shape_is_kind_keyed() {
        let cfg = DefenseConfig::Jpeg(JpegParams { quality: 80 });
        assert_eq!(serde_json::to_string(&cfg).unwrap(), r#"{"jpeg":{"quality":80}}"#);
        let back: DefenseConfig = serde_json::from_str(r#"{"lgs":{"lambda":1.5}}"#).unwrap();
        assert_eq!(
            back,
            DefenseConfig::Lgs(LgsParams {
                lambda: 1.5,
                ..LgsParams::default()
            })
        );
        assert!(serde_json::from_str::<DefenseConfig>(r#"{"median":{"windw":3}}"#).is_err());
    }

    #[test]
    fn paper_grid_values_validate() {
        let mut cfgs = vec![
            DefenseConfig::Median(MedianParams { window: 3 }),
            DefenseConfig::Gaussian(GaussianParams::default()),
            DefenseConfig::Bilateral(BilateralParams::default()),
        ];
        cfgs.extend([10, 20, 30, 40, 60, 80].map(|quality| DefenseConfig::Jpeg(JpegParams { quality })));
        cfgs.extend([10.0, 20.0, 30.0].map(|weight| {
            DefenseConfig::Tvm(TvmParams {
                weight,
                ..TvmParams::default()
            })
        }));
        cfgs.extend([1, 2, 3].map(|depth| DefenseConfig::BitDepth(BitDepthParams { depth })));
        cfgs.extend([1.5, 1.7, 1.9, 2.1, 2.3].map(|l| DefenseConfig::Lgs(LgsParams::with_lambda(l))));
        for c in cfgs {
            c.validate().unwrap();
        }
        assert!(DefenseConfig::Median(MedianParams { window: 2 }).validate().is_err());
        assert!(DefenseConfig::BitDepth(BitDepthParams { depth: 9 }).validate().is_err());
        assert!(DefenseConfig::Jpeg(JpegParams { quality: 0 }).validate().is_err());
    }

    #[test]
    fn aliases_and_labels() {
        assert_eq!(DefenseConfig::default_for("mf").unwrap().label(), "MF [window=3]");
        assert_eq!(DefenseConfig::default_for("lgs").unwrap().label(), "LGS [lambda=2.3]");
        assert_eq!(
            DefenseConfig::default_for("gf").unwrap().params_string(),
            format!("window=5;sigma={}", 5.0 / 6.0)
        );
        assert!(DefenseConfig::default_for("dw").is_none());
    }
}
