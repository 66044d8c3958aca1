//! Local gradients smoothing (LGS) and baseline input-transformation defenses
//! against localized adversarial patches.
//!
//! The crate is organised around a small floating-point raster type
//! ([`ImagePlane`], [`ImageRgb`]) with values in `[0, 1]`:
//!
//! - [`imagecore`]: rasters, luminance and PNG/PNM I/O
//! - [`gradients`]: first-order gradient magnitude and min-max normalization
//! - [`lgs`]: block-wise gradient window search and clipped suppression
//! - [`baselines`]: median/Gaussian/bilateral filters, bit-depth reduction,
//!   DCT compression and total-variation denoising
//! - [`patchsim`]: localized noise patches composed with a binary mask
//! - [`metrics`]: suppression, structural loss and localization scores

pub mod baselines;
pub mod error;
pub mod gradients;
pub mod imagecore;
pub mod lgs;
pub mod metrics;
pub mod patchsim;
pub mod rng;

pub use baselines::DefenseConfig;
pub use error::{Error, Result};
pub use gradients::{grad_magnitude, normalize, GradMap};
pub use imagecore::{load_image, save_image, save_plane, to_luminance, ImagePlane, ImageRgb};
pub use lgs::{estimate_mask, lgs_transform, BlockGrid, LgsParams};
pub use metrics::{evaluate, EvalReport};
pub use patchsim::{apply_patch, make_mask, BinaryMask, NoiseSource, PatchSpec, Placement};
