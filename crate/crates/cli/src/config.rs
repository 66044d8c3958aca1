//! Config-file schema and the flag-over-file merge.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use lgs_core::patchsim::{Placement, DEFAULT_MARGIN};
use lgs_core::{DefenseConfig, LgsParams, NoiseSource, PatchSpec};
use serde::{Deserialize, Serialize};

use crate::args::{DefenseArgs, Emit, GlobalArgs, GridArgs, IoArgs, NoiseKind, PatchArgs, PlacementKind};

/// Everything a run can take from a file. Flags win over these values.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub inputs: Vec<String>,
    pub output: Option<PathBuf>,
    pub workers: Option<usize>,
    /// Fallback seed for patches.
    pub seed: Option<u64>,
    pub emit: Vec<Emit>,
    pub dump_intermediates: bool,
    pub defense: Option<DefenseConfig>,
    pub patch: PatchArgs,
    pub grid: GridArgs,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JobCommand {
    Defend,
    Simulate,
    Evaluate,
    Inspect,
}

#[derive(Debug, Clone, Deserialize)]
pub struct Job {
    pub command: JobCommand,
    #[serde(flatten)]
    pub config: FileConfig,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobFile {
    #[serde(default)]
    pub job: Vec<Job>,
}

impl JobFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading jobs {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing jobs {}", path.display()))
    }
}

/// Output formats after defaults: png when no image format is named, both
/// report formats when neither is named.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Formats {
    pub png: bool,
    pub pnm: bool,
    pub json: bool,
    pub csv: bool,
}

impl Formats {
    pub fn from_list(list: &[Emit]) -> Self {
        let has = |e| list.contains(&e);
        let (png, pnm) = match (has(Emit::Png), has(Emit::Pnm)) {
            (false, false) => (true, false),
            other => other,
        };
        let (json, csv) = match (has(Emit::Json), has(Emit::Csv)) {
            (false, false) => (true, true),
            other => other,
        };
        Self { png, pnm, json, csv }
    }

    pub fn image_exts(&self) -> Vec<&'static str> {
        let mut exts = Vec::new();
        if self.png {
            exts.push("png");
        }
        if self.pnm {
            exts.push("ppm");
        }
        exts
    }
}

/// Settings shared by every command.
#[derive(Debug, Clone)]
pub struct Common {
    pub inputs: Vec<String>,
    pub output: PathBuf,
    pub workers: usize,
    pub formats: Formats,
}

pub fn resolve_common(io: &IoArgs, global: &GlobalArgs, file: &FileConfig) -> Result<Common> {
    let inputs = if io.inputs.is_empty() {
        file.inputs.clone()
    } else {
        io.inputs.clone()
    };
    if inputs.is_empty() {
        bail!("no inputs given");
    }
    let output = io
        .output
        .clone()
        .or_else(|| file.output.clone())
        .ok_or_else(|| anyhow!("no output directory given (-o/--output)"))?;
    let workers = match global.workers.or(file.workers) {
        Some(0) => bail!("--workers must be at least 1"),
        Some(n) => n,
        None => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
    };
    let emit = if global.emit.is_empty() {
        &file.emit
    } else {
        &global.emit
    };
    Ok(Common {
        inputs,
        output,
        workers,
        formats: Formats::from_list(emit),
    })
}

fn canonical_kind(kind: &str) -> Result<&'static str> {
    DefenseConfig::default_for(kind)
        .map(|d| d.kind())
        .ok_or_else(|| anyhow!("unknown defense '{kind}' (expected lgs, mf, gf, bf, br, jpeg or tvm)"))
}

/// Defense for `kind` (or the flag/file choice when `None`), starting from
/// the file's parameters when the kinds agree, then applying flags.
pub fn resolve_defense(flags: &DefenseArgs, file: Option<&DefenseConfig>, kind: Option<&str>) -> Result<DefenseConfig> {
    let kind = match kind.or(flags.defense.as_deref()) {
        Some(k) => Some(canonical_kind(k)?),
        None => None,
    };
    let base = match (kind, file) {
        (Some(k), Some(f)) if f.kind() == k => *f,
        (Some(k), _) => DefenseConfig::default_for(k).expect("canonical kind"),
        (None, Some(f)) => *f,
        (None, None) => DefenseConfig::Lgs(LgsParams::default()),
    };
    let cfg = apply_overrides(base, flags);
    cfg.validate()?;
    Ok(cfg)
}

fn apply_overrides(mut cfg: DefenseConfig, f: &DefenseArgs) -> DefenseConfig {
    fn set<T: Copy>(dst: &mut T, src: Option<T>) {
        if let Some(v) = src {
            *dst = v;
        }
    }
    match &mut cfg {
        DefenseConfig::Lgs(p) => {
            set(&mut p.lambda, f.lambda);
            set(&mut p.block, f.block);
            set(&mut p.overlap, f.overlap);
            set(&mut p.threshold, f.gamma);
        }
        DefenseConfig::Median(p) => set(&mut p.window, f.window),
        DefenseConfig::Gaussian(p) => {
            set(&mut p.window, f.window);
            p.sigma = f.sigma.or(p.sigma);
        }
        DefenseConfig::Bilateral(p) => {
            set(&mut p.window, f.window);
            p.sigma_space = f.sigma.or(p.sigma_space);
            p.sigma_range = f.sigma_range.or(p.sigma_range);
        }
        DefenseConfig::BitDepth(p) => set(&mut p.depth, f.depth),
        DefenseConfig::Jpeg(p) => set(&mut p.quality, f.quality),
        DefenseConfig::Tvm(p) => {
            set(&mut p.weight, f.weight);
            set(&mut p.max_iters, f.max_iters);
            set(&mut p.tol, f.tol);
        }
    }
    cfg
}

fn pick<T: Clone>(flag: &[T], file: &[T]) -> Vec<T> {
    if flag.is_empty() {
        file.to_vec()
    } else {
        flag.to_vec()
    }
}

/// Expands the evaluate grid: one entry per listed kind, swept over the
/// list that matches its main parameter.
pub fn resolve_defense_grid(defense: &DefenseArgs, grid: &GridArgs, file: &FileConfig) -> Result<Vec<DefenseConfig>> {
    let kinds = pick(&grid.defenses, &file.grid.defenses);
    let kinds: Vec<Option<&str>> = if kinds.is_empty() {
        vec![None]
    } else {
        kinds.iter().map(|k| Some(k.as_str())).collect()
    };
    let lambdas = pick(&grid.lambdas, &file.grid.lambdas);
    let qualities = pick(&grid.qualities, &file.grid.qualities);
    let weights = pick(&grid.weights, &file.grid.weights);
    let depths = pick(&grid.depths, &file.grid.depths);
    let windows = pick(&grid.windows, &file.grid.windows);

    let mut out = Vec::new();
    for kind in kinds {
        let base = resolve_defense(defense, file.defense.as_ref(), kind)?;
        let variants: Vec<DefenseArgs> = match base {
            DefenseConfig::Lgs(_) => sweep(&lambdas, |a, v| a.lambda = Some(v)),
            DefenseConfig::Jpeg(_) => sweep(&qualities, |a, v| a.quality = Some(v)),
            DefenseConfig::Tvm(_) => sweep(&weights, |a, v| a.weight = Some(v)),
            DefenseConfig::BitDepth(_) => sweep(&depths, |a, v| a.depth = Some(v)),
            _ => sweep(&windows, |a, v| a.window = Some(v)),
        };
        for v in variants {
            let cfg = apply_overrides(base, &v);
            cfg.validate()?;
            if !out.contains(&cfg) {
                out.push(cfg);
            }
        }
    }
    Ok(out)
}

fn sweep<T: Copy>(values: &[T], set: impl Fn(&mut DefenseArgs, T)) -> Vec<DefenseArgs> {
    if values.is_empty() {
        return vec![DefenseArgs::default()];
    }
    values
        .iter()
        .map(|&v| {
            let mut a = DefenseArgs::default();
            set(&mut a, v);
            a
        })
        .collect()
}

/// Patch specs from flags over the file: one per preset, or a single
/// custom `--size` patch.
pub fn resolve_patches(flags: &PatchArgs, file: &FileConfig) -> Result<Vec<PatchSpec>> {
    let f = &file.patch;
    let presets = pick(&flags.patch, &f.patch);
    let size = flags.size.or(f.size);
    let seed = flags.seed.or(f.seed).or(file.seed).unwrap_or(0);
    let placement = flags.placement.or(f.placement);
    let top = flags.top.or(f.top);
    let left = flags.left.or(f.left);
    let margin = flags.margin.or(f.margin);
    let noise_kind = flags.noise.or(f.noise);
    let period = flags.period.or(f.period);
    let value = flags.value.or(f.value);

    let mut bases = Vec::new();
    for name in &presets {
        let spec = PatchSpec::preset(name, seed)
            .ok_or_else(|| anyhow!("unknown patch preset '{name}' (expected lavan42, lavan52, lavan60, patch95)"))?;
        bases.push(match size {
            Some(s) => PatchSpec { size: s, ..spec },
            None => spec,
        });
    }
    if bases.is_empty() {
        let size = size.ok_or_else(|| anyhow!("no patch given (--patch or --size)"))?;
        bases.push(PatchSpec::explicit(size, 0, 0, NoiseSource::UniformRandom { seed }));
    }

    let explicit = match placement {
        Some(PlacementKind::Explicit) => true,
        Some(PlacementKind::Border) => false,
        None => top.is_some() || left.is_some(),
    };
    let noise = match noise_kind.unwrap_or(NoiseKind::Uniform) {
        NoiseKind::Uniform => NoiseSource::UniformRandom { seed },
        NoiseKind::Checker => NoiseSource::Checkerboard {
            period: period.unwrap_or(1),
        },
        NoiseKind::Solid => NoiseSource::SolidContrast {
            value: value.unwrap_or(1.0),
        },
    };
    noise.validate()?;

    let mut specs = Vec::new();
    for base in bases {
        if base.size == 0 {
            bail!("patch size must be at least 1");
        }
        let placement = if explicit {
            Placement::Explicit {
                top: top.unwrap_or(0),
                left: left.unwrap_or(0),
            }
        } else {
            let margin = margin.unwrap_or(DEFAULT_MARGIN.max(base.size));
            if margin < base.size {
                bail!("margin {margin} is smaller than the patch side {}", base.size);
            }
            Placement::BorderBand { margin, seed }
        };
        specs.push(PatchSpec {
            size: base.size,
            noise,
            placement,
        });
    }
    Ok(specs)
}
