// SPDX-License-Identifier: Apache-2.0

//! Run configuration: command-line flags layered over an optional JSON file.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::Deserialize;
use serde_json::Value;

pub const MAX_DEGREE: u32 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Auto,
    Exact,
    Quadrature,
    Montecarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    Legendre,
    Laguerre,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelSource {
    Closed,
    Series,
}

/// Flags accepted by every command; each overrides the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// JSON run configuration
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Base domain: disk, ball:N, type1:P,Q, full:N, or JSON
    #[arg(long)]
    pub domain: Option<String>,
    /// Weight: gaussian:MU, norm:S, poly:C0,C1,…, const[:C], scale:C, table:PATH,
    /// @PATH (JSON), joined by '*'
    #[arg(long)]
    pub weight: Option<String>,
    /// Second weight (moment-mismatch)
    #[arg(long)]
    pub weight2: Option<String>,
    /// Automorphism: translate:V, thullen:A, ch:A, base-rotation:θ,
    /// fiber-rotation:θ, or JSON (repeatable)
    #[arg(long = "map")]
    pub maps: Vec<String>,
    /// Base dimension for Gaussian weights
    #[arg(long)]
    pub n: Option<usize>,
    /// Fiber dimension / weight power
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub degree: Option<u32>,
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Mismatch threshold for characterization verdicts
    #[arg(long)]
    pub mismatch_tolerance: Option<f64>,
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    /// Quadrature scheme as JSON
    #[arg(long)]
    pub scheme: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub samples: Option<u64>,
    /// Points: JSON list or path to a JSON file
    #[arg(long)]
    pub points: Option<String>,
    /// Points per side of a kernel grid
    #[arg(long)]
    pub grid: Option<usize>,
    /// Sampling radius in the base
    #[arg(long)]
    pub radius: Option<f64>,
    /// Fiber correlation bound for sampled Hartogs pairs
    #[arg(long)]
    pub ratio: Option<f64>,
    /// Finite-difference step
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long, value_enum)]
    pub basis: Option<Basis>,
    #[arg(long)]
    pub ridge: Option<f64>,
    /// Scale both weights to unit mass
    #[arg(long)]
    pub unit_mass: bool,
    /// Load a Gram matrix (JSON) instead of assembling one
    #[arg(long)]
    pub gram: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub kernel: Option<KernelSource>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Worker threads (default: BERGMAN_THREADS, then all cores)
    #[arg(long)]
    pub threads: Option<usize>,
}

/// Contents of a `--config` file. Unknown keys are rejected.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub command: Option<String>,
    pub domain: Option<Value>,
    pub weight: Option<Value>,
    pub weight2: Option<Value>,
    pub maps: Option<Vec<Value>>,
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub mu: Option<f64>,
    pub degree: Option<u32>,
    pub tolerance: Option<f64>,
    pub mismatch_tolerance: Option<f64>,
    pub method: Option<Method>,
    pub scheme: Option<Value>,
    pub seed: Option<u64>,
    pub samples: Option<u64>,
    pub points: Option<Value>,
    pub grid: Option<usize>,
    pub radius: Option<f64>,
    pub ratio: Option<f64>,
    pub step: Option<f64>,
    pub basis: Option<Basis>,
    pub ridge: Option<f64>,
    pub unit_mass: Option<bool>,
    pub gram: Option<PathBuf>,
    pub kernel: Option<KernelSource>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub threads: Option<usize>,
}

/// Effective settings after merging flags, file and defaults.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub domain: Option<Value>,
    pub weight: Option<Value>,
    pub weight2: Option<Value>,
    pub maps: Vec<Value>,
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub mu: Option<f64>,
    pub degree: u32,
    pub tolerance: Option<f64>,
    pub mismatch_tolerance: Option<f64>,
    pub method: Method,
    pub scheme: Option<Value>,
    pub seed: u64,
    pub samples: Option<u64>,
    pub points: Option<Value>,
    pub grid: Option<usize>,
    pub radius: Option<f64>,
    pub ratio: Option<f64>,
    pub step: Option<f64>,
    pub basis: Option<Basis>,
    pub ridge: f64,
    pub unit_mass: bool,
    pub gram: Option<PathBuf>,
    pub kernel: Option<KernelSource>,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub threads: Option<usize>,
}

impl RunConfig {
    pub const DEFAULT_DEGREE: u32 = 20;
    pub const DEFAULT_TOLERANCE: f64 = 1e-8;

    pub fn tolerance_or(&self, default: f64) -> f64 {
        self.tolerance.unwrap_or(default)
    }
}

pub fn load_config(path: &Path) -> Result<FileConfig, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn text_value(s: String) -> Value {
    Value::String(s)
}

pub fn merge(command: &str, flags: Flags) -> Result<RunConfig, String> {
    let file = match &flags.config {
        Some(path) => load_config(path)?,
        None => FileConfig::default(),
    };
    if let Some(c) = &file.command {
        if c != command {
            return Err(format!("command: config names `{c}` but `{command}` was invoked"));
        }
    }
    let maps = if flags.maps.is_empty() {
        file.maps.unwrap_or_default()
    } else {
        flags.maps.into_iter().map(text_value).collect()
    };
    let cfg = RunConfig {
        domain: flags.domain.map(text_value).or(file.domain),
        weight: flags.weight.map(text_value).or(file.weight),
        weight2: flags.weight2.map(text_value).or(file.weight2),
        maps,
        n: flags.n.or(file.n),
        m: flags.m.or(file.m),
        mu: flags.mu.or(file.mu),
        degree: flags.degree.or(file.degree).unwrap_or(RunConfig::DEFAULT_DEGREE),
        tolerance: flags.tolerance.or(file.tolerance),
        mismatch_tolerance: flags.mismatch_tolerance.or(file.mismatch_tolerance),
        method: flags.method.or(file.method).unwrap_or(Method::Auto),
        scheme: flags.scheme.map(text_value).or(file.scheme),
        seed: flags.seed.or(file.seed).unwrap_or(0),
        samples: flags.samples.or(file.samples),
        points: flags.points.map(text_value).or(file.points),
        grid: flags.grid.or(file.grid),
        radius: flags.radius.or(file.radius),
        ratio: flags.ratio.or(file.ratio),
        step: flags.step.or(file.step),
        basis: flags.basis.or(file.basis),
        ridge: flags.ridge.or(file.ridge).unwrap_or(0.0),
        unit_mass: flags.unit_mass || file.unit_mass.unwrap_or(false),
        gram: flags.gram.or(file.gram),
        kernel: flags.kernel.or(file.kernel),
        out: flags.out.or(file.out),
        format: flags.format.or(file.format).unwrap_or_default(),
        threads: flags.threads.or(file.threads),
    };
    validate(&cfg)?;
    Ok(cfg)
}

fn validate(cfg: &RunConfig) -> Result<(), String> {
    let positive = |key: &str, v: Option<f64>| match v {
        Some(x) if !(x > 0.0 && x.is_finite()) => Err(format!("{key}: must be positive and finite, got {x}")),
        _ => Ok(()),
    };
    if cfg.degree > MAX_DEGREE {
        return Err(format!("degree: must be at most {MAX_DEGREE}, got {}", cfg.degree));
    }
    positive("tolerance", cfg.tolerance)?;
    positive("mismatch_tolerance", cfg.mismatch_tolerance)?;
    positive("mu", cfg.mu)?;
    positive("radius", cfg.radius)?;
    positive("step", cfg.step)?;
    if let Some(r) = cfg.ratio {
        if !(r > 0.0 && r < 1.0) {
            return Err(format!("ratio: must lie in (0, 1), got {r}"));
        }
    }
    if !(cfg.ridge >= 0.0 && cfg.ridge.is_finite()) {
        return Err(format!("ridge: must be non-negative, got {}", cfg.ridge));
    }
    for (key, v) in [("n", cfg.n), ("m", cfg.m), ("grid", cfg.grid), ("threads", cfg.threads)] {
        if v == Some(0) {
            return Err(format!("{key}: must be at least 1"));
        }
    }
    if cfg.samples == Some(0) {
        return Err("samples: must be at least 1".into());
    }
    Ok(())
}
