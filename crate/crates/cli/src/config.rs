//! Run options: a JSON config file layered under command-line flags.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use clap::Args;
use qsaf::FlowConfig;
use serde::{Deserialize, Serialize};

/// Vertex weighting.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum WeightMode {
    Uniform,
    /// `exp(-t |x_i - x_k|^2)`, row-normalized.
    Gaussian(f64),
}

impl FromStr for WeightMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "uniform" {
            return Ok(Self::Uniform);
        }
        if let Some(t) = s.strip_prefix("gaussian:") {
            let t: f64 = t.parse().map_err(|_| format!("bad gaussian scale in {s:?}"))?;
            if !(t >= 0.0 && t.is_finite()) {
                return Err(format!("gaussian scale must be nonnegative, got {t}"));
            }
            return Ok(Self::Gaussian(t));
        }
        Err(format!("expected `uniform` or `gaussian:<t>`, got {s:?}"))
    }
}

impl fmt::Display for WeightMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Uniform => f.write_str("uniform"),
            Self::Gaussian(t) => write!(f, "gaussian:{t}"),
        }
    }
}

/// Patch encoder.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Encoder {
    RankOne,
    Fourier,
}

impl FromStr for Encoder {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "rank-one" => Ok(Self::RankOne),
            "fourier" => Ok(Self::Fourier),
            _ => Err(format!("expected `rank-one` or `fourier`, got {s:?}")),
        }
    }
}

impl fmt::Display for Encoder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::RankOne => "rank-one",
            Self::Fourier => "fourier",
        })
    }
}

/// Patch adjacency.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Adjacency {
    /// Patch grid with a `(2r+1)^2` stencil.
    Grid,
    /// Each patch plus its `k` nearest patches.
    Knn(usize),
}

impl FromStr for Adjacency {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "grid" {
            return Ok(Self::Grid);
        }
        if let Some(k) = s.strip_prefix("knn:") {
            return k.parse().map(Self::Knn).map_err(|_| format!("bad neighbor count in {s:?}"));
        }
        Err(format!("expected `grid` or `knn:<k>`, got {s:?}"))
    }
}

impl fmt::Display for Adjacency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Grid => f.write_str("grid"),
            Self::Knn(k) => write!(f, "knn:{k}"),
        }
    }
}

/// Single-vertex state space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum VertexMode {
    Density,
    Classical,
}

impl FromStr for VertexMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "density" => Ok(Self::Density),
            "classical" => Ok(Self::Classical),
            _ => Err(format!("expected `density` or `classical`, got {s:?}")),
        }
    }
}

impl fmt::Display for VertexMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Density => "density",
            Self::Classical => "classical",
        })
    }
}

/// Eigenbasis of generated data.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Basis {
    Identity,
    Random,
}

impl FromStr for Basis {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "identity" => Ok(Self::Identity),
            "random" => Ok(Self::Random),
            _ => Err(format!("expected `identity` or `random`, got {s:?}")),
        }
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Identity => "identity",
            Self::Random => "random",
        })
    }
}

macro_rules! string_conversions {
    ($($t:ty),*) => {$(
        impl TryFrom<String> for $t {
            type Error = String;
            fn try_from(s: String) -> std::result::Result<Self, String> {
                s.parse()
            }
        }
        impl From<$t> for String {
            fn from(v: $t) -> String {
                v.to_string()
            }
        }
    )*};
}

string_conversions!(WeightMode, Encoder, Adjacency, VertexMode, Basis);

/// Every option of every command. Unset options fall back to the
/// command's own defaults.
#[derive(Args, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Options {
    /// JSON file with options; flags given on the command line win
    #[arg(long, global = true)]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    /// Output directory
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,

    /// Step size
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,

    /// Purity-gap tolerance for convergence
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub purity_tol: Option<f64>,

    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,

    /// Keep every n-th state of a trajectory
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub record_every: Option<usize>,

    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,

    /// Trace of the density matrices
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,

    /// `uniform` or `gaussian:<t>`
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weights: Option<WeightMode>,

    /// Exit successfully even if the run did not converge
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub allow_partial: bool,

    /// Standard deviation of the synthetic input noise
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_sigma: Option<f64>,

    /// Worker threads (results do not depend on it)
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,

    /// `density` or `classical`
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<VertexMode>,

    /// Comma-separated data eigenvalues
    #[arg(long, global = true, value_delimiter = ',', allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eigenvalues: Option<Vec<f64>>,

    /// `identity` or `random`
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub basis: Option<Basis>,

    /// JSON matrix file `{"re": [[..]], "im": [[..]]}` used instead of eigenvalues
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matrix: Option<PathBuf>,

    /// Input image (PNG or PPM); a synthetic image is used if absent
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,

    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rows: Option<usize>,

    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cols: Option<usize>,

    /// Grid stencil radius
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius: Option<usize>,

    /// Matrix dimension
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,

    /// Number of steps of fixed-length runs
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,

    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub patch_size: Option<usize>,

    /// `rank-one` or `fourier`
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub encoder: Option<Encoder>,

    /// `grid` or `knn:<k>`
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub adjacency: Option<Adjacency>,

    /// Stop once every Bloch vector has at least this norm
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stop_norm: Option<f64>,

    /// Largest accepted deviation of restrict-check
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub restrict_tol: Option<f64>,

    /// Use non-commuting data in restrict-check
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub noncommuting: bool,
}

impl Options {
    /// Reads `path` and lets every option set in `self` override it.
    pub fn layered_over_file(self, path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let file: Options = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        let mut merged = serde_json::to_value(file)?;
        let flags = serde_json::to_value(&self)?;
        let (Some(base), Some(over)) = (merged.as_object_mut(), flags.as_object()) else {
            bail!("options did not serialize to objects");
        };
        for (k, v) in over {
            base.insert(k.clone(), v.clone());
        }
        let mut out: Options = serde_json::from_value(merged)?;
        out.config = self.config;
        Ok(out)
    }

    /// Applies the config file named by `--config`, if any.
    pub fn resolve(self) -> Result<Self> {
        match self.config.clone() {
            Some(path) => self.layered_over_file(&path),
            None => Ok(self),
        }
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    /// Flow settings with the given command defaults for step size and
    /// tolerance.
    pub fn flow(&self, eps: f64, purity_tol: f64) -> Result<FlowConfig> {
        let d = FlowConfig::default();
        let cfg = FlowConfig {
            step_size: self.eps.unwrap_or(eps),
            purity_tol: self.purity_tol.unwrap_or(purity_tol),
            max_iters: self.max_iters.unwrap_or(d.max_iters),
            record_every: self.record_every.unwrap_or(d.record_every),
            trace_scale: self.tau.unwrap_or(d.trace_scale),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn weight_mode(&self) -> WeightMode {
        self.weights.unwrap_or(WeightMode::Uniform)
    }
}
