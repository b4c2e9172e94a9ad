//! Experiment configuration (TOML).
//!
//! ```toml
//! scheme = "rx-coop"
//! n = 1
//! epsilon = 0.05
//! trials = 10
//! seed = 42
//! p_grid = { from = 1e280, to = 1e305, points = 6 }   # or a list
//!
//! [channel]
//! mode = "random-generic"      # | "fixed" (values) | "illustrating" (gamma, optional base)
//! ```
//!
//! Complex numbers are written as `[re, im]`.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::detection::ReducedSpec;
use crate::error::{Error, Result};
use crate::lattice::{derive_params, DEFAULT_C1, DEFAULT_C2};
use crate::tradeoff::MIN_GRID;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    RxCoop,
    TxCoop,
    Centralized,
    Tdma,
    IllustratingExample,
    BoundsOnly,
}

impl Scheme {
    pub const ALL: [Scheme; 6] = [
        Scheme::RxCoop,
        Scheme::TxCoop,
        Scheme::Centralized,
        Scheme::Tdma,
        Scheme::IllustratingExample,
        Scheme::BoundsOnly,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::RxCoop => "rx-coop",
            Scheme::TxCoop => "tx-coop",
            Scheme::Centralized => "centralized",
            Scheme::Tdma => "tdma",
            Scheme::IllustratingExample => "illustrating-example",
            Scheme::BoundsOnly => "bounds-only",
        }
    }

    /// Whether the scheme runs a lattice protocol and needs `Q ≥ 1` at every power.
    pub fn is_protocol(self) -> bool {
        matches!(self, Scheme::RxCoop | Scheme::TxCoop)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidConfig {
                field: "scheme".into(),
                reason: format!(
                    "unknown scheme `{s}`, expected one of {}",
                    Scheme::ALL.map(Scheme::name).join(", ")
                ),
            })
    }
}

pub type ComplexPair = [f64; 2];

fn to_complex(c: ComplexPair) -> Complex64 {
    Complex64::new(c[0], c[1])
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum ChannelMode {
    /// A fresh generic realization per trial.
    #[default]
    RandomGeneric,
    Fixed { values: [[ComplexPair; 3]; 3] },
    /// `h31 = γ·h21`, `h33 = γ·h23`; the remaining gains come from `base` or are drawn per trial.
    Illustrating {
        gamma: ComplexPair,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        base: Option<[[ComplexPair; 3]; 3]>,
    },
}

impl ChannelMode {
    pub fn fixed_matrix(values: &[[ComplexPair; 3]; 3]) -> [[Complex64; 3]; 3] {
        values.map(|row| row.map(to_complex))
    }

    pub fn gamma(&self) -> Option<Complex64> {
        match self {
            ChannelMode::Illustrating { gamma, .. } => Some(to_complex(*gamma)),
            _ => None,
        }
    }
}

/// Power grid, either explicit or geometric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PowerGrid {
    List(Vec<f64>),
    Geometric { from: f64, to: f64, points: usize },
}

impl Default for PowerGrid {
    fn default() -> Self {
        PowerGrid::Geometric {
            from: 1e3,
            to: 1e7,
            points: 5,
        }
    }
}

impl PowerGrid {
    pub fn powers(&self) -> Vec<f64> {
        match *self {
            PowerGrid::List(ref v) => v.clone(),
            PowerGrid::Geometric { from, to, points } => {
                if points < 2 {
                    return vec![from; points];
                }
                let (a, b) = (from.log10(), to.log10());
                (0..points)
                    .map(|i| {
                        if i + 1 == points {
                            to
                        } else {
                            10f64.powf(a + (b - a) * i as f64 / (points - 1) as f64)
                        }
                    })
                    .collect()
            }
        }
    }
}

fn default_n() -> usize {
    1
}
fn default_epsilon() -> f64 {
    0.05
}
fn default_c1() -> f64 {
    DEFAULT_C1
}
fn default_c2() -> f64 {
    DEFAULT_C2
}
fn default_trials() -> usize {
    100
}
fn default_alphas() -> Vec<f64> {
    vec![0.0, 0.5, 1.0]
}
fn default_samples() -> usize {
    crate::tradeoff::DEFAULT_MC_SAMPLES
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scheme: Scheme,
    #[serde(default = "default_n", alias = "N")]
    pub n: usize,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_c1")]
    pub c1: f64,
    #[serde(default = "default_c2")]
    pub c2: f64,
    #[serde(default)]
    pub p_grid: PowerGrid,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub channel: ChannelMode,
    /// Per-receiver detection error probability for the receiver protocol.
    #[serde(default)]
    pub error_rate: f64,
    /// Backhaul loads `α` (per `log2 P`) evaluated by `bounds-only`.
    #[serde(default = "default_alphas")]
    pub alphas: Vec<f64>,
    /// Monte Carlo samples per power for the illustrating example.
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub trace: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reduced_spec: Option<ReducedSpec>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn invalid(field: &str, reason: impl Into<String>) -> Error {
    Error::InvalidConfig {
        field: field.into(),
        reason: reason.into(),
    }
}

impl ExperimentConfig {
    /// A config with every default filled in.
    pub fn new(scheme: Scheme) -> Self {
        toml::from_str(&format!("scheme = \"{scheme}\"")).expect("defaults parse")
    }

    pub fn powers(&self) -> Vec<f64> {
        self.p_grid.powers()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(invalid("n", "must be at least 1"));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(invalid("epsilon", format!("must lie in (0, 1), got {}", self.epsilon)));
        }
        for (name, v) in [("c1", self.c1), ("c2", self.c2)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(name, format!("must be positive, got {v}")));
            }
        }
        if self.trials < 1 {
            return Err(invalid("trials", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.error_rate) {
            return Err(invalid("error_rate", format!("must lie in [0, 1], got {}", self.error_rate)));
        }
        if self.samples < 2 {
            return Err(invalid("samples", "must be at least 2"));
        }
        if let PowerGrid::Geometric { from, to, .. } = self.p_grid {
            if !(from > 0.0 && to > 0.0 && from.is_finite() && to.is_finite()) {
                return Err(invalid("p_grid", "geometric endpoints must be finite and positive"));
            }
        }
        let powers = self.powers();
        if powers.len() < MIN_GRID {
            return Err(invalid(
                "p_grid",
                format!("needs at least {MIN_GRID} points, got {}", powers.len()),
            ));
        }
        if let Some(p) = powers.iter().find(|p| !(**p > 0.0 && p.is_finite())) {
            return Err(invalid("p_grid", format!("powers must be finite and positive, got {p}")));
        }
        if powers.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("p_grid", "must be strictly increasing"));
        }
        if self.alphas.iter().any(|a| !(*a >= 0.0 && a.is_finite())) {
            return Err(invalid("alphas", "must be finite and non-negative"));
        }
        if let Some(spec) = &self.reduced_spec {
            spec.validate().map_err(|e| invalid("reduced_spec", e.to_string()))?;
        }
        match (&self.channel, self.scheme) {
            (ChannelMode::Illustrating { gamma, .. }, _) if to_complex(*gamma).norm() == 0.0 => {
                return Err(invalid("channel.gamma", "must be nonzero"));
            }
            (ChannelMode::Illustrating { .. }, s) if s.is_protocol() => {
                return Err(invalid("channel", "protocol schemes need a generic channel"));
            }
            _ => {}
        }
        if self.scheme.is_protocol() {
            for &p in &powers {
                if p <= 1.0 {
                    return Err(invalid("p_grid", format!("protocol schemes need P > 1, got {p}")));
                }
                derive_params(p, self.n, self.epsilon, self.c1)?;
            }
        }
        Ok(())
    }
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::ConfigParse(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text)
}

pub fn save_config(cfg: &ExperimentConfig, path: &Path) -> Result<()> {
    let text = toml::to_string(cfg).map_err(|e| Error::ConfigParse(e.to_string()))?;
    std::fs::write(path, text)?;
    Ok(())
}
