//! Run configuration: a JSON file merged with command-line flags (flags win).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use repint_core::ToleranceConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum TolProfile {
    Default,
    Strict,
}

impl TolProfile {
    pub fn tolerances(self) -> ToleranceConfig {
        match self {
            TolProfile::Default => ToleranceConfig::default(),
            TolProfile::Strict => ToleranceConfig::strict(),
        }
    }
}

/// Every field is optional so that a file and the flags can each supply a part.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol_profile: Option<TolProfile>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d_prime: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixture: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub channel_file: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scheme: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub env_law: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho0: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub every: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub only: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub figure_sets: Option<bool>,
}

macro_rules! overlay {
    ($base:expr, $top:expr, $($field:ident),*) => {
        $( if $top.$field.is_some() { $base.$field = $top.$field.clone(); } )*
    };
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    /// Fields set in `top` replace those in `self`.
    pub fn overlay(mut self, top: &RunConfig) -> Self {
        overlay!(
            self, top, seed, out, jobs, tol_profile, d, d_prime, b, fixture, channel_file, n_samples, n_steps,
            ensemble, scheme, env_law, rho0, every, only, figure_sets
        );
        self
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn tolerances(&self) -> ToleranceConfig {
        self.tol_profile.unwrap_or(TolProfile::Default).tolerances()
    }

    /// Validated `b`, renormalized to unit sum. `d'` comes from its length and
    /// must agree with `d_prime` when both are given.
    pub fn probability_vector(&self) -> Result<Option<Vec<f64>>, String> {
        let Some(b) = &self.b else {
            return Ok(None);
        };
        let b = normalize_b(b)?;
        if let Some(dp) = self.d_prime {
            if dp != b.len() {
                return Err(format!("--d-prime {dp} does not match the {} entries of b", b.len()));
            }
        }
        Ok(Some(b))
    }
}

/// Checks non-negativity, non-increasing order and unit sum within `1e-9`.
pub fn normalize_b(b: &[f64]) -> Result<Vec<f64>, String> {
    if b.is_empty() {
        return Err("b is empty".into());
    }
    if b.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err("entries of b must be finite and non-negative".into());
    }
    if b.windows(2).any(|w| w[0] < w[1]) {
        return Err("entries of b must be non-increasing".into());
    }
    let s: f64 = b.iter().sum();
    if (s - 1.0).abs() > 1e-9 {
        return Err(format!("entries of b sum to {s}, not 1"));
    }
    Ok(b.iter().map(|x| x / s).collect())
}

/// Parses `1,0` or `3/4,1/8,1/8`.
pub fn parse_b(text: &str) -> Result<Vec<f64>, String> {
    text.split(',')
        .map(|item| {
            let item = item.trim();
            let value = match item.split_once('/') {
                Some((num, den)) => {
                    let num: f64 = num.trim().parse().map_err(|_| format!("bad numerator in {item:?}"))?;
                    let den: f64 = den.trim().parse().map_err(|_| format!("bad denominator in {item:?}"))?;
                    if den == 0.0 {
                        return Err(format!("zero denominator in {item:?}"));
                    }
                    num / den
                }
                None => item.parse().map_err(|_| format!("bad number {item:?}"))?,
            };
            Ok(value)
        })
        .collect()
}
