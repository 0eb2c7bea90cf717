//! Persisted run configurations: every invocation resolves its arguments
//! (including generated seeds) into a `RunConfig`, saves it next to its
//! outputs, and can be re-executed byte-identically with `fockzero run`.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use fockzero::sequences::{CountingWindow, Family};
use fockzero::product::TruncationPolicy;
use fockzero::weight::WeightProfile;

/// Fully resolved parameters of one command invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum RunConfig {
    /// Realize moduli (and optionally angles) to CSV.
    Generate {
        family: Family,
        /// Realize exactly this many moduli...
        #[serde(skip_serializing_if = "Option::is_none", default)]
        count: Option<usize>,
        /// ...or all moduli below this radius.
        #[serde(skip_serializing_if = "Option::is_none", default)]
        tmax: Option<f64>,
        /// Present: emit a point configuration (n, lambda, theta).
        #[serde(skip_serializing_if = "Option::is_none", default)]
        seed: Option<u64>,
        /// Pin all angles to zero (testing mode); implies a theta column.
        #[serde(default, skip_serializing_if = "std::ops::Not::not")]
        degenerate: bool,
        out: PathBuf,
    },
    /// Density classification of a family against a weight.
    Classify {
        family: Family,
        weight: WeightProfile,
        window: CountingWindow,
        #[serde(skip_serializing_if = "Option::is_none", default)]
        out: Option<PathBuf>,
    },
    /// Sweep `log |W|` over a circle to CSV.
    EvalCircle {
        family: Family,
        seed: u64,
        #[serde(default, skip_serializing_if = "std::ops::Not::not")]
        degenerate: bool,
        radius: f64,
        points: usize,
        genus: u32,
        /// Attach the compensating prefactor `exp(-(S_K/genus) z^genus)`.
        #[serde(default, skip_serializing_if = "std::ops::Not::not")]
        compensated: bool,
        policy: TruncationPolicy,
        out: PathBuf,
    },
    /// Multi-trial circle-supremum concentration experiment.
    Concentration {
        family: Family,
        genus: u32,
        #[serde(default, skip_serializing_if = "std::ops::Not::not")]
        compensated: bool,
        radii: Vec<f64>,
        trials: usize,
        seed: u64,
        /// Threshold amplitude in `r^2/2 - (a/8) r (log r)^b`.
        a: f64,
        /// Threshold log exponent.
        b: f64,
        out_dir: PathBuf,
    },
    /// Norm-divergence certificate over a radius window.
    Jensen {
        family: Family,
        weight: WeightProfile,
        p: f64,
        gamma: f64,
        m: f64,
        tmax: f64,
        #[serde(skip_serializing_if = "Option::is_none", default)]
        out: Option<PathBuf>,
    },
    /// Growth-exponent fit of `2 E log|W| - r^2` against `log r`.
    Exponent {
        family: Family,
        window: CountingWindow,
        #[serde(skip_serializing_if = "Option::is_none", default)]
        out: Option<PathBuf>,
    },
    /// Weighted p-norm quadrature of one realized configuration.
    Norm {
        family: Family,
        seed: u64,
        #[serde(default, skip_serializing_if = "std::ops::Not::not")]
        degenerate: bool,
        weight: WeightProfile,
        p: f64,
        /// Power-decay witness exponent multiplying the integrand.
        #[serde(skip_serializing_if = "Option::is_none", default)]
        gamma: Option<f64>,
        rmax: f64,
        radial_nodes: usize,
        angular_nodes: usize,
        genus: u32,
        #[serde(default, skip_serializing_if = "std::ops::Not::not")]
        compensated: bool,
        #[serde(skip_serializing_if = "Option::is_none", default)]
        out: Option<PathBuf>,
    },
}

impl RunConfig {
    /// Where this config is persisted: next to the primary output.
    pub fn config_path(&self) -> Option<PathBuf> {
        match self {
            RunConfig::Generate { out, .. } | RunConfig::EvalCircle { out, .. } => {
                Some(with_run_json(out))
            }
            RunConfig::Concentration { out_dir, .. } => Some(out_dir.join("run_config.json")),
            RunConfig::Classify { out, .. }
            | RunConfig::Jensen { out, .. }
            | RunConfig::Exponent { out, .. }
            | RunConfig::Norm { out, .. } => out.as_ref().map(|p| with_run_json(p)),
        }
    }
}

fn with_run_json(p: &std::path::Path) -> PathBuf {
    let mut s = p.as_os_str().to_os_string();
    s.push(".run.json");
    PathBuf::from(s)
}
