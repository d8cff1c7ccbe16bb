//! Z-score quantification of VM capacities.
//!
//! Capacities are standardized with the sample standard deviation, mapped
//! through the standard normal CDF to a percentage per VM, and the
//! percentages are then used as weights to split a request count
//! ([`apportion`]).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{RasError, Result};

/// How the z-value is fed to the CDF.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuantMode {
    /// Use the z-value as computed.
    #[default]
    Exact,
    /// Truncate the z-value toward zero at two decimals first, the way the
    /// classic printed normal tables are read.
    PaperCompat,
}

impl QuantMode {
    pub fn as_str(self) -> &'static str {
        match self {
            QuantMode::Exact => "exact",
            QuantMode::PaperCompat => "paper_compat",
        }
    }

    fn transform(self, z: f64) -> f64 {
        match self {
            QuantMode::Exact => z,
            QuantMode::PaperCompat => truncate_2dp(z),
        }
    }
}

impl fmt::Display for QuantMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for QuantMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "exact" => Ok(QuantMode::Exact),
            "paper_compat" => Ok(QuantMode::PaperCompat),
            other => Err(format!("unknown quantification mode {other:?}")),
        }
    }
}

/// Which VM capacity is quantified.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuantBasis {
    /// `connections`
    #[default]
    Load,
    /// `ram_gb`
    Storage,
}

impl FromStr for QuantBasis {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "load" => Ok(QuantBasis::Load),
            "storage" => Ok(QuantBasis::Storage),
            other => Err(format!("unknown quantification basis {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZScores {
    pub mean: f64,
    pub stddev: f64,
    pub z_values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantificationResult {
    pub mode: QuantMode,
    pub capacities: Vec<f64>,
    pub mean: f64,
    pub stddev: f64,
    pub z_values: Vec<f64>,
    pub percentages: Vec<f64>,
    pub total_percentage: f64,
}

fn check_capacities(capacities: &[f64]) -> Result<()> {
    if capacities.is_empty() {
        return Err(RasError::NoCapacities);
    }
    if capacities.iter().any(|c| !c.is_finite() || *c < 0.0) {
        return Err(RasError::BadWeight);
    }
    Ok(())
}

/// Mean, sample standard deviation (n − 1) and standard scores. A zero
/// deviation (one capacity, or all equal) yields all-zero scores.
pub fn zscores(capacities: &[f64]) -> Result<ZScores> {
    check_capacities(capacities)?;
    let n = capacities.len() as f64;
    let mean = capacities.iter().sum::<f64>() / n;
    let stddev = if capacities.len() < 2 {
        0.0
    } else {
        let ss: f64 = capacities.iter().map(|x| (x - mean).powi(2)).sum();
        (ss / (n - 1.0)).sqrt()
    };
    let z_values = if stddev > 0.0 {
        capacities.iter().map(|x| (x - mean) / stddev).collect()
    } else {
        vec![0.0; capacities.len()]
    };
    Ok(ZScores { mean, stddev, z_values })
}

/// Standard normal CDF, Φ(z) = erfc(−z/√2)/2.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

fn truncate_2dp(z: f64) -> f64 {
    // Nudge by a few ulps so values like 0.29 that land on 28.999.. after
    // scaling still truncate to the intended hundredth.
    let scaled = z * 100.0;
    let nudged = scaled + scaled.signum() * 1e-9;
    nudged.trunc() / 100.0
}

pub fn quantify(capacities: &[f64], mode: QuantMode) -> Result<QuantificationResult> {
    let ZScores { mean, stddev, z_values } = zscores(capacities)?;
    let percentages: Vec<f64> = z_values.iter().map(|&z| normal_cdf(mode.transform(z)) * 100.0).collect();
    let total_percentage = percentages.iter().sum();
    Ok(QuantificationResult {
        mode,
        capacities: capacities.to_vec(),
        mean,
        stddev,
        z_values,
        percentages,
        total_percentage,
    })
}

/// Largest-remainder split of `n_requests` over `weights`: every count is
/// the floor of its quota `weight / Σweights × n`, and the leftover goes one
/// each to the largest fractional parts, lower index first on ties.
pub fn apportion(weights: &[f64], n_requests: u64) -> Result<Vec<u64>> {
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(RasError::BadWeight);
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(RasError::ZeroWeight);
    }
    let quotas: Vec<f64> = weights.iter().map(|w| w / total * n_requests as f64).collect();
    let mut counts: Vec<u64> = quotas.iter().map(|q| q.floor() as u64).collect();
    let assigned: u64 = counts.iter().sum();
    let leftover = n_requests.saturating_sub(assigned) as usize;

    let mut order: Vec<usize> = (0..weights.len()).collect();
    // Stable sort keeps lower indices first among equal remainders.
    order.sort_by(|&a, &b| {
        let fa = quotas[a] - quotas[a].floor();
        let fb = quotas[b] - quotas[b].floor();
        fb.total_cmp(&fa)
    });
    for &i in order.iter().take(leftover) {
        counts[i] += 1;
    }
    Ok(counts)
}
