//! Paired bootstrap significance test on per-example score differences.
//!
//! Null hypothesis: system A is no better than system B (mean difference
//! `<= 0`). Each of `B` resamples draws `k` differences with replacement;
//! the p-value is the share of resample means that are `<= 0`.
//!
//! Resampling draws come from `ChaCha8Rng::seed_from_u64(seed)`, one
//! `random_range(0..k)` call per drawn element, resample by resample.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream_rng, Purpose};

pub const DEFAULT_ALPHA: f64 = 0.05;
pub const DEFAULT_RESAMPLES: usize = 100_000;

/// `ceil(fraction * n)`, ignoring floating-point dust just above an integer.
pub fn ceil_fraction(fraction: f64, n: usize) -> usize {
    let exact = fraction * n as f64;
    let rounded = exact.round();
    let count = if (exact - rounded).abs() <= 1e-9 * exact.abs().max(1.0) {
        rounded
    } else {
        exact.ceil()
    };
    (count.max(0.0) as usize).min(n)
}

/// Per-example differences `score_a - score_b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DeltaSample(Vec<f64>);

impl DeltaSample {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::argument("delta sample is empty"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::argument("delta sample has non-finite values"));
        }
        Ok(DeltaSample(values))
    }

    pub fn from_scores(a: &[f64], b: &[f64]) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::argument(format!("score vectors differ in length ({} vs {})", a.len(), b.len())));
        }
        Self::new(a.iter().zip(b).map(|(x, y)| x - y).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn mean(&self) -> f64 {
        self.0.iter().sum::<f64>() / self.0.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    pub p_value: f64,
    pub reject: bool,
    #[serde(rename = "B")]
    pub resamples: usize,
    pub alpha: f64,
    pub seed: u64,
    pub k: usize,
    pub mean_delta: f64,
}

pub fn paired_bootstrap(delta: &DeltaSample, resamples: usize, seed: u64, alpha: f64) -> Result<BootstrapResult> {
    if resamples == 0 {
        return Err(Error::argument("B must be at least 1"));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::argument(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    let values = delta.values();
    let k = values.len();
    let mut rng = stream_rng(seed, Purpose::Bootstrap, 0);
    let mut not_better = 0usize;
    for _ in 0..resamples {
        let sum: f64 = (0..k).map(|_| values[rng.random_range(0..k)]).sum();
        // sign of the mean equals the sign of the sum
        if sum <= 0.0 {
            not_better += 1;
        }
    }
    let p_value = not_better as f64 / resamples as f64;
    Ok(BootstrapResult {
        p_value,
        reject: p_value < alpha,
        resamples,
        alpha,
        seed,
        k,
        mean_delta: delta.mean(),
    })
}

/// Seeded uniform sample of `ceil(fraction * n)` ids without replacement,
/// returned in input order.
pub fn sample_eval_subset(ids: &[String], fraction: f64, seed: u64) -> Result<Vec<String>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::argument(format!("fraction must lie in (0, 1], got {fraction}")));
    }
    let n = ids.len();
    let m = ceil_fraction(fraction, n);
    let mut rng = stream_rng(seed, Purpose::EvalSubset, 0);
    let mut picked = sample(&mut rng, n, m).into_vec();
    picked.sort_unstable();
    Ok(picked.into_iter().map(|i| ids[i].clone()).collect())
}
