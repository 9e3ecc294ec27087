use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::metrics::{accuracy, mae};
use crate::error::{Error, Result};
use crate::par::Parallelism;
use crate::types::Rating;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Accuracy,
    Mae,
}

impl Metric {
    pub fn compute(self, pairs: &[(Rating, Rating)]) -> f64 {
        match self {
            Metric::Accuracy => accuracy(pairs),
            Metric::Mae => mae(pairs),
        }
    }
}

/// Percentile bootstrap, 95% interval.
pub fn bootstrap_ci(pairs: &[(Rating, Rating)], metric: Metric, iterations: usize, seed: u64) -> Result<(f64, f64)> {
    bootstrap_ci_with(pairs, metric, iterations, seed, Parallelism::Auto)
}

/// Like [`bootstrap_ci`] with an explicit execution mode. Iteration `i`
/// draws from stream `i` of a ChaCha generator keyed by `seed`, so the
/// result does not depend on the mode or thread count.
pub fn bootstrap_ci_with(
    pairs: &[(Rating, Rating)],
    metric: Metric,
    iterations: usize,
    seed: u64,
    par: Parallelism,
) -> Result<(f64, f64)> {
    if pairs.is_empty() {
        return Err(Error::EmptyEval);
    }
    if iterations == 0 {
        return Err(Error::Config("bootstrap needs at least one iteration".into()));
    }
    let n = pairs.len();
    let mut stats = par.map_range(iterations, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let sample: Vec<(Rating, Rating)> = (0..n).map(|_| pairs[rng.random_range(0..n)]).collect();
        metric.compute(&sample)
    });
    stats.sort_by(f64::total_cmp);
    Ok((percentile(&stats, 2.5), percentile(&stats, 97.5)))
}

/// Linear interpolation between closest ranks over sorted data.
pub fn percentile(sorted: &[f64], pct: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = pct / 100.0 * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}
