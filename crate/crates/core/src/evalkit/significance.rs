use statrs::distribution::{Binomial, ContinuousCDF, DiscreteCDF, Normal};

use crate::error::{Error, Result};

/// Largest sample size for which the Wilcoxon test enumerates the exact
/// null distribution.
pub const WILCOXON_EXACT_MAX: usize = 20;

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::LengthMismatch { left: a, right: b });
    }
    Ok(())
}

/// Exact McNemar test: two-sided binomial test on the discordant pairs.
pub fn mcnemar(correct_a: &[bool], correct_b: &[bool]) -> Result<f64> {
    check_lengths(correct_a.len(), correct_b.len())?;
    let b = correct_a.iter().zip(correct_b).filter(|(a, b)| **a && !**b).count() as u64;
    let c = correct_a.iter().zip(correct_b).filter(|(a, b)| !**a && **b).count() as u64;
    Ok(mcnemar_exact(b, c))
}

/// Two-sided exact p on the discordant counts. Small totals are summed in
/// integers so that results such as 2/32 come out exact.
pub fn mcnemar_exact(b: u64, c: u64) -> f64 {
    let n = b + c;
    if n == 0 {
        return 1.0;
    }
    let k = b.min(c);
    if n <= EXACT_TAIL_MAX {
        let mut term = 1u128;
        let mut tail = 1u128;
        for i in 0..k {
            term = term * (n - i) as u128 / (i + 1) as u128;
            tail += term;
        }
        // tail < 2^n, so the scaling by 2^(1-n) is exact in f64
        return (tail as f64 * 2f64.powi(1 - n as i32)).min(1.0);
    }
    let binom = Binomial::new(0.5, n).expect("valid binomial");
    (2.0 * binom.cdf(k)).min(1.0)
}

/// Largest discordant total summed with integer binomial coefficients.
const EXACT_TAIL_MAX: u64 = 120;

/// Two-sided Wilcoxon signed-rank test on paired samples. Zero differences
/// are dropped and tied magnitudes share their average rank.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<f64> {
    check_lengths(a.len(), b.len())?;
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| d.abs() > 1e-12).collect();
    if diffs.is_empty() {
        return Ok(1.0);
    }
    let (doubled_ranks, tie_sizes) = doubled_average_ranks(&diffs);
    let w_plus2: usize = diffs
        .iter()
        .zip(&doubled_ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| *r)
        .sum();

    if diffs.len() <= WILCOXON_EXACT_MAX {
        Ok(exact_p(&doubled_ranks, w_plus2))
    } else {
        Ok(normal_p(diffs.len(), &tie_sizes, w_plus2 as f64 / 2.0))
    }
}

/// Ranks of |d| doubled so that average ranks stay integral.
fn doubled_average_ranks(diffs: &[f64]) -> (Vec<usize>, Vec<usize>) {
    let mut order: Vec<usize> = (0..diffs.len()).collect();
    order.sort_by(|&i, &j| diffs[i].abs().total_cmp(&diffs[j].abs()));
    let mut ranks = vec![0; diffs.len()];
    let mut ties = Vec::new();
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && diffs[order[end]].abs() == diffs[order[start]].abs() {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end; doubled mean is start+1+end
        for &idx in &order[start..end] {
            ranks[idx] = start + 1 + end;
        }
        ties.push(end - start);
        start = end;
    }
    (ranks, ties)
}

fn exact_p(doubled_ranks: &[usize], observed: usize) -> f64 {
    let max: usize = doubled_ranks.iter().sum();
    let mut counts = vec![0f64; max + 1];
    counts[0] = 1.0;
    let mut reach = 0;
    for &r in doubled_ranks {
        for s in (0..=reach).rev() {
            if counts[s] > 0.0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    let total = 2f64.powi(doubled_ranks.len() as i32);
    let lower: f64 = counts[..=observed].iter().sum::<f64>() / total;
    let upper: f64 = counts[observed..].iter().sum::<f64>() / total;
    (2.0 * lower.min(upper)).min(1.0)
}

fn normal_p(n: usize, tie_sizes: &[usize], w_plus: f64) -> f64 {
    let n = n as f64;
    let mean = n * (n + 1.0) / 4.0;
    let tie_term: f64 = tie_sizes.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / 48.0;
    let var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term;
    if var <= 0.0 {
        return 1.0;
    }
    let dev = ((w_plus - mean).abs() - 0.5).max(0.0);
    let z = dev / var.sqrt();
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    (2.0 * (1.0 - normal.cdf(z))).min(1.0)
}
