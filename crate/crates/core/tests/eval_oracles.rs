//! Metric checks against independent, brute-force oracles.

use scriptrate_core::evalkit::{
    bootstrap_ci, category_prf, mcnemar, parse_predictions, rating_eval, wilcoxon_signed_rank, ConfusionMatrix, Metric,
};
use scriptrate_core::{Category, Rating};

const TABLE: &str = include_str!("../../../fixtures/rating_predictions.tsv");

fn table_pairs() -> Vec<(Rating, Rating)> {
    parse_predictions(TABLE)
        .unwrap()
        .into_iter()
        .map(|r| (r.truth, r.predicted))
        .collect()
}

#[test]
fn table_fixture_matches_printed_grid() {
    let m = ConfusionMatrix::from_pairs(&table_pairs());
    let printed = [
        [3, 0, 0, 0, 0],
        [0, 2, 0, 0, 0],
        [0, 1, 4, 0, 0],
        [0, 0, 1, 2, 0],
        [0, 0, 0, 1, 1],
    ];
    assert_eq!(m.counts, printed);
}

#[test]
fn table_metrics() {
    let (_, s) = rating_eval(&table_pairs()).unwrap();
    assert_eq!(s.accuracy, 12.0 / 15.0);
    // three errors, each one level apart
    assert!((s.mae - 3.0 / 15.0).abs() < 1e-12);
    assert_eq!(s.within_one, 1.0);
}

#[test]
fn bootstrap_is_seeded() {
    let pairs = table_pairs();
    let a = bootstrap_ci(&pairs, Metric::Accuracy, 2000, 7).unwrap();
    let b = bootstrap_ci(&pairs, Metric::Accuracy, 2000, 7).unwrap();
    assert_eq!(a, b);
    assert!(a.0 <= 0.8 && 0.8 <= a.1);
}

/// Exact binomial sum computed with integer combinatorics.
fn mcnemar_oracle(b: u64, c: u64) -> f64 {
    let n = b + c;
    if n == 0 {
        return 1.0;
    }
    let choose = |n: u64, k: u64| (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128);
    let tail: u128 = (0..=b.min(c)).map(|k| choose(n, k)).sum();
    (2.0 * tail as f64 / 2f64.powi(n as i32)).min(1.0)
}

#[test]
fn mcnemar_against_oracle() {
    for b in 0..12u64 {
        for c in 0..12u64 {
            let mut a_ok = Vec::new();
            let mut b_ok = Vec::new();
            for _ in 0..b {
                a_ok.push(true);
                b_ok.push(false);
            }
            for _ in 0..c {
                a_ok.push(false);
                b_ok.push(true);
            }
            // concordant pairs do not matter
            a_ok.extend([true, false, true]);
            b_ok.extend([true, false, true]);
            let p = mcnemar(&a_ok, &b_ok).unwrap();
            assert!((p - mcnemar_oracle(b, c)).abs() < 1e-12, "b={b} c={c}");
            assert_eq!(p, mcnemar(&b_ok, &a_ok).unwrap());
        }
    }
    assert_eq!(mcnemar_oracle(5, 0), 0.0625);
}

/// Enumerates all 2^n sign assignments of the ranked |differences|.
fn wilcoxon_oracle(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    if d.is_empty() {
        return 1.0;
    }
    let n = d.len();
    let rank = |i: usize| -> f64 {
        let below = d.iter().filter(|x| x.abs() < d[i].abs()).count();
        let tied = d.iter().filter(|x| x.abs() == d[i].abs()).count();
        below as f64 + (tied as f64 + 1.0) / 2.0
    };
    let ranks: Vec<f64> = (0..n).map(rank).collect();
    let observed: f64 = (0..n).filter(|&i| d[i] > 0.0).map(|i| ranks[i]).sum();
    let (mut le, mut ge) = (0u64, 0u64);
    for mask in 0u64..(1 << n) {
        let w: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
        if w <= observed + 1e-9 {
            le += 1;
        }
        if w >= observed - 1e-9 {
            ge += 1;
        }
    }
    let total = (1u64 << n) as f64;
    (2.0 * (le.min(ge) as f64) / total).min(1.0)
}

#[test]
fn wilcoxon_against_enumeration() {
    let a: Vec<f64> = (0..10).map(|i| i as f64).collect();
    let shifted: Vec<f64> = a.iter().map(|x| x + 1.0).collect();
    assert_eq!(wilcoxon_signed_rank(&shifted, &a).unwrap(), 2.0 / 1024.0);

    let cases: [(&[f64], &[f64]); 4] = [
        (&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0], &[1.5, 1.0, 3.5, 2.0, 5.0, 9.0]),
        (&[0.0, 1.0, 1.0, 2.0, 0.0, 1.0, 0.0, 2.0], &[1.0, 0.0, 2.0, 0.0, 1.0, 1.0, 2.0, 0.0]),
        (&[3.0, 3.0, 3.0, 3.0, 3.0, 3.0, 3.0, 3.0, 3.0, 3.0, 3.0, 3.0], &[1.0, 2.0, 4.0, 1.0, 2.0, 1.0, 5.0, 2.0, 1.0, 2.0, 3.0, 0.0]),
        (&[0.0, 0.0, 1.0], &[0.0, 0.0, 1.0]),
    ];
    for (x, y) in cases {
        let p = wilcoxon_signed_rank(x, y).unwrap();
        assert!((p - wilcoxon_oracle(x, y)).abs() < 1e-12, "{x:?} {y:?}: {p}");
        assert_eq!(p, wilcoxon_signed_rank(y, x).unwrap());
    }
}

#[test]
fn category_counting_fixture() {
    use Category::*;
    // 20 scenes: 5 violence hits, 3 false alarms, 2 misses, rest agree on
    // other labels or on no violation.
    let mut truth = Vec::new();
    let mut pred = Vec::new();
    let mut push = |t: Option<Category>, p: Option<Category>, n: usize| {
        for _ in 0..n {
            truth.push(t);
            pred.push(p);
        }
    };
    push(Some(Violence), Some(Violence), 5);
    push(None, Some(Violence), 2);
    push(Some(Profanity), Some(Violence), 1);
    push(Some(Violence), None, 1);
    push(Some(Violence), Some(FearElements), 1);
    push(Some(Profanity), Some(Profanity), 3);
    push(None, None, 7);
    assert_eq!(truth.len(), 20);

    let r = category_prf(&pred, &truth).unwrap();
    let v = r.get(Violence);
    assert!((v.precision - 0.625).abs() < 1e-12);
    assert!((v.recall - 5.0 / 7.0).abs() < 1e-12);

    let perfect = category_prf(&truth, &truth).unwrap();
    for c in [Violence, Profanity] {
        assert_eq!(perfect.get(c).f1, 1.0);
    }
}
