use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{Category, Rating};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    /// Precision is 0 without predictions, recall is 0 without truth, and
    /// F1 is 0 when both are 0.
    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> Prf {
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Prf { precision, recall, f1 }
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn sorted_unique(xs: &[usize]) -> Vec<usize> {
    let mut v = xs.to_vec();
    v.sort_unstable();
    v.dedup();
    v
}

/// Boundary scoring by exact line match.
pub fn seg_boundary_prf(predicted: &[usize], truth: &[usize]) -> Prf {
    seg_boundary_prf_tolerant(predicted, truth, 0)
}

/// Boundary scoring where a prediction within `tolerance` lines of a true
/// boundary counts as a hit. Each boundary is matched at most once.
pub fn seg_boundary_prf_tolerant(predicted: &[usize], truth: &[usize], tolerance: usize) -> Prf {
    let p = sorted_unique(predicted);
    let t = sorted_unique(truth);
    let (mut i, mut j, mut tp) = (0, 0, 0);
    while i < p.len() && j < t.len() {
        if p[i].abs_diff(t[j]) <= tolerance {
            tp += 1;
            i += 1;
            j += 1;
        } else if p[i] < t[j] {
            i += 1;
        } else {
            j += 1;
        }
    }
    Prf::from_counts(tp, p.len() - tp, t.len() - tp)
}

/// Counts indexed `[true level][predicted level]`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[usize; 5]; 5],
}

impl ConfusionMatrix {
    pub fn from_pairs(pairs: &[(Rating, Rating)]) -> ConfusionMatrix {
        let mut m = ConfusionMatrix::default();
        for (t, p) in pairs {
            m.counts[t.level()][p.level()] += 1;
        }
        m
    }

    /// Expands the matrix back into (true, predicted) pairs, row by row.
    pub fn to_pairs(&self) -> Vec<(Rating, Rating)> {
        let mut pairs = Vec::new();
        for t in Rating::ALL {
            for p in Rating::ALL {
                pairs.extend(std::iter::repeat_n((t, p), self.counts[t.level()][p.level()]));
            }
        }
        pairs
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> usize {
        (0..5).map(|i| self.counts[i][i]).sum()
    }

    pub fn row_sum(&self, truth: Rating) -> usize {
        self.counts[truth.level()].iter().sum()
    }

    pub fn column_sum(&self, predicted: Rating) -> usize {
        self.counts.iter().map(|row| row[predicted.level()]).sum()
    }

    pub fn class_prf(&self, r: Rating) -> Prf {
        let tp = self.counts[r.level()][r.level()];
        Prf::from_counts(tp, self.column_sum(r) - tp, self.row_sum(r) - tp)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassScore {
    pub rating: Rating,
    pub support: usize,
    #[serde(flatten)]
    pub prf: Prf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub total: usize,
    pub accuracy: f64,
    pub within_one: f64,
    pub mae: f64,
    pub per_class: Vec<ClassScore>,
}

pub fn level_distance(a: Rating, b: Rating) -> usize {
    a.level().abs_diff(b.level())
}

pub fn accuracy(pairs: &[(Rating, Rating)]) -> f64 {
    ratio(pairs.iter().filter(|(t, p)| t == p).count(), pairs.len())
}

pub fn mae(pairs: &[(Rating, Rating)]) -> f64 {
    if pairs.is_empty() {
        return 0.0;
    }
    pairs.iter().map(|(t, p)| level_distance(*t, *p)).sum::<usize>() as f64 / pairs.len() as f64
}

pub fn rating_eval(pairs: &[(Rating, Rating)]) -> Result<(ConfusionMatrix, EvalSummary)> {
    if pairs.is_empty() {
        return Err(Error::EmptyEval);
    }
    let matrix = ConfusionMatrix::from_pairs(pairs);
    let near = pairs.iter().filter(|(t, p)| level_distance(*t, *p) <= 1).count();
    let summary = EvalSummary {
        total: pairs.len(),
        accuracy: accuracy(pairs),
        within_one: ratio(near, pairs.len()),
        mae: mae(pairs),
        per_class: Rating::ALL
            .into_iter()
            .map(|r| ClassScore {
                rating: r,
                support: matrix.row_sum(r),
                prf: matrix.class_prf(r),
            })
            .collect(),
    };
    Ok((matrix, summary))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryReport {
    pub per_category: Vec<(Category, Prf)>,
    pub macro_f1: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
}

impl CategoryReport {
    pub fn get(&self, category: Category) -> Prf {
        self.per_category
            .iter()
            .find(|(c, _)| *c == category)
            .map(|(_, p)| *p)
            .expect("every category is scored")
    }
}

/// One-vs-rest scores over per-scene labels, where `None` means the scene
/// has no violation.
pub fn category_prf(predicted: &[Option<Category>], truth: &[Option<Category>]) -> Result<CategoryReport> {
    if predicted.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: predicted.len(),
            right: truth.len(),
        });
    }
    let per_category: Vec<(Category, Prf)> = Category::ALL
        .into_iter()
        .map(|c| {
            let mut tp = 0;
            let mut fp = 0;
            let mut fn_ = 0;
            for (p, t) in predicted.iter().zip(truth) {
                match (*p == Some(c), *t == Some(c)) {
                    (true, true) => tp += 1,
                    (true, false) => fp += 1,
                    (false, true) => fn_ += 1,
                    (false, false) => {}
                }
            }
            (c, Prf::from_counts(tp, fp, fn_))
        })
        .collect();
    let n = per_category.len() as f64;
    let mean = |f: fn(&Prf) -> f64| per_category.iter().map(|(_, p)| f(p)).sum::<f64>() / n;
    Ok(CategoryReport {
        macro_precision: mean(|p| p.precision),
        macro_recall: mean(|p| p.recall),
        macro_f1: mean(|p| p.f1),
        per_category,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use Rating::*;

    #[test]
    fn boundary_examples() {
        let p = seg_boundary_prf(&[1, 4, 8], &[1, 4, 8]);
        assert_eq!((p.precision, p.recall, p.f1), (1.0, 1.0, 1.0));
        let p = seg_boundary_prf(&[], &[3]);
        assert_eq!((p.precision, p.recall, p.f1), (0.0, 0.0, 0.0));
        let p = seg_boundary_prf(&[0, 5, 9], &[0, 5, 12]);
        assert!((p.f1 - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn tolerance_matches_once() {
        let p = seg_boundary_prf_tolerant(&[10, 11], &[10], 1);
        assert_eq!(p.recall, 1.0);
        assert_eq!(p.precision, 0.5);
        let p = seg_boundary_prf_tolerant(&[9, 21], &[10, 20], 1);
        assert_eq!(p.f1, 1.0);
    }

    #[test]
    fn identical_pairs() {
        let pairs = vec![(R12, R12), (R0, R0)];
        let (_, s) = rating_eval(&pairs).unwrap();
        assert_eq!((s.accuracy, s.mae, s.within_one), (1.0, 0.0, 1.0));
        assert!(matches!(rating_eval(&[]), Err(Error::EmptyEval)));
    }

    #[test]
    fn matrix_round_trips_pairs() {
        let pairs = vec![(R0, R6), (R18, R16), (R12, R12)];
        let m = ConfusionMatrix::from_pairs(&pairs);
        let mut back = m.to_pairs();
        let mut orig = pairs.clone();
        back.sort();
        orig.sort();
        assert_eq!(back, orig);
        assert_eq!(m.trace(), 1);
    }

    #[test]
    fn categories_all_wrong() {
        let pred = vec![Some(Category::Violence), Some(Category::Profanity)];
        let truth = vec![Some(Category::Profanity), Some(Category::Violence)];
        let r = category_prf(&pred, &truth).unwrap();
        assert!(r.per_category.iter().all(|(_, p)| p.f1 == 0.0));
    }
}
