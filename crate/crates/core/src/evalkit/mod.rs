//! Evaluation metrics: boundary and category P/R/F1, rating confusion
//! matrix, bootstrap intervals and paired significance tests.

mod bootstrap;
mod metrics;
mod significance;

pub use bootstrap::{bootstrap_ci, bootstrap_ci_with, percentile, Metric};
pub use metrics::{
    accuracy, category_prf, level_distance, mae, rating_eval, seg_boundary_prf, seg_boundary_prf_tolerant,
    CategoryReport, ClassScore, ConfusionMatrix, EvalSummary, Prf,
};
pub use significance::{mcnemar, mcnemar_exact, wilcoxon_signed_rank, WILCOXON_EXACT_MAX};

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::types::Rating;

/// One line of a prediction file: `doc_id<TAB>true<TAB>predicted`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredictionRow {
    pub doc_id: String,
    pub truth: Rating,
    pub predicted: Rating,
}

fn data_lines(source: &str) -> impl Iterator<Item = (usize, &str)> {
    source
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
}

fn rating_field(line: usize, raw: &str) -> Result<Rating> {
    raw.parse().map_err(|_| Error::InputFormat {
        line,
        message: format!("unknown rating {raw:?}"),
    })
}

pub fn parse_predictions(source: &str) -> Result<Vec<PredictionRow>> {
    data_lines(source)
        .map(|(line, l)| {
            let fields: Vec<&str> = l.split('\t').collect();
            let [doc_id, truth, predicted] = fields[..] else {
                return Err(Error::InputFormat {
                    line,
                    message: format!("expected 3 tab-separated fields, found {}", fields.len()),
                });
            };
            Ok(PredictionRow {
                doc_id: doc_id.trim().to_string(),
                truth: rating_field(line, truth.trim())?,
                predicted: rating_field(line, predicted.trim())?,
            })
        })
        .collect()
}

/// Reads `doc_id<TAB>rating` lines.
pub fn parse_truth(source: &str) -> Result<HashMap<String, Rating>> {
    let mut out = HashMap::new();
    for (line, l) in data_lines(source) {
        let Some((id, rating)) = l.split_once('\t') else {
            return Err(Error::InputFormat {
                line,
                message: "expected doc_id<TAB>rating".into(),
            });
        };
        if out.insert(id.trim().to_string(), rating_field(line, rating.trim())?).is_some() {
            return Err(Error::InputFormat {
                line,
                message: format!("duplicate doc_id {:?}", id.trim()),
            });
        }
    }
    Ok(out)
}

/// Pairs each prediction with the separate truth file. Any id present in
/// only one of the two is an error.
pub fn join_truth(rows: &[PredictionRow], truth: &HashMap<String, Rating>) -> Result<Vec<(Rating, Rating)>> {
    let mut missing: Vec<&str> = rows
        .iter()
        .filter(|r| !truth.contains_key(&r.doc_id))
        .map(|r| r.doc_id.as_str())
        .collect();
    let mut unpredicted: Vec<&str> = truth
        .keys()
        .filter(|k| !rows.iter().any(|r| &r.doc_id == *k))
        .map(String::as_str)
        .collect();
    if !missing.is_empty() || !unpredicted.is_empty() {
        missing.sort_unstable();
        unpredicted.sort_unstable();
        return Err(Error::Config(format!(
            "doc ids differ: without truth {missing:?}, without prediction {unpredicted:?}"
        )));
    }
    Ok(rows.iter().map(|r| (truth[&r.doc_id], r.predicted)).collect())
}

/// Reads one boundary set per line: comma- or space-separated line indices.
pub fn parse_boundaries(source: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for (line, l) in data_lines(source) {
        for tok in l.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()) {
            out.push(tok.parse().map_err(|_| Error::InputFormat {
                line,
                message: format!("not a line index: {tok:?}"),
            })?);
        }
    }
    Ok(out)
}
