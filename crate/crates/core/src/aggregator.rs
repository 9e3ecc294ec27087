//! Document-level rating, category statistics and the wire report.
//!
//! The statistics count scenes, the unit the analyzer rates. The wire names
//! (`total_sentences`, `problematic_sentences`) are kept for compatibility
//! with existing clients.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::analyzer::SceneVerdict;
use crate::error::{Error, Result};
use crate::segmenter::Scene;
use crate::types::{Category, Rating, VerdictSource};

/// Most restrictive rating among the verdicts.
pub fn aggregate_rating(verdicts: &[SceneVerdict]) -> Result<Rating> {
    verdicts.iter().map(|v| v.rating).max().ok_or(Error::EmptyAnalysis)
}

/// Per-category scene counts, serialized with the wire field names.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violations {
    pub violence: usize,
    pub profanity: usize,
    pub sexual_content: usize,
    pub drugs_alcohol: usize,
    pub fear_elements: usize,
}

impl Violations {
    pub fn get(&self, category: Category) -> usize {
        match category {
            Category::Violence => self.violence,
            Category::Profanity => self.profanity,
            Category::SexualContent => self.sexual_content,
            Category::DrugsAlcohol => self.drugs_alcohol,
            Category::FearElements => self.fear_elements,
        }
    }

    fn bump(&mut self, category: Category) {
        let slot = match category {
            Category::Violence => &mut self.violence,
            Category::Profanity => &mut self.profanity,
            Category::SexualContent => &mut self.sexual_content,
            Category::DrugsAlcohol => &mut self.drugs_alcohol,
            Category::FearElements => &mut self.fear_elements,
        };
        *slot += 1;
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Statistics {
    pub total_sentences: usize,
    pub problematic_sentences: usize,
    pub violations: Violations,
}

impl Statistics {
    /// A scene counts as problematic when rated above 0+, and adds one to
    /// each distinct category among its anchors and label.
    pub fn from_verdicts(verdicts: &[SceneVerdict]) -> Statistics {
        let mut stats = Statistics {
            total_sentences: verdicts.len(),
            ..Statistics::default()
        };
        for v in verdicts.iter().filter(|v| v.rating > Rating::R0) {
            stats.problematic_sentences += 1;
            for cat in v.violated_categories() {
                stats.violations.bump(cat);
            }
        }
        stats
    }
}

/// Share of scenes violating each category, in percent. Values are exact;
/// use [`format_percentage`] for the one-decimal display form.
pub fn category_percentages(stats: &Statistics) -> Result<BTreeMap<Category, f64>> {
    if stats.total_sentences == 0 {
        return Err(Error::DivisionDomain);
    }
    let total = stats.total_sentences as f64;
    Ok(Category::ALL
        .into_iter()
        .map(|c| (c, 100.0 * stats.violations.get(c) as f64 / total))
        .collect())
}

pub fn format_percentage(p: f64) -> String {
    format!("{p:.1}")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimelineEntry {
    pub scene_index: usize,
    pub heading: String,
    /// First and last line of the scene, inclusive, zero-based.
    pub span: (usize, usize),
    pub rating: Rating,
    pub label: Option<Category>,
    pub source: VerdictSource,
}

/// The analysis result as served to clients. The first four keys are the
/// stable wire schema; the rest are extensions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Report {
    pub file_id: String,
    pub overall_rating: Rating,
    pub summary: String,
    pub statistics: Statistics,
    pub timeline: Vec<TimelineEntry>,
    pub verdicts: Vec<SceneVerdict>,
    pub degraded: bool,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(s: &str) -> Result<Report> {
        serde_json::from_str(s).map_err(|e| Error::Config(format!("report JSON: {e}")))
    }
}

pub fn new_file_id() -> String {
    uuid::Uuid::new_v4().to_string()
}

pub fn summary_text(stats: &Statistics, overall: Rating) -> String {
    let noun = if stats.problematic_sentences == 1 { "sentence" } else { "sentences" };
    format!(
        "Found {} problematic {noun} across {} scenes; overall rating {overall}.",
        stats.problematic_sentences, stats.total_sentences
    )
}

/// Assembles the report. `verdicts[i]` must belong to `scenes[i]`.
pub fn build_report(file_id: String, scenes: &[Scene], verdicts: &[SceneVerdict], degraded: bool) -> Result<Report> {
    if scenes.len() != verdicts.len() {
        return Err(Error::LengthMismatch {
            left: scenes.len(),
            right: verdicts.len(),
        });
    }
    let overall_rating = aggregate_rating(verdicts)?;
    let statistics = Statistics::from_verdicts(verdicts);
    let timeline = scenes
        .iter()
        .zip(verdicts)
        .map(|(s, v)| TimelineEntry {
            scene_index: s.index,
            heading: s.heading.clone(),
            span: s.span,
            rating: v.rating,
            label: v.label,
            source: v.source,
        })
        .collect();
    Ok(Report {
        file_id,
        overall_rating,
        summary: summary_text(&statistics, overall_rating),
        statistics,
        timeline,
        verdicts: verdicts.to_vec(),
        degraded,
    })
}
