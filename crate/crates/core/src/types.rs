//! Domain vocabulary shared by every stage: age ratings, violation
//! categories, severities and verdict provenance.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Age-rating level. Ordered from least to most restrictive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Rating {
    #[serde(rename = "0+")]
    R0,
    #[serde(rename = "6+")]
    R6,
    #[serde(rename = "12+")]
    R12,
    #[serde(rename = "16+")]
    R16,
    #[serde(rename = "18+")]
    R18,
}

impl Rating {
    pub const ALL: [Rating; 5] = [Rating::R0, Rating::R6, Rating::R12, Rating::R16, Rating::R18];

    pub fn display(self) -> &'static str {
        match self {
            Rating::R0 => "0+",
            Rating::R6 => "6+",
            Rating::R12 => "12+",
            Rating::R16 => "16+",
            Rating::R18 => "18+",
        }
    }

    /// Position on the 0..=4 level scale used by distance metrics.
    pub fn level(self) -> usize {
        self as usize
    }

    pub fn from_level(level: usize) -> Option<Rating> {
        Rating::ALL.get(level).copied()
    }
}

impl fmt::Display for Rating {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.display())
    }
}

impl FromStr for Rating {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let trimmed = s.trim();
        Rating::ALL
            .into_iter()
            .find(|r| r.display() == trimmed)
            .ok_or_else(|| Error::UnknownRating(s.to_string()))
    }
}

/// The five violation categories of the rating law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Violence,
    Profanity,
    SexualContent,
    DrugsAlcohol,
    FearElements,
}

impl Category {
    /// Wire order, as in the report's `violations` object.
    pub const ALL: [Category; 5] = [
        Category::Violence,
        Category::Profanity,
        Category::SexualContent,
        Category::DrugsAlcohol,
        Category::FearElements,
    ];

    /// Precedence used when two categories reach the same rating.
    pub const TIE_ORDER: [Category; 5] = [
        Category::Violence,
        Category::SexualContent,
        Category::DrugsAlcohol,
        Category::Profanity,
        Category::FearElements,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Violence => "violence",
            Category::Profanity => "profanity",
            Category::SexualContent => "sexual_content",
            Category::DrugsAlcohol => "drugs_alcohol",
            Category::FearElements => "fear_elements",
        }
    }

    /// Human-readable name used inside explanations.
    pub fn prose_name(self) -> &'static str {
        match self {
            Category::Violence => "violence",
            Category::Profanity => "profanity",
            Category::SexualContent => "sexual content",
            Category::DrugsAlcohol => "drugs/alcohol",
            Category::FearElements => "frightening content",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    fn tie_rank(self) -> usize {
        Category::TIE_ORDER.iter().position(|c| *c == self).unwrap_or(usize::MAX)
    }

    /// Picks the category that wins a rating tie.
    pub fn tie_winner(a: Category, b: Category) -> Category {
        if a.tie_rank() <= b.tie_rank() {
            a
        } else {
            b
        }
    }

    /// Parses a label as written in a model completion.
    ///
    /// Accepts the wire names as well as the upper-case prompt labels
    /// (`SEXUAL CONTENT`, `ALCOHOL/DRUGS`, `FRIGHTENING CONTENT`). `Ok(None)`
    /// means the label explicitly says there is no violation.
    pub fn parse_label(raw: &str) -> Result<Option<Category>, Error> {
        let norm: String = raw
            .trim()
            .chars()
            .map(|c| match c {
                ' ' | '/' | '-' | '&' => '_',
                c => c.to_ascii_lowercase(),
            })
            .collect();
        let cat = match norm.as_str() {
            "" | "none" | "null" | "safe" | "no_violation" => return Ok(None),
            "violence" => Category::Violence,
            "profanity" => Category::Profanity,
            "sexual_content" | "sexual" | "sex" => Category::SexualContent,
            "drugs_alcohol" | "alcohol_drugs" | "alcohol" | "drugs" | "substances" => {
                Category::DrugsAlcohol
            }
            "fear_elements" | "frightening_content" | "frightening" | "fear" => {
                Category::FearElements
            }
            _ => return Err(Error::UnknownLabel(raw.to_string())),
        };
        Ok(Some(cat))
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Category::ALL
            .into_iter()
            .find(|c| c.as_str() == s.trim())
            .ok_or_else(|| Error::UnknownLabel(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Mild,
    Moderate,
    Explicit,
    Graphic,
}

impl Severity {
    pub const ALL: [Severity; 4] = [
        Severity::Mild,
        Severity::Moderate,
        Severity::Explicit,
        Severity::Graphic,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Severity::Mild => "mild",
            Severity::Moderate => "moderate",
            Severity::Explicit => "explicit",
            Severity::Graphic => "graphic",
        }
    }
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Severity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Severity::ALL
            .into_iter()
            .find(|v| v.as_str() == s.trim())
            .ok_or_else(|| Error::UnknownSeverity(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Confidence {
    Low,
    Medium,
    High,
}

/// Who produced a verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictSource {
    Rules,
    Model,
    Mock,
    Human,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rating_display_round_trips() {
        for r in Rating::ALL {
            assert_eq!(r.display().parse::<Rating>().unwrap(), r);
            assert_eq!(Rating::from_level(r.level()), Some(r));
        }
        assert!("21+".parse::<Rating>().is_err());
    }

    #[test]
    fn rating_order_is_restrictiveness() {
        assert!(Rating::R0 < Rating::R6);
        assert!(Rating::R6 < Rating::R12);
        assert!(Rating::R12 < Rating::R16);
        assert!(Rating::R16 < Rating::R18);
    }

    #[test]
    fn rating_serializes_as_display_string() {
        assert_eq!(serde_json::to_string(&Rating::R16).unwrap(), "\"16+\"");
        let r: Rating = serde_json::from_str("\"12+\"").unwrap();
        assert_eq!(r, Rating::R12);
    }

    #[test]
    fn prompt_labels_parse() {
        assert_eq!(Category::parse_label("PROFANITY").unwrap(), Some(Category::Profanity));
        assert_eq!(
            Category::parse_label("SEXUAL CONTENT").unwrap(),
            Some(Category::SexualContent)
        );
        assert_eq!(
            Category::parse_label("ALCOHOL/DRUGS").unwrap(),
            Some(Category::DrugsAlcohol)
        );
        assert_eq!(
            Category::parse_label("Frightening Content").unwrap(),
            Some(Category::FearElements)
        );
        assert_eq!(Category::parse_label("NONE").unwrap(), None);
        assert!(Category::parse_label("magic").is_err());
    }

    #[test]
    fn tie_order() {
        assert_eq!(
            Category::tie_winner(Category::FearElements, Category::Violence),
            Category::Violence
        );
        assert_eq!(
            Category::tie_winner(Category::Profanity, Category::DrugsAlcohol),
            Category::DrugsAlcohol
        );
    }
}
