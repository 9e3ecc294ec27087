//! Scene segmentation and context-window slicing.
//!
//! A scene starts at every heading line and runs until the next heading.
//! Lines before the first heading form a preamble scene with an empty
//! heading. Every input line lands in exactly one scene.

use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::DecodedDocument;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scene {
    pub index: usize,
    /// Empty for a preamble scene.
    pub heading: String,
    pub body: String,
    /// Inclusive line range in the source document.
    pub span: (usize, usize),
    pub token_estimate: usize,
}

impl Scene {
    pub fn new(index: usize, heading: String, body: String, span: (usize, usize)) -> Self {
        let mut scene = Scene {
            index,
            heading,
            body,
            span,
            token_estimate: 0,
        };
        scene.token_estimate = estimate_tokens(&scene.text());
        scene
    }

    /// Heading and body as analysed: the heading line, a newline, then the
    /// body. Anchor offsets refer to this string.
    pub fn text(&self) -> String {
        if self.heading.is_empty() {
            self.body.clone()
        } else if self.span.0 == self.span.1 && self.body.is_empty() {
            self.heading.clone()
        } else {
            format!("{}\n{}", self.heading, self.body)
        }
    }

    /// Source lines covered by this scene, in order.
    pub fn lines(&self) -> Vec<&str> {
        let mut out = Vec::with_capacity(self.span.1 - self.span.0 + 1);
        let body_lines = if self.heading.is_empty() {
            self.span.1 - self.span.0 + 1
        } else {
            out.push(self.heading.as_str());
            self.span.1 - self.span.0
        };
        if body_lines > 0 {
            out.extend(self.body.split('\n'));
        }
        out
    }

    /// Replaces the body, keeping heading and span, and refreshes the token
    /// estimate.
    pub fn with_body(&self, body: &str) -> Scene {
        Scene::new(self.index, self.heading.clone(), body.to_string(), self.span)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SceneWindow {
    pub scene_index: usize,
    pub window_index: usize,
    pub text: String,
    pub token_count: usize,
}

/// Roughly four characters per token.
pub fn estimate_tokens(text: &str) -> usize {
    text.chars().count().div_ceil(CHARS_PER_TOKEN)
}

const CHARS_PER_TOKEN: usize = 4;

static KEYWORD_HEADING: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"(?ix)
        ^\s*
        (?:\d+[a-zа-я]?[.)]?\s*)?            # optional scene number
        (?:
            int\.?\s*/\s*ext\.? | ext\.?\s*/\s*int\.? | i/e\.?
          | инт\.?\s*/\s*нат\.? | нат\.?\s*/\s*инт\.?
          | int\. | ext\.
          | инт\. | нат\. | пав\.
        )
        (?:\s|$)",
    )
    .expect("heading regex")
});

/// Heading heuristic with its tunable thresholds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeadingRules {
    pub max_caps_len: usize,
    pub min_upper_ratio: f64,
    /// Whether the upper-case/separator rule is used at all.
    pub caps_rule: bool,
}

impl Default for HeadingRules {
    fn default() -> Self {
        HeadingRules {
            max_caps_len: 60,
            min_upper_ratio: 0.80,
            caps_rule: true,
        }
    }
}

impl HeadingRules {
    pub fn is_heading(&self, line: &str, is_style_heading: bool) -> bool {
        if is_style_heading {
            return true;
        }
        let trimmed = line.trim();
        if trimmed.is_empty() {
            return false;
        }
        if KEYWORD_HEADING.is_match(trimmed) {
            return true;
        }
        self.caps_rule && self.is_caps_heading(trimmed)
    }

    fn is_caps_heading(&self, line: &str) -> bool {
        if line.chars().count() > self.max_caps_len {
            return false;
        }
        if !(line.contains('-') || line.contains('—')) {
            return false;
        }
        let (letters, upper) = line
            .chars()
            .filter(|c| c.is_alphabetic())
            .fold((0usize, 0usize), |(l, u), c| (l + 1, u + c.is_uppercase() as usize));
        letters > 0 && upper as f64 >= self.min_upper_ratio * letters as f64
    }
}

/// Default heading test: keyword prefix, style tag, or a short upper-case
/// line with a location-time separator.
pub fn is_scene_heading(line: &str, is_style_heading: bool) -> bool {
    HeadingRules::default().is_heading(line, is_style_heading)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SegmenterConfig {
    pub rules: HeadingRules,
}

pub fn segment(doc: &DecodedDocument) -> Vec<Scene> {
    segment_with(doc, &SegmenterConfig::default())
}

/// Segments a document. When the source carries heading styles, the style
/// tags replace the upper-case rule, which is what lets formatted scripts
/// avoid dialogue cues being taken for headings.
pub fn segment_with(doc: &DecodedDocument, config: &SegmenterConfig) -> Vec<Scene> {
    let mut rules = config.rules;
    if doc.has_style_headings() {
        rules.caps_rule = false;
    }

    let mut scenes = Vec::new();
    let mut current: Option<SceneBuilder> = None;
    for (i, line) in doc.lines.iter().enumerate() {
        let hinted = doc.heading_hints.get(i).copied().unwrap_or(false);
        if rules.is_heading(line, hinted) {
            if let Some(b) = current.take() {
                scenes.push(b.finish(scenes.len()));
            }
            current = Some(SceneBuilder::heading(i, line));
        } else {
            current
                .get_or_insert_with(|| SceneBuilder::preamble(i))
                .push(i, line);
        }
    }
    if let Some(b) = current {
        scenes.push(b.finish(scenes.len()));
    }
    scenes
}

struct SceneBuilder<'a> {
    heading: &'a str,
    body: Vec<&'a str>,
    start: usize,
    end: usize,
}

impl<'a> SceneBuilder<'a> {
    fn heading(line_no: usize, line: &'a str) -> Self {
        SceneBuilder {
            heading: line,
            body: Vec::new(),
            start: line_no,
            end: line_no,
        }
    }

    fn preamble(line_no: usize) -> Self {
        SceneBuilder {
            heading: "",
            body: Vec::new(),
            start: line_no,
            end: line_no,
        }
    }

    fn push(&mut self, line_no: usize, line: &'a str) {
        self.body.push(line);
        self.end = line_no;
    }

    fn finish(self, index: usize) -> Scene {
        Scene::new(
            index,
            self.heading.to_string(),
            self.body.join("\n"),
            (self.start, self.end),
        )
    }
}

/// Start line of every scene that opens with a heading.
pub fn boundaries(scenes: &[Scene]) -> Vec<usize> {
    scenes
        .iter()
        .filter(|s| !s.heading.is_empty())
        .map(|s| s.span.0)
        .collect()
}

/// Splits an over-long scene into overlapping windows. Windows start every
/// `max_tokens - overlap_tokens` tokens and are at most `max_tokens` long.
pub fn window_scene(scene: &Scene, max_tokens: usize, overlap_tokens: usize) -> Result<Vec<SceneWindow>> {
    validate_window_budget(max_tokens, overlap_tokens)?;
    let text = scene.text();
    if scene.token_estimate <= max_tokens {
        return Ok(vec![SceneWindow {
            scene_index: scene.index,
            window_index: 0,
            token_count: estimate_tokens(&text),
            text,
        }]);
    }

    let chars: Vec<char> = text.chars().collect();
    let width = max_tokens * CHARS_PER_TOKEN;
    let stride = (max_tokens - overlap_tokens) * CHARS_PER_TOKEN;
    let mut windows = Vec::new();
    let mut start = 0;
    while start < chars.len() {
        let end = (start + width).min(chars.len());
        let piece: String = chars[start..end].iter().collect();
        windows.push(SceneWindow {
            scene_index: scene.index,
            window_index: windows.len(),
            token_count: estimate_tokens(&piece),
            text: piece,
        });
        start += stride;
    }
    Ok(windows)
}

/// The overlap may be at most half the window so that no character falls
/// into more than two windows.
pub fn validate_window_budget(max_tokens: usize, overlap_tokens: usize) -> Result<()> {
    if max_tokens == 0 || overlap_tokens >= max_tokens {
        return Err(Error::Config(format!(
            "window overlap ({overlap_tokens}) must be smaller than the window ({max_tokens})"
        )));
    }
    if overlap_tokens * 2 > max_tokens {
        return Err(Error::Config(format!(
            "window overlap ({overlap_tokens}) exceeds half the window ({max_tokens})"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::EncodingId;

    fn doc(lines: &[&str]) -> DecodedDocument {
        DecodedDocument::from_text(&lines.join("\n"), EncodingId::Utf8, false)
    }

    #[test]
    fn heading_examples() {
        assert!(is_scene_heading("INT. ABANDONED WAREHOUSE - NIGHT", false));
        assert!(!is_scene_heading("", false));
        assert!(!is_scene_heading("Viktor grabs the metal pipe and swings it", false));
    }

    #[test]
    fn heading_variants() {
        for line in [
            "EXT. FOREST - DAY",
            "int. kitchen - night",
            "INT/EXT CAR - MOVING",
            "INT./EXT. CAR - MOVING",
            "12. INT. OFFICE - DAY",
            "12A INT. OFFICE - DAY",
            "ИНТ. КВАРТИРА - ДЕНЬ",
            "НАТ. УЛИЦА - НОЧЬ",
            "ПАВ. СТУДИЯ",
            "5. инт. кухня. вечер",
            "КВАРТИРА МАРИНЫ - УТРО",
        ] {
            assert!(is_scene_heading(line, false), "{line}");
        }
        for line in [
            "MARINA",
            "МАРИНА",
            "Interior design is hard - she said",
            "INTERIOR",
            "(beat)",
            "Квартира Марины, утро",
            "THIS IS A VERY LONG UPPER CASE LINE THAT GOES ON - AND ON AND ON AND ON FOREVER",
        ] {
            assert!(!is_scene_heading(line, false), "{line}");
        }
        assert!(is_scene_heading("Квартира Марины, утро", true));
    }

    #[test]
    fn caps_rule_can_be_disabled() {
        let rules = HeadingRules {
            caps_rule: false,
            ..HeadingRules::default()
        };
        assert!(!rules.is_heading("КВАРТИРА МАРИНЫ - УТРО", false));
        assert!(rules.is_heading("INT. OFFICE - DAY", false));
    }

    #[test]
    fn two_headings_two_scenes() {
        let d = doc(&["INT. A - DAY", "a", "b", "EXT. B - NIGHT", "c"]);
        let scenes = segment(&d);
        assert_eq!(scenes.len(), 2);
        assert_eq!(scenes[0].span, (0, 2));
        assert_eq!(scenes[1].span, (3, 4));
        assert_eq!(scenes[0].body, "a\nb");
        assert_eq!(scenes[1].heading, "EXT. B - NIGHT");
    }

    #[test]
    fn headingless_document_is_one_scene() {
        let d = doc(&["just", "some", "prose"]);
        let scenes = segment(&d);
        assert_eq!(scenes.len(), 1);
        assert_eq!(scenes[0].span, (0, 2));
        assert!(scenes[0].heading.is_empty());
    }

    #[test]
    fn preamble_then_heading() {
        let d = doc(&["TITLE PAGE", "", "INT. A - DAY", "x"]);
        let scenes = segment(&d);
        assert_eq!(scenes.len(), 2);
        assert_eq!(scenes[0].span, (0, 1));
        assert_eq!(scenes[1].span, (2, 3));
        assert_eq!(boundaries(&scenes), vec![2]);
    }

    #[test]
    fn heading_only_scenes_and_lines() {
        let d = doc(&["INT. A - DAY", "INT. B - DAY", "", "INT. C - DAY"]);
        let scenes = segment(&d);
        assert_eq!(scenes.len(), 3);
        assert_eq!(scenes[0].lines(), vec!["INT. A - DAY"]);
        assert_eq!(scenes[1].lines(), vec!["INT. B - DAY", ""]);
        let rebuilt: Vec<&str> = scenes.iter().flat_map(|s| s.lines()).collect();
        assert_eq!(rebuilt, d.lines.iter().map(String::as_str).collect::<Vec<_>>());
    }

    #[test]
    fn token_estimates() {
        assert_eq!(estimate_tokens(""), 0);
        assert_eq!(estimate_tokens(&"x".repeat(400)), 100);
        assert_eq!(estimate_tokens("abcde"), 2);
        assert_eq!(estimate_tokens("привет"), 2);
    }

    fn scene_of_tokens(tokens: usize) -> Scene {
        Scene::new(0, String::new(), "y".repeat(tokens * 4), (0, 0))
    }

    #[test]
    fn under_budget_single_window() {
        let s = scene_of_tokens(100);
        let w = window_scene(&s, 1800, 200).unwrap();
        assert_eq!(w.len(), 1);
        assert_eq!(w[0].text, s.text());
    }

    #[test]
    fn stride_arithmetic() {
        // 3400 tokens, stride 1600: starts at 0, 1600, 3200.
        let s = scene_of_tokens(3400);
        let w = window_scene(&s, 1800, 200).unwrap();
        assert_eq!(w.len(), 3);
        assert_eq!(w[0].token_count, 1800);
        assert_eq!(w[1].token_count, 1800);
        assert_eq!(w[2].token_count, 200);
    }

    #[test]
    fn bad_budget() {
        let s = scene_of_tokens(10);
        assert!(matches!(window_scene(&s, 200, 200), Err(Error::Config(_))));
        assert!(matches!(window_scene(&s, 200, 300), Err(Error::Config(_))));
        assert!(matches!(window_scene(&s, 200, 101), Err(Error::Config(_))));
    }
}
