//! Pattern rules that tag scene text with violation categories and keep the
//! exact quote and statute reference for each hit.
//!
//! Lexicon files are UTF-8, one rule per line:
//!
//! ```text
//! # id | category | severity | pattern | statute
//! v-death|violence|explicit|kill\|death\|dying|436-FZ Art. 6 §3
//! ```
//!
//! A literal `|` inside the pattern is written `\|`. Blank lines and lines
//! starting with `#` are ignored.
//!
//! A pattern made only of words joined by `|` is treated as a list of stems:
//! each alternative must start at a word boundary and the match runs to the
//! end of the word, so `crush` also quotes `crushed`. Any pattern containing
//! other regex syntax is compiled as written (case-insensitive).

use std::collections::HashSet;
use std::fmt;

use regex::{Regex, RegexBuilder};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{Category, Severity};

/// Default rule set, bilingual (English glosses plus Russian stems).
pub const DEFAULT_LEXICON: &str = include_str!("../data/default.lexicon");

#[derive(Clone)]
pub struct LexiconRule {
    pub id: String,
    pub category: Category,
    pub severity: Severity,
    pub pattern: String,
    pub statute_ref: String,
    matcher: Regex,
}

impl fmt::Debug for LexiconRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LexiconRule")
            .field("id", &self.id)
            .field("category", &self.category)
            .field("severity", &self.severity)
            .field("pattern", &self.pattern)
            .field("statute_ref", &self.statute_ref)
            .finish()
    }
}

impl LexiconRule {
    pub fn new(
        id: impl Into<String>,
        category: Category,
        severity: Severity,
        pattern: impl Into<String>,
        statute_ref: impl Into<String>,
    ) -> Result<Self> {
        let pattern = pattern.into();
        let matcher = compile_pattern(&pattern).map_err(|e| Error::LexiconParse {
            line: 0,
            message: format!("bad pattern {pattern:?}: {e}"),
        })?;
        Ok(LexiconRule {
            id: id.into(),
            category,
            severity,
            pattern,
            statute_ref: statute_ref.into(),
            matcher,
        })
    }
}

const REGEX_META: &[char] = &['\\', '.', '^', '$', '*', '+', '?', '(', ')', '[', ']', '{', '}'];

fn compile_pattern(pattern: &str) -> std::result::Result<Regex, regex::Error> {
    let source = if pattern.contains(REGEX_META) {
        pattern.to_string()
    } else {
        let stems: Vec<&str> = pattern.split('|').map(str::trim).filter(|s| !s.is_empty()).collect();
        if stems.is_empty() {
            return Err(regex::Error::Syntax("empty pattern".into()));
        }
        let alternatives: Vec<String> = stems
            .iter()
            .map(|stem| {
                let lead = if stem.starts_with(char::is_alphanumeric) { r"\b" } else { "" };
                let tail = if stem.ends_with(char::is_alphanumeric) { r"\w*" } else { "" };
                format!("{lead}{}{tail}", regex::escape(stem))
            })
            .collect();
        format!("(?:{})", alternatives.join("|"))
    };
    let re = RegexBuilder::new(&source).case_insensitive(true).build()?;
    if re.is_match("") {
        return Err(regex::Error::Syntax("pattern matches the empty string".into()));
    }
    Ok(re)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LexiconMatch {
    pub rule_id: String,
    pub category: Category,
    pub severity: Severity,
    /// Character offsets `[start, end)` into the scanned text.
    pub span: (usize, usize),
    pub quote: String,
}

/// An immutable, validated rule set.
#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    rules: Vec<LexiconRule>,
}

impl Lexicon {
    pub fn new(rules: Vec<LexiconRule>) -> Result<Self> {
        let mut seen = HashSet::new();
        for (i, rule) in rules.iter().enumerate() {
            if !seen.insert(rule.id.as_str()) {
                return Err(Error::LexiconParse {
                    line: i + 1,
                    message: format!("duplicate rule id {:?}", rule.id),
                });
            }
        }
        Ok(Lexicon { rules })
    }

    pub fn default_rules() -> Self {
        Lexicon::parse(DEFAULT_LEXICON).expect("bundled lexicon is valid")
    }

    pub fn parse(source: &str) -> Result<Self> {
        Lexicon::new(load_lexicon(source)?)
    }

    pub fn rules(&self) -> &[LexiconRule] {
        &self.rules
    }

    pub fn rule(&self, id: &str) -> Option<&LexiconRule> {
        self.rules.iter().find(|r| r.id == id)
    }

    pub fn scan(&self, text: &str) -> Vec<LexiconMatch> {
        scan(text, &self.rules)
    }
}

/// Parses a lexicon file. Duplicate ids are reported with the line of the
/// second occurrence.
pub fn load_lexicon(source: &str) -> Result<Vec<LexiconRule>> {
    let mut rules = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    for (idx, raw_line) in source.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| Error::LexiconParse {
            line: line_no,
            message,
        };
        let fields = split_fields(line);
        if fields.len() != 5 {
            return Err(err(format!("expected 5 fields, found {}", fields.len())));
        }
        let id = fields[0].trim().to_string();
        if id.is_empty() {
            return Err(err("empty rule id".into()));
        }
        let category: Category = fields[1]
            .trim()
            .parse()
            .map_err(|_| err(format!("unknown category {:?}", fields[1].trim())))?;
        let severity: Severity = fields[2]
            .trim()
            .parse()
            .map_err(|_| err(format!("unknown severity {:?}", fields[2].trim())))?;
        let pattern = fields[3].trim().replace(r"\|", "|");
        let statute_ref = fields[4].trim().to_string();
        if !seen.insert(id.clone()) {
            return Err(err(format!("duplicate rule id {id:?}")));
        }
        let rule = LexiconRule::new(id, category, severity, pattern, statute_ref).map_err(|e| match e {
            Error::LexiconParse { message, .. } => err(message),
            other => other,
        })?;
        rules.push(rule);
    }
    Ok(rules)
}

/// Splits on `|` not preceded by a backslash. Escapes are left in place.
fn split_fields(line: &str) -> Vec<&str> {
    let bytes = line.as_bytes();
    let mut fields = Vec::new();
    let mut start = 0;
    for (i, &b) in bytes.iter().enumerate() {
        if b == b'|' && (i == 0 || bytes[i - 1] != b'\\') {
            fields.push(&line[start..i]);
            start = i + 1;
        }
    }
    fields.push(&line[start..]);
    fields
}

/// All matches of every rule, ordered by start offset then rule id.
pub fn scan(text: &str, rules: &[LexiconRule]) -> Vec<LexiconMatch> {
    if text.is_empty() {
        return Vec::new();
    }
    let offsets = CharOffsets::new(text);
    let mut out = Vec::new();
    for rule in rules {
        for m in rule.matcher.find_iter(text) {
            if m.start() == m.end() {
                continue;
            }
            out.push(LexiconMatch {
                rule_id: rule.id.clone(),
                category: rule.category,
                severity: rule.severity,
                span: (offsets.char_at(m.start()), offsets.char_at(m.end())),
                quote: m.as_str().to_string(),
            });
        }
    }
    out.sort_by(|a, b| a.span.0.cmp(&b.span.0).then_with(|| a.rule_id.cmp(&b.rule_id)));
    out
}

/// Byte-to-character offset lookup.
struct CharOffsets {
    /// Byte offset of each char boundary, plus the total length.
    boundaries: Vec<usize>,
}

impl CharOffsets {
    fn new(text: &str) -> Self {
        let mut boundaries: Vec<usize> = text.char_indices().map(|(b, _)| b).collect();
        boundaries.push(text.len());
        CharOffsets { boundaries }
    }

    fn char_at(&self, byte: usize) -> usize {
        self.boundaries.binary_search(&byte).unwrap_or_else(|i| i)
    }
}

/// Slices `text` by character offsets.
pub fn char_slice(text: &str, span: (usize, usize)) -> String {
    text.chars().skip(span.0).take(span.1.saturating_sub(span.0)).collect()
}

pub fn anchor_explanation(m: &LexiconMatch, rule: &LexiconRule) -> String {
    format!(
        "Flagged due to {} {} term '{}', classified under {}",
        m.severity,
        m.category.prose_name(),
        m.quote,
        rule.statute_ref
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rule(id: &str, cat: Category, sev: Severity, pattern: &str) -> LexiconRule {
        LexiconRule::new(id, cat, sev, pattern, "436-FZ Art. 6").unwrap()
    }

    #[test]
    fn escaped_separators() {
        let rules = load_lexicon(r"v1|violence|graphic|kill\|death\|dying|436-FZ Art.6").unwrap();
        assert_eq!(rules.len(), 1);
        assert_eq!(rules[0].category, Category::Violence);
        assert_eq!(rules[0].severity, Severity::Graphic);
        assert_eq!(rules[0].pattern, "kill|death|dying");
        assert_eq!(rules[0].statute_ref, "436-FZ Art.6");
    }

    #[test]
    fn empty_and_comment_only_files() {
        assert!(load_lexicon("").unwrap().is_empty());
        assert!(load_lexicon("# nothing\n\n   \n").unwrap().is_empty());
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let src = "# header\nv1|violence|mild|hit|ref\nx|magic|mild|foo|ref\n";
        match load_lexicon(src) {
            Err(Error::LexiconParse { line, message }) => {
                assert_eq!(line, 3);
                assert!(message.contains("magic"));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            load_lexicon("a|violence|mild|hit"),
            Err(Error::LexiconParse { line: 1, .. })
        ));
        assert!(matches!(
            load_lexicon("a|violence|severe|hit|r"),
            Err(Error::LexiconParse { line: 1, .. })
        ));
        assert!(matches!(
            load_lexicon("a|violence|mild|(unclosed|r"),
            Err(Error::LexiconParse { line: 1, .. })
        ));
        assert!(matches!(
            load_lexicon("a|violence|mild|x*|r"),
            Err(Error::LexiconParse { line: 1, .. })
        ));
        assert!(matches!(
            load_lexicon("a|violence|mild|hit|r\na|profanity|mild|damn|r"),
            Err(Error::LexiconParse { line: 2, .. })
        ));
    }

    #[test]
    fn stems_extend_to_word_end() {
        let r = rule("v", Category::Violence, Severity::Mild, "crush");
        let m = scan("She crushed him with her indifference.", std::slice::from_ref(&r));
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].quote, "crushed");
        assert_eq!(m[0].span, (4, 11));
    }

    #[test]
    fn stems_respect_leading_boundary() {
        let r = rule("v", Category::Violence, Severity::Explicit, "kill");
        assert!(scan("a skilled painter", std::slice::from_ref(&r)).is_empty());
        assert_eq!(scan("Killers kill.", std::slice::from_ref(&r)).len(), 2);
    }

    #[test]
    fn regex_patterns_used_as_written() {
        let r = rule("p", Category::Profanity, Severity::Mild, r"\bdamn\b");
        assert_eq!(scan("damn, damned", std::slice::from_ref(&r)).len(), 1);
    }

    #[test]
    fn cyrillic_offsets_are_characters() {
        let r = rule("v", Category::Violence, Severity::Graphic, "кровь");
        let text = "На полу кровь.";
        let m = scan(text, std::slice::from_ref(&r));
        assert_eq!(m.len(), 1);
        assert_eq!(char_slice(text, m[0].span), m[0].quote);
        assert_eq!(m[0].span, (8, 13));
    }

    #[test]
    fn case_insensitive_unicode() {
        let r = rule("v", Category::Violence, Severity::Graphic, "кровь");
        assert_eq!(scan("КРОВЬ", std::slice::from_ref(&r)).len(), 1);
    }

    #[test]
    fn ordering_by_offset_then_id() {
        let rules = vec![
            rule("b", Category::Violence, Severity::Mild, "hit"),
            rule("a", Category::Violence, Severity::Moderate, "hit"),
            rule("c", Category::FearElements, Severity::Mild, "dark"),
        ];
        let m = scan("dark hit", &rules);
        let ids: Vec<&str> = m.iter().map(|x| x.rule_id.as_str()).collect();
        assert_eq!(ids, vec!["c", "a", "b"]);
    }

    #[test]
    fn empty_text_no_matches() {
        assert!(Lexicon::default_rules().scan("").is_empty());
    }

    #[test]
    fn explanation_template() {
        let r = LexiconRule::new("v", Category::Violence, Severity::Explicit, "murder", "436-FZ Article 6").unwrap();
        let m = scan("It was murder.", std::slice::from_ref(&r));
        assert_eq!(
            anchor_explanation(&m[0], &r),
            "Flagged due to explicit violence term 'murder', classified under 436-FZ Article 6"
        );
    }

    #[test]
    fn default_lexicon_covers_all_categories() {
        let lex = Lexicon::default_rules();
        for cat in Category::ALL {
            assert!(lex.rules().iter().any(|r| r.category == cat), "{cat}");
        }
    }

    #[test]
    fn default_lexicon_metaphor_false_positive() {
        let lex = Lexicon::default_rules();
        let m = lex.scan("She crushed him with her indifference.");
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].category, Category::Violence);
    }
}
