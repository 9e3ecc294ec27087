//! Per-scene verdicts.
//!
//! Every analyzer kind ends in the same place: a [`SceneVerdict`] carrying
//! the lexicon anchors found in the scene text. The rules analyzer derives
//! the rating from those anchors alone. The model and mock analyzers send
//! each context window of the scene to a [`CompletionBackend`], vote over
//! the window verdicts and never go below the rules rating.

mod backend;
mod prompt;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use backend::{
    read_frame, write_frame, CompletionBackend, CompletionRequest, MockBackend, TcpBackend,
    MODEL_ADDR_ENV,
};
pub use prompt::{build_prompt, parse_verdict, PROMPT_PREFIX};

use crate::error::{Error, Result};
use crate::lexicon::{anchor_explanation, Lexicon, LexiconMatch};
use crate::segmenter::{validate_window_budget, window_scene, Scene};
use crate::types::{Category, Confidence, Rating, Severity, VerdictSource};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SceneVerdict {
    pub scene_index: usize,
    pub rating: Rating,
    pub label: Option<Category>,
    pub why: String,
    pub anchors: Vec<LexiconMatch>,
    pub confidence: Confidence,
    pub source: VerdictSource,
}

impl SceneVerdict {
    /// Categories this verdict counts towards, once each. Empty for a 0+
    /// verdict.
    pub fn violated_categories(&self) -> Vec<Category> {
        if self.rating == Rating::R0 {
            return Vec::new();
        }
        let mut cats: Vec<Category> = self.anchors.iter().map(|a| a.category).collect();
        cats.extend(self.label);
        cats.sort();
        cats.dedup();
        cats
    }
}

/// Rating assigned to a lexicon hit of a given category and severity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeverityMap {
    table: BTreeMap<Category, BTreeMap<Severity, Rating>>,
}

impl Default for SeverityMap {
    fn default() -> Self {
        use Rating::*;
        let rows: [(Category, [Rating; 4]); 5] = [
            (Category::Violence, [R6, R12, R16, R18]),
            (Category::Profanity, [R16, R16, R18, R18]),
            (Category::SexualContent, [R12, R16, R18, R18]),
            (Category::DrugsAlcohol, [R12, R12, R16, R18]),
            (Category::FearElements, [R6, R12, R16, R16]),
        ];
        let table = rows
            .into_iter()
            .map(|(cat, ratings)| (cat, Severity::ALL.into_iter().zip(ratings).collect()))
            .collect();
        SeverityMap { table }
    }
}

impl SeverityMap {
    pub fn rating(&self, category: Category, severity: Severity) -> Rating {
        self.table
            .get(&category)
            .and_then(|row| row.get(&severity))
            .copied()
            .unwrap_or(Rating::R0)
    }

    pub fn set(&mut self, category: Category, severity: Severity, rating: Rating) {
        self.table.entry(category).or_default().insert(severity, rating);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnalyzerKind {
    Rules,
    Model,
    Mock,
}

impl std::str::FromStr for AnalyzerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rules" => Ok(AnalyzerKind::Rules),
            "model" => Ok(AnalyzerKind::Model),
            "mock" => Ok(AnalyzerKind::Mock),
            other => Err(Error::Config(format!("unknown analyzer kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyzerConfig {
    pub kind: AnalyzerKind,
    pub max_window_tokens: usize,
    pub overlap_tokens: usize,
    pub min_batch: usize,
    pub max_batch: usize,
    pub batch_token_budget: usize,
    pub severity_map: SeverityMap,
}

impl Default for AnalyzerConfig {
    fn default() -> Self {
        AnalyzerConfig {
            kind: AnalyzerKind::Rules,
            max_window_tokens: 1800,
            overlap_tokens: 200,
            min_batch: 4,
            max_batch: 8,
            batch_token_budget: 7200,
            severity_map: SeverityMap::default(),
        }
    }
}

impl AnalyzerConfig {
    pub fn validate(&self) -> Result<()> {
        validate_window_budget(self.max_window_tokens, self.overlap_tokens)?;
        if self.min_batch == 0 || self.min_batch > self.max_batch {
            return Err(Error::Config(format!(
                "batch bounds must satisfy 1 <= min ({}) <= max ({})",
                self.min_batch, self.max_batch
            )));
        }
        if self.batch_token_budget == 0 {
            return Err(Error::Config("batch token budget must be positive".into()));
        }
        Ok(())
    }
}

/// Verdict from lexicon matches alone: the highest mapped rating wins, and
/// the label is that match's category.
pub fn rules_verdict(
    scene: &Scene,
    matches: &[LexiconMatch],
    lexicon: &Lexicon,
    map: &SeverityMap,
) -> SceneVerdict {
    let mut best: Option<(Rating, Category)> = None;
    for m in matches {
        let r = map.rating(m.category, m.severity);
        best = Some(match best {
            None => (r, m.category),
            Some((br, _)) if r > br => (r, m.category),
            Some((br, bc)) if r == br => (br, Category::tie_winner(bc, m.category)),
            Some(keep) => keep,
        });
    }

    let (rating, label) = match best {
        Some((r, c)) if r > Rating::R0 => (r, Some(c)),
        _ => (Rating::R0, None),
    };

    let why = if matches.is_empty() {
        "No violations detected".to_string()
    } else {
        matches
            .iter()
            .map(|m| match lexicon.rule(&m.rule_id) {
                Some(rule) => anchor_explanation(m, rule),
                None => format!("Flagged due to {} {} term '{}'", m.severity, m.category.prose_name(), m.quote),
            })
            .collect::<Vec<_>>()
            .join("; ")
    };

    let first_severity = matches.first().map(|m| m.severity);
    let confidence = if matches.iter().all(|m| Some(m.severity) == first_severity) {
        Confidence::High
    } else {
        Confidence::Medium
    };

    SceneVerdict {
        scene_index: scene.index,
        rating,
        label,
        why,
        anchors: matches.to_vec(),
        confidence,
        source: VerdictSource::Rules,
    }
}

/// Modal rating over window verdicts; a tie goes to the more severe rating.
pub fn majority_vote(verdicts: &[SceneVerdict]) -> Result<SceneVerdict> {
    let first = verdicts.first().ok_or(Error::EmptyAnalysis)?;
    if verdicts.iter().any(|v| v.scene_index != first.scene_index) {
        return Err(Error::Config("majority vote over verdicts of different scenes".into()));
    }

    let mut counts = [0usize; 5];
    for v in verdicts {
        counts[v.rating.level()] += 1;
    }
    let top = *counts.iter().max().expect("five levels");
    let winner = Rating::ALL
        .into_iter()
        .rev()
        .find(|r| counts[r.level()] == top)
        .expect("some level has the top count");

    let with_winner: Vec<&SceneVerdict> = verdicts.iter().filter(|v| v.rating == winner).collect();
    let label = with_winner.iter().find_map(|v| v.label);
    let confidence = with_winner.iter().map(|v| v.confidence).min().unwrap_or(Confidence::Low);

    let mut whys: Vec<&str> = Vec::new();
    for v in verdicts {
        let w = v.why.trim();
        if !w.is_empty() && !whys.contains(&w) {
            whys.push(w);
        }
    }
    let mut anchors: Vec<LexiconMatch> = Vec::new();
    for v in verdicts {
        for a in &v.anchors {
            if !anchors.contains(a) {
                anchors.push(a.clone());
            }
        }
    }
    anchors.sort_by(|a, b| a.span.0.cmp(&b.span.0).then_with(|| a.rule_id.cmp(&b.rule_id)));

    Ok(SceneVerdict {
        scene_index: first.scene_index,
        rating: winner,
        label,
        why: whys.join(" / "),
        anchors,
        confidence,
        source: first.source,
    })
}

/// Greedy, order-preserving batches: a batch closes when it holds
/// `max_batch` scenes or the next scene would push it past the token
/// budget. A scene larger than the whole budget gets a batch of its own.
pub fn batch_scenes<'a>(scenes: &'a [Scene], config: &AnalyzerConfig) -> Vec<&'a [Scene]> {
    let mut batches = Vec::new();
    let mut start = 0;
    let mut tokens = 0usize;
    for (i, scene) in scenes.iter().enumerate() {
        let len = i - start;
        let fits = len < config.max_batch && tokens + scene.token_estimate <= config.batch_token_budget;
        if len > 0 && !fits {
            batches.push(&scenes[start..i]);
            start = i;
            tokens = 0;
        }
        tokens += scene.token_estimate;
    }
    if start < scenes.len() {
        batches.push(&scenes[start..]);
    }
    batches
}

/// Outcome for one scene.
#[derive(Debug, Clone)]
pub struct SceneOutcome {
    pub verdict: SceneVerdict,
    /// The model path failed and the rules verdict was substituted.
    pub degraded: bool,
    pub failure: Option<String>,
}

/// Analyzer bound to a lexicon, a configuration and, for the model and
/// mock kinds, a completion backend.
pub struct Analyzer {
    lexicon: Lexicon,
    config: AnalyzerConfig,
    backend: Option<Box<dyn CompletionBackend>>,
}

impl std::fmt::Debug for Analyzer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Analyzer")
            .field("config", &self.config)
            .field("rules", &self.lexicon.rules().len())
            .field("backend", &self.backend.is_some())
            .finish()
    }
}

impl Analyzer {
    pub fn rules(lexicon: Lexicon, config: AnalyzerConfig) -> Result<Self> {
        config.validate()?;
        Ok(Analyzer {
            lexicon,
            config: AnalyzerConfig {
                kind: AnalyzerKind::Rules,
                ..config
            },
            backend: None,
        })
    }

    /// Model or mock analyzer. The kind must not be `Rules`.
    pub fn with_backend(
        lexicon: Lexicon,
        config: AnalyzerConfig,
        backend: Box<dyn CompletionBackend>,
    ) -> Result<Self> {
        config.validate()?;
        if config.kind == AnalyzerKind::Rules {
            return Err(Error::Config("the rules analyzer takes no backend".into()));
        }
        Ok(Analyzer {
            lexicon,
            config,
            backend: Some(backend),
        })
    }

    pub fn config(&self) -> &AnalyzerConfig {
        &self.config
    }

    pub fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }

    pub fn kind(&self) -> AnalyzerKind {
        self.config.kind
    }

    pub fn rules_verdict(&self, scene: &Scene) -> SceneVerdict {
        let matches = self.lexicon.scan(&scene.text());
        rules_verdict(scene, &matches, &self.lexicon, &self.config.severity_map)
    }

    /// Analyses one scene, surfacing backend and parse errors.
    pub fn analyze_scene(&self, scene: &Scene) -> Result<SceneVerdict> {
        self.analyze_batch_strict(std::slice::from_ref(scene))
            .pop()
            .expect("one result per scene")
    }

    /// Analyses one scene, falling back to the rules verdict on failure.
    pub fn analyze_scene_or_fallback(&self, scene: &Scene) -> SceneOutcome {
        self.analyze_batch(std::slice::from_ref(scene))
            .pop()
            .expect("one outcome per scene")
    }

    /// Analyses a batch; model requests for the whole batch go out together.
    pub fn analyze_batch(&self, scenes: &[Scene]) -> Vec<SceneOutcome> {
        self.analyze_batch_strict(scenes)
            .into_iter()
            .zip(scenes)
            .map(|(res, scene)| match res {
                Ok(verdict) => SceneOutcome {
                    verdict,
                    degraded: false,
                    failure: None,
                },
                Err(e) => {
                    let mut verdict = self.rules_verdict(scene);
                    verdict.confidence = Confidence::Low;
                    SceneOutcome {
                        verdict,
                        degraded: true,
                        failure: Some(e.to_string()),
                    }
                }
            })
            .collect()
    }

    fn analyze_batch_strict(&self, scenes: &[Scene]) -> Vec<Result<SceneVerdict>> {
        let Some(backend) = self.backend.as_deref() else {
            return scenes.iter().map(|s| Ok(self.rules_verdict(s))).collect();
        };

        let mut requests = Vec::new();
        let mut owners = Vec::new();
        let mut window_errors: Vec<Option<Error>> = Vec::with_capacity(scenes.len());
        for (pos, scene) in scenes.iter().enumerate() {
            match window_scene(scene, self.config.max_window_tokens, self.config.overlap_tokens) {
                Ok(windows) => {
                    for w in windows {
                        requests.push(CompletionRequest {
                            prompt: build_prompt(&w.text),
                            window_text: w.text,
                        });
                        owners.push(pos);
                    }
                    window_errors.push(None);
                }
                Err(e) => window_errors.push(Some(e)),
            }
        }

        let completions = if requests.is_empty() {
            Ok(Vec::new())
        } else {
            backend.complete_batch(&requests)
        };
        let completions = match completions {
            Ok(c) if c.len() == requests.len() => c,
            Ok(c) => {
                let msg = format!("backend returned {} completions for {} prompts", c.len(), requests.len());
                return scenes.iter().map(|_| Err(Error::AnalyzerUnavailable(msg.clone()))).collect();
            }
            Err(e) => {
                let msg = e.to_string();
                return scenes.iter().map(|_| Err(Error::AnalyzerUnavailable(msg.clone()))).collect();
            }
        };

        let mut per_scene: Vec<Vec<Result<SceneVerdict>>> = scenes.iter().map(|_| Vec::new()).collect();
        for (owner, raw) in owners.into_iter().zip(completions) {
            per_scene[owner].push(parse_verdict(&raw, scenes[owner].index));
        }

        scenes
            .iter()
            .zip(per_scene)
            .zip(window_errors)
            .map(|((scene, window_results), window_error)| {
                if let Some(e) = window_error {
                    return Err(e);
                }
                let window_verdicts = window_results.into_iter().collect::<Result<Vec<_>>>()?;
                let model = majority_vote(&window_verdicts)?;
                Ok(self.merge_with_rules(scene, model))
            })
            .collect()
    }

    /// Final verdict for the model path: the higher of the model and rules
    /// ratings, always carrying the lexicon anchors.
    fn merge_with_rules(&self, scene: &Scene, model: SceneVerdict) -> SceneVerdict {
        let rules = self.rules_verdict(scene);
        let source = match self.config.kind {
            AnalyzerKind::Mock => VerdictSource::Mock,
            _ => VerdictSource::Model,
        };
        let confidence = if model.rating == rules.rating {
            Confidence::High
        } else {
            Confidence::Medium
        };
        let (rating, label) = if rules.rating > model.rating {
            (rules.rating, rules.label)
        } else {
            (model.rating, model.label.or(if model.rating > Rating::R0 { rules.label } else { None }))
        };
        let mut why = model.why.trim().to_string();
        if !rules.anchors.is_empty() {
            if !why.is_empty() {
                why.push_str("; ");
            }
            why.push_str(&rules.why);
        }
        if why.is_empty() && rating > Rating::R0 {
            why = format!("Rated {rating} by the model without an explanation");
        }
        SceneVerdict {
            scene_index: scene.index,
            rating,
            label,
            why,
            anchors: rules.anchors,
            confidence,
            source,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexicon::LexiconRule;

    fn scene(index: usize, body: &str) -> Scene {
        Scene::new(index, "INT. ROOM - DAY".into(), body.into(), (0, 1))
    }

    fn verdict(rating: Rating) -> SceneVerdict {
        SceneVerdict {
            scene_index: 0,
            rating,
            label: None,
            why: String::new(),
            anchors: Vec::new(),
            confidence: Confidence::Medium,
            source: VerdictSource::Model,
        }
    }

    fn m(cat: Category, sev: Severity) -> LexiconMatch {
        LexiconMatch {
            rule_id: format!("{cat}-{sev}"),
            category: cat,
            severity: sev,
            span: (0, 1),
            quote: "x".into(),
        }
    }

    #[test]
    fn no_matches_is_zero_plus() {
        let v = rules_verdict(&scene(0, ""), &[], &Lexicon::default_rules(), &SeverityMap::default());
        assert_eq!(v.rating, Rating::R0);
        assert_eq!(v.label, None);
    }

    #[test]
    fn explicit_violence_is_sixteen() {
        let v = rules_verdict(
            &scene(0, "x"),
            &[m(Category::Violence, Severity::Explicit)],
            &Lexicon::default_rules(),
            &SeverityMap::default(),
        );
        assert_eq!(v.rating, Rating::R16);
        assert_eq!(v.label, Some(Category::Violence));
        assert!(!v.why.is_empty());
    }

    #[test]
    fn max_over_matches() {
        let v = rules_verdict(
            &scene(0, "x"),
            &[m(Category::FearElements, Severity::Moderate), m(Category::Violence, Severity::Graphic)],
            &Lexicon::default_rules(),
            &SeverityMap::default(),
        );
        assert_eq!(v.rating, Rating::R18);
        assert_eq!(v.label, Some(Category::Violence));
        assert_eq!(v.confidence, Confidence::Medium);
    }

    #[test]
    fn tie_goes_by_category_order() {
        // explicit fear and explicit violence both map to 16+.
        let v = rules_verdict(
            &scene(0, "x"),
            &[m(Category::FearElements, Severity::Explicit), m(Category::Violence, Severity::Explicit)],
            &Lexicon::default_rules(),
            &SeverityMap::default(),
        );
        assert_eq!(v.label, Some(Category::Violence));
        // moderate drugs and moderate fear both 12+: drugs precede fear.
        let v = rules_verdict(
            &scene(0, "x"),
            &[m(Category::FearElements, Severity::Moderate), m(Category::DrugsAlcohol, Severity::Moderate)],
            &Lexicon::default_rules(),
            &SeverityMap::default(),
        );
        assert_eq!(v.label, Some(Category::DrugsAlcohol));
    }

    #[test]
    fn vote_examples() {
        use Rating::*;
        let vote = |rs: &[Rating]| majority_vote(&rs.iter().map(|r| verdict(*r)).collect::<Vec<_>>()).unwrap().rating;
        assert_eq!(vote(&[R16, R12, R16]), R16);
        assert_eq!(vote(&[R12, R16]), R16);
        assert_eq!(vote(&[R0]), R0);
        assert!(matches!(majority_vote(&[]), Err(Error::EmptyAnalysis)));
    }

    fn sized(index: usize, tokens: usize) -> Scene {
        Scene::new(index, String::new(), "z".repeat(tokens * 4), (index, index))
    }

    #[test]
    fn batching_examples() {
        let cfg = AnalyzerConfig::default();
        let tiny: Vec<Scene> = (0..10).map(|i| sized(i, 10)).collect();
        let sizes: Vec<usize> = batch_scenes(&tiny, &cfg).iter().map(|b| b.len()).collect();
        assert_eq!(sizes, vec![8, 2]);

        let three: Vec<Scene> = (0..3).map(|i| sized(i, 10)).collect();
        assert_eq!(batch_scenes(&three, &cfg).len(), 1);

        let huge = vec![sized(0, 10), sized(1, 9000), sized(2, 10)];
        let sizes: Vec<usize> = batch_scenes(&huge, &cfg).iter().map(|b| b.len()).collect();
        assert_eq!(sizes, vec![1, 1, 1]);
    }

    #[test]
    fn window_sized_scenes_fill_at_least_min_batch() {
        let cfg = AnalyzerConfig::default();
        let scenes: Vec<Scene> = (0..23).map(|i| sized(i, 1 + (i * 397) % 1800)).collect();
        let batches = batch_scenes(&scenes, &cfg);
        for b in &batches[..batches.len() - 1] {
            assert!((cfg.min_batch..=cfg.max_batch).contains(&b.len()), "{}", b.len());
        }
    }

    #[test]
    fn config_validation() {
        let mut cfg = AnalyzerConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.min_batch = 9;
        assert!(cfg.validate().is_err());
        let cfg = AnalyzerConfig {
            overlap_tokens: 1800,
            ..AnalyzerConfig::default()
        };
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn violated_categories_are_a_set() {
        let lex = Lexicon::new(vec![LexiconRule::new("k", Category::Violence, Severity::Explicit, "kill", "r").unwrap()]).unwrap();
        let s = scene(0, "kill kill kill");
        let matches = lex.scan(&s.text());
        let v = rules_verdict(&s, &matches, &lex, &SeverityMap::default());
        assert_eq!(v.anchors.len(), 3);
        assert_eq!(v.violated_categories(), vec![Category::Violence]);
    }
}
