use scriptrate_core::aggregator::{build_report, category_percentages, format_percentage, Statistics};
use scriptrate_core::analyzer::{
    Analyzer, AnalyzerConfig, AnalyzerKind, MockBackend, SceneVerdict,
};
use scriptrate_core::evalkit::seg_boundary_prf;
use scriptrate_core::ingest::{load_document, RawDocument};
use scriptrate_core::lexicon::Lexicon;
use scriptrate_core::pipeline::{Pipeline, PipelineConfig};
use scriptrate_core::segmenter::{boundaries, estimate_tokens, segment, Scene};
use scriptrate_core::synth::{golden_script, paged_script, GOLDEN_SCENES};
use scriptrate_core::{Category, Confidence, Rating, VerdictSource};

const THREE_SCENES: &str = include_str!("../../../fixtures/three_scenes.txt");

fn rules() -> Analyzer {
    Analyzer::rules(Lexicon::default_rules(), AnalyzerConfig::default()).unwrap()
}

fn three_scenes() -> Vec<Scene> {
    let doc = load_document(&RawDocument::new(THREE_SCENES, "three.txt")).unwrap();
    segment(&doc)
}

#[test]
fn three_scene_segmentation() {
    let scenes = three_scenes();
    let headings: Vec<&str> = scenes.iter().map(|s| s.heading.as_str()).collect();
    assert_eq!(
        headings,
        ["INT. ABANDONED WAREHOUSE - NIGHT", "INT. OFFICE - DAY", "INT. HISTORICAL SETTING - 1945"]
    );
    assert_eq!(scenes[0].span, (0, 3));
    // frozen once from the fixture
    assert_eq!(estimate_tokens(&scenes[0].body), 33);
}

#[test]
fn rules_verdicts_on_example_scenes() {
    let scenes = three_scenes();
    let analyzer = rules();
    let v: Vec<SceneVerdict> = scenes.iter().map(|s| analyzer.analyze_scene(s).unwrap()).collect();

    assert_eq!((v[0].rating, v[0].label), (Rating::R18, Some(Category::Violence)));
    assert!(v[0].anchors.iter().any(|a| a.quote == "Blood"));
    assert!(v[0].why.contains("436-FZ Art. 6"));

    assert_eq!((v[1].rating, v[1].label), (Rating::R6, Some(Category::Violence)));
    assert_eq!(v[1].anchors.len(), 1);
    assert_eq!(v[1].anchors[0].quote, "crushed");

    assert_eq!((v[2].rating, v[2].label), (Rating::R12, Some(Category::DrugsAlcohol)));
    assert_eq!(v[2].confidence, Confidence::High);

    let report = build_report("f".into(), &scenes, &v, false).unwrap();
    assert_eq!(report.overall_rating, Rating::R18);
    assert_eq!(report.timeline.len(), 3);
}

#[test]
fn human_override_recomputes_aggregate() {
    let scenes = three_scenes();
    let analyzer = rules();
    let tail = &scenes[1..];
    let mut v: Vec<SceneVerdict> = tail.iter().map(|s| analyzer.analyze_scene(s).unwrap()).collect();
    assert_eq!(Statistics::from_verdicts(&v).violations.violence, 1);

    v[0] = SceneVerdict {
        rating: Rating::R0,
        label: None,
        why: "Metaphor, no violation".into(),
        source: VerdictSource::Human,
        ..v[0].clone()
    };
    let report = build_report("f".into(), tail, &v, false).unwrap();
    assert_eq!(report.overall_rating, Rating::R12);
    assert_eq!(report.statistics.violations.violence, 0);
    assert_eq!(report.statistics.problematic_sentences, 1);
}

#[test]
fn golden_report_fields() {
    let script = golden_script();
    let pipeline = Pipeline::new(rules(), PipelineConfig::default());
    let analysis = pipeline
        .run(&RawDocument::new(script.text(), "golden.txt"), "a3c7e890-0000-4000-8000-000000000000".into())
        .unwrap();
    let r = &analysis.report;
    assert_eq!(r.statistics.total_sentences, GOLDEN_SCENES);
    assert_eq!(r.statistics.problematic_sentences, 12);
    let v = r.statistics.violations;
    assert_eq!(
        (v.violence, v.profanity, v.sexual_content, v.drugs_alcohol, v.fear_elements),
        (5, 3, 2, 1, 1)
    );
    assert_eq!(r.overall_rating, Rating::R16);
    assert!(r.summary.starts_with("Found 12 problematic sentences"));

    let pct = category_percentages(&r.statistics).unwrap();
    assert_eq!(format_percentage(pct[&Category::Violence]), "1.3");

    let json: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
    assert_eq!(json["overall_rating"], "16+");
    assert_eq!(json["statistics"]["violations"]["sexual_content"], 2);
}

#[test]
fn docx_headings_come_from_styles() {
    let script = paged_script(30, 11);
    let docx = script.to_docx();
    let doc = load_document(&RawDocument::new(docx, "script.docx")).unwrap();
    assert_eq!(doc.lines, script.lines);
    let prf = seg_boundary_prf(&boundaries(&segment(&doc)), &script.headings);
    assert_eq!(prf.f1, 1.0);
}

fn mock_analyzer(mock: MockBackend, config: AnalyzerConfig) -> Analyzer {
    Analyzer::with_backend(
        Lexicon::default_rules(),
        AnalyzerConfig {
            kind: AnalyzerKind::Mock,
            ..config
        },
        Box::new(mock),
    )
    .unwrap()
}

#[test]
fn mock_model_paths() {
    let scenes = three_scenes();
    let mut mock = MockBackend::default();
    mock.insert(&scenes[0].text(), r#"{"rating":"18+","why":"graphic injury","label":"VIOLENCE"}"#);
    mock.insert(
        &scenes[1].text(),
        r#"Here is my answer: {"rating": "0+", "why": "metaphor", "label": "NONE"} Hope it helps."#,
    );
    mock.insert(&scenes[2].text(), r#"{"rating": "12+", "why": "#);
    let analyzer = mock_analyzer(mock, AnalyzerConfig::default());

    let outcomes = analyzer.analyze_batch(&scenes);
    assert_eq!(outcomes[0].verdict.rating, Rating::R18);
    assert_eq!(outcomes[0].verdict.source, VerdictSource::Mock);
    assert!(!outcomes[0].degraded);

    // Model says 0+, rules see "crushed": the stricter rating stands and
    // the anchor is kept.
    assert_eq!(outcomes[1].verdict.rating, Rating::R6);
    assert_eq!(outcomes[1].verdict.anchors.len(), 1);

    // Truncated JSON falls back to rules.
    assert!(outcomes[2].degraded);
    assert_eq!(outcomes[2].verdict.source, VerdictSource::Rules);
    assert_eq!(outcomes[2].verdict.confidence, Confidence::Low);
    assert_eq!(outcomes[2].verdict.rating, Rating::R12);
}

#[test]
fn degraded_flag_reaches_report() {
    let mut mock = MockBackend::default();
    mock.set_fallback("I cannot answer that.");
    let pipeline = Pipeline::new(mock_analyzer(mock, AnalyzerConfig::default()), PipelineConfig::default());
    let a = pipeline.run(&RawDocument::new(THREE_SCENES, "t.txt"), "x".into()).unwrap();
    assert!(a.report.degraded);
    assert_eq!(a.failures.len(), 3);
    assert_eq!(a.report.overall_rating, Rating::R18);
}

#[test]
fn long_scene_is_voted_over_windows() {
    let body = "Anna reads a letter. ".repeat(1000);
    let scene = Scene::new(0, "INT. ROOM - DAY".into(), body, (0, 1));
    let cfg = AnalyzerConfig {
        max_window_tokens: 1000,
        overlap_tokens: 100,
        ..AnalyzerConfig::default()
    };
    let windows = scriptrate_core::segmenter::window_scene(&scene, 1000, 100).unwrap();
    assert!(windows.len() >= 3);
    let mut mock = MockBackend::default();
    mock.set_fallback(r#"{"rating":"6+","why":"tense","label":"FRIGHTENING CONTENT"}"#);
    mock.insert(&windows[0].text, r#"{"rating":"16+","why":"x","label":"VIOLENCE"}"#);
    let v = mock_analyzer(mock, cfg).analyze_scene(&scene).unwrap();
    assert_eq!(v.rating, Rating::R6);
    assert_eq!(v.label, Some(Category::FearElements));
}
