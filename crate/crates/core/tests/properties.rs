use std::sync::LazyLock;

use proptest::collection::vec;
use proptest::prelude::*;
use proptest::strategy::ValueTree;

use scriptrate_core::aggregator::{aggregate_rating, Statistics};
use scriptrate_core::analyzer::{batch_scenes, majority_vote, AnalyzerConfig, SceneVerdict};
use scriptrate_core::evalkit::{bootstrap_ci, rating_eval, seg_boundary_prf, Metric};
use scriptrate_core::ingest::{decode_as, detect_encoding, encode_as, DecodedDocument, EncodingId};
use scriptrate_core::lexicon::{char_slice, Lexicon};
use scriptrate_core::segmenter::{segment, window_scene, Scene};
use scriptrate_core::{Category, Confidence, Rating, VerdictSource};

static LEXICON: LazyLock<Lexicon> = LazyLock::new(Lexicon::default_rules);

fn rating() -> impl Strategy<Value = Rating> {
    (0usize..5).prop_map(|l| Rating::from_level(l).unwrap())
}

fn category() -> impl Strategy<Value = Option<Category>> {
    prop_oneof![Just(None), (0usize..5).prop_map(|i| Some(Category::ALL[i]))]
}

fn verdict() -> impl Strategy<Value = SceneVerdict> {
    (rating(), category()).prop_map(|(rating, label)| SceneVerdict {
        scene_index: 0,
        rating,
        label: if rating == Rating::R0 { None } else { label },
        why: "w".into(),
        anchors: Vec::new(),
        confidence: Confidence::Medium,
        source: VerdictSource::Rules,
    })
}

/// Lines drawn from a pool that mixes headings, cues and prose.
fn script_line() -> impl Strategy<Value = String> {
    prop_oneof![
        Just("INT. KITCHEN - DAY".to_string()),
        Just("ИНТ. КВАРТИРА - НОЧЬ".to_string()),
        Just("ROOFTOP — DAWN".to_string()),
        Just("ANNA".to_string()),
        Just(String::new()),
        "[a-zA-Zа-яА-Я ,.!-]{0,40}",
    ]
}

proptest! {
    #[test]
    fn segmentation_is_lossless(lines in vec(script_line(), 1..60)) {
        let doc = DecodedDocument::from_lines(lines.clone(), vec![false; lines.len()], EncodingId::Utf8);
        let scenes = segment(&doc);
        let rebuilt: Vec<&str> = scenes.iter().flat_map(|s| s.lines()).collect();
        prop_assert_eq!(rebuilt, lines.iter().map(String::as_str).collect::<Vec<_>>());
        for pair in scenes.windows(2) {
            prop_assert!(pair[0].span.1 < pair[1].span.0);
            prop_assert_eq!(pair[0].span.1 + 1, pair[1].span.0);
        }
        for s in &scenes {
            prop_assert_eq!(s.token_estimate, s.text().chars().count().div_ceil(4));
        }
    }

    #[test]
    fn windows_cover_and_overlap(tokens in 100usize..10_000, max in 200usize..3000, overlap_pct in 0usize..=50) {
        let overlap = max * overlap_pct / 100;
        let body: String = (0..tokens * 4 - 16).map(|i| char::from(b'a' + (i % 26) as u8)).collect();
        let scene = Scene::new(0, "INT. HALL - DAY".into(), body, (0, 1));
        let text: Vec<char> = scene.text().chars().collect();
        let windows = window_scene(&scene, max, overlap).unwrap();

        if scene.token_estimate <= max {
            prop_assert_eq!(windows.len(), 1);
            prop_assert_eq!(&windows[0].text, &scene.text());
            return Ok(());
        }
        let stride = (max - overlap) * 4;
        let mut hits = vec![0u8; text.len()];
        for (k, w) in windows.iter().enumerate() {
            prop_assert!(w.token_count <= max);
            let start = k * stride;
            let chars: Vec<char> = w.text.chars().collect();
            prop_assert_eq!(&chars[..], &text[start..start + chars.len()]);
            for h in &mut hits[start..start + chars.len()] {
                *h += 1;
            }
            if k + 2 < windows.len() {
                // not the last pair: full overlap
                prop_assert_eq!(chars.len(), max * 4);
            }
            if k + 1 < windows.len() {
                let next_len = windows[k + 1].text.chars().count();
                let shared = (start + chars.len()).saturating_sub(start + stride).min(next_len);
                if k + 2 < windows.len() {
                    prop_assert_eq!(shared, overlap * 4);
                }
            }
        }
        prop_assert!(hits.iter().all(|&h| h == 1 || h == 2), "coverage");
        for (k, _) in windows.iter().enumerate().skip(1) {
            let begin = k * stride;
            let end = (begin + overlap * 4).min(text.len());
            prop_assert!(hits[begin..end].iter().all(|&h| h == 2));
        }
    }

    #[test]
    fn utf8_and_utf16_round_trip(s in "[ -~а-яА-ЯёЁ\n]{1,80}") {
        for enc in [EncodingId::Utf8, EncodingId::Utf16] {
            let bytes = encode_as(&s, enc).unwrap();
            let detected = detect_encoding(&bytes);
            prop_assert_eq!(detected, enc);
            prop_assert_eq!(decode_as(&bytes, detected).0, s.clone());
        }
    }

    #[test]
    fn bom_beats_content(payload in vec(0x80u8..=0xFF, 1..64)) {
        let mut utf8 = vec![0xEF, 0xBB, 0xBF];
        utf8.extend(&payload);
        prop_assert_eq!(detect_encoding(&utf8), EncodingId::Utf8);
        let mut utf16 = vec![0xFF, 0xFE];
        utf16.extend(&payload);
        prop_assert_eq!(detect_encoding(&utf16), EncodingId::Utf16);
        prop_assert_eq!(detect_encoding(&payload), detect_encoding(&payload));
    }

    #[test]
    fn scan_quotes_are_faithful(prefix in "[a-zа-я ]{0,20}", word in prop::sample::select(vec!["kill", "Blood", "водка", "убийство", "damn", "NIGHTMARE"]), suffix in "[a-z ]{0,20}") {
        let lex = &*LEXICON;
        let text = format!("{prefix} {word} {suffix}");
        let a = lex.scan(&text);
        prop_assert_eq!(&a, &lex.scan(&text));
        prop_assert!(!a.is_empty());
        for m in &a {
            prop_assert_eq!(char_slice(&text, m.span), m.quote.clone());
        }
        // appending text never removes matches from the original prefix
        let longer = format!("{text} and more words");
        let b = lex.scan(&longer);
        for m in &a {
            prop_assert!(b.iter().any(|n| n.span.0 == m.span.0 && n.rule_id == m.rule_id));
        }
    }

    #[test]
    fn aggregation_is_monotone_and_order_free(mut vs in vec(verdict(), 1..40), extra in verdict(), seed in any::<u64>()) {
        let base = aggregate_rating(&vs).unwrap();
        prop_assert_eq!(base, vs.iter().map(|v| v.rating).max().unwrap());
        let stats = Statistics::from_verdicts(&vs);
        prop_assert!(stats.problematic_sentences <= stats.total_sentences);

        let mut longer = vs.clone();
        longer.push(extra);
        prop_assert!(aggregate_rating(&longer).unwrap() >= base);

        let n = vs.len();
        vs.rotate_left((seed as usize) % n);
        vs.reverse();
        prop_assert_eq!(aggregate_rating(&vs).unwrap(), base);
        prop_assert_eq!(Statistics::from_verdicts(&vs), stats);
    }

    #[test]
    fn vote_is_conservative_mode(rs in vec(rating(), 1..9)) {
        let vs: Vec<SceneVerdict> = rs.iter().map(|r| SceneVerdict {
            scene_index: 7, rating: *r, label: None, why: String::new(),
            anchors: Vec::new(), confidence: Confidence::High, source: VerdictSource::Model,
        }).collect();
        let out = majority_vote(&vs).unwrap();
        let count = |r: Rating| rs.iter().filter(|x| **x == r).count();
        let top = rs.iter().map(|r| count(*r)).max().unwrap();
        let modes: Vec<Rating> = Rating::ALL.into_iter().filter(|r| count(*r) == top).collect();
        prop_assert_eq!(out.rating, *modes.iter().max().unwrap());
        prop_assert!(out.rating >= *modes.iter().min().unwrap());
        prop_assert_eq!(out.scene_index, 7);
    }

    #[test]
    fn batches_preserve_order(sizes in vec(0usize..4000, 0..60)) {
        let scenes: Vec<Scene> = sizes.iter().enumerate()
            .map(|(i, t)| Scene::new(i, String::new(), "x".repeat(t * 4), (i, i)))
            .collect();
        let cfg = AnalyzerConfig::default();
        let batches = batch_scenes(&scenes, &cfg);
        let flat: Vec<usize> = batches.iter().flat_map(|b| b.iter().map(|s| s.index)).collect();
        prop_assert_eq!(flat, (0..scenes.len()).collect::<Vec<_>>());
        for b in &batches {
            prop_assert!(!b.is_empty() && b.len() <= cfg.max_batch);
            let tokens: usize = b.iter().map(|s| s.token_estimate).sum();
            prop_assert!(b.len() == 1 || tokens <= cfg.batch_token_budget);
        }
    }

    #[test]
    fn rating_metrics_are_consistent(pairs in vec((rating(), rating()), 1..50)) {
        let (m, s) = rating_eval(&pairs).unwrap();
        prop_assert_eq!(m.total(), pairs.len());
        prop_assert!((s.accuracy - m.trace() as f64 / m.total() as f64).abs() < 1e-12);
        prop_assert!(s.accuracy <= s.within_one && s.within_one <= 1.0);
        for r in Rating::ALL {
            prop_assert_eq!(m.row_sum(r), pairs.iter().filter(|(t, _)| *t == r).count());
        }
        let mut rev = pairs.clone();
        rev.reverse();
        prop_assert_eq!(rating_eval(&rev).unwrap().1, s);
    }

    #[test]
    fn boundary_prf_matches_set_oracle(p in vec(0usize..50, 0..20), t in vec(0usize..50, 0..20)) {
        use std::collections::BTreeSet;
        let ps: BTreeSet<_> = p.iter().copied().collect();
        let ts: BTreeSet<_> = t.iter().copied().collect();
        let tp = ps.intersection(&ts).count() as f64;
        let prf = seg_boundary_prf(&p, &t);
        let precision = if ps.is_empty() { 0.0 } else { tp / ps.len() as f64 };
        let recall = if ts.is_empty() { 0.0 } else { tp / ts.len() as f64 };
        prop_assert!((prf.precision - precision).abs() < 1e-12);
        prop_assert!((prf.recall - recall).abs() < 1e-12);
        prop_assert!(prf.f1 <= 1.0 && prf.f1 >= 0.0);
    }
}

#[test]
fn bootstrap_interval_usually_contains_estimate() {
    let mut runner = proptest::test_runner::TestRunner::deterministic();
    let strat = vec((rating(), rating()), 10..40);
    let mut contained = 0;
    let trials = 60;
    for seed in 0..trials {
        let pairs = strat.new_tree(&mut runner).unwrap().current();
        let acc = rating_eval(&pairs).unwrap().1.accuracy;
        let (lo, hi) = bootstrap_ci(&pairs, Metric::Accuracy, 400, seed).unwrap();
        if lo <= acc && acc <= hi {
            contained += 1;
        }
    }
    assert!(contained * 100 >= trials * 95, "{contained}/{trials}");
}
