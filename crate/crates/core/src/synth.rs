//! Deterministic synthetic screenplays for tests and benchmarks.
//!
//! Every generator is seeded and records where the true scene headings
//! are, so segmentation output can be scored against it.

use std::io::{Cursor, Write};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A generated script with its true heading lines.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthScript {
    pub lines: Vec<String>,
    /// Line indices of true scene headings, ascending.
    pub headings: Vec<usize>,
}

impl SynthScript {
    pub fn text(&self) -> String {
        let mut s = self.lines.join("\n");
        s.push('\n');
        s
    }

    pub fn scene_count(&self) -> usize {
        self.headings.len()
    }

    /// The same script as a `.docx` with heading paragraphs styled.
    pub fn to_docx(&self) -> Vec<u8> {
        let paragraphs: Vec<(&str, bool)> = self
            .lines
            .iter()
            .enumerate()
            .map(|(i, l)| (l.as_str(), self.headings.binary_search(&i).is_ok()))
            .collect();
        write_docx(&paragraphs)
    }
}

const NAMES: &[&str] = &["Anna", "Viktor", "Marina", "Ivan", "Oleg", "Sofia", "Pavel", "Elena"];
const PLACES: &[&str] = &[
    "KITCHEN", "STREET", "OFFICE", "STATION", "GARDEN", "LIBRARY", "APARTMENT", "ROOFTOP", "HALLWAY", "CAFE",
];
const TIMES: &[&str] = &["DAY", "NIGHT", "MORNING", "EVENING", "DAWN"];
const PLACES_RU: &[&str] = &["КУХНЯ", "УЛИЦА", "ОФИС", "ВОКЗАЛ", "САД", "БИБЛИОТЕКА"];
const TIMES_RU: &[&str] = &["ДЕНЬ", "НОЧЬ", "УТРО", "ВЕЧЕР"];

const ACTIONS: &[&str] = &[
    "{n} walks to the window and looks outside.",
    "{n} pours tea into two cups.",
    "A clock ticks on the wall.",
    "{n} reads a letter and folds it carefully.",
    "Rain taps against the glass.",
    "{n} opens the door and waits.",
    "The radio plays a quiet tune.",
    "{n} laughs and sits down at the table.",
    "They study the map together.",
    "{n} writes something in a notebook.",
];
const LINES: &[&str] = &[
    "I will call you tomorrow.",
    "Where did you put the keys?",
    "We should leave before noon.",
    "Thank you for coming.",
    "The train is late again.",
];
const LOOSE_HEADINGS: &[&str] = &[
    "Later that evening, at the station",
    "Back at the office.",
    "Квартира Ивана, утро",
    "Meanwhile, in the garden",
    "Next morning. The kitchen.",
];

/// One sentence per category, each tripping exactly one default rule.
pub const VIOLENCE_LINE: &str = "Viktor says he will kill the story before it runs.";
pub const PROFANITY_LINE: &str = "Damn, the printer jammed again.";
pub const SEXUAL_LINE: &str = "A naked mannequin stands in the shop window.";
pub const DRUGS_LINE: &str = "Ivan orders a glass of vodka.";
pub const FEAR_LINE: &str = "Marina wakes up from a nightmare.";

fn pick<'a>(rng: &mut ChaCha8Rng, xs: &'a [&'a str]) -> &'a str {
    xs.choose(rng).expect("non-empty list")
}

fn action(rng: &mut ChaCha8Rng) -> String {
    pick(rng, ACTIONS).replace("{n}", pick(rng, NAMES))
}

fn standard_heading(rng: &mut ChaCha8Rng, number: usize) -> String {
    match rng.random_range(0..6) {
        0 => format!("ИНТ. {} - {}", pick(rng, PLACES_RU), pick(rng, TIMES_RU)),
        1 => format!("НАТ. {} - {}", pick(rng, PLACES_RU), pick(rng, TIMES_RU)),
        2 => format!("{number}. INT. {} - {}", pick(rng, PLACES), pick(rng, TIMES)),
        3 => format!("EXT. {} - {}", pick(rng, PLACES), pick(rng, TIMES)),
        4 => format!("{} - {}", pick(rng, PLACES), pick(rng, TIMES)),
        _ => format!("INT. {} - {}", pick(rng, PLACES), pick(rng, TIMES)),
    }
}

/// Noise rates for the segmentation corpus.
#[derive(Debug, Clone, Copy)]
pub struct NoiseRates {
    /// Share of headings written as free prose, which the plain-text rules
    /// cannot see.
    pub loose_heading: f64,
    /// Per-scene chance of an upper-case dialogue cue carrying a dash,
    /// which the plain-text rules mistake for a heading.
    pub dashed_cue: f64,
}

impl Default for NoiseRates {
    fn default() -> Self {
        NoiseRates {
            loose_heading: 0.2,
            dashed_cue: 0.2,
        }
    }
}

/// A corpus of `count` scripts of 15–35 scenes each.
pub fn segmentation_corpus(count: usize, seed: u64) -> Vec<SynthScript> {
    segmentation_corpus_with(count, seed, NoiseRates::default())
}

pub fn segmentation_corpus_with(count: usize, seed: u64, noise: NoiseRates) -> Vec<SynthScript> {
    (0..count)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let scenes = rng.random_range(15..=35);
            noisy_script(&mut rng, scenes, noise)
        })
        .collect()
}

fn noisy_script(rng: &mut ChaCha8Rng, scenes: usize, noise: NoiseRates) -> SynthScript {
    let mut lines = vec!["FADE IN:".to_string(), String::new()];
    let mut headings = Vec::new();
    for n in 1..=scenes {
        headings.push(lines.len());
        if rng.random_bool(noise.loose_heading) {
            lines.push(pick(rng, LOOSE_HEADINGS).to_string());
        } else {
            lines.push(standard_heading(rng, n));
        }
        lines.push(String::new());
        let cue_at = rng.random_bool(noise.dashed_cue).then(|| rng.random_range(0..3));
        for block in 0..3 {
            lines.push(action(rng));
            lines.push(String::new());
            let name = pick(rng, NAMES).to_uppercase();
            if cue_at == Some(block) {
                lines.push(format!("{name} — (CONT'D)"));
            } else {
                lines.push(name);
            }
            lines.push(pick(rng, LINES).to_string());
            lines.push(String::new());
        }
    }
    SynthScript { lines, headings }
}

/// Lines per printed screenplay page.
pub const LINES_PER_PAGE: usize = 55;

/// Scenes in a script of the given length, at about 0.56 scenes per page.
pub fn scenes_for_pages(pages: usize) -> usize {
    (pages * 394).div_ceil(700).max(1)
}

/// A clean-format script of roughly `pages` pages. About one scene in ten
/// carries a flagged sentence.
pub fn paged_script(pages: usize, seed: u64) -> SynthScript {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scenes = scenes_for_pages(pages);
    let body_lines = (pages * LINES_PER_PAGE / scenes).saturating_sub(1).max(1);
    let flagged = [VIOLENCE_LINE, PROFANITY_LINE, SEXUAL_LINE, DRUGS_LINE, FEAR_LINE];
    let mut lines = Vec::with_capacity(pages * LINES_PER_PAGE);
    let mut headings = Vec::with_capacity(scenes);
    for n in 1..=scenes {
        headings.push(lines.len());
        lines.push(format!("{n}. INT. {} - {}", pick(&mut rng, PLACES), pick(&mut rng, TIMES)));
        let flag_at = rng.random_bool(0.1).then(|| rng.random_range(0..body_lines));
        for i in 0..body_lines {
            if flag_at == Some(i) {
                lines.push(pick(&mut rng, &flagged).to_string());
                continue;
            }
            lines.push(match i % 4 {
                1 => pick(&mut rng, NAMES).to_uppercase(),
                2 => pick(&mut rng, LINES).to_string(),
                3 => String::new(),
                _ => action(&mut rng),
            });
        }
    }
    SynthScript { lines, headings }
}

/// Scene count of [`golden_script`].
pub const GOLDEN_SCENES: usize = 394;

/// A 394-scene script where exactly twelve scenes are flagged: five for
/// violence, three for profanity, two for sexual content, one for alcohol
/// and one for frightening content. The most severe of them rate 16+.
pub fn golden_script() -> SynthScript {
    let mut rng = ChaCha8Rng::seed_from_u64(394);
    let mut plan: Vec<Option<&str>> = vec![None; GOLDEN_SCENES];
    let flagged = [
        VIOLENCE_LINE,
        VIOLENCE_LINE,
        VIOLENCE_LINE,
        VIOLENCE_LINE,
        VIOLENCE_LINE,
        PROFANITY_LINE,
        PROFANITY_LINE,
        PROFANITY_LINE,
        SEXUAL_LINE,
        SEXUAL_LINE,
        DRUGS_LINE,
        FEAR_LINE,
    ];
    for (k, line) in flagged.into_iter().enumerate() {
        plan[16 + k * 32] = Some(line);
    }
    let mut lines = Vec::new();
    let mut headings = Vec::new();
    for (n, extra) in plan.into_iter().enumerate() {
        headings.push(lines.len());
        lines.push(format!("INT. {} {} - {}", pick(&mut rng, PLACES), n + 1, pick(&mut rng, TIMES)));
        lines.push(action(&mut rng));
        if let Some(extra) = extra {
            lines.push(extra.to_string());
        }
        lines.push(pick(&mut rng, NAMES).to_uppercase());
        lines.push(pick(&mut rng, LINES).to_string());
        lines.push(String::new());
    }
    SynthScript { lines, headings }
}

fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            c => out.push(c),
        }
    }
    out
}

const CONTENT_TYPES: &str = r#"<?xml version="1.0" encoding="UTF-8" standalone="yes"?>
<Types xmlns="http://schemas.openxmlformats.org/package/2006/content-types"><Default Extension="rels" ContentType="application/vnd.openxmlformats-package.relationships+xml"/><Default Extension="xml" ContentType="application/xml"/><Override PartName="/word/document.xml" ContentType="application/vnd.openxmlformats-officedocument.wordprocessingml.document.main+xml"/><Override PartName="/word/styles.xml" ContentType="application/vnd.openxmlformats-officedocument.wordprocessingml.styles+xml"/></Types>"#;

const RELS: &str = r#"<?xml version="1.0" encoding="UTF-8" standalone="yes"?>
<Relationships xmlns="http://schemas.openxmlformats.org/package/2006/relationships"><Relationship Id="rId1" Type="http://schemas.openxmlformats.org/officeDocument/2006/relationships/officeDocument" Target="word/document.xml"/></Relationships>"#;

const STYLES: &str = r#"<?xml version="1.0" encoding="UTF-8" standalone="yes"?>
<w:styles xmlns:w="http://schemas.openxmlformats.org/wordprocessingml/2006/main"><w:style w:type="paragraph" w:styleId="Normal"><w:name w:val="Normal"/></w:style><w:style w:type="paragraph" w:styleId="SceneHeading"><w:name w:val="heading 2"/></w:style></w:styles>"#;

/// Minimal `.docx`: one paragraph per entry, `true` entries styled as
/// headings.
pub fn write_docx(paragraphs: &[(&str, bool)]) -> Vec<u8> {
    let mut body = String::new();
    for (text, heading) in paragraphs {
        body.push_str("<w:p>");
        if *heading {
            body.push_str(r#"<w:pPr><w:pStyle w:val="SceneHeading"/></w:pPr>"#);
        }
        if !text.is_empty() {
            body.push_str(r#"<w:r><w:t xml:space="preserve">"#);
            body.push_str(&xml_escape(text));
            body.push_str("</w:t></w:r>");
        }
        body.push_str("</w:p>");
    }
    let document = format!(
        r#"<?xml version="1.0" encoding="UTF-8" standalone="yes"?>
<w:document xmlns:w="http://schemas.openxmlformats.org/wordprocessingml/2006/main"><w:body>{body}</w:body></w:document>"#
    );

    let mut zip = zip::ZipWriter::new(Cursor::new(Vec::new()));
    let opts = zip::write::SimpleFileOptions::default().compression_method(zip::CompressionMethod::Deflated);
    for (name, content) in [
        ("[Content_Types].xml", CONTENT_TYPES),
        ("_rels/.rels", RELS),
        ("word/styles.xml", STYLES),
        ("word/document.xml", document.as_str()),
    ] {
        zip.start_file(name, opts).expect("zip entry");
        zip.write_all(content.as_bytes()).expect("in-memory write");
    }
    zip.finish().expect("zip finish").into_inner()
}
