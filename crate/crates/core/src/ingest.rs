//! Document ingestion: byte-level encoding detection for plain-text scripts
//! and paragraph extraction for `.docx` files.
//!
//! Plain text goes through a fixed cascade: a byte-order mark wins
//! outright; otherwise strict UTF-8 is tried, then the single-byte Cyrillic
//! code pages (CP1251, KOI8-R, ISO-8859-5), then MacRoman, then ASCII with
//! replacement characters as the last resort.
//!
//! All single-byte Cyrillic code pages accept almost any byte sequence, so
//! "decodes without error" does not tell them apart. A candidate must also
//! produce mostly Cyrillic letters, and among the candidates that do, the
//! one whose output looks most like Russian (letter frequencies and letter
//! case inside words) is chosen. Cascade order breaks exact ties.

use std::fmt;
use std::io::{Cursor, Read};
use std::path::Path;

use encoding_rs::{Encoding, ISO_8859_5, KOI8_R, MACINTOSH, UTF_16BE, UTF_16LE, WINDOWS_1251};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FormatHint {
    Txt,
    Docx,
    Pdf,
    Auto,
}

impl FormatHint {
    /// Resolves `Auto` from the filename extension. Unknown extensions are
    /// treated as plain text.
    pub fn resolve(self, filename: &str) -> FormatHint {
        if self != FormatHint::Auto {
            return self;
        }
        let ext = Path::new(filename)
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase());
        match ext.as_deref() {
            Some("docx") => FormatHint::Docx,
            Some("pdf") => FormatHint::Pdf,
            _ => FormatHint::Txt,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RawDocument {
    pub bytes: Vec<u8>,
    pub filename: String,
    pub format_hint: FormatHint,
}

impl RawDocument {
    pub fn new(bytes: impl Into<Vec<u8>>, filename: impl Into<String>) -> Self {
        RawDocument {
            bytes: bytes.into(),
            filename: filename.into(),
            format_hint: FormatHint::Auto,
        }
    }

    pub fn with_hint(mut self, hint: FormatHint) -> Self {
        self.format_hint = hint;
        self
    }

    pub fn resolved_format(&self) -> FormatHint {
        self.format_hint.resolve(&self.filename)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EncodingId {
    #[serde(rename = "utf-8")]
    Utf8,
    #[serde(rename = "utf-16")]
    Utf16,
    #[serde(rename = "cp1251")]
    Cp1251,
    #[serde(rename = "koi8-r")]
    Koi8R,
    #[serde(rename = "iso-8859-5")]
    Iso8859_5,
    #[serde(rename = "macroman")]
    MacRoman,
    #[serde(rename = "ascii")]
    Ascii,
    #[serde(rename = "docx-native")]
    DocxNative,
}

impl EncodingId {
    /// The seven text encodings in cascade order.
    pub const CASCADE: [EncodingId; 7] = [
        EncodingId::Utf8,
        EncodingId::Utf16,
        EncodingId::Cp1251,
        EncodingId::Koi8R,
        EncodingId::Iso8859_5,
        EncodingId::MacRoman,
        EncodingId::Ascii,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EncodingId::Utf8 => "utf-8",
            EncodingId::Utf16 => "utf-16",
            EncodingId::Cp1251 => "cp1251",
            EncodingId::Koi8R => "koi8-r",
            EncodingId::Iso8859_5 => "iso-8859-5",
            EncodingId::MacRoman => "macroman",
            EncodingId::Ascii => "ascii",
            EncodingId::DocxNative => "docx-native",
        }
    }

    pub fn parse(s: &str) -> Option<EncodingId> {
        EncodingId::CASCADE
            .into_iter()
            .chain([EncodingId::DocxNative])
            .find(|e| e.as_str().eq_ignore_ascii_case(s.trim()))
    }

    fn single_byte_table(self) -> Option<&'static Encoding> {
        match self {
            EncodingId::Cp1251 => Some(WINDOWS_1251),
            EncodingId::Koi8R => Some(KOI8_R),
            EncodingId::Iso8859_5 => Some(ISO_8859_5),
            EncodingId::MacRoman => Some(MACINTOSH),
            _ => None,
        }
    }
}

impl fmt::Display for EncodingId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecodedDocument {
    pub text: String,
    pub lines: Vec<String>,
    pub detected_encoding: EncodingId,
    pub had_replacements: bool,
    /// Per-line flag: the source marked this line with a heading style.
    /// Always all-false for plain text.
    pub heading_hints: Vec<bool>,
}

impl DecodedDocument {
    /// Builds a document from already-decoded text. Line endings are
    /// normalised to `\n` so that `lines.join("\n") == text`.
    pub fn from_text(text: &str, encoding: EncodingId, had_replacements: bool) -> Self {
        let text = normalize_newlines(text.strip_prefix('\u{feff}').unwrap_or(text));
        let lines: Vec<String> = text.split('\n').map(str::to_string).collect();
        let heading_hints = vec![false; lines.len()];
        DecodedDocument {
            text,
            lines,
            detected_encoding: encoding,
            had_replacements,
            heading_hints,
        }
    }

    /// Builds a document from paragraph lines, e.g. a docx body.
    pub fn from_lines(lines: Vec<String>, heading_hints: Vec<bool>, encoding: EncodingId) -> Self {
        debug_assert_eq!(lines.len(), heading_hints.len());
        DecodedDocument {
            text: lines.join("\n"),
            lines,
            detected_encoding: encoding,
            had_replacements: false,
            heading_hints,
        }
    }

    pub fn has_style_headings(&self) -> bool {
        self.heading_hints.iter().any(|h| *h)
    }
}

fn normalize_newlines(text: &str) -> String {
    if !text.contains('\r') {
        return text.to_string();
    }
    text.replace("\r\n", "\n").replace('\r', "\n")
}

/// Tuning for the single-byte part of the cascade.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CascadeConfig {
    /// Minimum share of letters that must be Cyrillic for a Cyrillic code
    /// page to be accepted.
    pub min_cyrillic_ratio: f64,
}

impl Default for CascadeConfig {
    fn default() -> Self {
        CascadeConfig {
            min_cyrillic_ratio: 0.30,
        }
    }
}

pub fn bom_encoding(bytes: &[u8]) -> Option<(EncodingId, &'static Encoding)> {
    match bytes {
        [0xEF, 0xBB, 0xBF, ..] => Some((EncodingId::Utf8, encoding_rs::UTF_8)),
        [0xFF, 0xFE, ..] => Some((EncodingId::Utf16, UTF_16LE)),
        [0xFE, 0xFF, ..] => Some((EncodingId::Utf16, UTF_16BE)),
        _ => None,
    }
}

pub fn detect_encoding(bytes: &[u8]) -> EncodingId {
    detect_encoding_with(bytes, &CascadeConfig::default())
}

pub fn detect_encoding_with(bytes: &[u8], config: &CascadeConfig) -> EncodingId {
    if let Some((id, _)) = bom_encoding(bytes) {
        return id;
    }
    if std::str::from_utf8(bytes).is_ok() {
        return EncodingId::Utf8;
    }
    // UTF-16 is only recognised by its BOM, handled above.

    let mut best: Option<(EncodingId, f64)> = None;
    for id in [EncodingId::Cp1251, EncodingId::Koi8R, EncodingId::Iso8859_5] {
        let Some(text) = decode_strict(bytes, id) else {
            continue;
        };
        let stats = LetterStats::of(&text);
        if stats.cyrillic_ratio() < config.min_cyrillic_ratio {
            continue;
        }
        let score = stats.russian_plausibility();
        // Strictly greater: earlier code pages win ties.
        if best.is_none_or(|(_, s)| score > s) {
            best = Some((id, score));
        }
    }
    if let Some((id, _)) = best {
        return id;
    }
    if decode_strict(bytes, EncodingId::MacRoman).is_some() {
        return EncodingId::MacRoman;
    }
    EncodingId::Ascii
}

/// Decodes `bytes` with a fixed encoding, never failing. Returns the text
/// and whether any byte had to be replaced.
pub fn decode_as(bytes: &[u8], encoding: EncodingId) -> (String, bool) {
    if let Some((bom_id, enc)) = bom_encoding(bytes) {
        if bom_id == encoding {
            let (text, had_errors) = enc.decode_with_bom_removal(bytes);
            return (text.into_owned(), had_errors);
        }
    }
    match encoding {
        EncodingId::Utf8 | EncodingId::DocxNative => {
            let (text, had_errors) = encoding_rs::UTF_8.decode_without_bom_handling(bytes);
            (text.into_owned(), had_errors)
        }
        // BOM-less UTF-16 is read as little-endian.
        EncodingId::Utf16 => {
            let (text, had_errors) = UTF_16LE.decode_without_bom_handling(bytes);
            (text.into_owned(), had_errors)
        }
        EncodingId::Ascii => {
            let mut replaced = false;
            let text = bytes
                .iter()
                .map(|&b| {
                    if b.is_ascii() {
                        b as char
                    } else {
                        replaced = true;
                        char::REPLACEMENT_CHARACTER
                    }
                })
                .collect();
            (text, replaced)
        }
        single => {
            let enc = single.single_byte_table().expect("single-byte encoding");
            let (text, had_errors) = enc.decode_without_bom_handling(bytes);
            (text.into_owned(), had_errors)
        }
    }
}

fn decode_strict(bytes: &[u8], encoding: EncodingId) -> Option<String> {
    match encoding {
        EncodingId::Ascii => bytes
            .is_ascii()
            .then(|| String::from_utf8_lossy(bytes).into_owned()),
        EncodingId::Utf8 => std::str::from_utf8(bytes).ok().map(str::to_string),
        other => {
            let enc = other.single_byte_table()?;
            enc.decode_without_bom_handling_and_without_replacement(bytes)
                .map(|c| c.into_owned())
        }
    }
}

/// Encodes text in one of the supported encodings. Returns `None` when the
/// text has characters the encoding cannot represent. UTF-16 output is
/// little-endian with a BOM, since detection relies on the mark.
pub fn encode_as(text: &str, encoding: EncodingId) -> Option<Vec<u8>> {
    match encoding {
        EncodingId::Utf8 | EncodingId::DocxNative => Some(text.as_bytes().to_vec()),
        EncodingId::Utf16 => {
            let mut out = vec![0xFF, 0xFE];
            for unit in text.encode_utf16() {
                out.extend_from_slice(&unit.to_le_bytes());
            }
            Some(out)
        }
        EncodingId::Ascii => text.is_ascii().then(|| text.as_bytes().to_vec()),
        single => {
            let enc = single.single_byte_table()?;
            let (bytes, _, unmappable) = enc.encode(text);
            (!unmappable).then(|| bytes.into_owned())
        }
    }
}

/// Decodes a plain-text document through the encoding cascade.
pub fn decode_text(doc: &RawDocument) -> Result<DecodedDocument> {
    decode_text_with(doc, &CascadeConfig::default())
}

pub fn decode_text_with(doc: &RawDocument, config: &CascadeConfig) -> Result<DecodedDocument> {
    match doc.resolved_format() {
        FormatHint::Txt | FormatHint::Auto => {}
        other => {
            return Err(Error::UnsupportedFormat(format!(
                "{other:?} input passed to the plain-text decoder"
            )))
        }
    }
    if doc.bytes.is_empty() {
        return Err(Error::EmptyDocument);
    }
    let encoding = detect_encoding_with(&doc.bytes, config);
    let (text, had_replacements) = decode_as(&doc.bytes, encoding);
    Ok(DecodedDocument::from_text(&text, encoding, had_replacements))
}

const WML_NS: &str = "http://schemas.openxmlformats.org/wordprocessingml/2006/main";

/// Extracts one line per paragraph from a `.docx` archive.
pub fn parse_docx(doc: &RawDocument) -> Result<DecodedDocument> {
    if doc.bytes.is_empty() {
        return Err(Error::EmptyDocument);
    }
    let mut archive = zip::ZipArchive::new(Cursor::new(&doc.bytes))
        .map_err(|e| Error::MalformedDocx(format!("not a zip archive: {e}")))?;

    let document_xml = read_zip_entry(&mut archive, "word/document.xml")?
        .ok_or_else(|| Error::MalformedDocx("missing word/document.xml".into()))?;
    let styles_xml = read_zip_entry(&mut archive, "word/styles.xml")?;

    let style_names = match styles_xml.as_deref() {
        Some(xml) => parse_style_names(xml)?,
        None => Vec::new(),
    };

    let tree = roxmltree::Document::parse(&document_xml)
        .map_err(|e| Error::MalformedDocx(format!("document.xml: {e}")))?;
    let body = tree
        .descendants()
        .find(|n| is_wml(n, "body"))
        .ok_or_else(|| Error::MalformedDocx("document has no body".into()))?;

    let mut lines = Vec::new();
    let mut hints = Vec::new();
    for para in body.descendants().filter(|n| is_wml(n, "p")) {
        // Paragraphs nested in text boxes belong to their host paragraph.
        if para.ancestors().skip(1).any(|a| is_wml(&a, "p")) {
            continue;
        }
        lines.push(paragraph_text(para));
        hints.push(paragraph_is_heading(para, &style_names));
    }
    if lines.is_empty() {
        return Err(Error::EmptyDocument);
    }
    Ok(DecodedDocument::from_lines(lines, hints, EncodingId::DocxNative))
}

/// Decodes any supported input, dispatching on the resolved format.
pub fn load_document(doc: &RawDocument) -> Result<DecodedDocument> {
    match doc.resolved_format() {
        FormatHint::Docx => parse_docx(doc),
        FormatHint::Pdf => Err(Error::UnsupportedFormat(
            "PDF is not read directly; extract the text to a .txt file first".into(),
        )),
        FormatHint::Txt | FormatHint::Auto => decode_text(doc),
    }
}

fn read_zip_entry<R: Read + std::io::Seek>(
    archive: &mut zip::ZipArchive<R>,
    name: &str,
) -> Result<Option<String>> {
    let mut entry = match archive.by_name(name) {
        Ok(e) => e,
        Err(zip::result::ZipError::FileNotFound) => return Ok(None),
        Err(e) => return Err(Error::MalformedDocx(format!("{name}: {e}"))),
    };
    let mut buf = Vec::new();
    entry
        .read_to_end(&mut buf)
        .map_err(|e| Error::MalformedDocx(format!("{name}: {e}")))?;
    let text = String::from_utf8(buf)
        .map_err(|_| Error::MalformedDocx(format!("{name} is not UTF-8")))?;
    Ok(Some(text))
}

fn is_wml(node: &roxmltree::Node, name: &str) -> bool {
    node.is_element()
        && node.tag_name().name() == name
        && node.tag_name().namespace() == Some(WML_NS)
}

fn wml_val<'a>(node: roxmltree::Node<'a, 'a>) -> Option<&'a str> {
    node.attribute((WML_NS, "val"))
}

/// `(style id, style name)` pairs from styles.xml.
fn parse_style_names(xml: &str) -> Result<Vec<(String, String)>> {
    let tree = roxmltree::Document::parse(xml)
        .map_err(|e| Error::MalformedDocx(format!("styles.xml: {e}")))?;
    let mut out = Vec::new();
    for style in tree.descendants().filter(|n| is_wml(n, "style")) {
        let Some(id) = style.attribute((WML_NS, "styleId")) else {
            continue;
        };
        let name = style
            .children()
            .find(|c| is_wml(c, "name"))
            .and_then(wml_val)
            .unwrap_or(id);
        out.push((id.to_string(), name.to_string()));
    }
    Ok(out)
}

fn paragraph_is_heading(para: roxmltree::Node, style_names: &[(String, String)]) -> bool {
    let Some(style_id) = para
        .children()
        .find(|c| is_wml(c, "pPr"))
        .and_then(|ppr| ppr.children().find(|c| is_wml(c, "pStyle")))
        .and_then(wml_val)
    else {
        return false;
    };
    let name = style_names
        .iter()
        .find(|(id, _)| id == style_id)
        .map(|(_, name)| name.as_str())
        .unwrap_or(style_id);
    contains_heading(style_id) || contains_heading(name)
}

fn contains_heading(s: &str) -> bool {
    s.to_lowercase().contains("heading")
}

fn paragraph_text(para: roxmltree::Node) -> String {
    let mut out = String::new();
    for node in para.descendants() {
        if !node.is_element() || node.tag_name().namespace() != Some(WML_NS) {
            continue;
        }
        match node.tag_name().name() {
            "t" => out.push_str(node.text().unwrap_or("")),
            "tab" => out.push('\t'),
            "br" | "cr" => out.push(' '),
            _ => {}
        }
    }
    // Paragraph boundaries are the only line boundaries.
    out.replace(['\n', '\r'], " ")
}

/// Letter statistics used to rank single-byte Cyrillic decodings.
struct LetterStats {
    letters: usize,
    cyrillic: usize,
    log_freq_sum: f64,
    case_anomalies: usize,
}

impl LetterStats {
    fn of(text: &str) -> Self {
        let mut stats = LetterStats {
            letters: 0,
            cyrillic: 0,
            log_freq_sum: 0.0,
            case_anomalies: 0,
        };
        let mut prev_lower_cyr = false;
        for c in text.chars() {
            if !c.is_alphabetic() {
                prev_lower_cyr = false;
                continue;
            }
            stats.letters += 1;
            if is_cyrillic(c) {
                stats.cyrillic += 1;
                stats.log_freq_sum += russian_log_freq(c);
                if c.is_uppercase() && prev_lower_cyr {
                    stats.case_anomalies += 1;
                }
                prev_lower_cyr = c.is_lowercase();
            } else {
                prev_lower_cyr = false;
            }
        }
        stats
    }

    fn cyrillic_ratio(&self) -> f64 {
        if self.letters == 0 {
            0.0
        } else {
            self.cyrillic as f64 / self.letters as f64
        }
    }

    /// Mean per-letter log-frequency with a penalty for upper-case letters
    /// following lower-case ones inside a word.
    fn russian_plausibility(&self) -> f64 {
        if self.cyrillic == 0 {
            return f64::NEG_INFINITY;
        }
        let n = self.cyrillic as f64;
        (self.log_freq_sum - 3.0 * self.case_anomalies as f64) / n
    }
}

fn is_cyrillic(c: char) -> bool {
    matches!(c, '\u{0400}'..='\u{04FF}')
}

/// log10 of the letter's relative frequency in Russian prose (percent).
/// Non-Russian Cyrillic letters get a floor value.
fn russian_log_freq(c: char) -> f64 {
    const FREQ: [(char, f64); 33] = [
        ('о', 10.97),
        ('е', 8.45),
        ('а', 8.01),
        ('и', 7.35),
        ('н', 6.70),
        ('т', 6.26),
        ('с', 5.47),
        ('р', 4.73),
        ('в', 4.54),
        ('л', 4.40),
        ('к', 3.49),
        ('м', 3.21),
        ('д', 2.98),
        ('п', 2.81),
        ('у', 2.62),
        ('я', 2.01),
        ('ы', 1.90),
        ('ь', 1.74),
        ('г', 1.70),
        ('з', 1.65),
        ('б', 1.59),
        ('ч', 1.44),
        ('й', 1.21),
        ('х', 0.97),
        ('ж', 0.94),
        ('ш', 0.73),
        ('ю', 0.64),
        ('ц', 0.48),
        ('щ', 0.36),
        ('э', 0.32),
        ('ф', 0.26),
        ('ъ', 0.04),
        ('ё', 0.04),
    ];
    let lower = c.to_lowercase().next().unwrap_or(c);
    FREQ.iter()
        .find(|(l, _)| *l == lower)
        .map(|(_, f)| f.log10())
        .unwrap_or(-3.0)
}
