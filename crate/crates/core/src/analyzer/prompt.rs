use serde_json::{Deserializer, Map, Value};

use super::SceneVerdict;
use crate::error::{Error, Result};
use crate::types::{Category, Confidence, Rating, VerdictSource};

/// Instruction block sent ahead of every scene window. The scene text goes
/// directly after it.
pub const PROMPT_PREFIX: &str = include_str!("../../data/system_prompt.txt");

/// Builds the full prompt for one window of scene text.
///
/// The text is appended after the fixed prefix, so placeholder-looking text
/// inside a scene is never mistaken for the slot.
pub fn build_prompt(scene_text: &str) -> String {
    let mut prompt = String::with_capacity(PROMPT_PREFIX.len() + scene_text.len());
    prompt.push_str(PROMPT_PREFIX);
    prompt.push_str(scene_text);
    prompt
}

/// Extracts the first JSON object carrying a `rating` key from a raw
/// completion. Text around the object is ignored.
pub fn parse_verdict(raw: &str, scene_index: usize) -> Result<SceneVerdict> {
    let fail = |reason: String| Error::VerdictParse {
        reason,
        raw: raw.to_string(),
    };

    let obj = first_verdict_object(raw).ok_or_else(|| fail("no JSON object with a rating".into()))?;

    let rating = match obj.get("rating") {
        Some(Value::String(s)) => s.parse::<Rating>().map_err(|e| fail(e.to_string()))?,
        Some(Value::Number(n)) => n
            .as_u64()
            .and_then(|n| Rating::ALL.into_iter().find(|r| r.display().trim_end_matches('+') == n.to_string()))
            .ok_or_else(|| fail(format!("unknown rating {n}")))?,
        other => return Err(fail(format!("rating must be a string, got {other:?}"))),
    };

    let label = match obj.get("label") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Category::parse_label(s).map_err(|e| fail(e.to_string()))?,
        Some(other) => return Err(fail(format!("label must be a string, got {other}"))),
    };
    let label = if rating == Rating::R0 { None } else { label };

    let mut why = match obj.get("why") {
        Some(Value::String(s)) => s.trim().to_string(),
        _ => String::new(),
    };
    if why.is_empty() && rating > Rating::R0 {
        why = format!("Rated {rating} by the model without an explanation");
    }

    Ok(SceneVerdict {
        scene_index,
        rating,
        label,
        why,
        anchors: Vec::new(),
        confidence: Confidence::Medium,
        source: VerdictSource::Model,
    })
}

fn first_verdict_object(raw: &str) -> Option<Map<String, Value>> {
    raw.match_indices('{').find_map(|(pos, _)| {
        let mut stream = Deserializer::from_str(&raw[pos..]).into_iter::<Value>();
        match stream.next() {
            Some(Ok(Value::Object(map))) if map.contains_key("rating") => Some(map),
            _ => None,
        }
    })
}
