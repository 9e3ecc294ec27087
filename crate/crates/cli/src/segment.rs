use scriptrate_core::ingest::{load_document, RawDocument};
use scriptrate_core::segmenter::{boundaries, estimate_tokens, segment};
use serde_json::json;

use crate::args::{Format, SegmentArgs};
use crate::CliError;

pub fn run(args: &SegmentArgs) -> Result<(), CliError> {
    let path = &args.input;
    let bytes = std::fs::read(path).map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    let filename = path.file_name().and_then(|s| s.to_str()).unwrap_or_default();
    let doc = load_document(&RawDocument::new(bytes, filename))
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let scenes = segment(&doc);

    if args.boundaries {
        let b: Vec<String> = boundaries(&scenes).iter().map(usize::to_string).collect();
        println!("{}", b.join(","));
        return Ok(());
    }
    match args.format {
        Format::Lines => {
            for s in &scenes {
                println!("{}\t{}\t{}\t{}", s.index, s.span.0, s.span.1, s.heading);
            }
        }
        Format::Json => {
            let v: Vec<_> = scenes
                .iter()
                .map(|s| json!({"index": s.index, "heading": s.heading, "span": [s.span.0, s.span.1]}))
                .collect();
            println!("{}", serde_json::to_string_pretty(&v).expect("serializable"));
        }
        Format::Table => {
            println!("encoding: {}", doc.detected_encoding.as_str());
            println!("{:>5}  {:>11}  {:>6}  heading", "scene", "lines", "tokens");
            for s in &scenes {
                let heading = if s.heading.is_empty() { "(preamble)" } else { &s.heading };
                let lines = format!("{}-{}", s.span.0, s.span.1);
                println!("{:>5}  {:>11}  {:>6}  {heading}", s.index, lines, estimate_tokens(&s.text()));
            }
        }
    }
    Ok(())
}
