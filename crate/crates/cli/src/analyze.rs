use std::path::{Path, PathBuf};
use std::time::Instant;

use scriptrate_core::aggregator::new_file_id;
use scriptrate_core::ingest::RawDocument;
use scriptrate_core::pipeline::{Pipeline, PipelineConfig};
use serde_json::json;

use crate::args::{AnalyzeArgs, Format};
use crate::CliError;

struct Row {
    file: String,
    rating: String,
    problematic: usize,
    scenes: usize,
    elapsed: f64,
    degraded: bool,
    report: PathBuf,
}

fn report_path(input: &Path, out: Option<&Path>, many: bool) -> PathBuf {
    let stem = input.file_stem().and_then(|s| s.to_str()).unwrap_or("script");
    let name = format!("{stem}.report.json");
    match out {
        Some(o) if many || o.is_dir() => o.join(name),
        Some(o) => o.to_path_buf(),
        None => input.with_file_name(name),
    }
}

pub fn run(args: &AnalyzeArgs) -> Result<(), CliError> {
    let analyzer = args.analyzer.build()?;
    let pipeline = Pipeline::new(
        analyzer,
        PipelineConfig {
            parallelism: args.analyzer.parallelism(),
            ..PipelineConfig::default()
        },
    );
    let many = args.inputs.len() > 1;
    if let (Some(out), true) = (&args.out, many) {
        std::fs::create_dir_all(out)
            .map_err(|e| CliError::Config(format!("cannot create {}: {e}", out.display())))?;
    }

    let mut rows = Vec::new();
    let mut failed = 0;
    for input in &args.inputs {
        match analyze_one(&pipeline, input, report_path(input, args.out.as_deref(), many)) {
            Ok(row) => rows.push(row),
            Err(msg) => {
                eprintln!("{}: {msg}", input.display());
                failed += 1;
            }
        }
    }
    print_rows(&rows, args.format);
    if failed > 0 {
        return Err(CliError::Data(format!("{failed} of {} inputs failed", args.inputs.len())));
    }
    Ok(())
}

fn analyze_one(pipeline: &Pipeline, input: &Path, out: PathBuf) -> Result<Row, String> {
    let bytes = std::fs::read(input).map_err(|e| format!("cannot read: {e}"))?;
    let filename = input.file_name().and_then(|s| s.to_str()).unwrap_or_default();
    let start = Instant::now();
    let analysis = pipeline
        .run(&RawDocument::new(bytes, filename), new_file_id())
        .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed().as_secs_f64();
    for (scene, why) in &analysis.failures {
        eprintln!("{}: scene {scene} fell back to rules: {why}", input.display());
    }
    let report = &analysis.report;
    std::fs::write(&out, report.to_json()).map_err(|e| format!("cannot write {}: {e}", out.display()))?;
    Ok(Row {
        file: input.display().to_string(),
        rating: report.overall_rating.to_string(),
        problematic: report.statistics.problematic_sentences,
        scenes: report.statistics.total_sentences,
        elapsed,
        degraded: report.degraded,
        report: out,
    })
}

fn rate(r: &Row) -> f64 {
    if r.elapsed > 0.0 {
        r.scenes as f64 / r.elapsed
    } else {
        0.0
    }
}

fn print_rows(rows: &[Row], format: Format) {
    match format {
        Format::Json => {
            let v: Vec<_> = rows
                .iter()
                .map(|r| {
                    json!({
                        "file": r.file,
                        "overall_rating": r.rating,
                        "problematic": r.problematic,
                        "scenes": r.scenes,
                        "elapsed_s": r.elapsed,
                        "scenes_per_s": rate(r),
                        "degraded": r.degraded,
                        "report": r.report.display().to_string(),
                    })
                })
                .collect();
            println!("{}", serde_json::to_string_pretty(&v).expect("serializable"));
        }
        Format::Lines => {
            for r in rows {
                println!(
                    "{}\t{}\t{}\t{}\t{:.3}\t{:.1}",
                    r.file, r.rating, r.problematic, r.scenes, r.elapsed, rate(r)
                );
            }
        }
        Format::Table => {
            let w = rows.iter().map(|r| r.file.len()).max().unwrap_or(4).max(4);
            println!("{:<w$}  {:>6}  {:>11}  {:>6}  {:>9}  {:>9}", "file", "rating", "problematic", "scenes", "elapsed_s", "scenes/s");
            for r in rows {
                let flag = if r.degraded { "  (degraded)" } else { "" };
                println!(
                    "{:<w$}  {:>6}  {:>11}  {:>6}  {:>9.3}  {:>9.1}{flag}",
                    r.file, r.rating, r.problematic, r.scenes, r.elapsed, rate(r)
                );
            }
        }
    }
}
