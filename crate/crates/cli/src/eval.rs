use std::path::Path;

use scriptrate_core::evalkit::{
    bootstrap_ci, join_truth, parse_boundaries, parse_predictions, parse_truth, rating_eval,
    seg_boundary_prf_tolerant, Metric,
};
use scriptrate_core::Rating;
use serde_json::json;

use crate::args::{EvalArgs, Format};
use crate::CliError;

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))
}

fn data_err(path: &Path) -> impl Fn(scriptrate_core::Error) -> CliError + '_ {
    move |e| CliError::Data(format!("{}: {e}", path.display()))
}

pub fn run(args: &EvalArgs) -> Result<(), CliError> {
    if let Some(truth) = &args.seg_truth {
        return run_segmentation(args, truth);
    }
    if args.bootstrap == Some(0) {
        return Err(CliError::Config("--bootstrap needs at least one iteration".into()));
    }
    let rows = parse_predictions(&read(&args.predictions)?).map_err(data_err(&args.predictions))?;
    let pairs: Vec<(Rating, Rating)> = match &args.truth {
        Some(t) => {
            let truth = parse_truth(&read(t)?).map_err(data_err(t))?;
            join_truth(&rows, &truth).map_err(|e| CliError::Data(e.to_string()))?
        }
        None => rows.iter().map(|r| (r.truth, r.predicted)).collect(),
    };
    let (matrix, summary) = rating_eval(&pairs).map_err(data_err(&args.predictions))?;
    let ci = match args.bootstrap {
        Some(n) => Some((
            bootstrap_ci(&pairs, Metric::Accuracy, n, args.seed).map_err(|e| CliError::Data(e.to_string()))?,
            bootstrap_ci(&pairs, Metric::Mae, n, args.seed).map_err(|e| CliError::Data(e.to_string()))?,
        )),
        None => None,
    };

    match args.format {
        Format::Json => {
            let mut v = json!({
                "total": summary.total,
                "accuracy": summary.accuracy,
                "within_one": summary.within_one,
                "mae": summary.mae,
                "confusion": matrix.counts,
                "per_class": summary.per_class,
            });
            if let Some((acc, mae)) = ci {
                v["bootstrap"] = json!({
                    "iterations": args.bootstrap,
                    "seed": args.seed,
                    "accuracy_ci": [acc.0, acc.1],
                    "mae_ci": [mae.0, mae.1],
                });
            }
            println!("{}", serde_json::to_string_pretty(&v).expect("serializable"));
        }
        Format::Lines => {
            println!("accuracy\t{:.6}", summary.accuracy);
            println!("within_one\t{:.6}", summary.within_one);
            println!("mae\t{:.6}", summary.mae);
            if let Some((acc, mae)) = ci {
                println!("accuracy_ci\t{:.6}\t{:.6}", acc.0, acc.1);
                println!("mae_ci\t{:.6}\t{:.6}", mae.0, mae.1);
            }
        }
        Format::Table => {
            let exact = (summary.accuracy * summary.total as f64).round() as usize;
            println!("items        {}", summary.total);
            println!("exact match  {exact}/{} ({:.1}%)", summary.total, 100.0 * summary.accuracy);
            println!("within ±1    {:.1}%", 100.0 * summary.within_one);
            println!("MAE          {:.3}", summary.mae);
            if let Some((acc, mae)) = ci {
                let n = args.bootstrap.unwrap_or_default();
                println!("accuracy 95% CI  [{:.3}, {:.3}]  ({n} resamples, seed {})", acc.0, acc.1, args.seed);
                println!("MAE 95% CI       [{:.3}, {:.3}]", mae.0, mae.1);
            }
            println!();
            print!("{:>10}", "true\\pred");
            for r in Rating::ALL {
                print!("{:>6}", r.to_string());
            }
            println!();
            for t in Rating::ALL {
                print!("{:>10}", t.to_string());
                for p in Rating::ALL {
                    print!("{:>6}", matrix.counts[t.level()][p.level()]);
                }
                println!();
            }
        }
    }
    Ok(())
}

fn run_segmentation(args: &EvalArgs, truth_path: &Path) -> Result<(), CliError> {
    let predicted = parse_boundaries(&read(&args.predictions)?).map_err(data_err(&args.predictions))?;
    let truth = parse_boundaries(&read(truth_path)?).map_err(data_err(truth_path))?;
    let prf = seg_boundary_prf_tolerant(&predicted, &truth, args.tolerance);
    match args.format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&prf).expect("serializable")),
        Format::Lines => println!("{:.6}\t{:.6}\t{:.6}", prf.precision, prf.recall, prf.f1),
        Format::Table => {
            println!("boundaries   predicted {} / true {}", predicted.len(), truth.len());
            println!("tolerance    {} lines", args.tolerance);
            println!("precision    {:.3}", prf.precision);
            println!("recall       {:.3}", prf.recall);
            println!("F1           {:.3}", prf.f1);
        }
    }
    Ok(())
}
