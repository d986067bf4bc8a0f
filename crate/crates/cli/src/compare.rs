//! `compare`: match two training traces at shared loss-gap thresholds and
//! report the simulated-cost speedup of the first over the second, plus the
//! validation-accuracy delta when summaries are supplied.

use std::fs;
use std::path::PathBuf;

use clap::Args;
use serde_json::json;

use spectrain_core::trainer::TrainTrace;
use spectrain_core::Result;

use crate::manifest::write_manifest;
use crate::{parse_list, Ctx};

#[derive(Args)]
pub struct CompareArgs {
    /// Trace under evaluation (numerator of the cost ratio).
    pub trace_a: PathBuf,
    /// Reference trace (denominator of the cost ratio).
    pub trace_b: PathBuf,
    /// Summary file accompanying trace A (enables the accuracy delta).
    #[arg(long)]
    pub summary_a: Option<PathBuf>,
    /// Summary file accompanying trace B.
    #[arg(long)]
    pub summary_b: Option<PathBuf>,
    /// Loss-gap thresholds to match the traces at.
    #[arg(long, default_value = "1e-2,1e-3,1e-4")]
    pub thresholds: String,
    /// Output stem: writes <stem>.json.
    #[arg(long, default_value = "compare")]
    pub name: String,
}

fn read_accuracy(path: &PathBuf) -> Result<Option<f64>> {
    let value: serde_json::Value = serde_json::from_str(&fs::read_to_string(path)?)?;
    Ok(value["final_val_accuracy"].as_f64())
}

pub fn run(args: &CompareArgs, ctx: &Ctx) -> Result<()> {
    let trace_a = TrainTrace::from_csv(&fs::read_to_string(&args.trace_a)?)?;
    let trace_b = TrainTrace::from_csv(&fs::read_to_string(&args.trace_b)?)?;
    let thresholds = parse_list::<f64>(&args.thresholds, "threshold")?;

    let mut rows = Vec::with_capacity(thresholds.len());
    let mut csv = String::from("eps,cost_a,cost_b,speedup\n");
    for &eps in &thresholds {
        let cost_a = trace_a.cost_to_gap(eps);
        let cost_b = trace_b.cost_to_gap(eps);
        // Speedup of A over B: how many times more simulated compute the
        // reference spends to reach the same gap.
        let speedup = match (cost_a, cost_b) {
            (Some(a), Some(b)) if a > 0.0 => Some(b / a),
            _ => None,
        };
        rows.push(json!({
            "eps": eps,
            "cost_a": cost_a,
            "cost_b": cost_b,
            "reached_a": cost_a.is_some(),
            "reached_b": cost_b.is_some(),
            "speedup": speedup,
        }));
        let fmt = |v: Option<f64>| v.map_or_else(|| "not-reached".into(), |x| format!("{x}"));
        csv.push_str(&format!(
            "{},{},{},{}\n",
            eps,
            fmt(cost_a),
            fmt(cost_b),
            fmt(speedup)
        ));
    }

    let accuracy_a = match &args.summary_a {
        Some(p) => read_accuracy(p)?,
        None => None,
    };
    let accuracy_b = match &args.summary_b {
        Some(p) => read_accuracy(p)?,
        None => None,
    };
    let accuracy_delta = match (accuracy_a, accuracy_b) {
        (Some(a), Some(b)) => Some(a - b),
        _ => None,
    };

    let report = json!({
        "trace_a": args.trace_a.display().to_string(),
        "trace_b": args.trace_b.display().to_string(),
        "rows": rows,
        "accuracy_a": accuracy_a,
        "accuracy_b": accuracy_b,
        "accuracy_delta": accuracy_delta,
    });
    let report_path = ctx.out_dir.join(format!("{}.json", args.name));
    fs::write(&report_path, serde_json::to_string_pretty(&report)?)?;

    let mut inputs: Vec<&std::path::Path> = vec![&args.trace_a, &args.trace_b];
    if let Some(p) = &args.summary_a {
        inputs.push(p);
    }
    if let Some(p) = &args.summary_b {
        inputs.push(p);
    }
    write_manifest("compare", ctx, &inputs, &[&report_path])?;

    ctx.emit(&report, &csv);
    Ok(())
}
