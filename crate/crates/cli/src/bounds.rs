//! `bounds`: analytic time-to-threshold accounting on a geometric spectrum.
//! `--golden` evaluates the fixed reference configuration and reports
//! relative deltas against the published reference values; otherwise a
//! band-count by spatial-stride sweep is written as CSV.

use std::fs;

use clap::Args;
use serde_json::json;

use spectrain_core::analysis::{
    condition_numbers, geometric_spectrum, step_cost, two_stage_bound, CostModel, CurvatureSource,
};
use spectrain_core::{Error, Result};

use crate::manifest::write_manifest;
use crate::{parse_list, Ctx};

/// Reference values for the golden configuration (rho 0.95, 200 bands,
/// ridge 0.01, K 20, delta0 1, delta1 0.005, eps 1e-3, unit full-band
/// step cost).
const REFERENCE: [(&str, f64); 7] = [
    ("kappa_n", 100.6),
    ("kappa_k", 2.60),
    ("t1", 13.8),
    ("t2", 162.0),
    ("t_ours", 163.4),
    ("t_base", 694.0),
    ("speedup", 4.25),
];

#[derive(Args)]
pub struct BoundsArgs {
    /// Evaluate the reference configuration and report deltas.
    #[arg(long)]
    pub golden: bool,
    /// Geometric spectrum ratio.
    #[arg(long, default_value_t = 0.95)]
    pub rho: f64,
    /// Full band count N.
    #[arg(long, default_value_t = 200)]
    pub bands: usize,
    /// Absolute ridge strength.
    #[arg(long, default_value_t = 0.01)]
    pub ridge: f64,
    /// Initial loss gap.
    #[arg(long, default_value_t = 1.0)]
    pub delta0: f64,
    /// Handover gap between the reduced and full stages.
    #[arg(long, default_value_t = 0.005)]
    pub delta1: f64,
    /// Target gap.
    #[arg(long, default_value_t = 1e-3)]
    pub eps: f64,
    /// Reduced band count K (golden mode).
    #[arg(long, default_value_t = 20)]
    pub k: usize,
    /// Band counts swept in sweep mode.
    #[arg(long, default_value = "10,20,40,80")]
    pub k_grid: String,
    /// Spatial strides composed into stage 1 in sweep mode.
    #[arg(long, default_value = "1,2,4")]
    pub stride_grid: String,
    /// Output stem: writes <stem>.json (and <stem>.csv in sweep mode).
    #[arg(long, default_value = "bounds")]
    pub name: String,
}

pub fn run(args: &BoundsArgs, ctx: &Ctx) -> Result<()> {
    let lambda = geometric_spectrum(args.rho, args.bands)?;
    let cost = CostModel::normalized_to(args.bands)?;
    let config = json!({
        "rho": args.rho,
        "bands": args.bands,
        "ridge": args.ridge,
        "delta0": args.delta0,
        "delta1": args.delta1,
        "eps": args.eps,
    });

    if args.golden {
        let rep = condition_numbers(&lambda, args.ridge, 1.0, args.k, CurvatureSource::SquaredLoss)?;
        let bound = two_stage_bound(
            &rep,
            &cost,
            args.bands,
            args.k,
            args.delta0,
            args.delta1,
            args.eps,
        )?;
        let computed = [
            ("kappa_n", rep.kappa_full),
            ("kappa_k", rep.kappa_k),
            ("t1", bound.t1),
            ("t2", bound.t2),
            ("t_ours", bound.t_ours),
            ("t_base", bound.t_base),
            ("speedup", bound.speedup),
        ];
        let mut computed_obj = serde_json::Map::new();
        let mut reference_obj = serde_json::Map::new();
        let mut delta_obj = serde_json::Map::new();
        let mut csv = String::from("quantity,computed,reference,relative_delta\n");
        for ((name, got), (_, want)) in computed.iter().zip(REFERENCE.iter()) {
            let delta = (got - want).abs() / want.abs();
            computed_obj.insert((*name).into(), json!(got));
            reference_obj.insert((*name).into(), json!(want));
            delta_obj.insert((*name).into(), json!(delta));
            csv.push_str(&format!("{name},{got},{want},{delta}\n"));
        }
        computed_obj.insert("win_margin".into(), json!(bound.win_margin));
        let report = json!({
            "mode": "golden",
            "config": config,
            "k": args.k,
            "computed": computed_obj,
            "reference": reference_obj,
            "relative_delta": delta_obj,
        });
        let json_path = ctx.out_dir.join(format!("{}.json", args.name));
        fs::write(&json_path, serde_json::to_string_pretty(&report)?)?;
        write_manifest("bounds", ctx, &[], &[&json_path])?;
        ctx.emit(&report, &csv);
        return Ok(());
    }

    let k_grid = parse_list::<usize>(&args.k_grid, "band count")?;
    let stride_grid = parse_list::<usize>(&args.stride_grid, "stride")?;
    if stride_grid.iter().any(|&d| d == 0) {
        return Err(Error::argument("strides must be >= 1"));
    }

    let sc_n = step_cost(&cost, args.bands);
    let mut rows = Vec::new();
    let mut csv = String::from("K,d,t1,t2,t_ours,t_base,speedup,win_margin\n");
    for &k in &k_grid {
        let rep = condition_numbers(&lambda, args.ridge, 1.0, k, CurvatureSource::SquaredLoss)?;
        let bound = two_stage_bound(
            &rep,
            &cost,
            args.bands,
            k,
            args.delta0,
            args.delta1,
            args.eps,
        )?;
        let sc_k = step_cost(&cost, k);
        for &d in &stride_grid {
            // A stride-d stage 1 touches 1/d^2 of the pixels, scaling only
            // its per-step cost; contraction counts are grid-independent.
            let area = (d * d) as f64;
            let t_ours = bound.t1 * sc_k / area + bound.t2 * sc_n;
            let win_margin = (bound.t1 / rep.kappa_full) * (sc_k / (area * sc_n))
                + (args.delta1 / args.delta0).ln();
            let speedup = bound.t_base / t_ours;
            rows.push(json!({
                "k": k,
                "d": d,
                "t1": bound.t1,
                "t2": bound.t2,
                "t_ours": t_ours,
                "t_base": bound.t_base,
                "speedup": speedup,
                "win_margin": win_margin,
            }));
            csv.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                k, d, bound.t1, bound.t2, t_ours, bound.t_base, speedup, win_margin
            ));
        }
    }

    let report = json!({ "mode": "sweep", "config": config, "rows": rows });
    let json_path = ctx.out_dir.join(format!("{}.json", args.name));
    fs::write(&json_path, serde_json::to_string_pretty(&report)?)?;
    let csv_path = ctx.out_dir.join(format!("{}.csv", args.name));
    fs::write(&csv_path, &csv)?;
    write_manifest("bounds", ctx, &[], &[&json_path, &csv_path])?;
    ctx.emit(&report, &csv);
    Ok(())
}
