//! `analyze`: eigen-spectrum, cumulative explained variance, retained-band
//! table, and per-band cost curves, from a cube file or a closed-form
//! geometric spectrum.

use std::fs;
use std::path::PathBuf;

use clap::Args;
use serde_json::json;

use spectrain_core::analysis::{cost_factor, geometric_spectrum, step_cost, CostModel};
use spectrain_core::cube::{flatten, load_cube};
use spectrain_core::spectral::fit_pca;
use spectrain_core::{Error, Result};

use crate::manifest::write_manifest;
use crate::Ctx;

const ETAS: [f64; 3] = [0.90, 0.95, 0.99];

#[derive(Args)]
pub struct AnalyzeArgs {
    /// Cube file to fit; mutually exclusive with --geometric.
    #[arg(long, conflicts_with = "geometric")]
    pub cube: Option<PathBuf>,
    /// Closed-form geometric spectrum ratio rho (requires --bands).
    #[arg(long, requires = "bands")]
    pub geometric: Option<f64>,
    /// Band count for --geometric.
    #[arg(long)]
    pub bands: Option<usize>,
    /// Output stem: writes <stem>.csv and <stem>.json.
    #[arg(long, default_value = "analyze")]
    pub name: String,
}

pub fn run(args: &AnalyzeArgs, ctx: &Ctx) -> Result<()> {
    let (lambda, source, inputs): (Vec<f64>, serde_json::Value, Vec<PathBuf>) =
        match (&args.cube, args.geometric) {
            (Some(path), None) => {
                let cube = load_cube(path)?;
                let basis = fit_pca(&flatten(&cube))?;
                let src = json!({
                    "kind": "cube",
                    "path": path.display().to_string(),
                    "pixels": cube.num_pixels(),
                    "bands": cube.d,
                });
                (basis.eigvals.to_vec(), src, vec![path.clone()])
            }
            (None, Some(rho)) => {
                let d = args.bands.expect("clap enforces --bands");
                let src = json!({ "kind": "geometric", "rho": rho, "bands": d });
                (geometric_spectrum(rho, d)?, src, vec![])
            }
            _ => {
                return Err(Error::argument(
                    "pass exactly one of --cube or --geometric RHO --bands D",
                ))
            }
        };

    let d = lambda.len();
    // Cumulative sums once; the final ratio is then exactly 1.
    let mut cum = Vec::with_capacity(d);
    let mut acc = 0.0;
    for &l in &lambda {
        acc += l;
        cum.push(acc);
    }
    let total = *cum.last().ok_or_else(|| Error::argument("empty spectrum"))?;
    if !(total > 0.0) {
        return Err(Error::numeric("spectrum has no variance"));
    }

    let cost = CostModel::per_band();
    let mut csv = String::from(
        "k,eigenvalue,cumulative_variance,step_cost,cost_factor_stride1,compression_ratio\n",
    );
    for k in 1..=d {
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            k,
            lambda[k - 1],
            cum[k - 1] / total,
            step_cost(&cost, k),
            cost_factor(k, d, 1)?,
            d as f64 / k as f64,
        ));
    }
    let csv_path = ctx.out_dir.join(format!("{}.csv", args.name));
    fs::write(&csv_path, &csv)?;

    let select_rows: Vec<serde_json::Value> = ETAS
        .iter()
        .map(|&eta| {
            let k = cum
                .iter()
                .position(|&c| c >= eta * total)
                .map_or(d, |p| p + 1);
            json!({ "eta": eta, "k": k })
        })
        .collect();

    let report = json!({
        "source": source,
        "bands": d,
        "select_k": select_rows,
        "spectrum_csv": csv_path.display().to_string(),
    });
    let json_path = ctx.out_dir.join(format!("{}.json", args.name));
    fs::write(&json_path, serde_json::to_string_pretty(&report)?)?;

    let input_refs: Vec<&std::path::Path> = inputs.iter().map(|p| p.as_path()).collect();
    write_manifest("analyze", ctx, &input_refs, &[&csv_path, &json_path])?;

    let mut table = String::from("eta,k\n");
    for row in &select_rows {
        table.push_str(&format!("{},{}\n", row["eta"], row["k"]));
    }
    ctx.emit(&report, &table);
    Ok(())
}
