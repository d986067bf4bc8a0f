//! `train`: execute the convex backbone over a curriculum plan or as the
//! full-resolution, full-spectrum baseline, writing a step trace and a
//! summary with cost-to-threshold readouts.

use std::fs;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde_json::json;

use spectrain_core::analysis::CostModel;
use spectrain_core::schedule::{LrSchedule, SchedulePlan};
use spectrain_core::trainer::{
    fit_scene_basis, run_baseline, run_spectral_train, ConvexModel, ModelKind, Optimizer,
    TrainConfig,
};
use spectrain_core::{Error, Result};

use crate::manifest::write_manifest;
use crate::{parse_list, Ctx};

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModelFlag {
    Ridge,
    Logistic,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum OptimizerFlag {
    Gd,
    Sgd,
}

#[derive(Args)]
pub struct TrainArgs {
    /// Scene cube to train on.
    #[arg(long)]
    pub cube: PathBuf,
    /// Label sidecar; defaults to the cube path with .labels.json.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Curriculum plan produced by `plan`.
    #[arg(long, conflicts_with = "baseline")]
    pub plan: Option<PathBuf>,
    /// Train the full-resolution, full-spectrum baseline instead.
    #[arg(long, requires = "t0")]
    pub baseline: bool,
    /// Baseline epoch budget (baseline mode only).
    #[arg(long)]
    pub t0: Option<usize>,
    /// Convex backbone.
    #[arg(long, value_enum, default_value_t = ModelFlag::Ridge)]
    pub model: ModelFlag,
    /// Ridge strength relative to the leading eigenvalue.
    #[arg(long, default_value_t = 0.15)]
    pub ridge_rel: f64,
    /// Absolute ridge strength; overrides --ridge-rel.
    #[arg(long)]
    pub ridge_abs: Option<f64>,
    /// Learning rate (constant unless --cosine).
    #[arg(long, default_value_t = 0.1)]
    pub lr: f64,
    /// Warmup plus cosine-decay schedule instead of a constant rate.
    #[arg(long)]
    pub cosine: bool,
    #[arg(long, value_enum, default_value_t = OptimizerFlag::Gd)]
    pub optimizer: OptimizerFlag,
    /// Minibatch size (sgd only).
    #[arg(long, default_value_t = 64)]
    pub batch_size: usize,
    /// Loss-gap thresholds reported in the summary.
    #[arg(long, default_value = "1e-2,1e-3,1e-4")]
    pub gap_thresholds: String,
    /// Output stem: writes <stem>.trace.csv and <stem>.summary.json.
    #[arg(long, default_value = "run")]
    pub name: String,
}

pub fn run(args: &TrainArgs, ctx: &Ctx) -> Result<()> {
    let (scene, labels_path) = crate::load_scene(&args.cube, args.labels.as_deref())?;
    let mut inputs: Vec<PathBuf> = vec![args.cube.clone(), labels_path];

    let plan = match &args.plan {
        Some(path) => {
            inputs.push(path.clone());
            Some(SchedulePlan::from_json(&fs::read_to_string(path)?)?)
        }
        None => None,
    };
    if plan.is_none() && !args.baseline {
        return Err(Error::argument("pass --plan FILE or --baseline --t0 N"));
    }

    let kind = match args.model {
        ModelFlag::Ridge => ModelKind::Ridge,
        ModelFlag::Logistic => ModelKind::Logistic,
    };
    let optimizer = match args.optimizer {
        OptimizerFlag::Gd => Optimizer::Gd,
        OptimizerFlag::Sgd => Optimizer::Sgd,
    };
    let thresholds = parse_list::<f64>(&args.gap_thresholds, "gap threshold")?;

    let ridge = match args.ridge_abs {
        Some(r) => r,
        None => {
            let (_, basis) = fit_scene_basis(&scene, ctx.seed)?;
            args.ridge_rel * basis.eigvals[0]
        }
    };

    let total_epochs = match &plan {
        Some(p) => p.t.max(1),
        None => args.t0.expect("clap enforces --t0 with --baseline").max(1),
    };
    let lr_schedule = if args.cosine {
        LrSchedule::standard(total_epochs)?
    } else {
        LrSchedule::constant(args.lr, total_epochs)?
    };
    let config = TrainConfig::new(
        args.batch_size,
        ctx.seed,
        optimizer,
        lr_schedule,
        CostModel::per_band(),
    )?;

    let (mode, trace) = match &plan {
        Some(p) => {
            let model = ConvexModel::new(kind, p.stages[0].k, ridge)?;
            ("curriculum", run_spectral_train(p, &scene, &model, &config)?)
        }
        None => {
            let t0 = args.t0.expect("clap enforces --t0 with --baseline");
            let model = ConvexModel::new(kind, scene.cube.d, ridge)?;
            ("baseline", run_baseline(&scene, &model, t0, &config)?)
        }
    };

    let trace_path = ctx.out_dir.join(format!("{}.trace.csv", args.name));
    fs::write(&trace_path, trace.to_csv())?;

    let gap_rows: Vec<serde_json::Value> = thresholds
        .iter()
        .map(|&eps| {
            json!({
                "eps": eps,
                "steps": trace.steps_to_gap(eps),
                "sim_cost": trace.cost_to_gap(eps),
            })
        })
        .collect();
    let summary = json!({
        "mode": mode,
        "model": format!("{:?}", kind).to_lowercase(),
        "ridge": ridge,
        "seed": ctx.seed,
        "final_val_accuracy": trace.final_val_accuracy,
        "total_sim_cost": trace.total_sim_cost(),
        "total_steps": trace.rows.len(),
        "gap_thresholds": gap_rows,
        "trace_csv": trace_path.display().to_string(),
    });
    let summary_path = ctx.out_dir.join(format!("{}.summary.json", args.name));
    fs::write(&summary_path, serde_json::to_string_pretty(&summary)?)?;

    let input_refs: Vec<&std::path::Path> = inputs.iter().map(|p| p.as_path()).collect();
    write_manifest("train", ctx, &input_refs, &[&trace_path, &summary_path])?;

    let mut table = String::from("eps,steps,sim_cost\n");
    for row in &gap_rows {
        table.push_str(&format!(
            "{},{},{}\n",
            row["eps"], row["steps"], row["sim_cost"]
        ));
    }
    ctx.emit(&summary, &table);
    Ok(())
}
