//! `plan`: assemble a curriculum plan file. Geometry (native resolution,
//! band count, starting band count) is either given explicitly or inferred
//! from a scene; with --search, stages holding several resolution
//! candidates are settled by the validation proxy.

use std::fs;
use std::path::PathBuf;

use clap::Args;

use spectrain_core::schedule::{order_search, plan_schedule, StageResolver};
use spectrain_core::spectral::select_k;
use spectrain_core::trainer::{fit_scene_basis, resolution_proxy, ModelKind};
use spectrain_core::{Error, Result};

use crate::manifest::write_manifest;
use crate::{load_scene, parse_list, Ctx};

#[derive(Args)]
pub struct PlanArgs {
    /// Baseline epoch budget the curriculum is balanced against.
    #[arg(long, default_value_t = 600)]
    pub t0: usize,
    /// Curriculum budget as a fraction of the baseline budget.
    #[arg(long, default_value_t = 0.5)]
    pub beta: f64,
    /// Number of curriculum stages.
    #[arg(long, default_value_t = 3)]
    pub stages: usize,
    /// Native spatial resolution; inferred from --cube when omitted.
    #[arg(long)]
    pub b0: Option<usize>,
    /// Full band count; inferred from --cube when omitted.
    #[arg(long)]
    pub bands: Option<usize>,
    /// Stage-1 band count; inferred via --eta from --cube when omitted.
    #[arg(long)]
    pub k1: Option<usize>,
    /// Explained-variance target used to infer --k1 from a scene.
    #[arg(long, default_value_t = 0.95)]
    pub eta: f64,
    /// Per-stage resolution candidates, e.g. "12,24;40;40" (semicolons
    /// separate stages). Defaults to the native resolution at every stage.
    #[arg(long)]
    pub candidates: Option<String>,
    /// Fine-tune epochs granted to proxy evaluations and recorded in the plan.
    #[arg(long, default_value_t = 0)]
    pub t_ft: usize,
    /// Scene cube backing geometry inference and --search.
    #[arg(long)]
    pub cube: Option<PathBuf>,
    /// Label sidecar; defaults to the cube path with .labels.json.
    #[arg(long, requires = "cube")]
    pub labels: Option<PathBuf>,
    /// Resolve multi-candidate stages with the validation proxy (needs --cube).
    #[arg(long, requires = "cube")]
    pub search: bool,
    /// Proxy ridge strength relative to the leading eigenvalue.
    #[arg(long, default_value_t = 0.15)]
    pub ridge_rel: f64,
    /// Proxy fine-tune learning rate.
    #[arg(long, default_value_t = 0.1)]
    pub lr: f64,
    /// Output stem: writes <stem>.json.
    #[arg(long, default_value = "plan")]
    pub name: String,
}

pub fn run(args: &PlanArgs, ctx: &Ctx) -> Result<()> {
    let mut inputs: Vec<PathBuf> = Vec::new();
    let scene = match &args.cube {
        Some(cube_path) => {
            let (scene, labels_path) = load_scene(cube_path, args.labels.as_deref())?;
            inputs.push(cube_path.clone());
            inputs.push(labels_path);
            Some(scene)
        }
        None => None,
    };

    let b0 = match (args.b0, &scene) {
        (Some(b), _) => b,
        (None, Some(s)) => s.cube.h,
        (None, None) => return Err(Error::argument("--b0 is required without --cube")),
    };
    let bands = match (args.bands, &scene) {
        (Some(d), _) => d,
        (None, Some(s)) => s.cube.d,
        (None, None) => return Err(Error::argument("--bands is required without --cube")),
    };

    // The basis is fitted once and shared by k1 inference and the proxy.
    let basis = match &scene {
        Some(s) => Some(fit_scene_basis(s, ctx.seed)?.1),
        None => None,
    };
    let k1 = match (args.k1, &basis) {
        (Some(k), _) => k,
        (None, Some(b)) => select_k(b, args.eta)?,
        (None, None) => return Err(Error::argument("--k1 is required without --cube")),
    };

    let candidates: Vec<Vec<usize>> = match &args.candidates {
        Some(text) => {
            let per_stage: Vec<Vec<usize>> = text
                .split(';')
                .map(|chunk| parse_list::<usize>(chunk, "candidate"))
                .collect::<Result<_>>()?;
            if per_stage.len() != args.stages {
                return Err(Error::argument(format!(
                    "--candidates lists {} stages, expected {}",
                    per_stage.len(),
                    args.stages
                )));
            }
            per_stage
        }
        None => vec![vec![b0]; args.stages],
    };

    let proxy = match (&scene, &basis, args.search) {
        (Some(s), Some(b), true) => {
            let lambda1 = b.eigvals[0];
            Some(resolution_proxy(
                s,
                ModelKind::Ridge,
                args.ridge_rel * lambda1,
                args.lr,
                ctx.seed,
            ))
        }
        _ => None,
    };
    let mut resolve = |i: usize, cands: &[usize], k: usize| {
        let proxy = proxy.as_ref().expect("resolver built only with --search");
        order_search(i, cands, k, proxy, args.t_ft)
    };
    let resolver: Option<StageResolver<'_>> = if args.search {
        Some(&mut resolve)
    } else {
        None
    };

    let mut plan = plan_schedule(args.t0, args.beta, args.stages, b0, bands, k1, &candidates, resolver)?;
    plan.t_ft = args.t_ft;

    let plan_path = ctx.out_dir.join(format!("{}.json", args.name));
    let text = plan.to_json()?;
    fs::write(&plan_path, &text)?;

    let input_refs: Vec<&std::path::Path> = inputs.iter().map(|p| p.as_path()).collect();
    write_manifest("plan", ctx, &input_refs, &[&plan_path])?;

    let mut table = String::from("i,b,k,steps,lr_lo,lr_hi\n");
    for s in &plan.stages {
        table.push_str(&format!(
            "{},{},{},{},{},{}\n",
            s.index, s.b, s.k, s.steps, s.lr_interval.0, s.lr_interval.1
        ));
    }
    ctx.emit(&serde_json::from_str(&text)?, &table);
    Ok(())
}
