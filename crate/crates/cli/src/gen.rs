//! `gen`: synthesize a labeled cube and write it with its label sidecar.

use clap::Args;
use serde_json::json;

use spectrain_core::cube::{generate_synthetic, save_cube, save_labels};
use spectrain_core::Result;

use crate::manifest::write_manifest;
use crate::Ctx;

#[derive(Args)]
pub struct GenArgs {
    #[arg(long, default_value_t = 40)]
    pub height: usize,
    #[arg(long, default_value_t = 40)]
    pub width: usize,
    #[arg(long, default_value_t = 200)]
    pub bands: usize,
    #[arg(long, default_value_t = 2)]
    pub classes: u32,
    /// Geometric eigen-spectrum decay per band.
    #[arg(long, default_value_t = 0.95)]
    pub rho: f64,
    /// Isotropic per-band noise level.
    #[arg(long, default_value_t = 0.01)]
    pub noise_sigma: f64,
    /// Output stem: writes <stem>.hsc and <stem>.labels.json.
    #[arg(long, default_value = "scene")]
    pub name: String,
}

pub fn run(args: &GenArgs, ctx: &Ctx) -> Result<()> {
    let scene = generate_synthetic(
        args.height,
        args.width,
        args.bands,
        args.classes,
        args.rho,
        args.noise_sigma,
        ctx.seed,
    )?;
    let cube_path = ctx.out_dir.join(format!("{}.hsc", args.name));
    let labels_path = ctx.out_dir.join(format!("{}.labels.json", args.name));
    save_cube(&scene.cube, &cube_path)?;
    save_labels(&scene, &labels_path)?;
    write_manifest("gen", ctx, &[], &[&cube_path, &labels_path])?;
    let report = json!({
        "cube": cube_path.display().to_string(),
        "labels": labels_path.display().to_string(),
        "height": args.height,
        "width": args.width,
        "bands": args.bands,
        "classes": args.classes,
        "rho": args.rho,
        "noise_sigma": args.noise_sigma,
        "seed": ctx.seed,
    });
    let csv = format!(
        "cube,height,width,bands,classes,rho,noise_sigma,seed\n{},{},{},{},{},{},{},{}\n",
        cube_path.display(),
        args.height,
        args.width,
        args.bands,
        args.classes,
        args.rho,
        args.noise_sigma,
        ctx.seed
    );
    ctx.emit(&report, &csv);
    Ok(())
}
