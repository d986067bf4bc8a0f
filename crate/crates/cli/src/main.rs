//! `spectrain`: reproducible batch experiments over the spectral-curriculum
//! library. Every subcommand records a run manifest (arguments, seed, input
//! digests, outputs) so any result can be replayed bit-identically, wall
//! time aside.

mod analyze;
mod bounds;
mod compare;
mod gen;
mod manifest;
mod plan;
mod train;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use spectrain_core::Error;

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Parser)]
#[command(
    name = "spectrain",
    version,
    about = "Spectral-curriculum training toolkit for hyperspectral cubes"
)]
struct Cli {
    /// RNG seed; recorded in the manifest and forwarded to every
    /// stochastic component.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Directory receiving all artifacts (created if missing).
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,

    /// Stdout rendering of the primary report; file artifacts keep their
    /// fixed formats regardless.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Synthesize a labeled hyperspectral cube with a geometric spectrum.
    Gen(gen::GenArgs),
    /// Eigen-spectrum, cumulative variance, and per-band cost diagnostics.
    Analyze(analyze::AnalyzeArgs),
    /// Assemble a curriculum plan, optionally searching stage resolutions.
    Plan(plan::PlanArgs),
    /// Train the convex backbone over a plan or as the full baseline.
    Train(train::TrainArgs),
    /// Compare two training traces at matched loss-gap thresholds.
    Compare(compare::CompareArgs),
    /// Analytic time-to-threshold bounds: reference configuration or sweep.
    Bounds(bounds::BoundsArgs),
}

/// Shared command context: global flags plus the verbatim argv that the
/// manifest records for replay.
pub struct Ctx {
    pub seed: u64,
    pub out_dir: PathBuf,
    pub format: Format,
    pub argv: Vec<String>,
}

impl Ctx {
    /// Print the primary report in the chosen stdout format.
    pub fn emit(&self, json: &serde_json::Value, csv: &str) {
        match self.format {
            Format::Json => println!(
                "{}",
                serde_json::to_string_pretty(json).expect("report serializes")
            ),
            Format::Csv => print!("{csv}"),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let ctx = Ctx {
        seed: cli.seed,
        out_dir: cli.out_dir,
        format: cli.format,
        argv: std::env::args().collect(),
    };
    let outcome = std::fs::create_dir_all(&ctx.out_dir)
        .map_err(Error::from)
        .and_then(|()| match &cli.cmd {
            Cmd::Gen(a) => gen::run(a, &ctx),
            Cmd::Analyze(a) => analyze::run(a, &ctx),
            Cmd::Plan(a) => plan::run(a, &ctx),
            Cmd::Train(a) => train::run(a, &ctx),
            Cmd::Compare(a) => compare::run(a, &ctx),
            Cmd::Bounds(a) => bounds::run(a, &ctx),
        });
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// Stable nonzero exit codes per error class; clap's own argument
/// rejections also exit 2.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Argument(_) | Error::Unsupported(_) => 2,
        Error::Format(_) | Error::Json(_) => 3,
        Error::Numeric(_) => 4,
        Error::Search(_) => 5,
        Error::Fit(_) => 6,
        Error::Io(_) => 1,
    }
}

/// Load a cube plus its label sidecar; the sidecar defaults to the cube
/// path with a `.labels.json` extension.
pub fn load_scene(
    cube_path: &std::path::Path,
    labels_path: Option<&std::path::Path>,
) -> spectrain_core::Result<(spectrain_core::cube::LabeledCube, PathBuf)> {
    let labels_path = labels_path
        .map(PathBuf::from)
        .unwrap_or_else(|| cube_path.with_extension("labels.json"));
    let cube = spectrain_core::cube::load_cube(cube_path)?;
    let (labels, num_classes) = spectrain_core::cube::load_labels(&labels_path, cube.num_pixels())?;
    Ok((
        spectrain_core::cube::LabeledCube {
            cube,
            labels,
            num_classes,
        },
        labels_path,
    ))
}

/// Parse a comma-separated numeric list flag.
pub fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> spectrain_core::Result<Vec<T>> {
    let mut out = Vec::new();
    for tok in text.split(',') {
        let tok = tok.trim();
        if tok.is_empty() {
            continue;
        }
        out.push(tok.parse::<T>().map_err(|_| {
            Error::argument(format!("cannot parse {what} entry {tok:?}"))
        })?);
    }
    if out.is_empty() {
        return Err(Error::argument(format!("{what} list is empty")));
    }
    Ok(out)
}
