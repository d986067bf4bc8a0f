//! Command-line contract: exit codes per error class, stdout format
//! switching, and inference of plan geometry from a scene.

mod common;

use common::{run, run_ok};
use tempfile::TempDir;

#[test]
fn error_classes_map_to_stable_exit_codes() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();

    // Unknown subcommands and bad flags are argument errors (clap side).
    assert_eq!(run(dir, &["warp"]).status.code(), Some(2));
    assert_eq!(
        run(dir, &["gen", "--bands", "many"]).status.code(),
        Some(2)
    );
    // Domain argument validation exits 2 as well.
    assert_eq!(
        run(dir, &["analyze", "--geometric", "1.5", "--bands", "10"])
            .status
            .code(),
        Some(2)
    );
    // Multi-candidate stages without --search cannot be resolved.
    run_ok(
        dir,
        &[
            "gen", "--height", "12", "--width", "12", "--bands", "8", "--rho", "0.9", "--name",
            "scene",
        ],
    );
    let cube = dir.join("scene.hsc");
    let plan_multi = run(
        dir,
        &[
            "plan",
            "--cube",
            cube.to_str().unwrap(),
            "--t0",
            "40",
            "--candidates",
            "6,12;12;12",
        ],
    );
    assert_eq!(plan_multi.status.code(), Some(2));

    // Missing input files are io errors.
    assert_eq!(
        run(dir, &["train", "--cube", "absent.hsc", "--baseline", "--t0", "4"])
            .status
            .code(),
        Some(1)
    );
    // Malformed cube payloads are format errors.
    let bogus = dir.join("bogus.hsc");
    std::fs::write(&bogus, b"not a cube").unwrap();
    assert_eq!(
        run(
            dir,
            &["train", "--cube", bogus.to_str().unwrap(), "--baseline", "--t0", "4"],
        )
        .status
        .code(),
        Some(3)
    );
}

#[test]
fn stdout_format_flag_switches_rendering() {
    let tmp = TempDir::new().unwrap();
    let json_out = run_ok(tmp.path(), &["bounds", "--golden"]);
    assert!(json_out.trim_start().starts_with('{'), "default stdout is json");
    let csv_out = run_ok(tmp.path(), &["bounds", "--golden", "--format", "csv"]);
    assert!(
        csv_out.starts_with("quantity,computed,reference,relative_delta"),
        "csv stdout carries the table header"
    );
}

#[test]
fn plan_geometry_is_inferred_from_the_scene() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    run_ok(
        dir,
        &[
            "gen", "--height", "14", "--width", "14", "--bands", "20", "--rho", "0.9", "--name",
            "scene",
        ],
    );
    run_ok(
        dir,
        &[
            "plan",
            "--cube",
            dir.join("scene.hsc").to_str().unwrap(),
            "--t0",
            "40",
            "--stages",
            "2",
        ],
    );
    let plan = common::read_json(&dir.join("plan.json"));
    let stages = plan["stages"].as_array().unwrap();
    assert_eq!(stages.len(), 2);
    // Final stage reaches the full band count; every stage sits at native
    // resolution by default.
    assert_eq!(stages[1]["k"], 20);
    assert_eq!(stages[0]["b"], 14);
    assert_eq!(stages[1]["b"], 14);

    // Explicit geometry needs no scene at all.
    run_ok(
        dir,
        &[
            "plan", "--t0", "40", "--b0", "10", "--bands", "16", "--k1", "4", "--name", "bare",
        ],
    );
    let bare = common::read_json(&dir.join("bare.json"));
    assert_eq!(bare["stages"][0]["k"], 4);
}
