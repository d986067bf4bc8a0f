//! Shared helpers for the binary-level test suites: subprocess runners and
//! a small structural JSON validator driven by the schema files shipped in
//! the repository's schemas/ directory.
//!
//! Each integration test binary compiles its own copy, so helpers unused by
//! one binary are expected.
#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_spectrain")
}

pub fn schema_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schemas")
}

/// Run the binary with `--out-dir dir` prepended and return the raw output.
pub fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(bin())
        .arg("--out-dir")
        .arg(dir)
        .args(args)
        .output()
        .expect("spawn spectrain")
}

/// Run and require success; returns stdout.
pub fn run_ok(dir: &Path, args: &[&str]) -> String {
    let out = run(dir, args);
    assert!(
        out.status.success(),
        "`spectrain {}` failed: {}",
        args.join(" "),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).expect("utf8 stdout")
}

pub fn read_json(path: &Path) -> serde_json::Value {
    let text = std::fs::read_to_string(path)
        .unwrap_or_else(|e| panic!("read {}: {e}", path.display()));
    serde_json::from_str(&text).unwrap_or_else(|e| panic!("parse {}: {e}", path.display()))
}

pub fn load_schema(name: &str) -> serde_json::Value {
    read_json(&schema_dir().join(name))
}

/// Structural JSON validation covering the subset of JSON Schema the
/// artifact schemas use: `type` (string or list), `properties`, `required`,
/// `items`, and `enum`. Returns the first violation as a path-tagged error.
pub fn validate(schema: &serde_json::Value, value: &serde_json::Value) -> Result<(), String> {
    validate_at(schema, value, "$")
}

fn type_name(value: &serde_json::Value) -> &'static str {
    match value {
        serde_json::Value::Null => "null",
        serde_json::Value::Bool(_) => "boolean",
        serde_json::Value::Number(_) => "number",
        serde_json::Value::String(_) => "string",
        serde_json::Value::Array(_) => "array",
        serde_json::Value::Object(_) => "object",
    }
}

fn type_matches(want: &str, value: &serde_json::Value) -> bool {
    match want {
        "integer" => value.as_f64().is_some_and(|x| x.fract() == 0.0),
        other => type_name(value) == other,
    }
}

fn validate_at(schema: &serde_json::Value, value: &serde_json::Value, path: &str) -> Result<(), String> {
    if let Some(ty) = schema.get("type") {
        let allowed: Vec<&str> = match ty {
            serde_json::Value::String(s) => vec![s.as_str()],
            serde_json::Value::Array(list) => {
                list.iter().filter_map(|v| v.as_str()).collect()
            }
            _ => return Err(format!("{path}: schema `type` must be string or list")),
        };
        if !allowed.iter().any(|want| type_matches(want, value)) {
            return Err(format!(
                "{path}: expected type {:?}, found {}",
                allowed,
                type_name(value)
            ));
        }
    }
    if let Some(options) = schema.get("enum").and_then(|e| e.as_array()) {
        if !options.contains(value) {
            return Err(format!("{path}: value {value} not in enum {options:?}"));
        }
    }
    if let Some(required) = schema.get("required").and_then(|r| r.as_array()) {
        let obj = value
            .as_object()
            .ok_or_else(|| format!("{path}: required fields on a non-object"))?;
        for key in required.iter().filter_map(|k| k.as_str()) {
            if !obj.contains_key(key) {
                return Err(format!("{path}: missing required field `{key}`"));
            }
        }
    }
    if let Some(props) = schema.get("properties").and_then(|p| p.as_object()) {
        if let Some(obj) = value.as_object() {
            for (key, sub) in props {
                if let Some(field) = obj.get(key) {
                    validate_at(sub, field, &format!("{path}.{key}"))?;
                }
            }
        }
    }
    if let Some(items) = schema.get("items") {
        if let Some(list) = value.as_array() {
            for (i, item) in list.iter().enumerate() {
                validate_at(items, item, &format!("{path}[{i}]"))?;
            }
        }
    }
    Ok(())
}
