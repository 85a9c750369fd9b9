//! Batch front end for `hedgehog-core`: configuration files, command
//! dispatch, JSON/CSV reports and SVG renderings.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod output;
pub mod render;

use std::path::{Path, PathBuf};

use hedgehog_core::ErrorFamily;
use serde_json::{json, Value};

pub use config::{Command, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] hedgehog_core::Error),
    #[error("missing artifact: {0}")]
    MissingArtifact(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_PRECONDITION: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;
pub const EXIT_INCONCLUSIVE: i32 = 5;

impl LabError {
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Config(_) => EXIT_CONFIG,
            LabError::Core(e) => match e.family() {
                ErrorFamily::Precondition => EXIT_PRECONDITION,
                ErrorFamily::Numerical => EXIT_NUMERICAL,
                ErrorFamily::Inconclusive => EXIT_INCONCLUSIVE,
            },
            LabError::MissingArtifact(_) => EXIT_PRECONDITION,
            LabError::Io(_) => EXIT_NUMERICAL,
        }
    }

    fn family(&self) -> &'static str {
        match self.exit_code() {
            EXIT_CONFIG => "config",
            EXIT_PRECONDITION => "precondition",
            EXIT_INCONCLUSIVE => "inconclusive",
            _ => "numerical",
        }
    }
}

/// What a finished invocation produced.
#[derive(Debug)]
pub struct Outcome {
    pub exit_code: i32,
    pub report: Value,
    pub files: Vec<PathBuf>,
}

/// Runs one command. Configuration errors produce no files; every other
/// outcome, failures included, writes `report.json` into the output
/// directory.
pub fn run(cfg: &RunConfig) -> Outcome {
    let resolved = match cfg.resolve() {
        Ok(r) => r,
        Err(e) => {
            return Outcome { exit_code: e.exit_code(), report: json!({ "error": error_json(&e) }), files: Vec::new() };
        }
    };
    if cfg.command == Command::Render {
        return match render::render_dir(&cfg.out) {
            Ok(path) => Outcome { exit_code: EXIT_OK, report: Value::Null, files: vec![path] },
            Err(e) => Outcome { exit_code: e.exit_code(), report: json!({ "error": error_json(&e) }), files: Vec::new() },
        };
    }
    let result = match commands::execute(cfg, &resolved) {
        Err(e @ LabError::Config(_)) => {
            return Outcome { exit_code: e.exit_code(), report: json!({ "error": error_json(&e) }), files: Vec::new() };
        }
        r => r,
    };
    match finish(cfg, result) {
        Ok(o) => o,
        Err(e) => Outcome { exit_code: e.exit_code(), report: json!({ "error": error_json(&e) }), files: Vec::new() },
    }
}

fn error_json(e: &LabError) -> Value {
    json!({ "family": e.family(), "exit_code": e.exit_code(), "message": e.to_string() })
}

fn finish(cfg: &RunConfig, result: Result<commands::CommandOutput, LabError>) -> Result<Outcome, LabError> {
    std::fs::create_dir_all(&cfg.out)?;
    let mut files = Vec::new();
    let (mut report, code) = match result {
        Ok(out) => {
            for (name, pts) in &out.clouds {
                let path = cfg.out.join(name);
                output::write_csv(&path, pts)?;
                files.push(path);
            }
            (out.report, EXIT_OK)
        }
        Err(e) => (json!({ "error": error_json(&e) }), e.exit_code()),
    };
    if let Value::Object(m) = &mut report {
        m.insert("command".into(), json!(cfg.command.name()));
        m.insert("config".into(), serde_json::to_value(cfg).expect("configuration serializes"));
    }
    let path = cfg.out.join(output::REPORT_FILE);
    output::write_json(&path, &report)?;
    files.push(path);
    if code == EXIT_OK && report.get("scene").is_some() {
        files.push(render::render_dir(&cfg.out)?);
    }
    Ok(Outcome { exit_code: code, report, files })
}

/// Loads a configuration file and runs it.
pub fn run_file(path: &Path) -> Outcome {
    match RunConfig::load(path) {
        Ok(cfg) => run(&cfg),
        Err(e) => Outcome { exit_code: e.exit_code(), report: json!({ "error": error_json(&e) }), files: Vec::new() },
    }
}
