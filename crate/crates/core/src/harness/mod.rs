//! Configuration, experiment orchestration and deterministic reporting.
//!
//! Layout under the output directory: one subdirectory per experiment holding
//! its CSV and JSON files, plus `manifest.json` at the top.

pub mod config;
pub mod experiments;
pub mod manifest;
pub mod table;

use std::path::{Path, PathBuf};
use std::time::Instant;

pub use config::{Experiment, RawConfig, RunConfig};
pub use manifest::{Check, ExperimentRecord, FileRecord, RunManifest, Status};
pub use table::{parse_samples, SampleSet, Table};

use crate::error::{Error, Result};
use experiments::Outcome;

/// Environment variable naming the root under which `output.dir` is resolved.
pub const OUTPUT_ROOT_ENV: &str = "RNDIRAC_OUT";

/// Exit status for a configuration that failed validation.
pub const EXIT_VALIDATION: i32 = 2;

/// Inputs read up front, so that unreadable files fail validation before any
/// output is written.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PreparedInputs {
    pub samples: Option<SampleSet>,
}

pub fn prepare(cfg: &RunConfig) -> Result<PreparedInputs> {
    let samples = match (
        &cfg.reconstruct_input,
        cfg.experiments.contains(&Experiment::Reconstruct),
    ) {
        (Some(path), true) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("reconstruct.input {}: {e}", path.display())))?;
            Some(
                parse_samples(&text).map_err(|e| {
                    Error::Config(format!("reconstruct.input {}: {e}", path.display()))
                })?,
            )
        }
        _ => None,
    };
    Ok(PreparedInputs { samples })
}

/// `output.dir` joined onto the root, unless it is absolute.
pub fn output_dir(cfg: &RunConfig, root: &Path) -> PathBuf {
    if cfg.output_dir.is_absolute() {
        cfg.output_dir.clone()
    } else {
        root.join(&cfg.output_dir)
    }
}

fn run_one(cfg: &RunConfig, e: Experiment, inputs: &PreparedInputs) -> Result<Outcome> {
    match e {
        Experiment::GeometryTable => experiments::geometry_table(cfg),
        Experiment::PotentialTable => experiments::potential_table(cfg),
        Experiment::SmatrixSweep => experiments::smatrix_sweep(cfg),
        Experiment::HighEnergyCheck => experiments::high_energy_check(cfg),
        Experiment::Evolve => experiments::evolve(cfg),
        Experiment::ModifierDefect => experiments::modifier_defect(cfg),
        Experiment::CompareFout => experiments::compare_fout(cfg),
        Experiment::Reconstruct => {
            let s = inputs
                .samples
                .as_ref()
                .ok_or_else(|| Error::Config("reconstruct input was not prepared".into()))?;
            experiments::reconstruct(cfg, s)
        }
        Experiment::EndToEnd => experiments::end_to_end_run(cfg),
    }
}

fn write(dir: &Path, rel: &str, data: &[u8]) -> Result<FileRecord> {
    let path = dir.join(rel);
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)
            .map_err(|e| Error::Io(format!("{}: {e}", parent.display())))?;
    }
    std::fs::write(&path, data).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    Ok(FileRecord::of(rel, data))
}

fn emit(dir: &Path, e: Experiment, out: &Outcome) -> Result<Vec<FileRecord>> {
    let mut files = Vec::new();
    for (name, table) in &out.tables {
        files.push(write(
            dir,
            &format!("{}/{name}", e.name()),
            &table.to_csv()?,
        )?);
    }
    for (name, text) in &out.json {
        files.push(write(
            dir,
            &format!("{}/{name}", e.name()),
            text.as_bytes(),
        )?);
    }
    Ok(files)
}

/// Runs the selected experiments in dependency order, writes their files and
/// the manifest, and returns the manifest. A numerical failure in one
/// experiment is recorded and the rest still run.
pub fn run(cfg: &RunConfig, inputs: &PreparedInputs, root: &Path) -> Result<RunManifest> {
    let dir = output_dir(cfg, root);
    let mut records = Vec::new();
    for &e in &cfg.experiments {
        let start = Instant::now();
        let result =
            run_one(cfg, e, inputs).and_then(|out| emit(&dir, e, &out).map(|files| (out, files)));
        let wall_time_s = start.elapsed().as_secs_f64();
        records.push(match result {
            Ok((out, files)) => ExperimentRecord {
                name: e.name().into(),
                status: if out.checks.iter().all(|c| c.passed) {
                    Status::Pass
                } else {
                    Status::Fail
                },
                wall_time_s,
                checks: out.checks,
                files,
                notes: out.notes,
                error: None,
            },
            Err(err) => ExperimentRecord {
                name: e.name().into(),
                status: Status::Error,
                wall_time_s,
                checks: Vec::new(),
                files: Vec::new(),
                notes: Vec::new(),
                error: Some(err.to_string()),
            },
        });
    }
    let status = if records.iter().any(|r| r.status == Status::Error) {
        Status::Error
    } else if records.iter().any(|r| r.status == Status::Fail) {
        Status::Fail
    } else {
        Status::Pass
    };
    let manifest = RunManifest {
        schema: manifest::MANIFEST_SCHEMA,
        artifact_version: manifest::ARTIFACT_VERSION.into(),
        config: cfg.echo.clone(),
        status,
        experiments: records,
    };
    let text =
        serde_json::to_string_pretty(&manifest).map_err(|e| Error::Io(e.to_string()))? + "\n";
    write(&dir, "manifest.json", text.as_bytes())?;
    Ok(manifest)
}
