// SPDX-License-Identifier: MIT OR Apache-2.0

//! Report assembly. Reports carry no timestamps or host data, so a rerun
//! with the same configuration reproduces them byte for byte.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use gapflow::dubrovin::{calibrate_time_field, CALIBRATION_TOL};
use gapflow::spectral_domain::GapSet;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;

/// One pass/fail line; `criterion` ties it to the acceptance matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub criterion: Option<u8>,
    pub pass: bool,
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limit: Option<f64>,
}

impl Check {
    /// Passes when `value <= limit`.
    pub fn at_most(name: &str, criterion: Option<u8>, value: f64, limit: f64) -> Self {
        Check { name: name.into(), criterion, pass: value <= limit, value, limit: Some(limit) }
    }

    pub fn flag(name: &str, criterion: Option<u8>, pass: bool) -> Self {
        Check { name: name.into(), criterion, pass, value: if pass { 1.0 } else { 0.0 }, limit: None }
    }
}

/// Verdict of the time-field calibration on the unit gap `(-1, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeVerdict {
    pub sign_s: i8,
    pub kappa_t: f64,
    pub calibrated: bool,
    pub max_phase_error: f64,
    pub printed_max_phase_error: Option<f64>,
}

impl TimeVerdict {
    pub fn compute() -> Result<Self, CliError> {
        let cal = calibrate_time_field(&GapSet::single(-1.0, 1.0)?)?;
        let printed = cal.table.iter().find(|r| r.sign_s == -1 && r.kappa_t == 1.0).map(|r| r.max_phase_error);
        Ok(TimeVerdict {
            sign_s: cal.convention.sign_s,
            kappa_t: cal.convention.kappa_t,
            calibrated: cal.convention.calibrated && cal.max_phase_error <= CALIBRATION_TOL,
            max_phase_error: cal.max_phase_error,
            printed_max_phase_error: printed,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub library: String,
    pub version: String,
    /// Library operations whose outputs appear in `result` and the artifacts.
    pub operations: Vec<String>,
    pub artifacts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub tol: f64,
    pub time_convention: TimeVerdict,
    pub provenance: Provenance,
    pub checks: Vec<Check>,
    pub result: Value,
}

impl Report {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// A file produced by a pipeline, written next to the report.
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

pub fn to_pretty(v: &impl Serialize) -> Vec<u8> {
    let mut b = serde_json::to_vec_pretty(v).expect("report serialises");
    b.push(b'\n');
    b
}

pub fn write(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
    let p = dir.join(name);
    std::fs::write(&p, bytes)?;
    Ok(p)
}

/// One row of the consolidated acceptance matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixRow {
    pub criterion: u8,
    pub pass: bool,
    /// `command/check` for every contributing check.
    pub sources: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub path: String,
    pub command: String,
    pub config_hash: String,
    pub pass: bool,
    pub checks: Vec<Check>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Consolidated {
    pub reports: Vec<ReportSummary>,
    pub matrix: Vec<MatrixRow>,
    pub uncategorised: Vec<String>,
    pub operations: Vec<String>,
    pub missing: Vec<String>,
    pub partial: bool,
    pub warnings: Vec<String>,
}

/// Merges per-command reports. Missing or unreadable files are listed and
/// flag the result as partial instead of aborting.
pub fn consolidate(paths: &[PathBuf]) -> Consolidated {
    let mut reports = Vec::new();
    let mut missing = Vec::new();
    let mut warnings = Vec::new();
    let mut matrix: BTreeMap<u8, MatrixRow> = BTreeMap::new();
    let mut uncategorised = Vec::new();
    let mut ops = std::collections::BTreeSet::new();
    if paths.is_empty() {
        warnings.push("no artifacts given; the report is empty".to_string());
    }
    for p in paths {
        let shown = p.display().to_string();
        let parsed = std::fs::read(p)
            .map_err(|e| e.to_string())
            .and_then(|b| serde_json::from_slice::<Report>(&b).map_err(|e| e.to_string()));
        let r = match parsed {
            Ok(r) => r,
            Err(e) => {
                warnings.push(format!("{shown}: {e}"));
                missing.push(shown);
                continue;
            }
        };
        for c in &r.checks {
            let source = format!("{}/{}", r.command, c.name);
            match c.criterion {
                Some(k) => {
                    let row = matrix.entry(k).or_insert(MatrixRow { criterion: k, pass: true, sources: vec![] });
                    row.pass &= c.pass;
                    row.sources.push(source);
                }
                None => uncategorised.push(format!("{source}: {}", if c.pass { "pass" } else { "fail" })),
            }
        }
        ops.extend(r.provenance.operations.iter().cloned());
        reports.push(ReportSummary {
            path: shown,
            command: r.command.clone(),
            config_hash: r.config_hash.clone(),
            pass: r.all_pass(),
            checks: r.checks,
        });
    }
    Consolidated {
        reports,
        matrix: matrix.into_values().collect(),
        uncategorised,
        operations: ops.into_iter().collect(),
        partial: !missing.is_empty(),
        missing,
        warnings,
    }
}
