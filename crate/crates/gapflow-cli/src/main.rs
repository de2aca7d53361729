// SPDX-License-Identifier: MIT OR Apache-2.0

//! `gapflow`: configuration-driven pipelines over the gapflow library.
//!
//! Every run writes `<command>.json` plus CSV or binary artifacts into the
//! output directory. Exit codes: 0 on success, 2 for configuration errors,
//! 3 for numerical failures and failed checks (with `diagnostic.json`).

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

mod config;
mod error;
mod pipelines;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::config::{Overrides, RunConfig};
use crate::error::CliError;
use crate::report::{to_pretty, Provenance, Report, TimeVerdict};

#[derive(Debug, Parser)]
#[command(name = "gapflow", version, about = "Finite-gap NLS pipelines and spectral checks")]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory (default `gapflow-out`).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Seed for every random draw.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Integration tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Worker threads; falls back to GAPFLOW_THREADS.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Pipeline to run; falls back to `command` in the configuration.
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Subcommand)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Lyapunov exponent and rotation number on an energy grid.
    SpectrumScan,
    /// Labelled gaps, decay fit and separation constant.
    GapReport,
    /// Phase trajectory along one of the three flows.
    DubrovinEvolve,
    /// Finite-gap field from the trace formula.
    Reconstruct,
    /// Split-step evolution of an initial datum.
    NlsIntegrate,
    /// Split-step evolution against the finite-gap or closed-form solution.
    NlsCompare,
    /// Affine fit of Abel coordinates along the x and t flows.
    AbelLinearize,
    /// Two-sided partial-norm inequality on a (xi, L) grid.
    JlCheck,
    /// Spectral measure bound on an epsilon grid.
    MeasureCheck,
    /// One averaging step at a gap edge and the gap-length certificate.
    MpCertify,
    /// Summability conditions and homogeneity of a gap set.
    CraigCheck,
    /// Merge reports listed under `artifacts` into one matrix.
    EmitReport,
}

impl Command {
    pub fn name(self) -> String {
        serde_json::to_value(self).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()
    }
}

fn threads(flag: Option<usize>) -> Result<Option<usize>, CliError> {
    let n = match flag {
        Some(n) => Some(n),
        None => match std::env::var("GAPFLOW_THREADS") {
            Ok(s) if !s.trim().is_empty() => Some(
                s.trim().parse().map_err(|_| CliError::Schema(format!("GAPFLOW_THREADS={s} is not a count")))?,
            ),
            _ => None,
        },
    };
    if n == Some(0) {
        return Err(CliError::Schema("thread count must be positive".into()));
    }
    Ok(n)
}

fn diagnose(dir: &std::path::Path, command: &str, hash: &str, e: &CliError) {
    let body = serde_json::json!({
        "command": command,
        "config_hash": hash,
        "kind": e.kind(),
        "exit_code": e.exit_code(),
        "error": e.to_string(),
    });
    if std::fs::create_dir_all(dir).is_ok() {
        let _ = std::fs::write(dir.join("diagnostic.json"), to_pretty(&body));
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = threads(cli.threads)? {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    cfg.apply(&Overrides { command: cli.command, out: cli.out, seed: cli.seed, tol: cli.tol });
    cfg.validate()?;
    let cmd = cfg
        .command
        .ok_or_else(|| CliError::Schema("no subcommand given and no `command` in the configuration".into()))?;
    let name = cmd.name();
    let hash = cfg.hash();
    let dir = cfg.out_dir();

    let numerical = |e: CliError| {
        if e.exit_code() == 3 {
            diagnose(&dir, &name, &hash, &e);
        }
        e
    };
    let verdict = TimeVerdict::compute().map_err(numerical)?;
    let outcome = pipelines::run(cmd, &cfg, &verdict).map_err(numerical)?;

    std::fs::create_dir_all(&dir)?;
    let mut written = Vec::new();
    for a in &outcome.artifacts {
        report::write(&dir, &a.name, &a.bytes)?;
        written.push(a.name.clone());
    }
    let rep = Report {
        command: name.clone(),
        config_hash: hash.clone(),
        seed: cfg.seed,
        tol: cfg.tol,
        time_convention: verdict,
        provenance: Provenance {
            library: "gapflow".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            operations: outcome.operations.iter().map(|s| s.to_string()).collect(),
            artifacts: written,
        },
        checks: outcome.checks,
        result: outcome.result,
    };
    let path = report::write(&dir, &format!("{name}.json"), &to_pretty(&rep))?;
    println!("{}", path.display());

    let failed: Vec<&str> = rep.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
    if !failed.is_empty() {
        return Err(numerical(CliError::CheckFailed(failed.join(", "))));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gapflow: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
