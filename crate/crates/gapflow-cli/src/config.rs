// SPDX-License-Identifier: MIT OR Apache-2.0

//! Run configuration: a JSON document with one section per pipeline family.
//!
//! Unknown keys are rejected so that a typo never silently falls back to a
//! default. Command-line flags are merged in before hashing, so the hash in
//! every report describes what actually ran.

use std::path::{Path, PathBuf};

use gapflow::direct_spectral::QPotential;
use gapflow::dubrovin::FlowAxis;
use gapflow::moser_poschel::Factor;
use gapflow::spectral_domain::{GapSet, SyntheticFamily};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;
use crate::Command;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub command: Option<Command>,
    pub seed: u64,
    pub tol: f64,
    /// Output directory; not part of the hashed content.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub gaps: Option<GapSet>,
    pub phases: Option<Vec<f64>>,
    pub potential: Option<QPotential>,
    pub scan: ScanConfig,
    pub flow: FlowConfig,
    pub abel: AbelConfig,
    pub field: FieldConfig,
    pub spectral: SpectralConfig,
    pub mp: MpConfig,
    pub craig: CraigConfig,
    pub artifacts: Vec<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            command: None,
            seed: 0,
            tol: 1e-10,
            out: None,
            gaps: None,
            phases: None,
            potential: None,
            scan: ScanConfig::default(),
            flow: FlowConfig::default(),
            abel: AbelConfig::default(),
            field: FieldConfig::default(),
            spectral: SpectralConfig::default(),
            mp: MpConfig::default(),
            craig: CraigConfig::default(),
            artifacts: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanConfig {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub points: usize,
    pub length: f64,
    pub samples: usize,
    pub kmax: i64,
    /// Gaps narrower than this are reported as closed.
    pub closed_below: f64,
    /// Largest admissible distance between a gap centre and its label energy.
    pub offset_bound: Option<f64>,
    /// Exponent of the separation shape `|k - k'|^(-2 tau)`.
    pub tau: f64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            lambda_min: -2.0,
            lambda_max: 2.0,
            points: 81,
            length: 200.0,
            samples: 2,
            kmax: 6,
            closed_below: 1e-11,
            offset_bound: None,
            tau: 1.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlowConfig {
    pub axis: FlowAxis,
    pub span: f64,
    pub samples: usize,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig { axis: FlowAxis::X, span: 1.0, samples: 40 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AbelConfig {
    pub x_span: f64,
    pub t_span: f64,
    pub samples: usize,
    /// Bound on the affine-fit residual and on the slope mismatch.
    pub fit_tol: f64,
}

impl Default for AbelConfig {
    fn default() -> Self {
        AbelConfig { x_span: 3.0, t_span: 1.0, samples: 60, fit_tol: 1e-5 }
    }
}

/// Initial datum for the split-step solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialData {
    /// Finite-gap field built from `gaps` and `phases`, tapered at the box ends.
    FiniteGap,
    /// `c e^{i beta}`.
    Constant { c: f64, beta: f64 },
    /// `c e^{i k x}`.
    PlaneWave { c: f64, k: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FieldConfig {
    pub x0: f64,
    pub length: f64,
    pub nx: usize,
    /// Snapshot times for `reconstruct`.
    pub times: Vec<f64>,
    pub t_end: f64,
    pub dt: f64,
    pub record_every: usize,
    pub richardson: bool,
    pub taper_width: f64,
    pub window: Option<[f64; 2]>,
    pub threshold: f64,
    pub initial: InitialData,
}

impl Default for FieldConfig {
    fn default() -> Self {
        FieldConfig {
            x0: -40.0,
            length: 80.0,
            nx: 2048,
            times: vec![0.0],
            t_end: 0.5,
            dt: 1e-3,
            record_every: 100,
            richardson: true,
            taper_width: 1.0,
            window: Some([-5.0, 5.0]),
            threshold: 1e-4,
            initial: InitialData::FiniteGap,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectralConfig {
    pub lambda: f64,
    pub xi_count: usize,
    pub lengths: Vec<f64>,
    /// Phases `theta`; drawn from the seed when absent.
    pub thetas: Option<Vec<Vec<f64>>>,
    pub theta_count: usize,
    pub resolve_tol: f64,
    pub eps: Vec<f64>,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        SpectralConfig {
            lambda: 0.5,
            xi_count: 8,
            lengths: vec![1.0, 10.0, 100.0],
            thetas: None,
            theta_count: 1,
            resolve_tol: 1e-8,
            eps: vec![0.1, 0.01, 0.001],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MpConfig {
    pub zeta: f64,
    pub omega: Vec<f64>,
    pub kappa: f64,
    pub tau: f64,
    pub strip: f64,
    pub factors: Vec<Factor>,
    pub delta: f64,
    pub modes: i64,
    pub nu: f64,
    /// Seeded random models for the two evaluations of the averaged determinant.
    pub random_models: usize,
    pub residual_tol: f64,
    pub dual_tol: f64,
}

impl Default for MpConfig {
    fn default() -> Self {
        MpConfig {
            zeta: 0.01,
            omega: vec![0.5 * (5f64.sqrt() - 1.0)],
            kappa: 0.1,
            tau: 1.5,
            strip: 0.5,
            factors: Vec::new(),
            delta: 1e-3,
            modes: 64,
            nu: 0.1,
            random_models: 100,
            residual_tol: 1e-10,
            dual_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CraigConfig {
    pub family: Option<SyntheticFamily>,
    pub delta: f64,
    pub base: usize,
    pub doublings: usize,
    pub window: Option<[f64; 2]>,
    pub grid: usize,
    /// Whether the three conditions are expected to hold.
    pub expect_satisfied: bool,
    pub min_homogeneity: f64,
}

impl Default for CraigConfig {
    fn default() -> Self {
        CraigConfig {
            family: None,
            delta: 0.25,
            base: 6,
            doublings: 2,
            window: None,
            grid: 601,
            expect_satisfied: true,
            min_homogeneity: 0.0,
        }
    }
}

/// Values given on the command line; `None` leaves the config untouched.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub command: Option<Command>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Schema(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Schema(e.to_string()))
    }

    pub fn apply(&mut self, o: &Overrides) {
        if o.command.is_some() {
            self.command = o.command;
        }
        if o.out.is_some() {
            self.out.clone_from(&o.out);
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(t) = o.tol {
            self.tol = t;
        }
    }

    /// SHA-256 of the canonical JSON of the effective configuration, with
    /// the output directory removed.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out = None;
        let bytes = serde_json::to_vec(&c).expect("configuration serialises");
        hex::encode(Sha256::digest(&bytes))
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("gapflow-out"))
    }

    pub fn require_gaps(&self) -> Result<&GapSet, CliError> {
        self.gaps.as_ref().ok_or_else(|| CliError::Schema("this command needs `gaps`".into()))
    }

    pub fn require_phases(&self) -> Result<(&GapSet, &[f64]), CliError> {
        let g = self.require_gaps()?;
        let y = self.phases.as_deref().ok_or_else(|| CliError::Schema("this command needs `phases`".into()))?;
        if y.len() != g.len() {
            return Err(CliError::Schema(format!("{} phases given for {} gaps", y.len(), g.len())));
        }
        Ok((g, y))
    }

    pub fn require_potential(&self) -> Result<&QPotential, CliError> {
        let p = self.potential.as_ref().ok_or_else(|| CliError::Schema("this command needs `potential`".into()))?;
        p.validate()?;
        Ok(p)
    }

    /// Checks the fields every pipeline relies on.
    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(CliError::Schema(format!("tol must be positive, got {}", self.tol)));
        }
        let f = &self.field;
        if f.nx < 2 || !(f.length > 0.0) || !(f.dt > 0.0) || f.record_every == 0 {
            return Err(CliError::Schema("field grid needs nx >= 2, positive length and dt, record_every >= 1".into()));
        }
        if let Some([lo, hi]) = f.window {
            if !(hi > lo) {
                return Err(CliError::Schema("field window must be increasing".into()));
            }
        }
        if self.scan.points < 2 || !(self.scan.lambda_max > self.scan.lambda_min) {
            return Err(CliError::Schema("scan needs at least 2 points on an increasing range".into()));
        }
        if self.flow.samples == 0 || self.abel.samples == 0 {
            return Err(CliError::Schema("sample counts must be positive".into()));
        }
        Ok(())
    }
}
