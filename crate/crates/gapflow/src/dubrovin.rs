// SPDX-License-Identifier: MIT OR Apache-2.0

//! The rotation, translation and NLS-time flows on Dirichlet data, written
//! as vector fields in phase coordinates.
//!
//! With `mu_j = a_j + γ_j sin²(y_j)` every field has the form
//! `dy_j/ds = F_j(mu) · W_j(mu)` where
//!
//! ```text
//! W_j = Π_{l≠j} sqrt((a_l - mu_j)(b_l - mu_j) / (mu_l - mu_j)²)
//! ```
//!
//! and `F_j` is `-1/2` (rotation `β`), `Q1/2 + mu_j` (translation `x`) or
//! `κ_t (Q2/4 + Q1²/8 + s mu_j Q1/2 + mu_j²)` (time `t`). Gap edges are
//! ordinary points of these fields.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::ode;
use crate::reflectionless::reconstruct_field;
use crate::spectral_domain::{phase_to_mu, phases_to_divisor, GapSet, PhaseVector};

/// Default local tolerance of the flow integrator.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Sign and clock of the time field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeConvention {
    /// Sign of the `mu_j Q1` term.
    pub sign_s: i8,
    /// Clock ratio between the NLS time and the second-flow time.
    pub kappa_t: f64,
    /// Whether this pair was produced by [`calibrate_time_field`].
    pub calibrated: bool,
}

impl TimeConvention {
    /// The pair that matches the constant-solution oracle.
    pub const CALIBRATED: TimeConvention = TimeConvention { sign_s: 1, kappa_t: 2.0, calibrated: true };

    /// The pair read literally from the printed field; kept for comparison.
    pub const PRINTED: TimeConvention = TimeConvention { sign_s: -1, kappa_t: 1.0, calibrated: false };
}

impl Default for TimeConvention {
    fn default() -> Self {
        TimeConvention::CALIBRATED
    }
}

/// Phase state together with the three flow clocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowState {
    pub y: PhaseVector,
    pub gaps: GapSet,
    pub x: f64,
    pub t: f64,
    pub beta: f64,
}

impl FlowState {
    pub fn new(y: PhaseVector, gaps: GapSet) -> Result<Self> {
        if y.len() != gaps.len() {
            return Err(Error::LengthMismatch { expected: gaps.len(), got: y.len() });
        }
        if y.0.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("phase angles must be finite".into()));
        }
        Ok(FlowState { y, gaps, x: 0.0, t: 0.0, beta: 0.0 })
    }
}

fn mus(y: &[f64], g: &GapSet) -> Vec<f64> {
    y.iter().zip(g.gaps()).map(|(&v, &(a, b))| phase_to_mu(v, a, b)).collect()
}

fn weight_from_mus(j: usize, mu: &[f64], g: &GapSet) -> f64 {
    let m = mu[j];
    let mut acc = 1.0;
    for (l, &(a, b)) in g.gaps().iter().enumerate() {
        if l != j {
            let d = mu[l] - m;
            acc *= ((a - m) * (b - m)).abs().sqrt() / d.abs();
        }
    }
    acc
}

fn q_sums(mu: &[f64], g: &GapSet) -> (f64, f64) {
    let mut q1 = 0.0;
    let mut q2 = 0.0;
    for (&m, &(a, b)) in mu.iter().zip(g.gaps()) {
        q1 += a + b - 2.0 * m;
        q2 += a * a + b * b - 2.0 * m * m;
    }
    (q1, q2)
}

/// `W_j` for a divisor given through its eigenvalues.
pub fn weight_w(j: usize, mu: &[f64], g: &GapSet) -> Result<f64> {
    if mu.len() != g.len() {
        return Err(Error::LengthMismatch { expected: g.len(), got: mu.len() });
    }
    if j >= mu.len() {
        return Err(Error::InvalidInput(format!("index {j} out of range")));
    }
    if mu.iter().enumerate().any(|(l, &v)| l != j && v == mu[j]) {
        return Err(Error::Numerical("coincident Dirichlet eigenvalues".into()));
    }
    Ok(weight_from_mus(j, mu, g))
}

fn check_len(y: &PhaseVector, g: &GapSet) -> Result<()> {
    if y.len() != g.len() {
        return Err(Error::LengthMismatch { expected: g.len(), got: y.len() });
    }
    Ok(())
}

/// `dy/dβ`, the rotation field `-W_j/2`.
pub fn field_rotation(y: &PhaseVector, g: &GapSet) -> Result<PhaseVector> {
    check_len(y, g)?;
    let mut out = vec![0.0; y.len()];
    rotation_into(&y.0, g, &mut out);
    Ok(PhaseVector(out))
}

/// `dy/dx`, the translation field `Ψ_j = (Q1/2 + mu_j) W_j`.
pub fn field_psi(y: &PhaseVector, g: &GapSet) -> Result<PhaseVector> {
    check_len(y, g)?;
    let mut out = vec![0.0; y.len()];
    psi_into(&y.0, g, &mut out);
    Ok(PhaseVector(out))
}

/// `dy/dt`, the time field `Ξ_j` on the NLS clock.
pub fn field_xi(y: &PhaseVector, g: &GapSet, conv: TimeConvention) -> Result<PhaseVector> {
    check_len(y, g)?;
    if !conv.calibrated {
        return Err(Error::InvalidInput(
            "time convention has not been calibrated; use field_xi_unchecked to evaluate it".into(),
        ));
    }
    Ok(field_xi_unchecked(y, g, conv))
}

/// Time field for an arbitrary `(s, κ_t)` pair, calibrated or not.
pub fn field_xi_unchecked(y: &PhaseVector, g: &GapSet, conv: TimeConvention) -> PhaseVector {
    let mut out = vec![0.0; y.len()];
    xi_into(&y.0, g, conv, &mut out);
    PhaseVector(out)
}

fn rotation_into(y: &[f64], g: &GapSet, out: &mut [f64]) {
    let mu = mus(y, g);
    for (j, o) in out.iter_mut().enumerate() {
        *o = -0.5 * weight_from_mus(j, &mu, g);
    }
}

fn psi_into(y: &[f64], g: &GapSet, out: &mut [f64]) {
    let mu = mus(y, g);
    let (q1, _) = q_sums(&mu, g);
    for (j, o) in out.iter_mut().enumerate() {
        *o = (0.5 * q1 + mu[j]) * weight_from_mus(j, &mu, g);
    }
}

fn xi_into(y: &[f64], g: &GapSet, conv: TimeConvention, out: &mut [f64]) {
    let mu = mus(y, g);
    let (q1, q2) = q_sums(&mu, g);
    let s = f64::from(conv.sign_s);
    for (j, o) in out.iter_mut().enumerate() {
        let m = mu[j];
        let core = 0.25 * q2 + 0.125 * q1 * q1 + 0.5 * s * m * q1 + m * m;
        *o = conv.kappa_t * core * weight_from_mus(j, &mu, g);
    }
}

/// Which of the three commuting flows to follow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlowAxis {
    X,
    T,
    Beta,
}

fn integrate_axis(
    y: &[f64],
    g: &GapSet,
    axis: FlowAxis,
    span: f64,
    tol: f64,
    conv: TimeConvention,
) -> Result<Vec<f64>> {
    match axis {
        FlowAxis::X => ode::integrate(&|y: &[f64], d: &mut [f64]| psi_into(y, g, d), y, span, tol),
        FlowAxis::T => ode::integrate(&|y: &[f64], d: &mut [f64]| xi_into(y, g, conv, d), y, span, tol),
        FlowAxis::Beta => {
            ode::integrate(&|y: &[f64], d: &mut [f64]| rotation_into(y, g, d), y, span, tol)
        }
    }
}

/// Flows the state by `dt` in time, then `dx` in space, then `dbeta` in
/// phase, using the calibrated time field.
pub fn evolve(state: &FlowState, dx: f64, dt: f64, dbeta: f64, tol: f64) -> Result<FlowState> {
    evolve_with(state, dx, dt, dbeta, tol, TimeConvention::CALIBRATED)
}

/// [`evolve`] with an explicit time convention.
pub fn evolve_with(
    state: &FlowState,
    dx: f64,
    dt: f64,
    dbeta: f64,
    tol: f64,
    conv: TimeConvention,
) -> Result<FlowState> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput("tolerance must be positive".into()));
    }
    let g = &state.gaps;
    let mut y = state.y.0.clone();
    y = integrate_axis(&y, g, FlowAxis::T, dt, tol, conv)?;
    y = integrate_axis(&y, g, FlowAxis::X, dx, tol, conv)?;
    y = integrate_axis(&y, g, FlowAxis::Beta, dbeta, tol, conv)?;
    Ok(FlowState {
        y: PhaseVector(y),
        gaps: g.clone(),
        x: state.x + dx,
        t: state.t + dt,
        beta: state.beta + dbeta,
    })
}

/// One sample along a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub x: f64,
    pub t: f64,
    pub beta: f64,
    pub y: Vec<f64>,
}

/// Samples the flow along one axis at `samples + 1` equally spaced clocks.
pub fn trajectory(
    state: &FlowState,
    axis: FlowAxis,
    span: f64,
    samples: usize,
    tol: f64,
) -> Result<Vec<TrajectoryPoint>> {
    let g = &state.gaps;
    let conv = TimeConvention::CALIBRATED;
    let ys = match axis {
        FlowAxis::X => ode::trajectory(&|y: &[f64], d: &mut [f64]| psi_into(y, g, d), &state.y.0, span, samples, tol)?,
        FlowAxis::T => ode::trajectory(&|y: &[f64], d: &mut [f64]| xi_into(y, g, conv, d), &state.y.0, span, samples, tol)?,
        FlowAxis::Beta => ode::trajectory(&|y: &[f64], d: &mut [f64]| rotation_into(y, g, d), &state.y.0, span, samples, tol)?,
    };
    let n = ys.len().saturating_sub(1).max(1) as f64;
    Ok(ys
        .into_iter()
        .enumerate()
        .map(|(i, y)| {
            let s = span * i as f64 / n;
            let (dx, dt, db) = match axis {
                FlowAxis::X => (s, 0.0, 0.0),
                FlowAxis::T => (0.0, s, 0.0),
                FlowAxis::Beta => (0.0, 0.0, s),
            };
            TrajectoryPoint { x: state.x + dx, t: state.t + dt, beta: state.beta + db, y }
        })
        .collect())
}

/// Field value `phi` for a phase state: the real part comes from the state
/// itself, the imaginary part from the state rotated by `β = -π/2`.
pub fn field_at(y: &PhaseVector, g: &GapSet, tol: f64) -> Result<Complex64> {
    let d = phases_to_divisor(y, g)?;
    let rotated = integrate_axis(&y.0, g, FlowAxis::Beta, -0.5 * PI, tol, TimeConvention::CALIBRATED)?;
    let d_rot = phases_to_divisor(&PhaseVector(rotated), g)?;
    reconstruct_field(&d, &d_rot, g)
}

/// Field samples along an `x`-trajectory, computed from two trajectories
/// (the state and its `-π/2` rotation) which commute with translation.
pub fn field_along_x(
    state: &FlowState,
    span: f64,
    samples: usize,
    tol: f64,
) -> Result<Vec<(f64, Complex64)>> {
    let g = &state.gaps;
    let main = trajectory(state, FlowAxis::X, span, samples, tol)?;
    let rot_state = evolve(state, 0.0, 0.0, -0.5 * PI, tol)?;
    let rot = trajectory(&rot_state, FlowAxis::X, span, samples, tol)?;
    main.iter()
        .zip(&rot)
        .map(|(p, r)| {
            let d = phases_to_divisor(&PhaseVector(p.y.clone()), g)?;
            let dr = phases_to_divisor(&PhaseVector(r.y.clone()), g)?;
            Ok((p.x, reconstruct_field(&d, &dr, g)?))
        })
        .collect()
}

/// One row of the calibration table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRow {
    pub sign_s: i8,
    pub kappa_t: f64,
    pub max_phase_error: f64,
}

/// Outcome of the time-field calibration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub convention: TimeConvention,
    pub c: f64,
    pub max_phase_error: f64,
    pub table: Vec<CalibrationRow>,
    /// Printed field at `mu = c` compared with the oracle rate `c²`.
    pub printed_rate_at_edge: f64,
    pub oracle_rate: f64,
}

/// Tolerance on the phase error for a candidate pair to match the oracle.
pub const CALIBRATION_TOL: f64 = 1e-8;

/// Picks `(s, κ_t) ∈ {±1} × {1/2, 1, 2}` by matching the integrated phase
/// flow against the constant solution `c e^{-2ic²t}`, whose divisor is
/// `mu(t) = c cos(2c²t)`, i.e. `y(t) = π/2 + c² t`, over `t ∈ [0, 1/c²]`.
pub fn calibrate_time_field(g_onegap: &GapSet) -> Result<Calibration> {
    if g_onegap.len() != 1 {
        return Err(Error::InvalidInput("calibration needs exactly one gap".into()));
    }
    let (a, b) = g_onegap.gap(0);
    if (a + b).abs() > 1e-14 * (b - a) {
        return Err(Error::InvalidInput("calibration needs a symmetric gap (-c, c)".into()));
    }
    let c = 0.5 * (b - a);
    let t_end = 1.0 / (c * c);
    let samples = 32;
    let y0 = [0.5 * PI];
    let mut table = Vec::new();
    for sign_s in [1i8, -1] {
        for kappa_t in [0.5, 1.0, 2.0] {
            let conv = TimeConvention { sign_s, kappa_t, calibrated: false };
            let traj = ode::trajectory(
                &|y: &[f64], d: &mut [f64]| xi_into(y, g_onegap, conv, d),
                &y0,
                t_end,
                samples,
                1e-12,
            )?;
            let err = traj
                .iter()
                .enumerate()
                .map(|(i, y)| {
                    let t = t_end * i as f64 / samples as f64;
                    (y[0] - (0.5 * PI + c * c * t)).abs()
                })
                .fold(0.0, f64::max);
            table.push(CalibrationRow { sign_s, kappa_t, max_phase_error: err });
        }
    }
    let matches: Vec<&CalibrationRow> =
        table.iter().filter(|r| r.max_phase_error <= CALIBRATION_TOL).collect();
    if matches.len() != 1 {
        return Err(Error::Numerical(format!(
            "time-field calibration found {} matching pairs: {table:?}",
            matches.len()
        )));
    }
    let best = *matches[0];
    let printed = field_xi_unchecked(&PhaseVector(vec![0.5 * PI]), g_onegap, TimeConvention::PRINTED);
    Ok(Calibration {
        convention: TimeConvention { sign_s: best.sign_s, kappa_t: best.kappa_t, calibrated: true },
        c,
        max_phase_error: best.max_phase_error,
        table,
        printed_rate_at_edge: printed.0[0],
        oracle_rate: c * c,
    })
}
