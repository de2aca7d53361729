// SPDX-License-Identifier: MIT OR Apache-2.0

//! Split-step Fourier integration of `i u_t = -u_xx + 2|u|² u` on a
//! periodic box, closed-form oracles, trajectory comparison and an
//! almost-period search.
//!
//! # Binary field layout
//!
//! [`FieldGrid::to_bytes`] writes, all little-endian:
//!
//! | offset | size | content |
//! |---|---|---|
//! | 0 | 8 | magic `b"GAPFIELD"` |
//! | 8 | 8 | `u64` number of x points `nx` |
//! | 16 | 8 | `u64` number of time slices `nt` |
//! | 24 | 8 | `f64` left end `x0` |
//! | 32 | 8 | `f64` box length |
//! | 40 | `8 nt` | `f64` times |
//! | `40 + 8 nt` | `16 nx nt` | samples row-major by time, each as `f64` re then `f64` im |

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

use crate::dubrovin::{evolve, field_along_x, FlowState};
use crate::error::{Error, Result};

/// Samples of a field on a uniform periodic grid at several times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldGrid {
    pub x0: f64,
    pub length: f64,
    pub nx: usize,
    pub times: Vec<f64>,
    pub u: Vec<Vec<Complex64>>,
}

const MAGIC: &[u8; 8] = b"GAPFIELD";

impl FieldGrid {
    pub fn dx(&self) -> f64 {
        self.length / self.nx as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x0 + self.dx() * i as f64
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.nx).map(|i| self.x(i)).collect()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(40 + 8 * self.times.len() + 16 * self.nx * self.times.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(self.nx as u64).to_le_bytes());
        out.extend_from_slice(&(self.times.len() as u64).to_le_bytes());
        out.extend_from_slice(&self.x0.to_le_bytes());
        out.extend_from_slice(&self.length.to_le_bytes());
        for t in &self.times {
            out.extend_from_slice(&t.to_le_bytes());
        }
        for row in &self.u {
            for c in row {
                out.extend_from_slice(&c.re.to_le_bytes());
                out.extend_from_slice(&c.im.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(b: &[u8]) -> Result<Self> {
        let bad = || Error::InvalidInput("malformed field file".into());
        if b.len() < 40 || &b[..8] != MAGIC {
            return Err(bad());
        }
        let u64_at = |o: usize| u64::from_le_bytes(b[o..o + 8].try_into().unwrap());
        let f64_at = |o: usize| f64::from_le_bytes(b[o..o + 8].try_into().unwrap());
        let nx = u64_at(8) as usize;
        let nt = u64_at(16) as usize;
        let need = nt.checked_mul(nx).and_then(|v| v.checked_mul(16)).and_then(|v| v.checked_add(40 + 8 * nt));
        if need != Some(b.len()) {
            return Err(bad());
        }
        let times = (0..nt).map(|i| f64_at(40 + 8 * i)).collect();
        let base = 40 + 8 * nt;
        let u = (0..nt)
            .map(|t| {
                (0..nx)
                    .map(|i| {
                        let o = base + 16 * (t * nx + i);
                        Complex64::new(f64_at(o), f64_at(o + 8))
                    })
                    .collect()
            })
            .collect();
        Ok(FieldGrid { x0: f64_at(24), length: f64_at(32), nx, times, u })
    }
}

/// `c e^{iβ} e^{-2ic²t}`, the constant solution.
pub fn constant_oracle(c: f64, beta: f64, t: f64) -> Complex64 {
    Complex64::from_polar(c, beta - 2.0 * c * c * t)
}

/// `c e^{i(kx - (k² + 2c²)t)}`, the plane-wave solution.
pub fn plane_wave_oracle(c: f64, k: f64, x: f64, t: f64) -> Complex64 {
    Complex64::from_polar(c, k * x - (k * k + 2.0 * c * c) * t)
}

/// Settings for [`split_step_evolve`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitStepOptions {
    pub dt: f64,
    /// Record a slice every this many steps (the final time is always kept).
    pub record_every: usize,
    /// Combine one step of `dt` with two of `dt/2` to cancel the
    /// second-order splitting error.
    pub richardson: bool,
}

impl Default for SplitStepOptions {
    fn default() -> Self {
        SplitStepOptions { dt: 1e-3, record_every: 100, richardson: true }
    }
}

struct Plan {
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    k2: Vec<f64>,
    k: Vec<f64>,
    scratch: Vec<Complex64>,
}

impl Plan {
    fn new(n: usize, length: f64) -> Self {
        let mut planner = FftPlanner::new();
        let k: Vec<f64> = (0..n)
            .map(|i| {
                let m = if i <= n / 2 { i as f64 } else { i as f64 - n as f64 };
                2.0 * PI * m / length
            })
            .collect();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let scratch = vec![Complex64::new(0.0, 0.0); fwd.get_inplace_scratch_len().max(inv.get_inplace_scratch_len())];
        Plan { fwd, inv, k2: k.iter().map(|v| v * v).collect(), k, scratch }
    }

    fn linear(&mut self, u: &mut [Complex64], dt: f64) {
        let n = u.len() as f64;
        self.fwd.process_with_scratch(u, &mut self.scratch);
        for (c, k2) in u.iter_mut().zip(&self.k2) {
            *c *= Complex64::from_polar(1.0 / n, -k2 * dt);
        }
        self.inv.process_with_scratch(u, &mut self.scratch);
    }

    fn strang(&mut self, u: &mut [Complex64], dt: f64) {
        self.linear(u, 0.5 * dt);
        for c in u.iter_mut() {
            *c *= Complex64::from_polar(1.0, -2.0 * c.norm_sqr() * dt);
        }
        self.linear(u, 0.5 * dt);
    }

    fn derivative(&mut self, u: &[Complex64]) -> Vec<Complex64> {
        let n = u.len() as f64;
        let mut v = u.to_vec();
        self.fwd.process_with_scratch(&mut v, &mut self.scratch);
        for (c, k) in v.iter_mut().zip(&self.k) {
            *c *= Complex64::new(0.0, k / n);
        }
        self.inv.process_with_scratch(&mut v, &mut self.scratch);
        v
    }

    /// Fraction of spectral energy in the top eighth of wavenumbers.
    fn tail_fraction(&mut self, u: &[Complex64]) -> f64 {
        let mut v = u.to_vec();
        self.fwd.process_with_scratch(&mut v, &mut self.scratch);
        let kmax = self.k.iter().fold(0.0f64, |a, k| a.max(k.abs()));
        let (mut tail, mut total) = (0.0, 0.0);
        for (c, k) in v.iter().zip(&self.k) {
            total += c.norm_sqr();
            if k.abs() > 0.875 * kmax {
                tail += c.norm_sqr();
            }
        }
        if total == 0.0 {
            0.0
        } else {
            tail / total
        }
    }
}

/// Mass `∫|u|²` on a periodic grid.
pub fn mass(u: &[Complex64], dx: f64) -> f64 {
    u.iter().map(|c| c.norm_sqr()).sum::<f64>() * dx
}

/// Energy `∫ |u_x|² + |u|⁴` with a spectral derivative.
pub fn energy(u: &[Complex64], length: f64) -> f64 {
    let mut plan = Plan::new(u.len(), length);
    let du = plan.derivative(u);
    let dx = length / u.len() as f64;
    u.iter().zip(&du).map(|(c, d)| d.norm_sqr() + c.norm_sqr().powi(2)).sum::<f64>() * dx
}

/// Evolves `u0` on the periodic box `[x0, x0 + length)` up to time `t_end`.
pub fn split_step_evolve(u0: &[Complex64], x0: f64, length: f64, t_end: f64, opts: &SplitStepOptions) -> Result<FieldGrid> {
    let n = u0.len();
    if n < 4 || !(length > 0.0) || !(t_end >= 0.0) || !(opts.dt > 0.0) || opts.record_every == 0 {
        return Err(Error::InvalidInput("split-step needs ≥ 4 points, positive box, dt and record interval".into()));
    }
    if u0.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidInput("initial data must be finite".into()));
    }
    let amp = u0.iter().map(|c| c.norm_sqr()).fold(0.0, f64::max);
    if 2.0 * amp * opts.dt > 0.5 {
        return Err(Error::InvalidInput(format!("dt = {} does not resolve max|u|² = {amp}", opts.dt)));
    }
    let steps = (t_end / opts.dt).round().max(if t_end > 0.0 { 1.0 } else { 0.0 }) as usize;
    let dt = if steps > 0 { t_end / steps as f64 } else { 0.0 };
    let mut plan = Plan::new(n, length);
    let tail0 = plan.tail_fraction(u0);
    let mut u = u0.to_vec();
    let mut grid = FieldGrid { x0, length, nx: n, times: vec![0.0], u: vec![u.clone()] };
    for s in 1..=steps {
        if opts.richardson {
            let mut coarse = u.clone();
            plan.strang(&mut coarse, dt);
            plan.strang(&mut u, 0.5 * dt);
            plan.strang(&mut u, 0.5 * dt);
            for (f, c) in u.iter_mut().zip(&coarse) {
                *f = (4.0 * *f - c) / 3.0;
            }
        } else {
            plan.strang(&mut u, dt);
        }
        if s % opts.record_every == 0 || s == steps {
            if u.iter().any(|c| !c.is_finite()) {
                return Err(Error::Numerical(format!("split-step blow-up at t = {}", s as f64 * dt)));
            }
            let tail = plan.tail_fraction(&u);
            if tail > 1e-2 && tail > 100.0 * tail0 {
                return Err(Error::Numerical(format!(
                    "spectral tail grew to {tail:e} at t = {}; refine the grid",
                    s as f64 * dt
                )));
            }
            grid.times.push(s as f64 * dt);
            grid.u.push(u.clone());
        }
    }
    Ok(grid)
}

/// Outcome of [`compare_trajectories`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub sup_error: f64,
    /// Discrete `L²` distance over the compared window and times.
    pub l2_error: f64,
    pub sup_u: f64,
    pub sup_ux: f64,
}

/// Pointwise and `L²` distance between two fields on a common grid,
/// restricted to `x` in `window` when given.
pub fn compare_trajectories(a: &FieldGrid, b: &FieldGrid, window: Option<(f64, f64)>) -> Result<Comparison> {
    if a.nx != b.nx || a.times.len() != b.times.len() {
        return Err(Error::LengthMismatch { expected: a.nx * a.times.len(), got: b.nx * b.times.len() });
    }
    let tol = 1e-9 * (1.0 + a.length.abs());
    if (a.x0 - b.x0).abs() > tol || (a.length - b.length).abs() > tol {
        return Err(Error::InvalidInput("x-grids differ".into()));
    }
    if a.times.iter().zip(&b.times).any(|(s, t)| (s - t).abs() > 1e-9 * (1.0 + s.abs())) {
        return Err(Error::InvalidInput("time grids differ".into()));
    }
    let inside = |x: f64| window.is_none_or(|(lo, hi)| x >= lo && x <= hi);
    let mut plan = Plan::new(a.nx, a.length);
    let mut cmp = Comparison { sup_error: 0.0, l2_error: 0.0, sup_u: 0.0, sup_ux: 0.0 };
    let mut acc = 0.0;
    for (ra, rb) in a.u.iter().zip(&b.u) {
        let du = plan.derivative(ra);
        for i in 0..a.nx {
            if !inside(a.x(i)) {
                continue;
            }
            let e = (ra[i] - rb[i]).norm();
            cmp.sup_error = cmp.sup_error.max(e);
            acc += e * e * a.dx();
            cmp.sup_u = cmp.sup_u.max(ra[i].norm());
            cmp.sup_ux = cmp.sup_ux.max(du[i].norm());
        }
    }
    cmp.l2_error = (acc / a.times.len() as f64).sqrt();
    Ok(cmp)
}

/// Outcome of [`almost_period_search`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlmostPeriods {
    pub shifts: Vec<f64>,
    /// Largest distance between consecutive almost-periods (starting at 0).
    pub max_gap: f64,
    /// True when the window is too short to judge relative density.
    pub inconclusive: bool,
}

/// All grid shifts `T ∈ (0, max_shift]` with `sup_x |u(x) - u(x - T)| < ε`,
/// the supremum taken over `x` where both samples lie in the window.
pub fn almost_period_search(u: &[Complex64], dx: f64, eps: f64, max_shift: f64) -> Result<AlmostPeriods> {
    if !(dx > 0.0) || !(eps > 0.0) || !(max_shift > 0.0) {
        return Err(Error::InvalidInput("grid step, ε and shift range must be positive".into()));
    }
    let max_s = (max_shift / dx).floor() as usize;
    if max_s + 8 > u.len() {
        return Err(Error::InvalidInput("window shorter than the shift range".into()));
    }
    let mut shifts = Vec::new();
    for s in 1..=max_s {
        let ok = (s..u.len()).all(|i| (u[i] - u[i - s]).norm() < eps);
        if ok {
            shifts.push(s as f64 * dx);
        }
    }
    let mut prev = 0.0;
    let mut max_gap: f64 = 0.0;
    for &t in &shifts {
        max_gap = max_gap.max(t - prev);
        prev = t;
    }
    max_gap = max_gap.max(max_s as f64 * dx - prev);
    let inconclusive = shifts.len() < 2 || max_gap > 0.5 * max_s as f64 * dx;
    Ok(AlmostPeriods { shifts, max_gap, inconclusive })
}

/// Smooth window equal to 1 away from the box ends and vanishing with all
/// derivatives near them: `(tanh((x - a)/w) - tanh((x - b)/w)) / 2` with
/// `a = x0 + 6w`, `b = x0 + length - 6w`.
pub fn taper(x: f64, x0: f64, length: f64, width: f64) -> f64 {
    let a = x0 + 6.0 * width;
    let b = x0 + length - 6.0 * width;
    0.5 * (((x - a) / width).tanh() - ((x - b) / width).tanh())
}

/// Finite-gap field sampled on the periodic grid `x0 + i·length/nx` at the
/// given times, from Dubrovin flows started at `state`.
pub fn finite_gap_field(state: &FlowState, x0: f64, length: f64, nx: usize, times: &[f64], tol: f64) -> Result<FieldGrid> {
    use rayon::prelude::*;
    if nx < 2 || !(length > 0.0) {
        return Err(Error::InvalidInput("grid needs at least 2 points and positive length".into()));
    }
    let rows: Vec<Vec<Complex64>> = times
        .par_iter()
        .map(|&t| {
            let start = evolve(state, x0 - state.x, t - state.t, 0.0, tol)?;
            let mut row: Vec<Complex64> = field_along_x(&start, length, nx, tol)?.into_iter().map(|(_, u)| u).collect();
            row.truncate(nx);
            Ok(row)
        })
        .collect::<Result<_>>()?;
    Ok(FieldGrid { x0, length, nx, times: times.to_vec(), u: rows })
}
