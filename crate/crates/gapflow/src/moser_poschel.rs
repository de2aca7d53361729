// SPDX-License-Identifier: MIT OR Apache-2.0

//! One averaging step at a gap edge.
//!
//! A quasiperiodic system reduced to the parabolic constant
//! `A = (ζ/2) [[i, -i], [i, -i]]` by an analytic `B: T^d → SU(1,1)` is
//! perturbed in energy by `Δ`, which produces `A + Δ P(θ)` with
//! `P = B⁻¹ diag(-i, i) B`. Solving the homological equation
//! `∂_ω Y = [A, Y] + Δ (P - [P])` in Fourier space and conjugating by
//! `exp(Y)` leaves the constant part `Ã = A + Δ [P]`, whose determinant
//! `d(Δ)` decides whether `λ + Δ` is in the spectrum.
//!
//! Here the torus is `R^d / 2πZ^d`, modes are `exp(i <n, θ>)` and the
//! derivative along the flow multiplies mode `n` by `i <n, ω>`. Series
//! norms are `||F||_r = Σ ||F^(n)|| exp(r |n|_1)` with the max-row-sum
//! matrix norm, which is submultiplicative under convolution.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;
use std::collections::BTreeMap;
use std::f64::consts::PI;

use crate::error::{Error, Result};

pub type M2 = [[Complex64; 2]; 2];

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

fn m_mul(a: &M2, b: &M2) -> M2 {
    let mut out = [[ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

fn m_add(a: &M2, b: &M2, s: Complex64) -> M2 {
    [[a[0][0] + s * b[0][0], a[0][1] + s * b[0][1]], [a[1][0] + s * b[1][0], a[1][1] + s * b[1][1]]]
}

fn m_norm(a: &M2) -> f64 {
    (a[0][0].norm() + a[0][1].norm()).max(a[1][0].norm() + a[1][1].norm())
}

fn m_det(a: &M2) -> Complex64 {
    a[0][0] * a[1][1] - a[0][1] * a[1][0]
}

fn expm_traceless(w: &M2) -> M2 {
    let s2 = w[0][0] * w[0][0] + w[0][1] * w[1][0];
    let s = s2.sqrt();
    let (ch, sh) = if s.norm() < 1e-4 {
        (ONE + s2 / 2.0 + s2 * s2 / 24.0, ONE + s2 / 6.0 + s2 * s2 / 120.0)
    } else {
        (s.cosh(), s.sinh() / s)
    };
    [[ch + sh * w[0][0], sh * w[0][1]], [sh * w[1][0], ch + sh * w[1][1]]]
}

fn l1(n: &[i64]) -> f64 {
    n.iter().map(|k| k.abs() as f64).sum()
}

fn dot(n: &[i64], w: &[f64]) -> f64 {
    n.iter().zip(w).map(|(&k, x)| k as f64 * x).sum()
}

/// Scalar trigonometric polynomial on `T^d`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub modes: BTreeMap<Vec<i64>, Complex64>,
}

impl Series {
    pub fn constant(d: usize, c: Complex64) -> Self {
        let mut modes = BTreeMap::new();
        modes.insert(vec![0; d], c);
        Series { modes }
    }

    pub fn mul(&self, other: &Series) -> Series {
        let mut modes: BTreeMap<Vec<i64>, Complex64> = BTreeMap::new();
        for (n, a) in &self.modes {
            for (m, b) in &other.modes {
                let k: Vec<i64> = n.iter().zip(m).map(|(x, y)| x + y).collect();
                *modes.entry(k).or_insert(ZERO) += a * b;
            }
        }
        Series { modes }
    }

    /// The series of `conj(f(θ))`.
    pub fn conj(&self) -> Series {
        Series { modes: self.modes.iter().map(|(n, c)| (n.iter().map(|k| -k).collect(), c.conj())).collect() }
    }

    pub fn add(&self, other: &Series, s: Complex64) -> Series {
        let mut modes = self.modes.clone();
        for (n, c) in &other.modes {
            *modes.entry(n.clone()).or_insert(ZERO) += s * c;
        }
        Series { modes }
    }

    pub fn mean(&self) -> Complex64 {
        self.modes.iter().find(|(n, _)| n.iter().all(|&k| k == 0)).map_or(ZERO, |(_, c)| *c)
    }

    pub fn eval(&self, theta: &[f64]) -> Complex64 {
        self.modes.iter().map(|(n, c)| c * Complex64::from_polar(1.0, dot(n, theta))).sum()
    }
}

/// Matrix-valued trigonometric polynomial on `T^d`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MatSeries {
    pub modes: BTreeMap<Vec<i64>, M2>,
}

impl MatSeries {
    pub fn from_entries(e: [[&Series; 2]; 2]) -> Self {
        let mut modes: BTreeMap<Vec<i64>, M2> = BTreeMap::new();
        for i in 0..2 {
            for j in 0..2 {
                for (n, c) in &e[i][j].modes {
                    modes.entry(n.clone()).or_insert([[ZERO; 2]; 2])[i][j] += c;
                }
            }
        }
        MatSeries { modes }
    }

    pub fn mul(&self, other: &MatSeries) -> MatSeries {
        let mut modes: BTreeMap<Vec<i64>, M2> = BTreeMap::new();
        for (n, a) in &self.modes {
            for (m, b) in &other.modes {
                let k: Vec<i64> = n.iter().zip(m).map(|(x, y)| x + y).collect();
                let e = modes.entry(k).or_insert([[ZERO; 2]; 2]);
                *e = m_add(e, &m_mul(a, b), ONE);
            }
        }
        MatSeries { modes }
    }

    pub fn entry(&self, i: usize, j: usize) -> Series {
        Series { modes: self.modes.iter().map(|(n, m)| (n.clone(), m[i][j])).collect() }
    }

    pub fn mean(&self) -> M2 {
        self.modes.iter().find(|(n, _)| n.iter().all(|&k| k == 0)).map_or([[ZERO; 2]; 2], |(_, m)| *m)
    }

    pub fn eval(&self, theta: &[f64]) -> M2 {
        let mut out = [[ZERO; 2]; 2];
        for (n, m) in &self.modes {
            out = m_add(&out, m, Complex64::from_polar(1.0, dot(n, theta)));
        }
        out
    }

    /// `Σ ||F^(n)|| exp(r |n|_1)`.
    pub fn norm(&self, r: f64) -> f64 {
        self.modes.iter().map(|(n, m)| m_norm(m) * (r * l1(n)).exp()).sum()
    }

    /// Derivative along the flow, `Σ i <n, ω> F^(n) e^{i<n,θ>}`.
    pub fn flow_derivative(&self, omega: &[f64]) -> MatSeries {
        MatSeries {
            modes: self
                .modes
                .iter()
                .map(|(n, m)| {
                    let f = I * dot(n, omega);
                    (n.clone(), [[f * m[0][0], f * m[0][1]], [f * m[1][0], f * m[1][1]]])
                })
                .collect(),
        }
    }
}

/// Elementary `SU(1,1)`-valued factors used to assemble conjugations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Factor {
    /// `[[cosh r, sinh r e^{i<n,θ>}], [sinh r e^{-i<n,θ>}, cosh r]]`.
    Hyperbolic { r: f64, n: Vec<i64> },
    /// `diag(e^{i<m,θ>}, e^{-i<m,θ>})`.
    Diagonal { m: Vec<i64> },
}

impl Factor {
    fn series(&self, d: usize) -> Result<MatSeries> {
        let single = |n: &[i64], c: Complex64| {
            let mut modes = BTreeMap::new();
            modes.insert(n.to_vec(), c);
            Series { modes }
        };
        let neg = |n: &[i64]| n.iter().map(|k| -k).collect::<Vec<_>>();
        let zero = vec![0; d];
        match self {
            Factor::Hyperbolic { r, n } => {
                if n.len() != d {
                    return Err(Error::LengthMismatch { expected: d, got: n.len() });
                }
                let ch = single(&zero, Complex64::new(r.cosh(), 0.0));
                let sh = Complex64::new(r.sinh(), 0.0);
                Ok(MatSeries::from_entries([[&ch, &single(n, sh)], [&single(&neg(n), sh), &ch]]))
            }
            Factor::Diagonal { m } => {
                if m.len() != d {
                    return Err(Error::LengthMismatch { expected: d, got: m.len() });
                }
                let z = Series::default();
                Ok(MatSeries::from_entries([[&single(m, ONE), &z], [&z, &single(&neg(m), ONE)]]))
            }
        }
    }
}

/// Parabolic reduction data `(ζ, B)` with frequency and strip constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParabolicModel {
    pub zeta: f64,
    pub b11: Series,
    pub b12: Series,
    pub omega: Vec<f64>,
    pub kappa: f64,
    pub tau: f64,
    /// Strip width `R` for the weighted norms.
    pub strip: f64,
}

impl ParabolicModel {
    /// `B = identity`.
    pub fn identity(zeta: f64, omega: Vec<f64>, kappa: f64, tau: f64, strip: f64) -> Self {
        let d = omega.len();
        ParabolicModel {
            zeta,
            b11: Series::constant(d, ONE),
            b12: Series::default(),
            omega,
            kappa,
            tau,
            strip,
        }
    }

    /// `B` as an ordered product of elementary factors.
    pub fn from_factors(zeta: f64, omega: Vec<f64>, kappa: f64, tau: f64, strip: f64, factors: &[Factor]) -> Result<Self> {
        let d = omega.len();
        let mut b = MatSeries::from_entries([
            [&Series::constant(d, ONE), &Series::default()],
            [&Series::default(), &Series::constant(d, ONE)],
        ]);
        for f in factors {
            b = b.mul(&f.series(d)?);
        }
        let m = ParabolicModel { zeta, b11: b.entry(0, 0), b12: b.entry(0, 1), omega, kappa, tau, strip };
        m.validate()?;
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.omega.len()
    }

    /// The full series of `B = [[b11, b12], [conj b12, conj b11]]`.
    pub fn b_series(&self) -> MatSeries {
        MatSeries::from_entries([[&self.b11, &self.b12], [&self.b12.conj(), &self.b11.conj()]])
    }

    /// `||B||_R`.
    pub fn b_norm(&self) -> f64 {
        self.b_series().norm(self.strip)
    }

    /// Largest deviation of `|b11|² - |b12|²` from 1 on the check grid.
    pub fn su11_defect(&self) -> f64 {
        check_grid(self.dim())
            .iter()
            .map(|th| (self.b11.eval(th).norm_sqr() - self.b12.eval(th).norm_sqr() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.zeta > 0.0) || !(self.kappa > 0.0) || !(self.tau > 0.0) || !(self.strip > 0.0) {
            return Err(Error::InvalidInput("ζ, κ, τ and R must be positive".into()));
        }
        let d = self.dim();
        if self.b11.modes.keys().chain(self.b12.modes.keys()).any(|n| n.len() != d) {
            return Err(Error::InvalidInput("Fourier labels must match the frequency dimension".into()));
        }
        let defect = self.su11_defect();
        if defect > 1e-8 {
            return Err(Error::InvalidInput(format!("B is not SU(1,1)-valued: defect {defect:e}")));
        }
        Ok(())
    }

    /// Averages `S = [|b11|² + |b12|²]` and `c = [b11 conj(b12)]`.
    pub fn averages(&self) -> (f64, Complex64) {
        let s = self.b11.mul(&self.b11.conj()).add(&self.b12.mul(&self.b12.conj()), ONE).mean().re;
        let c = self.b11.mul(&self.b12.conj()).mean();
        (s, c)
    }
}

/// Deterministic evaluation points on `T^d` (additive recurrence).
pub fn check_grid(d: usize) -> Vec<Vec<f64>> {
    let count = if d == 1 { 257 } else { 1024 };
    crate::direct_spectral::theta_samples(d, count)
        .into_iter()
        .map(|t| t.into_iter().map(|x| 2.0 * PI * x).collect())
        .collect()
}

/// `D_τ = 2^{3τ+8} Γ(3τ+1)`.
pub fn d_tau(tau: f64) -> f64 {
    2f64.powf(3.0 * tau + 8.0) * gamma(3.0 * tau + 1.0)
}

/// The parabolic constant `A = (ζ/2) [[i, -i], [i, -i]]`.
pub fn parabolic_a(zeta: f64) -> M2 {
    let h = Complex64::new(0.0, 0.5 * zeta);
    [[h, -h], [h, -h]]
}

/// `P = [[-i(|b11|²+|b12|²), -2i conj(b11) b12], [2i b11 conj(b12), i(|b11|²+|b12|²)]]`
/// by Fourier convolution.
pub fn perturbation_from_conjugation(m: &ParabolicModel) -> Result<MatSeries> {
    m.validate()?;
    let s = m.b11.mul(&m.b11.conj()).add(&m.b12.mul(&m.b12.conj()), ONE);
    let p11 = Series { modes: s.modes.iter().map(|(n, c)| (n.clone(), -I * c)).collect() };
    let p22 = Series { modes: s.modes.iter().map(|(n, c)| (n.clone(), I * c)).collect() };
    let off = m.b11.conj().mul(&m.b12);
    let p12 = Series { modes: off.modes.iter().map(|(n, c)| (n.clone(), -2.0 * I * c)).collect() };
    let off2 = m.b11.mul(&m.b12.conj());
    let p21 = Series { modes: off2.modes.iter().map(|(n, c)| (n.clone(), 2.0 * I * c)).collect() };
    Ok(MatSeries::from_entries([[&p11, &p12], [&p21, &p22]]))
}

/// `P` evaluated pointwise as `B⁻¹ diag(-i, i) B`, used as an independent
/// check of [`perturbation_from_conjugation`].
pub fn perturbation_pointwise(m: &ParabolicModel, theta: &[f64]) -> M2 {
    let b = m.b_series().eval(theta);
    let det = m_det(&b);
    let inv = [[b[1][1] / det, -b[0][1] / det], [-b[1][0] / det, b[0][0] / det]];
    let j = [[-I, ZERO], [ZERO, I]];
    m_mul(&inv, &m_mul(&j, &b))
}

/// Solution of the homological equation on `0 < |n|_∞ ≤ N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomologicalSolution {
    pub y: MatSeries,
    /// `sup_θ ||∂_ω Y - [A, Y] - Δ (P - [P])||` on the check grid.
    pub residual: f64,
    /// Whether `|Δ| < D_τ⁻¹ κ³ R^{3τ+1} ||B||_R⁻²`.
    pub precondition_holds: bool,
    pub small_divisor_floor: f64,
}

/// Fourier coefficients of `Y` for one mode with `ν = <n, ω>`:
///
/// ```text
/// Y11 = iΔ/(2ν³) ζ [(ν+ζ) P12 + (ν-ζ) P21] - iΔ (ν²-ζ²)/ν³ P11
/// Y12 = iΔ/(2ν³) [-2ζ(ν+ζ) P11 + ζ² P21 - (2ν² + 2ζν + ζ²) P12]
/// Y21 = iΔ/(2ν³) [-2ζ(ν-ζ) P11 + ζ² P12 + (2ζν - 2ν² - ζ²) P21]
/// ```
pub fn mode_solution(zeta: f64, nu: f64, delta: f64, p: &M2) -> M2 {
    let k = I * delta / (2.0 * nu.powi(3));
    let (p11, p12, p21) = (p[0][0], p[0][1], p[1][0]);
    let y11 = k * zeta * ((nu + zeta) * p12 + (nu - zeta) * p21) - I * delta * (nu * nu - zeta * zeta) / nu.powi(3) * p11;
    let y12 = k * (-2.0 * zeta * (nu + zeta) * p11 + zeta * zeta * p21 - (2.0 * nu * nu + 2.0 * zeta * nu + zeta * zeta) * p12);
    let y21 = k * (-2.0 * zeta * (nu - zeta) * p11 + zeta * zeta * p12 + (2.0 * zeta * nu - 2.0 * nu * nu - zeta * zeta) * p21);
    [[y11, y12], [y21, -y11]]
}

fn commutator(a: &M2, b: &M2) -> M2 {
    m_add(&m_mul(a, b), &m_mul(b, a), -ONE)
}

/// Solves `∂_ω Y = [A, Y] + Δ (P - [P])` mode by mode.
pub fn homological_solve(m: &ParabolicModel, p: &MatSeries, delta: f64, big_n: i64) -> Result<HomologicalSolution> {
    m.validate()?;
    if big_n < 1 {
        return Err(Error::InvalidInput("truncation N must be at least 1".into()));
    }
    let floor = m.kappa / (2.0 * (big_n as f64).powf(m.tau));
    let mut y = MatSeries::default();
    for (n, pn) in &p.modes {
        let sup = n.iter().map(|k| k.abs()).max().unwrap_or(0);
        if sup == 0 || sup > big_n {
            continue;
        }
        let nu = dot(n, &m.omega);
        if nu.abs() < floor {
            return Err(Error::SmallDivisor { n: n.clone(), value: nu, floor });
        }
        y.modes.insert(n.clone(), mode_solution(m.zeta, nu, delta, pn));
    }
    let a = parabolic_a(m.zeta);
    let dy = y.flow_derivative(&m.omega);
    let mean = p.mean();
    let residual = check_grid(m.dim())
        .iter()
        .map(|th| {
            let yv = y.eval(th);
            let lhs = dy.eval(th);
            let pv = m_add(&p.eval(th), &mean, -ONE);
            let r = m_add(&m_add(&lhs, &commutator(&a, &yv), -ONE), &pv, Complex64::new(-delta, 0.0));
            m_norm(&r)
        })
        .fold(0.0, f64::max);
    let bn = m.b_norm();
    let bound = m.kappa.powi(3) * m.strip.powf(3.0 * m.tau + 1.0) / (d_tau(m.tau) * bn * bn);
    Ok(HomologicalSolution { y, residual, precondition_holds: delta.abs() < bound, small_divisor_floor: floor })
}

/// Constant part after one averaging step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AveragedModel {
    pub a_tilde: M2,
    pub delta: f64,
    /// `d(Δ)` from the factorised formula.
    pub d: f64,
    /// `det Ã` computed directly.
    pub d_direct: f64,
    /// `S² - 4|c|²`, at least 1 for `SU(1,1)`-valued `B`.
    pub denominator: f64,
}

/// `Ã = A + Δ[P]` and
/// `d(Δ) = Δ²(S² - 4|c|²) - ζΔ(S + 2 Re c)` with `S = [|b11|²+|b12|²]`,
/// `c = [b11 conj(b12)]`.
pub fn averaged_determinant(m: &ParabolicModel, delta: f64) -> Result<AveragedModel> {
    m.validate()?;
    let (s, c) = m.averages();
    let denominator = s * s - 4.0 * c.norm_sqr();
    if denominator < 1.0 - 1e-8 {
        return Err(Error::InvalidInput(format!("averaged denominator {denominator} is below 1")));
    }
    let pm = [[-I * s, -2.0 * I * c.conj()], [2.0 * I * c, I * s]];
    let a_tilde = m_add(&parabolic_a(m.zeta), &pm, Complex64::new(delta, 0.0));
    let d = delta * delta * denominator - m.zeta * delta * (s + 2.0 * c.re);
    Ok(AveragedModel { a_tilde, delta, d, d_direct: m_det(&a_tilde).re, denominator })
}

/// Diagnostics of the full conjugation by `X = exp(Y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConjugationCheck {
    /// `sup ||X - id||` on the check grid.
    pub x_minus_id: f64,
    pub x_bound: f64,
    /// `sup ||X⁻¹(A+ΔP)X - X⁻¹ ∂_ω X - Ã||`, which is `Δ² ||P~||`.
    pub remainder: f64,
    /// `Δ² D_τ² κ⁻⁶ R^{-2(3τ+1)} ||B||_R⁴`.
    pub remainder_bound: f64,
}

/// Conjugates `A + ΔP` by `exp(Y)` pointwise and measures what is left
/// beyond `Ã`. The flow derivative of `X` uses a central difference.
pub fn conjugation_check(m: &ParabolicModel, delta: f64, big_n: i64) -> Result<ConjugationCheck> {
    let p = perturbation_from_conjugation(m)?;
    let sol = homological_solve(m, &p, delta, big_n)?;
    let avg = averaged_determinant(m, delta)?;
    let a = parabolic_a(m.zeta);
    let x_at = |th: &[f64]| expm_traceless(&sol.y.eval(th));
    let h = 1e-5;
    let mut x_minus_id: f64 = 0.0;
    let mut remainder: f64 = 0.0;
    for th in check_grid(m.dim()) {
        let x = x_at(&th);
        let fwd: Vec<f64> = th.iter().zip(&m.omega).map(|(t, w)| t + h * w).collect();
        let bwd: Vec<f64> = th.iter().zip(&m.omega).map(|(t, w)| t - h * w).collect();
        let dx = m_add(&x_at(&fwd), &x_at(&bwd), -ONE);
        let dx = [[dx[0][0] / (2.0 * h), dx[0][1] / (2.0 * h)], [dx[1][0] / (2.0 * h), dx[1][1] / (2.0 * h)]];
        let det = m_det(&x);
        let xinv = [[x[1][1] / det, -x[0][1] / det], [-x[1][0] / det, x[0][0] / det]];
        let gen = m_add(&a, &p.eval(&th), Complex64::new(delta, 0.0));
        let conj = m_add(&m_mul(&xinv, &m_mul(&gen, &x)), &m_mul(&xinv, &dx), -ONE);
        let rest = m_add(&conj, &avg.a_tilde, -ONE);
        let id = [[ONE, ZERO], [ZERO, ONE]];
        x_minus_id = x_minus_id.max(m_norm(&m_add(&x, &id, -ONE)));
        remainder = remainder.max(m_norm(&rest));
    }
    let bn = m.b_norm();
    let dt = d_tau(m.tau);
    let rr = m.strip.powf(3.0 * m.tau + 1.0);
    Ok(ConjugationCheck {
        x_minus_id,
        x_bound: 2.0 * dt * m.kappa.powi(-3) / rr * delta.abs() * bn * bn,
        remainder,
        remainder_bound: delta * delta * dt * dt * m.kappa.powi(-6) / (rr * rr) * bn.powi(4),
    })
}

/// Outcome of [`gap_upper_bound_certificate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    /// `||B||_R⁴ ζ^ν`.
    pub lhs: f64,
    /// `2⁻⁶ D_τ⁻² κ⁶ R^{2(3τ+1)}`.
    pub rhs: f64,
    pub hypothesis_holds: bool,
    /// `ζ^{1-ν}` when certified.
    pub gap_bound: Option<f64>,
    /// `d(Δ) ≥ Δ²/4` at `Δ = ζ^{1-ν}`.
    pub determinant_ok: Option<bool>,
    /// `8Δ² (ζ + Δ||B||²)/sqrt(d) · D_τ² κ⁻⁶ R^{-2(3τ+1)} ||B||⁴ ≤ Δ/4`.
    pub displacement_ok: Option<bool>,
}

impl Certificate {
    pub fn certified(&self) -> bool {
        self.hypothesis_holds && self.determinant_ok == Some(true) && self.displacement_ok == Some(true)
    }
}

/// `(lhs, rhs)` of `||B||_R⁴ ζ^ν < 2⁻⁶ D_τ⁻² κ⁶ R^{2(3τ+1)}`.
pub fn certificate_hypothesis(zeta: f64, b_norm: f64, kappa: f64, tau: f64, strip: f64, nu: f64) -> (f64, f64) {
    let lhs = b_norm.powi(4) * zeta.powf(nu);
    let rhs = 2f64.powi(-6) * d_tau(tau).powi(-2) * kappa.powi(6) * strip.powf(2.0 * (3.0 * tau + 1.0));
    (lhs, rhs)
}

/// Checks the hypothesis of the gap upper bound `|G| ≤ ζ^{1-ν}` at a left
/// gap edge and, when it holds, the inequalities used along the way.
pub fn gap_upper_bound_certificate(m: &ParabolicModel, nu: f64) -> Result<Certificate> {
    if !(nu > 0.0 && nu < 0.25) {
        return Err(Error::OutOfRange { index: 0, value: nu, lo: 0.0, hi: 0.25 });
    }
    m.validate()?;
    let bn = m.b_norm();
    let (lhs, rhs) = certificate_hypothesis(m.zeta, bn, m.kappa, m.tau, m.strip, nu);
    let holds = lhs < rhs;
    if !holds {
        return Ok(Certificate { lhs, rhs, hypothesis_holds: false, gap_bound: None, determinant_ok: None, displacement_ok: None });
    }
    let delta = m.zeta.powf(1.0 - nu);
    let avg = averaged_determinant(m, delta)?;
    let det_ok = avg.d >= 0.25 * delta * delta;
    let dt = d_tau(m.tau);
    let disp = 8.0 * delta * delta * (m.zeta + delta * bn * bn) / avg.d.max(0.0).sqrt() * dt * dt
        * m.kappa.powi(-6)
        * m.strip.powf(-2.0 * (3.0 * m.tau + 1.0))
        * bn.powi(4);
    Ok(Certificate {
        lhs,
        rhs,
        hypothesis_holds: true,
        gap_bound: Some(delta),
        determinant_ok: Some(det_ok),
        displacement_ok: Some(disp <= 0.25 * delta),
    })
}

/// Model for a right gap edge. Complex conjugation of the reduction
/// equation sends `A` to `-A` and `B` to `conj(B)`, so the mirrored model
/// carries `conj(B)` and is probed with `-Δ`.
pub fn reflect(m: &ParabolicModel) -> ParabolicModel {
    ParabolicModel { b11: m.b11.conj(), b12: m.b12.conj(), ..m.clone() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn golden() -> Vec<f64> {
        vec![0.5 * (5f64.sqrt() - 1.0)]
    }

    #[test]
    fn identity_perturbation() {
        let m = ParabolicModel::identity(0.1, golden(), 0.1, 1.5, 0.5);
        let p = perturbation_from_conjugation(&m).unwrap();
        let mean = p.mean();
        assert_eq!(mean[0][0], -I);
        assert_eq!(mean[1][1], I);
        assert_eq!(mean[0][1], ZERO);
    }

    #[test]
    fn hyperbolic_constant_perturbation() {
        let r = 0.3;
        let m = ParabolicModel::from_factors(0.1, golden(), 0.1, 1.5, 0.5, &[Factor::Hyperbolic { r, n: vec![0] }]).unwrap();
        let p = perturbation_from_conjugation(&m).unwrap().mean();
        assert_abs_diff_eq!((p[0][0] - (-I * (2.0 * r).cosh())).norm(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!((p[0][1] - (-I * (2.0 * r).sinh())).norm(), 0.0, epsilon = 1e-14);
        let q = perturbation_pointwise(&m, &[0.7]);
        assert_abs_diff_eq!((q[0][1] - p[0][1]).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn single_mode_coefficient() {
        let p = [[ONE, ZERO], [ZERO, -ONE]];
        let y = mode_solution(0.1, 0.5, 1.0, &p);
        assert_abs_diff_eq!((y[0][0] - Complex64::new(0.0, -1.92)).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn identity_determinant() {
        let m = ParabolicModel::identity(0.01, golden(), 0.1, 1.5, 0.5);
        let a = averaged_determinant(&m, 0.3).unwrap();
        assert_abs_diff_eq!(a.d, 0.3 * (0.3 - 0.01), epsilon = 1e-15);
        assert_abs_diff_eq!(a.d, a.d_direct, epsilon = 1e-15);
        assert_abs_diff_eq!(a.denominator, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn certificate_arithmetic() {
        let (lhs, rhs) = certificate_hypothesis(1e-6, 2.0, 0.1, 1.5, 0.5, 0.1);
        assert_abs_diff_eq!(lhs, 16.0 * 1e-6f64.powf(0.1), epsilon = 1e-12);
        assert!(rhs < lhs);
        let m = ParabolicModel::identity(1e-6, golden(), 0.1, 1.5, 0.5);
        assert!(gap_upper_bound_certificate(&m, 0.25).is_err());
        assert!(!gap_upper_bound_certificate(&m, 0.1).unwrap().certified());
    }

    #[test]
    fn d_tau_value() {
        assert_abs_diff_eq!(d_tau(1.0), 2f64.powi(11) * 6.0, epsilon = 1e-9);
    }
}
