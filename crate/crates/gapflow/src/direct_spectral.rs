// SPDX-License-Identifier: MIT OR Apache-2.0

//! Transfer-matrix engine for quasiperiodic Dirac operators.
//!
//! The potential is `phi(x) = phi~(theta + omega x)` with a trigonometric
//! polynomial `phi~` on the `d`-torus `R^d / Z^d`. The linear system is
//!
//! ```text
//! f' = [[-i z, i phi], [-i conj(phi), i z]] f,
//! ```
//!
//! whose coefficient matrix lies in `su(1,1)` for real `z`. Integration
//! uses the fourth-order Magnus scheme with an exact exponential of each
//! traceless step generator, so determinant and `j`-unitarity are kept to
//! rounding error.
//!
//! Conventions:
//!
//! * rotation number: `rho` is minus the asymptotic slope of `arg f_1` for
//!   the solution with `f(0) = (1, 1)`, which keeps `f_2 = conj(f_1)`. With
//!   zero potential `rho(lambda) = lambda`.
//! * gap labels: a gap opened by the Fourier mode `k` sits at
//!   `rho = pi <k, omega>`, so the integrated density `rho / (2 pi)` equals
//!   `<k, omega> / 2` on it.
//! * Floquet exponent: `w(z) = -gamma(z) + i rho(z)`, with `w(z) = i z`
//!   for zero potential.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::quad::adaptive_legendre;

type M2 = [[Complex64; 2]; 2];

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
const IDENTITY: M2 = [[ONE, ZERO], [ZERO, ONE]];

fn mul(a: &M2, b: &M2) -> M2 {
    [
        [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
        [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
    ]
}

fn mul_vec(a: &M2, v: [Complex64; 2]) -> [Complex64; 2] {
    [a[0][0] * v[0] + a[0][1] * v[1], a[1][0] * v[0] + a[1][1] * v[1]]
}

fn frobenius(a: &M2) -> f64 {
    a.iter().flatten().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

fn scale(a: &mut M2, s: f64) {
    for c in a.iter_mut().flatten() {
        *c *= s;
    }
}

/// Exponential of a traceless 2×2 matrix `[[p, q], [r, -p]]`.
fn expm_traceless(w: &M2) -> M2 {
    let s2 = w[0][0] * w[0][0] + w[0][1] * w[1][0];
    let s = s2.sqrt();
    let (ch, sh) = if s.norm() < 1e-4 {
        (ONE + s2 / 2.0 + s2 * s2 / 24.0, ONE + s2 / 6.0 + s2 * s2 / 120.0)
    } else {
        (s.cosh(), s.sinh() / s)
    };
    [
        [ch + sh * w[0][0], sh * w[0][1]],
        [sh * w[1][0], ch + sh * w[1][1]],
    ]
}

/// One Fourier mode `coeff · exp(2 pi i <n, theta>)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierMode {
    pub n: Vec<i64>,
    pub coeff: Complex64,
}

/// Quasiperiodic potential `phi(x) = phi~(theta + omega x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QPotential {
    pub omega: Vec<f64>,
    pub fourier: Vec<FourierMode>,
    /// Width `h` of the analyticity strip used for the weighted norm.
    #[serde(default)]
    pub width: f64,
    /// Diophantine constants `(kappa, tau)` of `omega`, if known.
    #[serde(default)]
    pub dioph: Option<(f64, f64)>,
}

impl QPotential {
    pub fn new(omega: Vec<f64>, fourier: Vec<FourierMode>) -> Result<Self> {
        let p = QPotential { omega, fourier, width: 0.0, dioph: None };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.omega.is_empty() || self.omega.iter().any(|w| !w.is_finite() || *w == 0.0) {
            return Err(Error::InvalidInput("frequency vector must be finite and nonzero".into()));
        }
        for m in &self.fourier {
            if m.n.len() != self.omega.len() {
                return Err(Error::LengthMismatch { expected: self.omega.len(), got: m.n.len() });
            }
            if !m.coeff.is_finite() {
                return Err(Error::InvalidInput("non-finite Fourier coefficient".into()));
            }
        }
        if !(self.width >= 0.0) {
            return Err(Error::InvalidInput("strip width must be nonnegative".into()));
        }
        Ok(())
    }

    /// Zero potential on the `d`-torus.
    pub fn zero(d: usize) -> Self {
        let omega = (0..d).map(|i| if i == 0 { 1.0 } else { (i as f64 + 1.0).sqrt() }).collect();
        QPotential { omega, fourier: Vec::new(), width: 0.0, dioph: None }
    }

    /// Constant potential `phi ≡ c`.
    pub fn constant(c: Complex64) -> Self {
        QPotential {
            omega: vec![1.0],
            fourier: vec![FourierMode { n: vec![0], coeff: c }],
            width: 0.0,
            dioph: None,
        }
    }

    /// `phi~(theta) = 2 eps0 cos(2 pi theta)` with a single frequency.
    pub fn cosine(eps0: f64, omega: f64) -> Self {
        QPotential {
            omega: vec![omega],
            fourier: vec![
                FourierMode { n: vec![1], coeff: Complex64::new(eps0, 0.0) },
                FourierMode { n: vec![-1], coeff: Complex64::new(eps0, 0.0) },
            ],
            width: 0.0,
            dioph: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.omega.len()
    }

    /// `phi(x)` at base point `theta`.
    pub fn eval(&self, x: f64, theta: &[f64]) -> Complex64 {
        self.fourier
            .iter()
            .map(|m| {
                let arg: f64 = m
                    .n
                    .iter()
                    .zip(theta.iter().zip(&self.omega))
                    .map(|(&k, (&th, &w))| k as f64 * (th + w * x))
                    .sum();
                m.coeff * Complex64::from_polar(1.0, 2.0 * PI * arg)
            })
            .sum()
    }

    /// `Σ |phi^(n)|`, an upper bound for `sup |phi|`.
    pub fn sup_bound(&self) -> f64 {
        self.fourier.iter().map(|m| m.coeff.norm()).sum()
    }

    /// `Σ |phi^(n)| exp(2 pi h |n|)` with `|n|` the sum norm.
    pub fn strip_norm(&self, h: f64) -> f64 {
        self.fourier
            .iter()
            .map(|m| m.coeff.norm() * (2.0 * PI * h * m.n.iter().map(|k| k.abs() as f64).sum::<f64>()).exp())
            .sum()
    }

    /// True if only the zero mode is present.
    pub fn is_constant(&self) -> bool {
        self.fourier.iter().all(|m| m.n.iter().all(|&k| k == 0) || m.coeff == ZERO)
    }

    /// Largest `|<n, omega>|` over the modes, the fastest oscillation rate.
    pub fn max_frequency(&self) -> f64 {
        self.fourier
            .iter()
            .map(|m| m.n.iter().zip(&self.omega).map(|(&k, w)| k as f64 * w).sum::<f64>().abs())
            .fold(0.0, f64::max)
    }

    /// `min |<k, omega>|` over nonzero `k` with `|k|_∞ ≤ kmax`; zero means a
    /// resonance within working precision.
    pub fn resonance_floor(&self, kmax: i64) -> f64 {
        let mut best = f64::INFINITY;
        for_each_label(self.dim(), kmax, |k| {
            if k.iter().any(|&v| v != 0) {
                let v = dot(k, &self.omega).abs();
                best = best.min(v);
            }
        });
        best
    }

    fn step_size(&self, z: Complex64) -> f64 {
        let rate = z.norm() + self.sup_bound() + 2.0 * PI * self.max_frequency() + 1.0;
        (0.2 / rate).min(0.02)
    }
}

fn dot(k: &[i64], w: &[f64]) -> f64 {
    k.iter().zip(w).map(|(&a, b)| a as f64 * b).sum()
}

fn for_each_label(d: usize, kmax: i64, mut f: impl FnMut(&[i64])) {
    let mut k = vec![-kmax; d];
    loop {
        f(&k);
        let mut i = 0;
        loop {
            if i == d {
                return;
            }
            k[i] += 1;
            if k[i] > kmax {
                k[i] = -kmax;
                i += 1;
            } else {
                break;
            }
        }
    }
}

/// Partial quotients of the continued fraction of `x`.
pub fn continued_fraction(mut x: f64, terms: usize) -> Vec<i64> {
    let mut out = Vec::with_capacity(terms);
    for _ in 0..terms {
        let a = x.floor();
        out.push(a as i64);
        let r = x - a;
        if r < 1e-12 {
            break;
        }
        x = 1.0 / r;
    }
    out
}

/// Fourth-order Magnus propagator for a fixed potential, energy and base
/// point.
#[derive(Debug, Clone)]
pub struct Stepper<'a> {
    p: &'a QPotential,
    z: Complex64,
    theta: Vec<f64>,
    pub h: f64,
}

impl<'a> Stepper<'a> {
    pub fn new(p: &'a QPotential, z: Complex64, theta: &[f64]) -> Self {
        let h = p.step_size(z);
        Stepper { p, z, theta: theta.to_vec(), h }
    }

    pub fn with_step(mut self, h: f64) -> Self {
        self.h = h;
        self
    }

    fn generator(&self, x: f64) -> M2 {
        let phi = self.p.eval(x, &self.theta);
        [[-I * self.z, I * phi], [-I * phi.conj(), I * self.z]]
    }

    /// Propagator from `x` to `x + dx`.
    pub fn step(&self, x: f64, dx: f64) -> M2 {
        let c = 3f64.sqrt() / 6.0;
        let a1 = self.generator(x + (0.5 - c) * dx);
        let a2 = self.generator(x + (0.5 + c) * dx);
        let comm = {
            let p = mul(&a2, &a1);
            let q = mul(&a1, &a2);
            [[p[0][0] - q[0][0], p[0][1] - q[0][1]], [p[1][0] - q[1][0], p[1][1] - q[1][1]]]
        };
        let k = 3f64.sqrt() / 12.0 * dx * dx;
        let mut w = [[ZERO; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                w[i][j] = 0.5 * dx * (a1[i][j] + a2[i][j]) + k * comm[i][j];
            }
        }
        // Force exact tracelessness against rounding.
        let tr = 0.5 * (w[0][0] + w[1][1]);
        w[0][0] -= tr;
        w[1][1] -= tr;
        expm_traceless(&w)
    }

    /// Step boundaries from 0 to `len` (either sign), last step shortened.
    pub fn grid(&self, len: f64) -> Vec<f64> {
        let n = (len.abs() / self.h).ceil().max(1.0) as usize;
        (0..=n).map(|i| len * i as f64 / n as f64).collect()
    }
}

/// Fundamental matrix `T(z, x, theta)` with `T(z, 0, theta) = I`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferMatrix {
    pub m: [[Complex64; 2]; 2],
    pub theta: Vec<f64>,
    pub x: f64,
    pub z: Complex64,
}

impl TransferMatrix {
    pub fn det(&self) -> Complex64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    /// `||T* j T - j||` (Frobenius) with `j = diag(-1, 1)`.
    pub fn su11_defect(&self) -> f64 {
        let m = &self.m;
        let jm = [[-m[0][0], -m[0][1]], [m[1][0], m[1][1]]];
        let mut d = 0.0;
        for i in 0..2 {
            for k in 0..2 {
                let v = m[0][i].conj() * jm[0][k] + m[1][i].conj() * jm[1][k];
                let target = if i == k { if i == 0 { -1.0 } else { 1.0 } } else { 0.0 };
                d += (v - target).norm_sqr();
            }
        }
        d.sqrt()
    }
}

/// Transfer matrix over `[0, x]` (or `[x, 0]` for negative `x`).
pub fn transfer(p: &QPotential, z: Complex64, x: f64, theta: &[f64]) -> Result<TransferMatrix> {
    p.validate()?;
    if theta.len() != p.dim() {
        return Err(Error::LengthMismatch { expected: p.dim(), got: theta.len() });
    }
    if !x.is_finite() || !z.is_finite() {
        return Err(Error::InvalidInput("length and energy must be finite".into()));
    }
    let st = Stepper::new(p, z, theta);
    let grid = st.grid(x);
    let mut t = IDENTITY;
    for w in grid.windows(2) {
        t = mul(&st.step(w[0], w[1] - w[0]), &t);
    }
    if t.iter().flatten().any(|c| !c.is_finite()) {
        return Err(Error::Numerical(format!("transfer matrix overflow at z = {z}, x = {x}")));
    }
    Ok(TransferMatrix { m: t, theta: theta.to_vec(), x, z })
}

/// Transfer matrix stored as `exp(log_scale) · m` to survive hyperbolic growth.
#[derive(Debug, Clone)]
struct Scaled {
    m: M2,
    log_scale: f64,
}

fn scaled_transfer(st: &Stepper, len: f64, mut visit: impl FnMut(f64, &Scaled)) -> Scaled {
    let mut s = Scaled { m: IDENTITY, log_scale: 0.0 };
    let grid = st.grid(len);
    visit(0.0, &s);
    for w in grid.windows(2) {
        s.m = mul(&st.step(w[0], w[1] - w[0]), &s.m);
        let n = frobenius(&s.m);
        if n > 1e8 {
            scale(&mut s.m, 1.0 / n);
            s.log_scale += n.ln();
        }
        visit(w[1], &s);
    }
    s
}

/// Equidistributed base points on the torus (additive recurrence with the
/// generalised golden ratio).
pub fn theta_samples(d: usize, count: usize) -> Vec<Vec<f64>> {
    // Root of x^{d+1} = x + 1.
    let mut g = 2.0f64;
    for _ in 0..64 {
        g = (1.0 + g).powf(1.0 / (d as f64 + 1.0));
    }
    let alpha: Vec<f64> = (1..=d).map(|i| (1.0 / g.powi(i as i32)).fract()).collect();
    (0..count)
        .map(|n| alpha.iter().map(|a| (0.5 + a * n as f64).fract()).collect())
        .collect()
}

fn theta_list(p: &QPotential, samples: usize) -> Vec<Vec<f64>> {
    if p.is_constant() {
        vec![vec![0.0; p.dim()]]
    } else {
        theta_samples(p.dim(), samples.max(1))
    }
}

/// `(1/L) · mean_theta log ||T(z, L, theta)||` (operator 2-norm).
pub fn lyapunov(p: &QPotential, z: Complex64, len: f64, samples: usize) -> Result<f64> {
    p.validate()?;
    if !(len > 0.0) || samples == 0 {
        return Err(Error::InvalidInput("length and sample count must be positive".into()));
    }
    let thetas = theta_list(p, samples);
    let sum: f64 = thetas
        .iter()
        .map(|th| {
            let st = Stepper::new(p, z, th);
            let s = scaled_transfer(&st, len, |_, _| {});
            s.log_scale + spectral_norm(&s.m).ln()
        })
        .sum();
    Ok(sum / (thetas.len() as f64 * len))
}

fn spectral_norm(m: &M2) -> f64 {
    let a = nalgebra::Matrix2::new(m[0][0], m[0][1], m[1][0], m[1][1]);
    a.singular_values().max()
}

/// Rotation number at real energy, by a least-squares slope of the unwrapped
/// `arg f_1` for one base point.
pub fn rotation_number_at(p: &QPotential, lambda: f64, len: f64, theta: &[f64]) -> f64 {
    let st = Stepper::new(p, Complex64::new(lambda, 0.0), theta);
    let grid = st.grid(len);
    let mut f = [ONE, ONE];
    let mut prev = f[0].arg();
    let mut unwrapped = prev;
    let (mut sx, mut sy, mut sxx, mut sxy, mut n) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let mut add = |x: f64, y: f64| {
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        n += 1.0;
    };
    add(0.0, unwrapped);
    for w in grid.windows(2) {
        f = mul_vec(&st.step(w[0], w[1] - w[0]), f);
        let norm = (f[0].norm_sqr() + f[1].norm_sqr()).sqrt();
        f = [f[0] / norm, f[1] / norm];
        let a = f[0].arg();
        let mut d = a - prev;
        d -= (d / (2.0 * PI)).round() * 2.0 * PI;
        unwrapped += d;
        prev = a;
        add(w[1], unwrapped);
    }
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    -slope
}

/// Rotation number averaged over base points.
pub fn rotation_number(p: &QPotential, lambda: f64, len: f64, samples: usize) -> Result<f64> {
    p.validate()?;
    if !(len > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidInput("rotation number needs finite real energy and positive length".into()));
    }
    let thetas = theta_list(p, samples);
    Ok(thetas.iter().map(|th| rotation_number_at(p, lambda, len, th)).sum::<f64>() / thetas.len() as f64)
}

/// One row of an energy scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub lambda: f64,
    pub gamma: f64,
    pub rho: f64,
    pub in_gap: bool,
    pub label: Option<Vec<i64>>,
}

/// Parallel scan of `gamma` and `rho` on an energy grid.
///
/// A grid point is flagged as lying in a gap when its Lyapunov exponent
/// exceeds `3 ln(L) / L`, the finite-length noise level on the spectrum.
pub fn spectrum_scan(p: &QPotential, grid: &[f64], len: f64, samples: usize, kmax: i64) -> Result<Vec<ScanRow>> {
    p.validate()?;
    let floor = 3.0 * len.ln().max(1.0) / len;
    grid.par_iter()
        .map(|&lambda| {
            let gamma = lyapunov(p, Complex64::new(lambda, 0.0), len, samples)?;
            let rho = rotation_number(p, lambda, len, samples)?;
            let in_gap = gamma > floor;
            let label = if in_gap { Some(label_search(p, rho, kmax).0) } else { None };
            Ok(ScanRow { lambda, gamma, rho, in_gap, label })
        })
        .collect()
}

/// Nearest frequency-module point: the `k` with `|k|_∞ ≤ kmax` minimising
/// `|rho/pi - <k, omega>|`, ties broken by smallest `|k|_1` and then
/// lexicographically. Returns the label, its distance and whether a
/// different label lies within twice that distance plus `1e-9`.
pub fn label_search(p: &QPotential, rho: f64, kmax: i64) -> (Vec<i64>, f64, bool) {
    let target = rho / PI;
    let mut cands: Vec<(f64, i64, Vec<i64>)> = Vec::new();
    for_each_label(p.dim(), kmax, |k| {
        let d = (target - dot(k, &p.omega)).abs();
        cands.push((d, k.iter().map(|v| v.abs()).sum(), k.to_vec()));
    });
    cands.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let best = cands[0].clone();
    let ambiguous = cands.len() > 1 && cands[1].0 <= 2.0 * best.0 + 1e-9;
    (best.2, best.0, ambiguous)
}

/// A detected spectral gap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapEntry {
    pub label: Vec<i64>,
    pub lo: f64,
    pub hi: f64,
    pub width: f64,
    pub center: f64,
    /// `rho / (2 pi)` on the gap, to compare with `<k, omega> / 2`.
    pub ids: f64,
    /// `|center - pi <k, omega>|`.
    pub energy_offset: f64,
    pub ambiguous: bool,
}

/// Gaps of a single-frequency (hence periodic) potential from its Floquet
/// discriminant, for labels `|k| ≤ kmax`.
///
/// The monodromy over one period `P = 1/|omega|` has the form
/// `[[A, B], [conj B, conj A]]`; energies with `|B|² > (Im A)²` are in a gap.
/// Gaps narrower than `closed_below` are reported as closed and omitted.
pub fn periodic_gaps(p: &QPotential, kmax: i64, closed_below: f64) -> Result<Vec<GapEntry>> {
    p.validate()?;
    if p.dim() != 1 {
        return Err(Error::InvalidInput("periodic gap search needs a single frequency".into()));
    }
    let omega = p.omega[0].abs();
    let period = 1.0 / omega;
    let theta = [0.0];
    let mono = |lambda: f64| -> M2 {
        let st = Stepper::new(p, Complex64::new(lambda, 0.0), &theta);
        let n = (period / 1e-4).ceil().max((period / st.h).ceil());
        let st = st.with_step(period / n);
        let mut t = IDENTITY;
        for w in st.grid(period).windows(2) {
            t = mul(&st.step(w[0], w[1] - w[0]), &t);
        }
        t
    };
    let im_a = |l: f64| mono(l)[0][0].im;
    let g = |l: f64| {
        let m = mono(l);
        m[0][1].norm_sqr() - m[0][0].im * m[0][0].im
    };
    let mut out = Vec::new();
    for k in -kmax..=kmax {
        let lk = PI * k as f64 * omega;
        let half = 0.25 * PI * omega;
        // Roots of Im A in the window; at such a root g = |B|² ≥ 0.
        let pts = 33;
        let xs: Vec<f64> = (0..pts).map(|i| lk - half + 2.0 * half * i as f64 / (pts - 1) as f64).collect();
        let vals: Vec<f64> = xs.iter().map(|&x| im_a(x)).collect();
        let mut root = None;
        for i in 0..pts - 1 {
            if vals[i] == 0.0 || vals[i].signum() != vals[i + 1].signum() {
                let (mut lo, mut hi, mut flo) = (xs[i], xs[i + 1], vals[i]);
                for _ in 0..80 {
                    let mid = 0.5 * (lo + hi);
                    let fm = im_a(mid);
                    if fm == 0.0 {
                        lo = mid;
                        hi = mid;
                        break;
                    }
                    if fm.signum() == flo.signum() {
                        lo = mid;
                        flo = fm;
                    } else {
                        hi = mid;
                    }
                }
                let r = 0.5 * (lo + hi);
                if root.is_none_or(|q: f64| (r - lk).abs() < (q - lk).abs()) {
                    root = Some(r);
                }
            }
        }
        let Some(r) = root else { continue };
        if g(r) <= 0.0 {
            continue;
        }
        let edge = |dir: f64| -> f64 {
            let mut step = 1e-13 * (1.0 + r.abs());
            let mut inner = r;
            let mut outer = r + dir * step;
            while g(outer) > 0.0 {
                inner = outer;
                step *= 2.0;
                outer = r + dir * step;
                if step > 4.0 * half + 10.0 * p.sup_bound() {
                    break;
                }
            }
            for _ in 0..100 {
                let mid = 0.5 * (inner + outer);
                if g(mid) > 0.0 {
                    inner = mid;
                } else {
                    outer = mid;
                }
                if (outer - inner).abs() < 1e-15 * (1.0 + r.abs()) {
                    break;
                }
            }
            0.5 * (inner + outer)
        };
        let lo = edge(-1.0);
        let hi = edge(1.0);
        let width = hi - lo;
        if width < closed_below {
            continue;
        }
        let center = 0.5 * (lo + hi);
        out.push(GapEntry {
            label: vec![k],
            lo,
            hi,
            width,
            center,
            ids: k as f64 * omega / 2.0,
            energy_offset: (center - lk).abs(),
            ambiguous: false,
        });
    }
    Ok(out)
}

/// Gaps from an energy scan: maximal runs of in-gap rows, labelled by the
/// mean rotation number over the run.
pub fn gaps_from_scan(p: &QPotential, rows: &[ScanRow], kmax: i64) -> Vec<GapEntry> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < rows.len() {
        if !rows[i].in_gap {
            i += 1;
            continue;
        }
        let start = i;
        while i < rows.len() && rows[i].in_gap {
            i += 1;
        }
        let run = &rows[start..i];
        let rho = run.iter().map(|r| r.rho).sum::<f64>() / run.len() as f64;
        let (label, _, ambiguous) = label_search(p, rho, kmax);
        let lo = run[0].lambda;
        let hi = run[run.len() - 1].lambda;
        let center = 0.5 * (lo + hi);
        out.push(GapEntry {
            energy_offset: (center - PI * dot(&label, &p.omega)).abs(),
            label,
            lo,
            hi,
            width: hi - lo,
            center,
            ids: rho / (2.0 * PI),
            ambiguous,
        });
    }
    out
}

/// Gap list for any potential: the exact Floquet path for a single
/// frequency, the scan path otherwise.
pub fn ids_and_gaps(p: &QPotential, grid: &[f64], len: f64, kmax: i64) -> Result<Vec<GapEntry>> {
    if p.dim() == 1 {
        periodic_gaps(p, kmax, 1e-11)
    } else {
        let rows = spectrum_scan(p, grid, len, 8, kmax)?;
        Ok(gaps_from_scan(p, &rows, kmax))
    }
}

/// Least-squares fit of `ln |G_k|` against `|k|_1` over open gaps with
/// nonzero label. Returns `(slope, r)` with `r = -slope / (2 pi)`.
pub fn gap_decay_fit(gaps: &[GapEntry]) -> Option<(f64, f64)> {
    let pts: Vec<(f64, f64)> = gaps
        .iter()
        .filter(|g| g.label.iter().any(|&k| k != 0) && g.width > 0.0)
        .map(|g| (g.label.iter().map(|k| k.abs() as f64).sum(), g.width.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx;
    Some((slope, -slope / (2.0 * PI)))
}

/// Smallest value of `dist(G_k, G_k') · |k - k'|^{2 tau}` over pairs of
/// gaps; a positive value is the fitted constant of the separation law.
pub fn gap_separation_constant(gaps: &[GapEntry], tau: f64) -> f64 {
    let mut best = f64::INFINITY;
    for (i, a) in gaps.iter().enumerate() {
        for b in &gaps[i + 1..] {
            let dk: f64 = a.label.iter().zip(&b.label).map(|(x, y)| (x - y).abs() as f64).sum();
            let dist = (b.lo - a.hi).max(a.lo - b.hi).max(0.0);
            best = best.min(dist * dk.powf(2.0 * tau));
        }
    }
    best
}

/// One Weyl disk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Disk {
    pub ell: f64,
    pub center: Complex64,
    pub radius: f64,
}

/// Nested Weyl disks and the resulting Schur-function estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeylDisks {
    pub disks: Vec<Disk>,
    pub estimate: Complex64,
    pub radius: f64,
}

fn disk_from(s: &Scaled, plus: bool) -> (Complex64, f64) {
    // H = T* j T with j = diag(-1, 1).
    let m = &s.m;
    let h11 = -m[0][0].norm_sqr() + m[1][0].norm_sqr();
    let h22 = -m[0][1].norm_sqr() + m[1][1].norm_sqr();
    let h12 = -m[0][0].conj() * m[0][1] + m[1][0].conj() * m[1][1];
    let f = (-2.0 * s.log_scale).exp();
    if plus {
        (-h12 / h11, f / h11.abs())
    } else {
        (-h12.conj() / h22, f / h22.abs())
    }
}

fn weyl_disks(p: &QPotential, z: Complex64, ells: &[f64], theta: &[f64], plus: bool) -> Result<WeylDisks> {
    p.validate()?;
    if !(z.im > 0.0) {
        return Err(Error::InvalidInput("Weyl disks need Im z > 0".into()));
    }
    if ells.is_empty() || ells.windows(2).any(|w| !(w[1] > w[0])) || !(ells[0] > 0.0) {
        return Err(Error::InvalidInput("disk lengths must be positive and increasing".into()));
    }
    let st = Stepper::new(p, z, theta);
    let sign = if plus { 1.0 } else { -1.0 };
    let last = *ells.last().unwrap();
    let grid = st.grid(sign * last);
    let mut s = Scaled { m: IDENTITY, log_scale: 0.0 };
    let mut disks = Vec::with_capacity(ells.len());
    let mut next = 0;
    for w in grid.windows(2) {
        // Split the step so that each requested length is hit exactly.
        let mut x = w[0];
        while next < ells.len() && sign * ells[next] <= sign * w[1] + 1e-15 && sign * ells[next] > sign * x {
            let target = sign * ells[next];
            s.m = mul(&st.step(x, target - x), &s.m);
            x = target;
            let (c, r) = disk_from(&s, plus);
            disks.push(Disk { ell: ells[next], center: c, radius: r });
            next += 1;
        }
        if sign * w[1] > sign * x {
            s.m = mul(&st.step(x, w[1] - x), &s.m);
        }
        let n = frobenius(&s.m);
        if n > 1e8 {
            scale(&mut s.m, 1.0 / n);
            s.log_scale += n.ln();
        }
    }
    while next < ells.len() {
        let (c, r) = disk_from(&s, plus);
        disks.push(Disk { ell: ells[next], center: c, radius: r });
        next += 1;
    }
    for w in disks.windows(2) {
        let slack = 1e-9 * w[0].radius.max(1e-300) + 1e-14;
        if w[1].radius > w[0].radius + slack || (w[1].center - w[0].center).norm() + w[1].radius > w[0].radius + slack {
            return Err(Error::Numerical(format!(
                "Weyl disks lost nesting between lengths {} and {} (radii {:e}, {:e})",
                w[0].ell, w[1].ell, w[0].radius, w[1].radius
            )));
        }
    }
    let lastd = *disks.last().unwrap();
    Ok(WeylDisks { disks, estimate: lastd.center, radius: lastd.radius })
}

/// Weyl disks for `s_+` on `[0, ell]`.
pub fn weyl_disk_schur(p: &QPotential, z: Complex64, ells: &[f64], theta: &[f64]) -> Result<WeylDisks> {
    weyl_disks(p, z, ells, theta, true)
}

/// Weyl disks for `s_-` on `[-ell, 0]`.
pub fn weyl_disk_schur_minus(p: &QPotential, z: Complex64, ells: &[f64], theta: &[f64]) -> Result<WeylDisks> {
    weyl_disks(p, z, ells, theta, false)
}

/// Half-line Schur values at `z` with disk radius below `tol`, doubling the
/// length from `1 / Im z`. Returns `(s_+, r_+, s_-, r_-)`.
pub fn schur_pair(p: &QPotential, z: Complex64, theta: &[f64], tol: f64) -> Result<(Complex64, f64, Complex64, f64)> {
    let cap = 2e6;
    let mut ell = (1.0 / z.im).min(cap);
    loop {
        let ells = [ell];
        let a = weyl_disk_schur(p, z, &ells, theta)?;
        let b = weyl_disk_schur_minus(p, z, &ells, theta)?;
        if (a.radius <= tol && b.radius <= tol) || ell >= cap {
            return Ok((a.estimate, a.radius, b.estimate, b.radius));
        }
        ell = (2.0 * ell).min(cap);
    }
}

/// Floquet exponent `w(z) = -(1/L)(ln|f_1(L)| + i arg f_1(L))` for the
/// solution with `f(0) = (1, 0)`, unwrapping the argument along the way.
pub fn floquet_exponent(p: &QPotential, z: Complex64, len: f64, theta: &[f64]) -> Complex64 {
    let st = Stepper::new(p, z, theta);
    let mut f = [ONE, ZERO];
    let mut log_norm = 0.0;
    let mut prev = 0.0;
    let mut arg = 0.0;
    for w in st.grid(len).windows(2) {
        f = mul_vec(&st.step(w[0], w[1] - w[0]), f);
        let n = (f[0].norm_sqr() + f[1].norm_sqr()).sqrt();
        f = [f[0] / n, f[1] / n];
        log_norm += n.ln();
        let a = f[0].arg();
        let mut d = a - prev;
        d -= (d / (2.0 * PI)).round() * 2.0 * PI;
        arg += d;
        prev = a;
    }
    -(Complex64::new(log_norm + f[0].norm().ln(), arg)) / len
}

/// Settings for [`floquet_checks`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FloquetSettings {
    /// Imaginary parts `y` for the large-`z` asymptotic check.
    pub heights: Vec<f64>,
    /// Energy for the Thouless check.
    pub thouless_at: f64,
    /// Cutoff `T` of the Thouless integral.
    pub cutoff: f64,
    /// Length for rotation numbers and Lyapunov exponents.
    pub length: f64,
    /// Spectral points for the local modulus of continuity of the IDS.
    pub holder_points: Vec<f64>,
    /// Half-widths used in the modulus fit.
    pub holder_radii: Vec<f64>,
    pub samples: usize,
}

impl Default for FloquetSettings {
    fn default() -> Self {
        FloquetSettings {
            heights: vec![5.0, 10.0, 20.0, 40.0],
            thouless_at: 0.0,
            cutoff: 20.0,
            length: 200.0,
            holder_points: Vec::new(),
            holder_radii: vec![0.2, 0.1, 0.05, 0.025],
            samples: 4,
        }
    }
}

/// Outcome of [`floquet_checks`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FloquetReport {
    /// `y · |w(iy) - i(iy)|` for each height.
    pub asymptotic_products: Vec<f64>,
    pub gamma_direct: f64,
    pub gamma_thouless: f64,
    pub thouless_error: f64,
    /// Fitted exponent of `N(λ+ε) - N(λ-ε)` against `ε` at each point.
    pub holder_exponents: Vec<f64>,
}

/// Thouless-type reconstruction of `gamma(lambda0)` from the rotation number:
/// `u(z) = w(z) - i z` is analytic in the upper half plane and decays, so
/// `-gamma(lambda0) = (1/pi) PV ∫ (rho(E) - E) / (E - lambda0) dE`.
/// The integral is cut at `±T` and the `-m/E` tail of `rho(E) - E` is added
/// in closed form.
pub fn thouless_gamma(p: &QPotential, lambda0: f64, cutoff: f64, len: f64, samples: usize) -> Result<f64> {
    let g = |e: f64| rotation_number(p, e, len, samples).map(|r| r - e);
    let g0 = g(lambda0)?;
    let mut err = None;
    let mut integrand = |e: f64| -> f64 {
        if (e - lambda0).abs() < 1e-12 {
            return 0.0;
        }
        match g(e) {
            Ok(v) => (v - g0) / (e - lambda0),
            Err(x) => {
                err = Some(x);
                0.0
            }
        }
    };
    let mut total = 0.0;
    // Panels of unit width keep the adaptive rule away from the noise floor.
    let mut a = -cutoff;
    while a < cutoff - 1e-12 {
        let b = (a + 1.0).min(cutoff);
        total += adaptive_legendre(&mut integrand, a, b, 1e-5);
        a = b;
    }
    if let Some(e) = err {
        return Err(e);
    }
    total += g0 * ((cutoff - lambda0) / (cutoff + lambda0)).ln();
    let m = 0.5 * (-g(cutoff)? + g(-cutoff)?) * cutoff;
    let re_u = (total - 2.0 * m / cutoff) / PI;
    Ok(-re_u)
}

/// Asymptotic, Thouless and IDS-continuity checks.
pub fn floquet_checks(p: &QPotential, settings: &FloquetSettings) -> Result<FloquetReport> {
    p.validate()?;
    let theta = vec![0.0; p.dim()];
    let asymptotic_products = settings
        .heights
        .iter()
        .map(|&y| {
            let z = Complex64::new(0.0, y);
            let w = floquet_exponent(p, z, settings.length.min(50.0), &theta);
            y * (w - I * z).norm()
        })
        .collect();
    let gamma_direct = lyapunov(p, Complex64::new(settings.thouless_at, 0.0), settings.length, settings.samples)?;
    let gamma_thouless = thouless_gamma(p, settings.thouless_at, settings.cutoff, settings.length, settings.samples)?;
    let mut holder_exponents = Vec::new();
    for &lam in &settings.holder_points {
        let pts: Vec<(f64, f64)> = settings
            .holder_radii
            .iter()
            .map(|&eps| {
                let up = rotation_number(p, lam + eps, settings.length, settings.samples)?;
                let dn = rotation_number(p, lam - eps, settings.length, settings.samples)?;
                Ok((eps.ln(), ((up - dn) / PI).max(1e-300).ln()))
            })
            .collect::<Result<_>>()?;
        let n = pts.len() as f64;
        let mx = pts.iter().map(|q| q.0).sum::<f64>() / n;
        let my = pts.iter().map(|q| q.1).sum::<f64>() / n;
        let sxx: f64 = pts.iter().map(|q| (q.0 - mx).powi(2)).sum();
        let sxy: f64 = pts.iter().map(|q| (q.0 - mx) * (q.1 - my)).sum();
        holder_exponents.push(sxy / sxx);
    }
    Ok(FloquetReport {
        asymptotic_products,
        gamma_direct,
        gamma_thouless,
        thouless_error: (gamma_direct - gamma_thouless).abs(),
        holder_exponents,
    })
}

/// `sup_{0 ≤ x ≤ X} ||T(lambda, x)||²` (operator norm) on the step grid.
pub fn sup_transfer_norm_sq(p: &QPotential, lambda: f64, x_max: f64, theta: &[f64]) -> f64 {
    let st = Stepper::new(p, Complex64::new(lambda, 0.0), theta);
    let mut best: f64 = 1.0;
    scaled_transfer(&st, x_max, |_, s| {
        let v = 2.0 * (s.log_scale + spectral_norm(&s.m).ln());
        best = best.max(v.exp());
    });
    best
}
