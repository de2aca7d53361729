// SPDX-License-Identifier: MIT OR Apache-2.0

//! Resolvent, Schur and m-functions of reflectionless Dirac operators.
//!
//! The Dirac system used throughout the crate is
//!
//! ```text
//! f' = [[-i z, i phi], [-i conj(phi), i z]] f
//! ```
//!
//! and the half-line Schur functions are `s_+ = psi_1 / psi_2` for the
//! solution in `L^2(0, ∞)` and `s_- = psi_2 / psi_1` for the solution in
//! `L^2(-∞, 0)`. Both map the upper half-plane into the unit disk.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral_domain::{Divisor, DivisorPoint, GapSet, Sheet};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Resolvent diagonal `R(z)` of a finite-gap reflectionless operator with
/// Dirichlet data `d`.
///
/// In the upper half-plane every factor `(z - mu)/(sqrt(z-a) sqrt(z-b))`
/// uses principal square roots, which are analytic there, so the product is
/// the analytic continuation from `i∞` with `R(iy) -> i`. The lower
/// half-plane follows from `R(conj z) = conj R(z)`. Real arguments return
/// the boundary value from above; on each gap this is real and increasing.
pub fn resolvent_product(z: Complex64, g: &GapSet, d: &Divisor) -> Result<Complex64> {
    if d.len() != g.len() {
        return Err(Error::LengthMismatch { expected: g.len(), got: d.len() });
    }
    if z.im < 0.0 {
        return Ok(resolvent_product(z.conj(), g, d)?.conj());
    }
    let z = upper_bank(z);
    let mut r = I;
    for (p, &(a, b)) in d.points.iter().zip(g.gaps()) {
        let za = (z - a).sqrt();
        let zb = (z - b).sqrt();
        let factor = if p.mu == a {
            za / zb
        } else if p.mu == b {
            zb / za
        } else {
            (z - p.mu) / (za * zb)
        };
        r *= factor;
    }
    if !(r.re.is_finite() && r.im.is_finite()) {
        return Err(Error::Numerical(format!("R is not finite at z = {z}")));
    }
    Ok(r)
}

/// Replaces a negative zero imaginary part by `+0.0`, so that principal
/// square roots of real arguments return their upper-bank values.
#[inline]
pub(crate) fn upper_bank(z: Complex64) -> Complex64 {
    if z.im == 0.0 {
        Complex64::new(z.re, 0.0)
    } else {
        z
    }
}

/// Trace scalars `(Q1, Q2)` of the Dirichlet data.
pub fn trace_scalars(d: &Divisor, g: &GapSet) -> (f64, f64) {
    let mut q1 = 0.0;
    let mut q2 = 0.0;
    for (p, &(a, b)) in d.points.iter().zip(g.gaps()) {
        q1 += a + b - 2.0 * p.mu;
        q2 += a * a + b * b - 2.0 * p.mu * p.mu;
    }
    (q1, q2)
}

/// Field value from the divisor of `phi` and the divisor of `-i phi`.
pub fn reconstruct_field(d: &Divisor, d_rot: &Divisor, g: &GapSet) -> Result<Complex64> {
    if d.len() != g.len() || d_rot.len() != g.len() {
        return Err(Error::LengthMismatch { expected: g.len(), got: d.len().min(d_rot.len()) });
    }
    let (q1, _) = trace_scalars(d, g);
    let (q1_rot, _) = trace_scalars(d_rot, g);
    Ok(Complex64::new(-0.5 * q1, -0.5 * q1_rot))
}

/// A pair of half-line Schur functions.
pub trait SchurPair {
    fn s_plus(&self, z: Complex64) -> Complex64;
    fn s_minus(&self, z: Complex64) -> Complex64;
}

/// Weyl m-functions and the Borel transform of the spectral measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MFunctions {
    pub m_plus: Complex64,
    pub m_minus: Complex64,
    pub borel: Complex64,
}

/// `m_± = i (1 + s_±)/(1 - s_±)` and `M = (m_+ m_- - 1)/(m_+ + m_-)`.
pub fn m_and_borel<P: SchurPair + ?Sized>(pair: &P, z: Complex64) -> Result<MFunctions> {
    if !(z.im > 0.0) {
        return Err(Error::InvalidInput("m-functions need Im z > 0".into()));
    }
    m_from_schur(pair.s_plus(z), pair.s_minus(z))
}

pub fn m_from_schur(sp: Complex64, sm: Complex64) -> Result<MFunctions> {
    if sp == Complex64::new(1.0, 0.0) || sm == Complex64::new(1.0, 0.0) {
        return Err(Error::Numerical("Schur value equals 1 (pole of m)".into()));
    }
    let mp = I * (1.0 + sp) / (1.0 - sp);
    let mm = I * (1.0 + sm) / (1.0 - sm);
    Ok(MFunctions { m_plus: mp, m_minus: mm, borel: (mp * mm - 1.0) / (mp + mm) })
}

/// `R` from a Schur pair, `R = -2/(m_+ + m_-) = i (1-s_+)(1-s_-)/(1 - s_+ s_-)`.
pub fn resolvent_from_schur(sp: Complex64, sm: Complex64) -> Complex64 {
    I * (1.0 - sp) * (1.0 - sm) / (1.0 - sp * sm)
}

/// `w(ζ) = ζ - sqrt(ζ-1) sqrt(ζ+1)`, the root of `w² - 2ζw + 1 = 0` inside
/// the unit disk for `Im ζ > 0`; on `(-1, 1)` it returns the upper-bank value.
pub fn joukowski_inverse(zeta: Complex64) -> Complex64 {
    let zeta = upper_bank(zeta);
    zeta - (zeta - 1.0).sqrt() * (zeta + 1.0).sqrt()
}

/// Closed-form Schur pair of the plane-wave potential
/// `phi(x, t) = c exp(i(beta - 2 sigma x - (4 sigma² + 2 c²) t))`,
/// whose spectrum has the single gap `(sigma - c, sigma + c)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OneGapSchur {
    pub c: f64,
    pub beta: f64,
    #[serde(default)]
    pub shift: f64,
}

impl OneGapSchur {
    pub fn new(c: f64, beta: f64, shift: f64) -> Self {
        OneGapSchur { c, beta, shift }
    }

    pub fn gap_set(&self) -> GapSet {
        GapSet::single(self.shift - self.c, self.shift + self.c).expect("c > 0")
    }

    /// Phase of the potential after translating by `x` and evolving for `t`.
    pub fn phase_at(&self, x: f64, t: f64) -> f64 {
        let s = self.shift;
        self.beta - 2.0 * s * x - (4.0 * s * s + 2.0 * self.c * self.c) * t
    }

    pub fn at(&self, x: f64, t: f64) -> OneGapSchur {
        OneGapSchur { beta: self.phase_at(x, t), ..*self }
    }

    pub fn potential(&self, x: f64, t: f64) -> Complex64 {
        Complex64::from_polar(self.c, self.phase_at(x, t))
    }

    fn w(&self, z: Complex64) -> Complex64 {
        joukowski_inverse((z - self.shift) / self.c)
    }
}

impl SchurPair for OneGapSchur {
    fn s_plus(&self, z: Complex64) -> Complex64 {
        Complex64::from_polar(1.0, self.beta) * self.w(z)
    }

    fn s_minus(&self, z: Complex64) -> Complex64 {
        Complex64::from_polar(1.0, -self.beta) * self.w(z)
    }
}

/// Schur pair known only at sample points; evaluation returns the value
/// at the nearest sample and panics if none lies within `tolerance`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampledSchur {
    pub samples: Vec<(Complex64, Complex64, Complex64)>,
    pub tolerance: f64,
}

impl SampledSchur {
    fn nearest(&self, z: Complex64) -> &(Complex64, Complex64, Complex64) {
        let best = self
            .samples
            .iter()
            .min_by(|a, b| (a.0 - z).norm().total_cmp(&(b.0 - z).norm()))
            .expect("sampled Schur pair has no samples");
        assert!(
            (best.0 - z).norm() <= self.tolerance,
            "no Schur sample within {} of {z}",
            self.tolerance
        );
        best
    }
}

impl SchurPair for SampledSchur {
    fn s_plus(&self, z: Complex64) -> Complex64 {
        self.nearest(z).1
    }

    fn s_minus(&self, z: Complex64) -> Complex64 {
        self.nearest(z).2
    }
}

/// Dirichlet data read off from a Schur pair, one gap at a time.
///
/// `R` is sampled on the upper bank of each gap, including points within
/// `1e-13` of the gap width from each edge. A sign change locates `mu_j` by
/// bisection; the sheet is the one whose Schur function equals 1 there.
/// Constant sign puts `mu_j` at an edge: `a_j` when `R > 0`, `b_j` when
/// `R < 0`.
pub fn divisor_from_schur<P: SchurPair + ?Sized>(pair: &P, g: &GapSet) -> Result<Divisor> {
    const SAMPLES: usize = 64;
    const EDGE: f64 = 1e-13;
    let r_at = |x: f64| resolvent_from_schur(pair.s_plus(x.into()), pair.s_minus(x.into())).re;
    let mut points = Vec::with_capacity(g.len());
    for (j, &(a, b)) in g.gaps().iter().enumerate() {
        let mut xs: Vec<f64> = vec![a + EDGE * (b - a)];
        xs.extend((1..SAMPLES).map(|i| a + (b - a) * i as f64 / SAMPLES as f64));
        xs.push(b - EDGE * (b - a));
        let vals: Vec<f64> = xs.iter().map(|&x| r_at(x)).collect();
        let changes = vals.windows(2).filter(|w| (w[0] < 0.0) != (w[1] < 0.0)).count();
        if changes > 1 || vals.first().is_some_and(|&v| v > 0.0) && changes == 1 {
            return Err(Error::Numerical(format!(
                "R on gap {j} is not increasing through a single zero"
            )));
        }
        if changes == 0 {
            let mu = if vals[0] > 0.0 { a } else { b };
            points.push(DivisorPoint { mu, sheet: Sheet::Edge });
            continue;
        }
        let i = vals.windows(2).position(|w| w[0] < 0.0 && w[1] >= 0.0).unwrap();
        let (mut lo, mut hi) = (xs[i], xs[i + 1]);
        let tol = 1e-13 * (b - a);
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if r_at(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mu = 0.5 * (lo + hi);
        let dp = (pair.s_plus(mu.into()) - 1.0).norm();
        let dm = (pair.s_minus(mu.into()) - 1.0).norm();
        let sheet = if dp <= dm { Sheet::Plus } else { Sheet::Minus };
        points.push(DivisorPoint { mu, sheet });
    }
    Ok(Divisor { points })
}

/// A Schur pair along a family of potentials `phi(x, t)`.
pub trait SchurFlow {
    fn pair_at(&self, z: Complex64, x: f64, t: f64) -> (Complex64, Complex64);
    fn phi(&self, x: f64, t: f64) -> Complex64;
    fn phi_x(&self, x: f64, t: f64) -> Complex64;

    /// `∂_x (s_+, s_-)`; the default is a fourth-order central difference.
    fn d_dx(&self, z: Complex64, x: f64, t: f64) -> (Complex64, Complex64) {
        central_difference(|h| self.pair_at(z, x + h, t), 1e-3)
    }

    /// `∂_t (s_+, s_-)`; the default is a fourth-order central difference.
    fn d_dt(&self, z: Complex64, x: f64, t: f64) -> (Complex64, Complex64) {
        central_difference(|h| self.pair_at(z, x, t + h), 1e-3)
    }
}

fn central_difference<F>(f: F, h: f64) -> (Complex64, Complex64)
where
    F: Fn(f64) -> (Complex64, Complex64),
{
    let (p2, m2) = f(2.0 * h);
    let (p1, m1) = f(h);
    let (q1, n1) = f(-h);
    let (q2, n2) = f(-2.0 * h);
    let d = |a2: Complex64, a1: Complex64, b1: Complex64, b2: Complex64| {
        (8.0 * (a1 - b1) - (a2 - b2)) / (12.0 * h)
    };
    (d(p2, p1, q1, q2), d(m2, m1, n1, n2))
}

impl SchurFlow for OneGapSchur {
    fn pair_at(&self, z: Complex64, x: f64, t: f64) -> (Complex64, Complex64) {
        let p = self.at(x, t);
        (p.s_plus(z), p.s_minus(z))
    }

    fn phi(&self, x: f64, t: f64) -> Complex64 {
        self.potential(x, t)
    }

    fn phi_x(&self, x: f64, t: f64) -> Complex64 {
        -2.0 * self.shift * I * self.potential(x, t)
    }

    fn d_dx(&self, z: Complex64, x: f64, t: f64) -> (Complex64, Complex64) {
        let (sp, sm) = self.pair_at(z, x, t);
        let rate = -2.0 * self.shift;
        (I * rate * sp, -I * rate * sm)
    }

    fn d_dt(&self, z: Complex64, x: f64, t: f64) -> (Complex64, Complex64) {
        let (sp, sm) = self.pair_at(z, x, t);
        let rate = -(4.0 * self.shift * self.shift + 2.0 * self.c * self.c);
        (I * rate * sp, -I * rate * sm)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Flow {
    Space,
    Time,
}

/// Residuals of the Riccati equations satisfied by `s_+` and `s_-`.
///
/// Space:
/// `-i s_+' = conj(phi) s_+² - 2z s_+ + phi` and
/// `-i s_-' = -(phi s_-² - 2z s_- + conj(phi))`.
///
/// Time, on the clock of `i u_t = -u_xx + 2|u|²u`:
/// `∂_t s_+ = v12 + (v11 - v22) s_+ - v21 s_+²` and
/// `∂_t s_- = v21 + (v22 - v11) s_- - v12 s_-²` with
/// `v11 = -2iz² - i|phi|²`, `v12 = 2iz phi - phi_x`,
/// `v21 = -2iz conj(phi) - conj(phi_x)`, `v22 = -v11`.
///
/// Returns the larger of the two absolute residuals.
pub fn riccati_residuals<F: SchurFlow + ?Sized>(
    family: &F,
    z: Complex64,
    x: f64,
    t: f64,
    flow: Flow,
) -> f64 {
    let (sp, sm) = family.pair_at(z, x, t);
    let phi = family.phi(x, t);
    let phib = phi.conj();
    match flow {
        Flow::Space => {
            let (dp, dm) = family.d_dx(z, x, t);
            let rp = -I * dp - (phib * sp * sp - 2.0 * z * sp + phi);
            let rm = -I * dm + (phi * sm * sm - 2.0 * z * sm + phib);
            rp.norm().max(rm.norm())
        }
        Flow::Time => {
            let (dp, dm) = family.d_dt(z, x, t);
            let phix = family.phi_x(x, t);
            let v11 = -2.0 * I * z * z - I * phi.norm_sqr();
            let v12 = 2.0 * I * z * phi - phix;
            let v21 = -2.0 * I * z * phib - phix.conj();
            let rp = dp - (v12 + 2.0 * v11 * sp - v21 * sp * sp);
            let rm = dm - (v21 - 2.0 * v11 * sm - v12 * sm * sm);
            rp.norm().max(rm.norm())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn pt(mu: f64, sheet: Sheet) -> Divisor {
        Divisor::new(vec![DivisorPoint { mu, sheet }])
    }

    #[test]
    fn empty_product_is_i() {
        let r = resolvent_product(c(0.3, 2.0), &GapSet::empty(), &Divisor::new(vec![])).unwrap();
        assert_eq!(r, I);
    }

    #[test]
    fn edge_divisor_value_at_i() {
        let g = GapSet::single(-1.0, 1.0).unwrap();
        let r = resolvent_product(I, &g, &pt(1.0, Sheet::Edge)).unwrap();
        assert_abs_diff_eq!(r.re, -FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(r.im, FRAC_1_SQRT_2, epsilon = 1e-15);
    }

    #[test]
    fn one_gap_m_functions_at_i() {
        let pair = OneGapSchur::new(1.0, 0.0, 0.0);
        let sp = pair.s_plus(I);
        assert_abs_diff_eq!(sp.re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(sp.im, 1.0 - 2f64.sqrt(), epsilon = 1e-15);
        let m = m_and_borel(&pair, I).unwrap();
        assert_abs_diff_eq!(m.m_plus.re, FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(m.m_plus.im, FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(m.borel.re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(m.borel.im, FRAC_1_SQRT_2, epsilon = 1e-15);
        let r = -2.0 / (m.m_plus + m.m_minus);
        assert_abs_diff_eq!(r.re, -FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(r.im, FRAC_1_SQRT_2, epsilon = 1e-15);
    }

    #[test]
    fn identity_schur_gives_free_m() {
        struct Zero;
        impl SchurPair for Zero {
            fn s_plus(&self, _: Complex64) -> Complex64 {
                Complex64::new(0.0, 0.0)
            }
            fn s_minus(&self, _: Complex64) -> Complex64 {
                Complex64::new(0.0, 0.0)
            }
        }
        let m = m_and_borel(&Zero, c(0.2, 1.0)).unwrap();
        assert_eq!(m.m_plus, I);
        assert_eq!(m.borel, I);
    }

    #[test]
    fn trace_scalar_examples() {
        let g = GapSet::single(-1.0, 1.0).unwrap();
        assert_eq!(trace_scalars(&pt(1.0, Sheet::Edge), &g), (-2.0, 0.0));
        let g = GapSet::single(0.0, 2.0).unwrap();
        assert_eq!(trace_scalars(&pt(2.0, Sheet::Edge), &g), (-2.0, -4.0));
    }

    #[test]
    fn reconstruct_examples() {
        let g = GapSet::single(-1.0, 1.0).unwrap();
        let v = reconstruct_field(&pt(1.0, Sheet::Edge), &pt(0.0, Sheet::Minus), &g).unwrap();
        assert_eq!(v, c(1.0, 0.0));
        let v = reconstruct_field(&pt(0.0, Sheet::Plus), &pt(1.0, Sheet::Edge), &g).unwrap();
        assert_eq!(v, c(0.0, 1.0));
        let e = Divisor::new(vec![]);
        assert_eq!(reconstruct_field(&e, &e, &GapSet::empty()).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn divisor_from_schur_examples() {
        let g = GapSet::single(-1.0, 1.0).unwrap();
        let d = divisor_from_schur(&OneGapSchur::new(1.0, 0.0, 0.0), &g).unwrap();
        assert_eq!(d.points[0], DivisorPoint { mu: 1.0, sheet: Sheet::Edge });
        let d = divisor_from_schur(&OneGapSchur::new(1.0, PI / 2.0, 0.0), &g).unwrap();
        assert_abs_diff_eq!(d.points[0].mu, 0.0, epsilon = 1e-12);
        assert_eq!(d.points[0].sheet, Sheet::Plus);
        let d = divisor_from_schur(&OneGapSchur::new(1.0, PI, 0.0), &g).unwrap();
        assert_eq!(d.points[0], DivisorPoint { mu: -1.0, sheet: Sheet::Edge });
    }

    #[test]
    fn riccati_constant_family() {
        let fam = OneGapSchur::new(1.3, 0.4, 0.0);
        for z in [c(0.0, 1.0), c(2.0, 0.5), c(-0.7, 3.0)] {
            assert!(riccati_residuals(&fam, z, 0.0, 0.0, Flow::Space) < 1e-12);
            assert!(riccati_residuals(&fam, z, 0.0, 0.0, Flow::Time) < 1e-10);
        }
    }

    #[test]
    fn riccati_plane_wave_with_finite_differences() {
        struct Fd(OneGapSchur);
        impl SchurFlow for Fd {
            fn pair_at(&self, z: Complex64, x: f64, t: f64) -> (Complex64, Complex64) {
                self.0.pair_at(z, x, t)
            }
            fn phi(&self, x: f64, t: f64) -> Complex64 {
                self.0.phi(x, t)
            }
            fn phi_x(&self, x: f64, t: f64) -> Complex64 {
                self.0.phi_x(x, t)
            }
        }
        let fam = Fd(OneGapSchur::new(0.8, 1.1, 0.6));
        let z = c(0.3, 0.9);
        assert!(riccati_residuals(&fam, z, 0.4, 0.2, Flow::Space) < 1e-9);
        assert!(riccati_residuals(&fam, z, 0.4, 0.2, Flow::Time) < 1e-9);
    }
}
