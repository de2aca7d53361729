// SPDX-License-Identifier: MIT OR Apache-2.0

//! Abel map of a finite-gap spectrum and the frequencies of the linear
//! flows it produces.
//!
//! With `n` gaps the curve `w² = Π (z - a_j)(z - b_j)` has genus `n - 1`.
//! Write `R(z) = Π sqrt(z - a_j) sqrt(z - b_j)` with principal roots; on
//! the upper bank of gap `j` (0-based) `R = i (-1)^{n-1-j} |R|`, and on the
//! band between gaps `j` and `j+1` it is real with sign `(-1)^{n-1-j}`.
//!
//! Differentials are stored as `P(z)/R(z) dz` with `P` expanded in the
//! scaled variable `w = (z - x0)/s`, which keeps the linear systems well
//! conditioned. Three families are built:
//!
//! * `i P_k/R dz`, the derivative of the harmonic measure of the band set
//!   `E_k` between the reference gap and gap `k`;
//! * `i P_∞/R dz`, the harmonic measure of `E_∞ = [ξ*, ∞) ∩ E`;
//! * `T_0/R dz`, `T_1/R dz`, second-kind differentials behaving like
//!   `d(z)` and `d(z²)` at infinity, with vanishing integrals over every gap.
//!
//! The "A-period" of a differential on gap `j` is its integral along the
//! upper bank of the gap, which is the jump of the harmonic function across
//! the gap.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::dubrovin::TimeConvention;
use crate::error::{Error, Result};
use crate::quad::{adaptive_legendre, chebyshev_weighted};
use crate::spectral_domain::{divisor_to_phases, Divisor, GapSet, PhaseVector};

const QUAD_TOL: f64 = 1e-15;

/// Normalised differentials and periods of a finite-gap curve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HyperellipticData {
    pub gaps: GapSet,
    /// Centre and scale of the variable `w = (z - x0)/s`.
    pub x0: f64,
    pub s: f64,
    /// Gap index `k` of each generator `l_k` (all gaps except the reference).
    pub generators: Vec<usize>,
    /// `P_k` in the `w` basis for the harmonic measure of `E_k`.
    pub harmonic: Vec<Vec<f64>>,
    /// `+1` or `-1`: the A-normalised differential is `ω_k = σ_k dh_{E_k}`.
    pub omega_sign: Vec<f64>,
    /// `P_∞` in the `w` basis.
    pub infinity: Vec<f64>,
    /// `T_0` and `T_1` in the `w` basis.
    pub second_kind: [Vec<f64>; 2],
    /// Imaginary part of the B-period matrix of the A-normalised basis.
    pub period_matrix_im: Vec<Vec<f64>>,
    /// Largest singular value over smallest, worst over all systems solved.
    pub condition_number: f64,
}

fn horner(c: &[f64], w: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &v| acc * w + v)
}

/// `x^k` rewritten in powers of `w = (x - x0)/s`.
fn monomial_in_w(k: usize, x0: f64, s: f64) -> Vec<f64> {
    let mut out = vec![0.0; k + 1];
    let mut binom = 1.0;
    for m in 0..=k {
        out[m] = binom * s.powi(m as i32) * x0.powi((k - m) as i32);
        binom = binom * (k - m) as f64 / (m + 1) as f64;
    }
    out
}

fn add_scaled(target: &mut Vec<f64>, src: &[f64], scale: f64) {
    if target.len() < src.len() {
        target.resize(src.len(), 0.0);
    }
    for (t, &v) in target.iter_mut().zip(src) {
        *t += scale * v;
    }
}

impl HyperellipticData {
    pub fn genus(&self) -> usize {
        self.gaps.len().saturating_sub(1)
    }

    fn n(&self) -> usize {
        self.gaps.len()
    }

    fn w(&self, x: f64) -> f64 {
        (x - self.x0) / self.s
    }

    /// `Π_{l ≠ skip} sqrt|(x - a_l)(x - b_l)|`.
    fn other_factors(&self, x: f64, skip: usize) -> f64 {
        self.gaps
            .gaps()
            .iter()
            .enumerate()
            .filter(|(l, _)| *l != skip)
            .map(|(_, &(a, b))| ((x - a) * (x - b)).abs().sqrt())
            .product()
    }

    fn gap_sign(&self, j: usize) -> f64 {
        if (self.n() - 1 - j).is_multiple_of(2) {
            1.0
        } else {
            -1.0
        }
    }

    /// `∫_{gap j} q(x) P(x)/|R(x)| dx` for a polynomial `P` in the `w` basis.
    fn gap_moment(&self, j: usize, p: &[f64], q: impl Fn(f64) -> f64) -> f64 {
        let (a, b) = self.gaps.gap(j);
        chebyshev_weighted(|x| q(x) * horner(p, self.w(x)) / self.other_factors(x, j), a, b, QUAD_TOL)
    }

    /// `∫ P(x)/|R(x)| dx` over the band between gaps `j` and `j + 1`.
    fn band_moment(&self, j: usize, p: &[f64]) -> f64 {
        let (aj, bj) = self.gaps.gap(j);
        let (ak, bk) = self.gaps.gap(j + 1);
        let rest = |x: f64| -> f64 {
            let mut acc = (x - aj).sqrt() * (bk - x).sqrt();
            for (l, &(a, b)) in self.gaps.gaps().iter().enumerate() {
                if l != j && l != j + 1 {
                    acc *= ((x - a) * (x - b)).abs().sqrt();
                }
            }
            acc
        };
        chebyshev_weighted(|x| horner(p, self.w(x)) / rest(x), bj, ak, QUAD_TOL)
    }

    fn band_sign(&self, j: usize) -> f64 {
        self.gap_sign(j)
    }

    /// Bands making up `E_k`, as indices `j` of the band `(b_j, a_{j+1})`.
    fn bands_of(&self, k: usize) -> std::ops::Range<usize> {
        let r = self.gaps.reference_index();
        if k < r {
            k..r
        } else {
            r..k
        }
    }

    /// `∫_{E_k} P/R dx` with `R` taken on the upper bank (real on bands).
    fn band_set_integral(&self, k: usize, p: &[f64]) -> f64 {
        self.bands_of(k).map(|j| self.band_sign(j) * self.band_moment(j, p)).sum()
    }

    /// Gap integral (A-period) of `i P/R dz` over gap `j`.
    pub fn a_period(&self, j: usize, p: &[f64]) -> f64 {
        self.gap_sign(j) * self.gap_moment(j, p, |_| 1.0)
    }

    /// A-periods of the A-normalised holomorphic basis: row `j`, column `k`.
    pub fn a_period_matrix(&self) -> Vec<Vec<f64>> {
        self.generators
            .iter()
            .map(|&j| {
                (0..self.generators.len())
                    .map(|k| self.omega_sign[k] * self.a_period(j, &self.harmonic[k]))
                    .collect()
            })
            .collect()
    }

    /// Harmonic measure density `dh/dx` of `E_k` (generator index) or of
    /// `E_∞` (`None`) at a point `x` of a gap.
    pub fn gap_density(&self, generator: Option<usize>, x: f64) -> Result<f64> {
        let j = self
            .gaps
            .in_gap(x)
            .ok_or_else(|| Error::InvalidInput(format!("{x} is not inside a gap")))?;
        let p = match generator {
            Some(k) => &self.harmonic[k],
            None => &self.infinity,
        };
        let (a, b) = self.gaps.gap(j);
        let rabs = ((x - a) * (b - x)).sqrt() * self.other_factors(x, j);
        Ok(self.gap_sign(j) * horner(p, self.w(x)) / rabs)
    }

    /// `∫_0^y P(x(u)) / Π_j(x(u)) du` on gap `j` with `x(u) = a + γ sin² u`,
    /// continued past `π` by periodicity.
    fn phase_integral(&self, j: usize, p: &[f64], y: f64) -> f64 {
        let (a, b) = self.gaps.gap(j);
        let g = |u: f64| {
            let s = u.sin();
            let x = a + (b - a) * s * s;
            horner(p, self.w(x)) / self.other_factors(x, j)
        };
        let turns = (y / PI).floor();
        let rem = y - turns * PI;
        let mut total = adaptive_legendre(g, 0.0, rem, 1e-15);
        if turns != 0.0 {
            total += turns * adaptive_legendre(g, 0.0, PI, 1e-15);
        }
        self.gap_sign(j) * total
    }
}

fn solve(m: DMatrix<f64>, rhs: DVector<f64>, what: &str) -> Result<(Vec<f64>, f64)> {
    if m.nrows() == 0 {
        return Ok((Vec::new(), 1.0));
    }
    let sv = m.clone().singular_values();
    let cond = sv.max() / sv.min();
    if !cond.is_finite() || cond > 1e13 {
        return Err(Error::Numerical(format!(
            "{what}: normalisation system is ill-conditioned (condition number {cond:e})"
        )));
    }
    let x = m
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numerical(format!("{what}: singular normalisation system")))?;
    Ok((x.iter().copied().collect(), cond))
}

/// Builds the normalised differentials and the period matrix.
pub fn build_curve(g: &GapSet) -> Result<HyperellipticData> {
    let n = g.len();
    if n == 0 {
        return Err(Error::InvalidInput("the curve needs at least one gap".into()));
    }
    let lo = g.gap(0).0;
    let hi = g.gap(n - 1).1;
    let x0 = 0.5 * (lo + hi);
    let s = 0.5 * (hi - lo);
    let r = g.reference_index();
    let mut data = HyperellipticData {
        gaps: g.clone(),
        x0,
        s,
        generators: (0..n).filter(|&j| j != r).collect(),
        harmonic: Vec::new(),
        omega_sign: Vec::new(),
        infinity: Vec::new(),
        second_kind: [Vec::new(), Vec::new()],
        period_matrix_im: Vec::new(),
        condition_number: 1.0,
    };

    // Gap moments of w^m / |R|, for m up to n - 1.
    let moments: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            (0..n)
                .map(|m| {
                    let mut e = vec![0.0; m + 1];
                    e[m] = 1.0;
                    data.gap_moment(j, &e, |_| 1.0)
                })
                .collect()
        })
        .collect();
    let mut worst = 1.0f64;

    // Harmonic measures of E_k: degree ≤ n - 2, jumps prescribed on j ≠ r.
    let others = data.generators.clone();
    let sys = DMatrix::from_fn(others.len(), n.saturating_sub(1), |row, m| {
        data.gap_sign(others[row]) * moments[others[row]][m]
    });
    for &k in &others {
        let rhs = DVector::from_fn(others.len(), |row, _| {
            if others[row] == k {
                if k < r {
                    1.0
                } else {
                    -1.0
                }
            } else {
                0.0
            }
        });
        let (c, cond) = solve(sys.clone(), rhs, "harmonic measure")?;
        worst = worst.max(cond);
        data.harmonic.push(c);
        data.omega_sign.push(if k < r { 1.0 } else { -1.0 });
    }

    // E_∞: leading term z^{n-1}/π, zero jumps on every gap except r.
    let lead = monomial_in_w(n - 1, x0, s);
    let mut fixed = Vec::new();
    add_scaled(&mut fixed, &lead, 1.0 / PI);
    if n > 1 {
        let rhs = DVector::from_fn(others.len(), |row, _| {
            -data.gap_sign(others[row]) * data.gap_moment(others[row], &fixed, |_| 1.0)
        });
        let (c, cond) = solve(sys.clone(), rhs, "harmonic measure at infinity")?;
        worst = worst.max(cond);
        add_scaled(&mut fixed, &c, 1.0);
    }
    data.infinity = fixed;

    // Second-kind differentials: monic parts z^n and 2 z^{n+1} - s1 z^n,
    // with all n gap integrals vanishing.
    let s1: f64 = g.gaps().iter().map(|&(a, b)| a + b).sum();
    let full = DMatrix::from_fn(n, n, |j, m| moments[j][m]);
    for (order, slot) in [0usize, 1].into_iter().zip(0..2) {
        let mut fixed = Vec::new();
        if order == 0 {
            add_scaled(&mut fixed, &monomial_in_w(n, x0, s), 1.0);
        } else {
            add_scaled(&mut fixed, &monomial_in_w(n + 1, x0, s), 2.0);
            add_scaled(&mut fixed, &monomial_in_w(n, x0, s), -s1);
        }
        let rhs = DVector::from_fn(n, |j, _| -data.gap_moment(j, &fixed, |_| 1.0));
        let (c, cond) = solve(full.clone(), rhs, "second-kind differential")?;
        worst = worst.max(cond);
        add_scaled(&mut fixed, &c, 1.0);
        data.second_kind[slot] = fixed;
    }

    // B-periods of the A-normalised basis ω_k = σ_k dh_{E_k}: twice the
    // integral of i P/R over the band set E_j, which is purely imaginary.
    let gsz = data.generators.len();
    let mut tau = vec![vec![0.0; gsz]; gsz];
    for (row, &j) in data.generators.iter().enumerate() {
        for col in 0..gsz {
            tau[row][col] = 2.0
                * data.omega_sign[row]
                * data.omega_sign[col]
                * data.band_set_integral(j, &data.harmonic[col]);
        }
    }
    data.period_matrix_im = tau;
    data.condition_number = worst;
    Ok(data)
}

/// Character and rotation coordinates, reduced mod 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbelImage {
    pub character: Vec<f64>,
    pub rotation: f64,
}

fn check_curve(d_len: usize, h: &HyperellipticData) -> Result<()> {
    if d_len != h.n() {
        return Err(Error::LengthMismatch { expected: h.n(), got: d_len });
    }
    Ok(())
}

/// Continuous lift of the character coordinates along phase angles:
/// `Σ_j (ε_j/2) ∫_{a_j}^{mu_j} dh_{E_k}` plus an integer.
pub fn character_lift(y: &PhaseVector, h: &HyperellipticData) -> Result<Vec<f64>> {
    check_curve(y.len(), h)?;
    Ok((0..h.generators.len())
        .map(|k| {
            (0..h.n())
                .map(|j| h.phase_integral(j, &h.harmonic[k], y.0[j]))
                .sum()
        })
        .collect())
}

/// Continuous lift of the rotation coordinate:
/// `-Σ_j (ε_j/2) ∫_{a_j}^{mu_j} dh_{E_∞}` plus an integer.
pub fn rotation_lift(y: &PhaseVector, h: &HyperellipticData) -> Result<f64> {
    check_curve(y.len(), h)?;
    Ok(-(0..h.n()).map(|j| h.phase_integral(j, &h.infinity, y.0[j])).sum::<f64>())
}

fn frac(v: f64) -> f64 {
    let r = v.rem_euclid(1.0);
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// `𝒜_c(l_k) = Σ_j (ε_j/2) ∫_{a_j}^{mu_j} ω(dt, E_k) mod 1`.
pub fn abel_character(d: &Divisor, h: &HyperellipticData) -> Result<Vec<f64>> {
    let y = divisor_to_phases(d, &h.gaps)?;
    Ok(character_lift(&y, h)?.into_iter().map(frac).collect())
}

/// `𝒜_r = -Σ_j (ε_j/2) ∫_{a_j}^{mu_j} ω(dξ, E_∞) mod 1`.
pub fn abel_rotation(d: &Divisor, h: &HyperellipticData) -> Result<f64> {
    let y = divisor_to_phases(d, &h.gaps)?;
    Ok(frac(rotation_lift(&y, h)?))
}

/// Both coordinates from phase angles.
pub fn abel_image(y: &PhaseVector, h: &HyperellipticData) -> Result<AbelImage> {
    Ok(AbelImage {
        character: character_lift(y, h)?.into_iter().map(frac).collect(),
        rotation: frac(rotation_lift(y, h)?),
    })
}

/// Slopes of the character (`eta`, `eta1`) and rotation (`theta0`,
/// `theta1`) coordinates under translation and NLS time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyData {
    pub eta: Vec<f64>,
    pub eta1: Vec<f64>,
    pub theta0: f64,
    pub theta1: f64,
}

/// `eta_k = -B_k(T_0)/(2π)` and `eta1_k = -κ_t B_k(T_1)/(2π)`, where
/// `B_k(T) = 2 ∫_{E_k} T/R dx` is the B-period of a second-kind
/// differential and `κ_t` the calibrated clock ratio.
pub fn translation_frequencies(h: &HyperellipticData) -> (Vec<f64>, Vec<f64>) {
    let kappa = TimeConvention::CALIBRATED.kappa_t;
    let mut eta = Vec::new();
    let mut eta1 = Vec::new();
    for &k in &h.generators {
        let b0 = 2.0 * h.band_set_integral(k, &h.second_kind[0]);
        let b1 = 2.0 * h.band_set_integral(k, &h.second_kind[1]);
        eta.push(-b0 / (2.0 * PI));
        eta1.push(-kappa * b1 / (2.0 * PI));
    }
    (eta, eta1)
}

/// Translation frequencies from gap moments of the harmonic measures:
/// `eta_k = (1/π) ∫ x dh_{E_k}`, `eta1_k = (κ_t/π) ∫ x² dh_{E_k}`.
pub fn translation_frequencies_by_moments(h: &HyperellipticData) -> (Vec<f64>, Vec<f64>) {
    let kappa = TimeConvention::CALIBRATED.kappa_t;
    let mom = |p: &[f64], pow: i32| -> f64 {
        (0..h.n())
            .map(|j| h.gap_sign(j) * h.gap_moment(j, p, |x| x.powi(pow)))
            .sum()
    };
    let eta = h.harmonic.iter().map(|p| mom(p, 1) / PI).collect();
    let eta1 = h.harmonic.iter().map(|p| kappa * mom(p, 2) / PI).collect();
    (eta, eta1)
}

/// `theta0 = (1/π) ∫ ξ dh_{E_∞}` and `theta1 = (κ_t/π) ∫ ξ² dh_{E_∞}`,
/// integrals along the real axis from one sheet infinity to the other.
/// The band contributions are purely imaginary and drop out, leaving
/// finite gap integrals.
pub fn rotation_frequencies(h: &HyperellipticData) -> (f64, f64) {
    let kappa = TimeConvention::CALIBRATED.kappa_t;
    let mom = |pow: i32| -> f64 {
        (0..h.n())
            .map(|j| h.gap_sign(j) * h.gap_moment(j, &h.infinity, |x| x.powi(pow)))
            .sum()
    };
    (mom(1) / PI, kappa * mom(2) / PI)
}

/// All four frequency families.
pub fn frequencies(h: &HyperellipticData) -> FrequencyData {
    let (eta, eta1) = translation_frequencies(h);
    let (theta0, theta1) = rotation_frequencies(h);
    FrequencyData { eta, eta1, theta0, theta1 }
}

/// Laurent coefficients `c_m` of `i P(z)/R(z) = Σ c_m z^{-m}` at infinity,
/// by the trapezoid rule on a circle enclosing all branch points.
pub fn laurent_coefficients(h: &HyperellipticData, p: &[f64], orders: &[i32]) -> Vec<Complex64> {
    let n_nodes = 2048;
    let radius = 3.0 * h.s.max(1.0) + h.x0.abs();
    let i = Complex64::new(0.0, 1.0);
    orders
        .iter()
        .map(|&m| {
            let mut acc = Complex64::new(0.0, 0.0);
            for q in 0..n_nodes {
                let th = 2.0 * PI * (q as f64 + 0.5) / n_nodes as f64;
                let z = Complex64::from_polar(radius, th);
                let mut rz = Complex64::new(1.0, 0.0);
                for &(a, b) in h.gaps.gaps() {
                    rz *= (z - a).sqrt() * (z - b).sqrt();
                }
                let w = (z - h.x0) / h.s;
                let pz = p.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * w + c);
                // dz = i z dθ, so (1/2πi) ∮ f z^{m-1} dz = mean of f z^m.
                acc += i * pz / rz * z.powi(m);
            }
            acc / n_nodes as f64
        })
        .collect()
}

/// Frequencies read off from Laurent coefficients at infinity; an
/// independent route used to cross-check [`frequencies`].
pub fn frequencies_by_laurent(h: &HyperellipticData) -> FrequencyData {
    let kappa = TimeConvention::CALIBRATED.kappa_t;
    let mut eta = Vec::new();
    let mut eta1 = Vec::new();
    for p in &h.harmonic {
        let c = laurent_coefficients(h, p, &[2, 3]);
        eta.push(c[0].im);
        eta1.push(kappa * c[1].im);
    }
    let c = laurent_coefficients(h, &h.infinity, &[2, 3]);
    FrequencyData { eta, eta1, theta0: c[0].im, theta1: kappa * c[1].im }
}

/// Result of an affine fit of unwrapped coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slopes: Vec<f64>,
    pub intercepts: Vec<f64>,
    pub max_residuals: Vec<f64>,
}

/// Least-squares affine fit of coordinates given mod 1 along a clock.
///
/// Each coordinate is unwrapped by choosing the representative of every
/// increment in `(-1/2, 1/2]`.
pub fn linearization_fit(clocks: &[f64], coords: &[Vec<f64>]) -> Result<LinearFit> {
    if clocks.len() != coords.len() {
        return Err(Error::LengthMismatch { expected: clocks.len(), got: coords.len() });
    }
    if clocks.len() < 8 {
        return Err(Error::InvalidInput("linearisation fit needs at least 8 samples".into()));
    }
    let dim = coords[0].len();
    let n = clocks.len() as f64;
    let mean_t = clocks.iter().sum::<f64>() / n;
    let stt: f64 = clocks.iter().map(|t| (t - mean_t).powi(2)).sum();
    let mut fit = LinearFit { slopes: vec![], intercepts: vec![], max_residuals: vec![] };
    for c in 0..dim {
        let mut vals = Vec::with_capacity(coords.len());
        let mut prev = coords[0][c];
        let mut acc = prev;
        vals.push(acc);
        for row in &coords[1..] {
            let mut d = row[c] - prev;
            d -= d.round();
            if d.abs() > 0.45 {
                return Err(Error::Numerical(
                    "unwrap ambiguity: increment close to 1/2, sample more finely".into(),
                ));
            }
            acc += d;
            prev = row[c];
            vals.push(acc);
        }
        let mean_v = vals.iter().sum::<f64>() / n;
        let stv: f64 = clocks.iter().zip(&vals).map(|(t, v)| (t - mean_t) * (v - mean_v)).sum();
        let slope = if stt > 0.0 { stv / stt } else { 0.0 };
        let icpt = mean_v - slope * mean_t;
        let res = clocks
            .iter()
            .zip(&vals)
            .map(|(t, v)| (v - icpt - slope * t).abs())
            .fold(0.0, f64::max);
        fit.slopes.push(slope);
        fit.intercepts.push(icpt);
        fit.max_residuals.push(res);
    }
    Ok(fit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral_domain::{DivisorPoint, Sheet};
    use approx::assert_abs_diff_eq;

    #[test]
    fn one_gap_rotation_frequencies() {
        let h = build_curve(&GapSet::single(-1.0, 1.0).unwrap()).unwrap();
        let (t0, t1) = rotation_frequencies(&h);
        assert_abs_diff_eq!(t0, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(t1, 1.0 / PI, epsilon = 1e-14);
        let h = build_curve(&GapSet::single(0.0, 2.0).unwrap()).unwrap();
        let (t0, _) = rotation_frequencies(&h);
        assert_abs_diff_eq!(t0, 1.0 / PI, epsilon = 1e-14);
        assert!(h.generators.is_empty());
    }

    #[test]
    fn laurent_route_agrees() {
        let g = GapSet::new(vec![(-3.0, -2.2), (-1.0, 1.5), (2.0, 2.4)], 1).unwrap();
        let h = build_curve(&g).unwrap();
        let a = frequencies(&h);
        let b = frequencies_by_laurent(&h);
        let (em, e1m) = translation_frequencies_by_moments(&h);
        for k in 0..2 {
            assert_abs_diff_eq!(a.eta[k], b.eta[k], epsilon = 1e-11);
            assert_abs_diff_eq!(a.eta1[k], b.eta1[k], epsilon = 1e-11);
            assert_abs_diff_eq!(a.eta[k], em[k], epsilon = 1e-11);
            assert_abs_diff_eq!(a.eta1[k], e1m[k], epsilon = 1e-11);
        }
        assert_abs_diff_eq!(a.theta0, b.theta0, epsilon = 1e-11);
        assert_abs_diff_eq!(a.theta1, b.theta1, epsilon = 1e-11);
    }

    #[test]
    fn a_normalisation_and_period_matrix() {
        let g = GapSet::new(vec![(-3.0, -2.2), (-1.0, 1.5), (2.0, 2.4), (3.0, 3.7)], 1).unwrap();
        let h = build_curve(&g).unwrap();
        let a = h.a_period_matrix();
        for (j, row) in a.iter().enumerate() {
            for (k, v) in row.iter().enumerate() {
                assert_abs_diff_eq!(*v, if j == k { 1.0 } else { 0.0 }, epsilon = 1e-10);
            }
        }
        let t = &h.period_matrix_im;
        for j in 0..t.len() {
            for k in 0..t.len() {
                assert_abs_diff_eq!(t[j][k], t[k][j], epsilon = 1e-9);
            }
        }
        let m = DMatrix::from_fn(t.len(), t.len(), |j, k| t[j][k]);
        assert!(m.symmetric_eigenvalues().iter().all(|&e| e > 0.0));
    }

    #[test]
    fn edge_divisor_maps_to_zero() {
        let g = GapSet::new(vec![(-2.0, -1.0), (1.0, 2.0)], 0).unwrap();
        let h = build_curve(&g).unwrap();
        let d = Divisor::left_edges(&g);
        assert_eq!(abel_character(&d, &h).unwrap(), vec![0.0]);
        assert_eq!(abel_rotation(&d, &h).unwrap(), 0.0);
    }

    #[test]
    fn sheet_flip_negates() {
        let g = GapSet::new(vec![(-2.0, -1.0), (1.0, 2.0)], 0).unwrap();
        let h = build_curve(&g).unwrap();
        let d = Divisor::new(vec![
            DivisorPoint { mu: -1.3, sheet: Sheet::Plus },
            DivisorPoint { mu: 1.6, sheet: Sheet::Minus },
        ]);
        let mut f = d.clone();
        for p in &mut f.points {
            p.sheet = p.sheet.flipped();
        }
        let a = abel_character(&d, &h).unwrap()[0];
        let b = abel_character(&f, &h).unwrap()[0];
        assert_abs_diff_eq!(frac(a + b + 1e-13), 0.0, epsilon = 1e-11);
        let a = abel_rotation(&d, &h).unwrap();
        let b = abel_rotation(&f, &h).unwrap();
        assert_abs_diff_eq!(frac(a + b + 1e-13), 0.0, epsilon = 1e-11);
    }

    #[test]
    fn fit_of_constant_trajectory() {
        let clocks: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let coords = vec![vec![0.25]; 10];
        let fit = linearization_fit(&clocks, &coords).unwrap();
        assert_eq!(fit.slopes, vec![0.0]);
        assert_eq!(fit.max_residuals, vec![0.0]);
        assert!(linearization_fit(&clocks[..5], &coords[..5]).is_err());
    }
}
