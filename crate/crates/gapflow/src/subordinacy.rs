// SPDX-License-Identifier: MIT OR Apache-2.0

//! Partial norms of transfer-matrix entries and the two-sided estimate
//! comparing them with the half-line Schur function.
//!
//! For real `λ` the transfer matrix is `T = [[A, B], [conj B, conj A]]`.
//! For a unimodular `ξ` put `C = A + ξB`, `D = A - ξB` and
//! `n_± = ||A ± ξB||_L` (the `L²` norm on `[0, L]`). The length scale
//! `ε(ξ, L) = 1 / (2 n_+ n_-)` is compared against
//! `F_ξ(z) = (1 + ξ s_+(z)) / (1 - ξ s_+(z))` at `z = λ + iε`:
//! `|F_ξ| · n_+ / n_-` stays within `[3 - √8, 3 + √8]`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::direct_spectral::{schur_pair, sup_transfer_norm_sq, weyl_disk_schur, QPotential, Stepper};
use crate::error::{Error, Result};
use crate::reflectionless::m_from_schur;

/// Lower constant of the two-sided estimate.
pub const C_MINUS: f64 = 0.171_572_875_253_809_9; // 3 - √8
/// Upper constant of the two-sided estimate.
pub const C_PLUS: f64 = 5.828_427_124_746_19; // 3 + √8

/// Norms `n_± = ||A ± ξB||_L` at one length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartialNorms {
    pub len: f64,
    pub xi: Complex64,
    pub n_plus: f64,
    pub n_minus: f64,
}

impl PartialNorms {
    /// `ε(ξ, L) = 1 / (2 n_+ n_-)`.
    pub fn epsilon(&self) -> f64 {
        epsilon_of_l(self)
    }
}

/// Running integrals `∫|A|²`, `∫|B|²`, `∫ A conj(B)` and `∫ (|A|² - |B|²)`
/// up to a given length; all `ξ` share them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntryIntegrals {
    pub len: f64,
    pub aa: f64,
    pub bb: f64,
    pub ab: Complex64,
    /// `∫ (|A|² - |B|²)`, which equals `L` when `det T = 1`.
    pub det_integral: f64,
}

impl EntryIntegrals {
    /// `|A + ξB|² = |A|² + |B|² + 2 Re(conj(ξ) A conj(B))`.
    pub fn norms(&self, xi: Complex64) -> PartialNorms {
        let cross = 2.0 * (xi.conj() * self.ab).re;
        PartialNorms {
            len: self.len,
            xi,
            n_plus: (self.aa + self.bb + cross).max(0.0).sqrt(),
            n_minus: (self.aa + self.bb - cross).max(0.0).sqrt(),
        }
    }

    /// `(1/2) ∫ (C conj D + conj C D)`, identically `∫ (|A|² - |B|²)`.
    pub fn xi_identity(&self) -> f64 {
        self.det_integral
    }
}

/// Entry integrals at each length in `lens` (increasing), by Simpson's
/// rule on the transfer steps.
pub fn entry_integrals(p: &QPotential, lambda: f64, lens: &[f64], theta: &[f64]) -> Result<Vec<EntryIntegrals>> {
    p.validate()?;
    if lens.is_empty() || lens.windows(2).any(|w| !(w[1] > w[0])) || !(lens[0] > 0.0) {
        return Err(Error::InvalidInput("lengths must be positive and increasing".into()));
    }
    if theta.len() != p.dim() {
        return Err(Error::LengthMismatch { expected: p.dim(), got: theta.len() });
    }
    let st = Stepper::new(p, Complex64::new(lambda, 0.0), theta);
    let mut t = [[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)], [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]];
    let mul = |a: &[[Complex64; 2]; 2], b: &[[Complex64; 2]; 2]| -> [[Complex64; 2]; 2] {
        [
            [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
            [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
        ]
    };
    let sample = |m: &[[Complex64; 2]; 2]| -> (f64, f64, Complex64) {
        let a = m[0][0];
        let b = m[0][1];
        (a.norm_sqr(), b.norm_sqr(), a * b.conj())
    };
    let mut acc = (0.0, 0.0, Complex64::new(0.0, 0.0), 0.0);
    let mut out = Vec::with_capacity(lens.len());
    let mut x = 0.0;
    for &target in lens {
        let n = ((target - x) / st.h).ceil().max(1.0) as usize;
        let h = (target - x) / n as f64;
        for i in 0..n {
            let x0 = x + h * i as f64;
            let s0 = sample(&t);
            let tm = mul(&st.step(x0, 0.5 * h), &t);
            let sm = sample(&tm);
            t = mul(&st.step(x0 + 0.5 * h, 0.5 * h), &tm);
            let s1 = sample(&t);
            let w = h / 6.0;
            acc.0 += w * (s0.0 + 4.0 * sm.0 + s1.0);
            acc.1 += w * (s0.1 + 4.0 * sm.1 + s1.1);
            acc.2 += w * (s0.2 + 4.0 * sm.2 + s1.2);
            acc.3 += w * ((s0.0 - s0.1) + 4.0 * (sm.0 - sm.1) + (s1.0 - s1.1));
        }
        x = target;
        out.push(EntryIntegrals { len: target, aa: acc.0, bb: acc.1, ab: acc.2, det_integral: acc.3 });
    }
    Ok(out)
}

/// `n_±` at a single length.
pub fn partial_norms(p: &QPotential, lambda: f64, xi: Complex64, len: f64, theta: &[f64]) -> Result<PartialNorms> {
    check_xi(xi)?;
    Ok(entry_integrals(p, lambda, &[len], theta)?[0].norms(xi))
}

fn check_xi(xi: Complex64) -> Result<()> {
    if (xi.norm() - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidInput(format!("ξ must be unimodular, got |ξ| = {}", xi.norm())));
    }
    Ok(())
}

/// The root of `2 ε n_+ n_- = 1`.
pub fn epsilon_of_l(n: &PartialNorms) -> f64 {
    1.0 / (2.0 * n.n_plus * n.n_minus)
}

/// `ξ = exp(2 pi i j / count)` for `j < count`.
pub fn xi_grid(count: usize) -> Vec<Complex64> {
    (0..count)
        .map(|j| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * j as f64 / count as f64))
        .collect()
}

/// One `(ξ, L)` row of the two-sided check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JlRow {
    pub xi: Complex64,
    pub len: f64,
    pub epsilon: f64,
    pub n_plus: f64,
    pub n_minus: f64,
    pub schur: Complex64,
    pub schur_radius: f64,
    pub ratio: f64,
    pub resolved: bool,
    pub inside: bool,
}

/// Rows of the two-sided check and the overall verdict over resolved rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JlReport {
    pub lambda: f64,
    pub rows: Vec<JlRow>,
    pub all_inside: bool,
    pub inconclusive: usize,
}

/// `s_+(z)` to disk radius `tol`, doubling the length from
/// `min(1/Im z, 16)`; capped at length `cap`.
pub fn schur_plus(p: &QPotential, z: Complex64, theta: &[f64], tol: f64, cap: f64) -> Result<(Complex64, f64)> {
    let mut ell = (1.0 / z.im).min(16.0);
    loop {
        let w = weyl_disk_schur(p, z, &[ell], theta)?;
        if w.radius <= tol || ell >= cap {
            return Ok((w.estimate, w.radius));
        }
        ell = (2.0 * ell).min(cap);
    }
}

/// Verifies `3 - √8 ≤ |F_ξ(λ + iε)| n_+/n_- ≤ 3 + √8` on a `(ξ, L)` grid.
/// Rows whose Schur value is not resolved to `resolve_tol` are counted as
/// inconclusive and do not enter the verdict.
pub fn jl_ratio_check(
    p: &QPotential,
    lambda: f64,
    xis: &[Complex64],
    lens: &[f64],
    theta: &[f64],
    resolve_tol: f64,
) -> Result<JlReport> {
    for &xi in xis {
        check_xi(xi)?;
    }
    let ints = entry_integrals(p, lambda, lens, theta)?;
    let jobs: Vec<(Complex64, EntryIntegrals)> =
        xis.iter().flat_map(|&xi| ints.iter().map(move |e| (xi, *e))).collect();
    let rows: Vec<JlRow> = jobs
        .par_iter()
        .map(|(xi, e)| {
            let n = e.norms(*xi);
            let eps = n.epsilon();
            let z = Complex64::new(lambda, eps);
            let cap = (40.0 / eps).min(4e5);
            let (s, r) = schur_plus(p, z, theta, resolve_tol, cap)?;
            let f = (1.0 + xi * s) / (1.0 - xi * s);
            let ratio = f.norm() * n.n_plus / n.n_minus;
            let resolved = r <= resolve_tol;
            Ok(JlRow {
                xi: *xi,
                len: e.len,
                epsilon: eps,
                n_plus: n.n_plus,
                n_minus: n.n_minus,
                schur: s,
                schur_radius: r,
                ratio,
                resolved,
                inside: (C_MINUS..=C_PLUS).contains(&ratio),
            })
        })
        .collect::<Result<_>>()?;
    let inconclusive = rows.iter().filter(|r| !r.resolved).count();
    let all_inside = rows.iter().filter(|r| r.resolved).all(|r| r.inside);
    Ok(JlReport { lambda, rows, all_inside, inconclusive })
}

/// One row of the measure bound check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureRow {
    pub epsilon: f64,
    pub im_borel: f64,
    pub bound: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureReport {
    pub lambda: f64,
    pub rows: Vec<MeasureRow>,
    pub all_hold: bool,
}

/// Verifies `Im M(λ + iε) ≤ 2 (3 + √8) sup_{0 ≤ x ≤ 1/(2ε)} ||T(λ, x)||²`
/// with `M = (m_+ m_- - 1)/(m_+ + m_-)` built from numerical Schur values.
pub fn measure_bound_check(p: &QPotential, lambda: f64, eps_grid: &[f64], theta: &[f64]) -> Result<MeasureReport> {
    if eps_grid.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::InvalidInput("ε values must be positive".into()));
    }
    let rows: Vec<MeasureRow> = eps_grid
        .par_iter()
        .map(|&eps| {
            let z = Complex64::new(lambda, eps);
            let (sp, _, sm, _) = schur_pair(p, z, theta, 1e-10)?;
            let m = m_from_schur(sp, sm)?;
            let bound = 2.0 * C_PLUS * sup_transfer_norm_sq(p, lambda, 0.5 / eps, theta);
            Ok(MeasureRow { epsilon: eps, im_borel: m.borel.im, bound, holds: m.borel.im <= bound })
        })
        .collect::<Result<_>>()?;
    let all_hold = rows.iter().all(|r| r.holds);
    Ok(MeasureReport { lambda, rows, all_hold })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn constants() {
        assert_abs_diff_eq!(C_MINUS, 3.0 - 8f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(C_PLUS, 3.0 + 8f64.sqrt(), epsilon = 1e-14);
    }

    #[test]
    fn free_norms() {
        let p = QPotential::zero(1);
        let n = partial_norms(&p, 0.8, Complex64::new(0.0, 1.0), 9.0, &[0.0]).unwrap();
        assert_abs_diff_eq!(n.n_plus, 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(n.n_minus, 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(n.epsilon(), 1.0 / 18.0, epsilon = 1e-12);
        assert!(partial_norms(&p, 0.8, Complex64::new(2.0, 0.0), 9.0, &[0.0]).is_err());
    }

    #[test]
    fn free_ratio_is_one() {
        let p = QPotential::zero(1);
        let r = jl_ratio_check(&p, 0.3, &xi_grid(4), &[1.0, 10.0], &[0.0], 1e-8).unwrap();
        assert!(r.all_inside);
        for row in &r.rows {
            assert_abs_diff_eq!(row.ratio, 1.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn free_measure_bound() {
        let p = QPotential::zero(1);
        let r = measure_bound_check(&p, 0.0, &[0.5, 0.1], &[0.0]).unwrap();
        for row in &r.rows {
            assert_abs_diff_eq!(row.im_borel, 1.0, epsilon = 1e-9);
            assert_abs_diff_eq!(row.bound, 2.0 * C_PLUS, epsilon = 1e-9);
        }
        assert!(r.all_hold);
    }
}
