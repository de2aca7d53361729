// SPDX-License-Identifier: MIT OR Apache-2.0

//! Quadrature helpers shared by the period and norm computations.

use gauss_quad::chebyshev::GaussChebyshevFirstKind;
use gauss_quad::legendre::GaussLegendre;
use std::sync::OnceLock;

fn legendre(degree: usize) -> &'static GaussLegendre {
    static RULES: OnceLock<[GaussLegendre; 2]> = OnceLock::new();
    let rules = RULES.get_or_init(|| {
        [
            GaussLegendre::new(20.try_into().unwrap()),
            GaussLegendre::new(40.try_into().unwrap()),
        ]
    });
    if degree <= 20 {
        &rules[0]
    } else {
        &rules[1]
    }
}

/// Adaptive Gauss–Legendre quadrature: panels are bisected until the
/// 20- and 40-point rules agree to `tol` (absolute, scaled by panel length).
pub fn adaptive_legendre<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> f64 {
    fn rec<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let coarse = legendre(20).integrate(a, b, &mut *f);
        let fine = legendre(40).integrate(a, b, &mut *f);
        if (coarse - fine).abs() <= tol || depth >= 40 {
            return fine;
        }
        let m = 0.5 * (a + b);
        rec(f, a, m, 0.5 * tol, depth + 1) + rec(f, m, b, 0.5 * tol, depth + 1)
    }
    if a == b {
        return 0.0;
    }
    rec(&mut f, a, b, tol, 0)
}

/// `∫_a^b f(x) / sqrt((x - a)(b - x)) dx` by Gauss–Chebyshev quadrature,
/// doubling the node count until two successive values agree to `rel_tol`.
pub fn chebyshev_weighted<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> f64 {
    let mut n = 32usize;
    let eval = |n: usize| {
        let rule = GaussChebyshevFirstKind::new(n.try_into().unwrap());
        rule.integrate(a, b, &f) * 2.0 / (b - a)
    };
    let mut prev = eval(n);
    loop {
        n *= 2;
        let cur = eval(n);
        if (cur - prev).abs() <= rel_tol * cur.abs().max(1.0) || n >= 1 << 15 {
            return cur;
        }
        prev = cur;
    }
}

/// Composite trapezoid rule for a periodic integrand on `[0, period)`.
pub fn periodic_trapezoid<F: Fn(f64) -> f64>(f: F, period: f64, n: usize) -> f64 {
    let h = period / n as f64;
    (0..n).map(|i| f(i as f64 * h)).sum::<f64>() * h
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn chebyshev_weight_is_absorbed() {
        let v = chebyshev_weighted(|_| 1.0, 2.0, 5.0, 1e-15);
        assert!((v - PI).abs() < 1e-14);
        let v = chebyshev_weighted(|x| x, -1.0, 1.0, 1e-15);
        assert!(v.abs() < 1e-14);
    }

    #[test]
    fn adaptive_handles_a_kink() {
        let v = adaptive_legendre(|x: f64| x.abs(), -1.0, 2.0, 1e-13);
        assert!((v - 2.5).abs() < 1e-12);
    }
}
