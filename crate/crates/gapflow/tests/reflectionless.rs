// SPDX-License-Identifier: MIT OR Apache-2.0

use std::f64::consts::PI;

use gapflow::reflectionless::*;
use gapflow::spectral_domain::*;
use gapflow::Complex64;
use proptest::prelude::*;

fn config(max: usize) -> impl Strategy<Value = (GapSet, Divisor)> {
    (prop::collection::vec((0.05f64..1.0, 0.05f64..1.0, 0.0f64..=1.0, any::<bool>()), 0..=max)).prop_map(|spec| {
        let mut x = -4.0;
        let mut gaps = Vec::new();
        let mut points = Vec::new();
        for (step, width, f, plus) in spec {
            let a = x + step;
            let b = a + width;
            x = b;
            gaps.push((a, b));
            let mu = a + f * (b - a);
            let sheet = if mu == a || mu == b { Sheet::Edge } else if plus { Sheet::Plus } else { Sheet::Minus };
            points.push(DivisorPoint { mu, sheet });
        }
        (GapSet::new(gaps, 0).unwrap_or_else(|_| GapSet::empty()), Divisor::new(points))
    })
}

proptest! {
    #[test]
    fn herglotz_in_upper_half_plane(
        (g, d) in config(3),
        re in -8.0f64..8.0,
        log_im in -4.0f64..2.0,
    ) {
        prop_assume!(g.len() == d.len());
        let z = Complex64::new(re, 10f64.powf(log_im));
        let r = resolvent_product(z, &g, &d).unwrap();
        prop_assert!(r.im > 0.0, "Im R({z}) = {}", r.im);
    }

    #[test]
    fn resolvent_tends_to_i(( g, d) in config(3), y in 10.0f64..1000.0) {
        prop_assume!(g.len() == d.len());
        let c = 2.0 * g.total_width() + 1.0;
        let r = resolvent_product(Complex64::new(0.0, y), &g, &d).unwrap();
        prop_assert!((r - Complex64::i()).norm() <= c * c / y);
    }

    #[test]
    fn resolvent_increases_on_gaps((g, d) in config(3)) {
        for (j, &(a, b)) in g.gaps().iter().enumerate() {
            let xs: Vec<f64> = (1..40).map(|i| a + (b - a) * i as f64 / 40.0).collect();
            let vals: Vec<f64> = xs.iter().map(|&x| resolvent_product(x.into(), &g, &d).unwrap().re).collect();
            for w in vals.windows(2) {
                prop_assert!(w[1] > w[0], "gap {j}: {} then {}", w[0], w[1]);
            }
        }
    }

    #[test]
    fn one_gap_divisor_round_trip(c in 0.3f64..3.0, beta in 0.05f64..6.2, shift in -2.0f64..2.0) {
        let pair = OneGapSchur::new(c, beta, shift);
        let g = pair.gap_set();
        let d = divisor_from_schur(&pair, &g).unwrap();
        prop_assert!((d.points[0].mu - (shift + c * beta.cos())).abs() <= 1e-10 * c.max(1.0));
        let z = Complex64::new(shift + 0.1, 0.7);
        let a = resolvent_product(z, &g, &d).unwrap();
        let b = resolvent_from_schur(pair.s_plus(z), pair.s_minus(z));
        prop_assert!((a - b).norm() <= 1e-10);
    }
}

#[test]
fn one_gap_pair_is_reflectionless_on_the_spectrum() {
    let pair = OneGapSchur::new(1.0, 0.8, 0.0);
    for xi in [-3.0, -1.5, 1.2, 4.0] {
        let mut prev = f64::INFINITY;
        for delta in [1e-2, 1e-4, 1e-6] {
            let z = Complex64::new(xi, delta);
            let defect = (pair.s_plus(z).conj() - pair.s_minus(z)).norm();
            assert!(defect < prev);
            prev = defect;
        }
        assert!(prev < 1e-5);
    }
}

#[test]
fn borel_transform_of_constant_potential() {
    let pair = OneGapSchur::new(1.0, 0.0, 0.0);
    let m = m_and_borel(&pair, Complex64::new(0.0, 1.0)).unwrap();
    assert!(m.borel.im > 0.0);
    assert!((pair.s_plus(Complex64::i()) - Complex64::new(0.0, 1.0 - 2f64.sqrt())).norm() < 1e-15);
    assert!(m_and_borel(&pair, Complex64::new(0.3, 0.0)).is_err());
}

#[test]
fn field_from_rotated_divisors() {
    for beta in [0.2, 1.3, 2.9, 4.4] {
        let pair = OneGapSchur::new(1.5, beta, 0.0);
        let g = pair.gap_set();
        let d = divisor_from_schur(&pair, &g).unwrap();
        let d_rot = divisor_from_schur(&OneGapSchur::new(1.5, beta - 0.5 * PI, 0.0), &g).unwrap();
        let phi = reconstruct_field(&d, &d_rot, &g).unwrap();
        assert!((phi - Complex64::from_polar(1.5, beta)).norm() < 1e-10);
    }
}

/// The plane-wave family seen only through its values, so that the
/// derivatives come from the default finite differences.
struct ByValues(OneGapSchur);

impl SchurFlow for ByValues {
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

#[test]
fn riccati_residuals_vanish_for_the_plane_wave() {
    let pair = OneGapSchur::new(1.0, 0.4, 0.3);
    for z in [Complex64::new(0.2, 0.5), Complex64::new(-1.0, 1.0)] {
        for (x, t) in [(0.0, 0.0), (0.5, 0.2)] {
            for flow in [Flow::Space, Flow::Time] {
                assert!(riccati_residuals(&pair, z, x, t, flow) < 1e-12);
                assert!(riccati_residuals(&ByValues(pair), z, x, t, flow) < 1e-8);
            }
        }
    }
}
