// SPDX-License-Identifier: MIT OR Apache-2.0

use gapflow::direct_spectral::{FourierMode, QPotential};
use gapflow::subordinacy::*;
use gapflow::Complex64;
use proptest::prelude::*;

fn sample() -> QPotential {
    QPotential::new(
        vec![1.0, 0.5 * (5f64.sqrt() - 1.0)],
        vec![
            FourierMode { n: vec![1, 0], coeff: Complex64::new(0.1, 0.0) },
            FourierMode { n: vec![0, 1], coeff: Complex64::new(0.0, 0.1) },
        ],
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn partial_norm_product_bounds_length(lambda in -3.0f64..3.0, phase in 0.0f64..6.3, theta in 0.0f64..1.0) {
        let p = sample();
        let xi = Complex64::from_polar(1.0, phase);
        let lens = [1.0, 3.0, 10.0, 30.0];
        let ints = entry_integrals(&p, lambda, &lens, &[theta, 0.3]).unwrap();
        let mut prev_eps = f64::INFINITY;
        for e in &ints {
            prop_assert!((e.xi_identity() - e.len).abs() <= 1e-6 * e.len);
            let n = e.norms(xi);
            prop_assert!(n.n_plus * n.n_minus >= e.len * (1.0 - 1e-6));
            let eps = n.epsilon();
            prop_assert!(eps < prev_eps);
            prev_eps = eps;
        }
    }
}

#[test]
fn partial_norms_reject_off_circle_xi() {
    let p = sample();
    assert!(partial_norms(&p, 0.5, Complex64::new(0.5, 0.0), 5.0, &[0.0, 0.0]).is_err());
    let n = partial_norms(&p, 0.5, Complex64::new(1.0, 0.0), 5.0, &[0.0, 0.0]).unwrap();
    assert!((epsilon_of_l(&n) - 1.0 / (2.0 * n.n_plus * n.n_minus)).abs() < 1e-15);
}

#[test]
fn constant_gap_ratios_inside_band() {
    let one = QPotential::constant(Complex64::new(1.0, 0.0));
    let r = jl_ratio_check(&one, 0.5, &xi_grid(6), &[1.0, 4.0, 10.0], &[0.0], 1e-8).unwrap();
    assert!(r.all_inside);
    assert_eq!(r.inconclusive, 0);
    for row in &r.rows {
        assert!(row.ratio >= C_MINUS && row.ratio <= C_PLUS);
    }
}

#[test]
fn measure_bound_for_constant_potential() {
    let one = QPotential::constant(Complex64::new(1.0, 0.0));
    let m = measure_bound_check(&one, 2.0, &[0.1, 0.01], &[0.0]).unwrap();
    assert!(m.all_hold);
    let tail = m.rows.last().unwrap();
    assert!((tail.im_borel - 2.0 / 3f64.sqrt()).abs() < 0.05, "{}", tail.im_borel);
}

#[test]
fn band_constants() {
    assert!((C_MINUS - (3.0 - 8f64.sqrt())).abs() < 1e-15);
    assert!((C_PLUS - (3.0 + 8f64.sqrt())).abs() < 1e-14);
    assert!((C_MINUS * C_PLUS - 1.0).abs() < 1e-14);
}
