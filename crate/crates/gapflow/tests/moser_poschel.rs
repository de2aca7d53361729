// SPDX-License-Identifier: MIT OR Apache-2.0

use gapflow::moser_poschel::*;
use proptest::prelude::*;

fn golden() -> f64 {
    0.5 * (5f64.sqrt() - 1.0)
}

fn factor(d: usize) -> impl Strategy<Value = Factor> {
    let mode = prop::collection::vec(-2i64..=2, d);
    prop_oneof![
        (-0.4f64..0.4, mode.clone()).prop_map(|(r, n)| Factor::Hyperbolic { r, n }),
        mode.prop_map(|m| Factor::Diagonal { m }),
    ]
}

fn model() -> impl Strategy<Value = ParabolicModel> {
    (1usize..=2)
        .prop_flat_map(|d| (Just(d), prop::collection::vec(factor(d), 1..4), 0.0f64..0.1))
        .prop_map(|(d, fs, zeta)| {
            let omega = if d == 1 { vec![golden()] } else { vec![1.0, golden()] };
            ParabolicModel::from_factors(zeta, omega, 0.1, 1.5, 0.5, &fs).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn determinant_dual_evaluation(m in model(), delta in -0.3f64..0.3) {
        let a = averaged_determinant(&m, delta).unwrap();
        prop_assert!((a.d - a.d_direct).abs() <= 1e-12);
        prop_assert!(a.denominator >= 1.0 - 1e-12);
    }

    #[test]
    fn models_are_su11_valued(m in model()) {
        prop_assert!(m.su11_defect() <= 1e-12);
    }

    #[test]
    fn perturbation_norm_bounded_by_b(m in model()) {
        let p = perturbation_from_conjugation(&m).unwrap();
        let r = 0.5 * m.strip;
        prop_assert!(p.norm(r) <= 2.0 * m.b_norm().powi(2) * (1.0 + 1e-12));
        for th in check_grid(m.dim()).iter().step_by(97) {
            let exact = perturbation_pointwise(&m, th);
            let series = p.eval(th);
            for i in 0..2 {
                for j in 0..2 {
                    prop_assert!((exact[i][j] - series[i][j]).norm() <= 1e-12);
                }
            }
        }
    }
}

#[test]
fn homological_residual_at_n64() {
    let fs = [
        Factor::Hyperbolic { r: 0.25, n: vec![1] },
        Factor::Diagonal { m: vec![-1] },
        Factor::Hyperbolic { r: 0.15, n: vec![2] },
    ];
    let m = ParabolicModel::from_factors(0.02, vec![golden()], 0.1, 1.5, 0.5, &fs).unwrap();
    let p = perturbation_from_conjugation(&m).unwrap();
    let sol = homological_solve(&m, &p, 1e-3, 64).unwrap();
    assert!(sol.residual <= 1e-10, "{}", sol.residual);
    assert!(sol.small_divisor_floor > 0.0);
}

#[test]
fn conjugation_estimates_scale_with_delta() {
    let fs = [Factor::Hyperbolic { r: 0.2, n: vec![1] }];
    let m = ParabolicModel::from_factors(0.01, vec![golden()], 0.1, 1.5, 0.5, &fs).unwrap();
    let a = conjugation_check(&m, 1e-3, 16).unwrap();
    let b = conjugation_check(&m, 2e-3, 16).unwrap();
    assert!(a.x_minus_id <= a.x_bound);
    assert!(a.remainder <= a.remainder_bound);
    let ratio = b.x_minus_id / a.x_minus_id;
    assert!((ratio - 2.0).abs() < 0.05, "{ratio}");
}

#[test]
fn right_edge_by_reflection() {
    let fs = [Factor::Hyperbolic { r: 0.3, n: vec![1] }, Factor::Diagonal { m: vec![2] }];
    let m = ParabolicModel::from_factors(0.05, vec![golden()], 0.1, 1.5, 0.5, &fs).unwrap();
    let r = reflect(&m);
    for delta in [-0.2, 0.1] {
        let a = averaged_determinant(&r, -delta).unwrap();
        assert!((a.d - a.d_direct).abs() <= 1e-12);
    }
}

#[test]
fn small_divisors_are_refused() {
    let fs = [Factor::Hyperbolic { r: 0.2, n: vec![1, -1] }];
    let m = ParabolicModel::from_factors(0.01, vec![1.0, 1.0], 0.1, 1.5, 0.5, &fs).unwrap();
    let p = perturbation_from_conjugation(&m).unwrap();
    assert!(homological_solve(&m, &p, 1e-3, 8).is_err());
}

#[test]
fn certificate_for_tiny_zeta() {
    let m = ParabolicModel::identity(1e-200, vec![golden()], 0.5, 1.0, 1.0);
    let c = gap_upper_bound_certificate(&m, 0.2).unwrap();
    assert!(c.hypothesis_holds);
    assert_eq!(c.gap_bound, Some(1e-200f64.powf(0.8)));
    assert!(c.lhs < c.rhs);
}
