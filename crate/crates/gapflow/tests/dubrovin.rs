// SPDX-License-Identifier: MIT OR Apache-2.0

use std::f64::consts::PI;

use gapflow::dubrovin::*;
use gapflow::reflectionless::trace_scalars;
use gapflow::spectral_domain::*;
use proptest::prelude::*;

fn genus_two() -> GapSet {
    GapSet::new(vec![(-2.5, -1.6), (-0.5, 0.5), (1.2, 1.9)], 1).unwrap()
}

fn small_gap_set() -> impl Strategy<Value = GapSet> {
    prop::collection::vec((0.1f64..0.8, 0.1f64..0.8), 1..=3).prop_map(|spec| {
        let mut x = -3.0;
        let gaps = spec
            .into_iter()
            .map(|(step, w)| {
                let a = x + step;
                x = a + w;
                (a, a + w)
            })
            .collect();
        GapSet::new(gaps, 0).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn translation_and_time_commute(
        g in small_gap_set(),
        y in prop::collection::vec(0.0f64..6.3, 3),
        dx in -1.0f64..1.0,
        dt in -0.3f64..0.3,
    ) {
        let tol = 1e-10;
        let s = FlowState::new(PhaseVector(y[..g.len()].to_vec()), g).unwrap();
        let xt = evolve(&evolve(&s, dx, 0.0, 0.0, tol).unwrap(), 0.0, dt, 0.0, tol).unwrap();
        let tx = evolve(&evolve(&s, 0.0, dt, 0.0, tol).unwrap(), dx, 0.0, 0.0, tol).unwrap();
        for (a, b) in xt.y.0.iter().zip(&tx.y.0) {
            prop_assert!((a - b).abs() <= 100.0 * tol);
        }
    }

    #[test]
    fn rotation_flow_never_pauses(g in small_gap_set(), y in prop::collection::vec(-10.0f64..10.0, 3)) {
        let y = PhaseVector(y[..g.len()].to_vec());
        let mu = phases_to_divisor(&y, &g).unwrap().mu();
        for (j, v) in field_rotation(&y, &g).unwrap().0.iter().enumerate() {
            prop_assert!(*v < 0.0);
            prop_assert!((v + 0.5 * weight_w(j, &mu, &g).unwrap()).abs() <= 1e-15);
        }
    }

    #[test]
    fn full_rotation_returns_the_divisor(g in small_gap_set(), y in prop::collection::vec(0.0f64..6.3, 3)) {
        let s = FlowState::new(PhaseVector(y[..g.len()].to_vec()), g.clone()).unwrap();
        let turned = evolve(&s, 0.0, 0.0, 2.0 * PI, 1e-12).unwrap();
        let a = phases_to_divisor(&s.y, &g).unwrap();
        let b = phases_to_divisor(&turned.y, &g).unwrap();
        for (p, q) in a.points.iter().zip(&b.points) {
            prop_assert!((p.mu - q.mu).abs() <= 1e-8);
        }
    }
}

#[test]
fn trace_identity_along_translation() {
    let g = genus_two();
    let s = FlowState::new(PhaseVector(vec![0.4, 1.3, 2.2]), g.clone()).unwrap();
    let (n, span) = (400, 2.0);
    let field = field_along_x(&s, span, n, 1e-12).unwrap();
    let tr = trajectory(&s, FlowAxis::X, span, n, 1e-12).unwrap();
    let h = span / n as f64;
    let im = |i: usize| field[i].1.im;
    for i in (10..n - 10).step_by(37) {
        let d = (8.0 * (im(i + 1) - im(i - 1)) - (im(i + 2) - im(i - 2))) / (12.0 * h);
        let div = phases_to_divisor(&PhaseVector(tr[i].y.clone()), &g).unwrap();
        let (q1, q2) = trace_scalars(&div, &g);
        assert!((d + im(i) * im(i) - 0.5 * q2).abs() <= 1e-6);
        assert!((field[i].1.re + 0.5 * q1).abs() <= 1e-15);
    }
}

#[test]
fn calibrated_time_flow_on_one_gap() {
    for c in [0.5, 1.0, 2.0] {
        let g = GapSet::single(-c, c).unwrap();
        let s = FlowState::new(PhaseVector(vec![0.5 * PI]), g).unwrap();
        for p in trajectory(&s, FlowAxis::T, 1.0 / (c * c), 20, 1e-12).unwrap() {
            let mu = phase_to_mu(p.y[0], -c, c);
            assert!((mu - c * (2.0 * c * c * p.t).cos()).abs() <= 1e-9 * c);
        }
    }
}

#[test]
fn printed_time_field_is_kept_but_flagged() {
    let g = GapSet::single(-1.0, 1.0).unwrap();
    let cal = calibrate_time_field(&g).unwrap();
    assert_eq!(cal.table.len(), 6);
    let printed = cal
        .table
        .iter()
        .find(|r| r.sign_s == -1 && r.kappa_t == 1.0)
        .unwrap();
    assert!(printed.max_phase_error > 1e-2);
    assert!(field_xi(&PhaseVector(vec![0.3]), &g, TimeConvention::PRINTED).is_err());
    assert!(field_xi_unchecked(&PhaseVector(vec![0.3]), &g, TimeConvention::PRINTED).0[0].is_finite());
}

#[test]
fn evolution_is_deterministic() {
    let s = FlowState::new(PhaseVector(vec![0.4, 1.3, 2.2]), genus_two()).unwrap();
    let a = evolve(&s, 0.7, 0.2, 0.1, DEFAULT_TOL).unwrap();
    let b = evolve(&s, 0.7, 0.2, 0.1, DEFAULT_TOL).unwrap();
    assert_eq!(a, b);
    assert_eq!((a.x, a.t, a.beta), (0.7, 0.2, 0.1));
}
