// SPDX-License-Identifier: MIT OR Apache-2.0

use gapflow::abel::*;
use gapflow::dubrovin::{trajectory, FlowAxis, FlowState};
use gapflow::spectral_domain::*;
use proptest::prelude::*;

fn gap_set(max: usize) -> impl Strategy<Value = GapSet> {
    prop::collection::vec((0.2f64..1.0, 0.1f64..0.9), 1..=max).prop_map(|spec| {
        let mut x = -2.0;
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

fn frac_dist(a: f64, b: f64) -> f64 {
    let d = a - b;
    (d - d.round()).abs()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn flows_are_affine_in_abel_coordinates(g in gap_set(3), y in prop::collection::vec(0.0f64..6.3, 3)) {
        let h = build_curve(&g).unwrap();
        let f = frequencies(&h);
        let s = FlowState::new(PhaseVector(y[..g.len()].to_vec()), g).unwrap();
        for (axis, span, rate_char, rate_rot) in [
            (FlowAxis::X, 2.0, &f.eta, -f.theta0),
            (FlowAxis::T, 0.5, &f.eta1, -f.theta1),
        ] {
            let n = 50;
            let tr = trajectory(&s, axis, span, n, 1e-12).unwrap();
            let clocks: Vec<f64> = (0..=n).map(|i| span * i as f64 / n as f64).collect();
            let coords: Vec<Vec<f64>> = tr
                .iter()
                .map(|p| {
                    let im = abel_image(&PhaseVector(p.y.clone()), &h).unwrap();
                    let mut v = im.character;
                    v.push(im.rotation);
                    v
                })
                .collect();
            let fit = linearization_fit(&clocks, &coords).unwrap();
            for r in &fit.max_residuals {
                prop_assert!(*r <= 1e-5);
            }
            for (k, rate) in rate_char.iter().enumerate() {
                prop_assert!((fit.slopes[k] - rate).abs() <= 1e-5);
            }
            prop_assert!((fit.slopes[rate_char.len()] - rate_rot).abs() <= 1e-5);
        }
    }

    #[test]
    fn frequencies_scale_with_the_spectrum(g in gap_set(3), sigma in 0.5f64..3.0) {
        let a = frequencies(&build_curve(&g).unwrap());
        let b = frequencies(&build_curve(&g.scaled(sigma).unwrap()).unwrap());
        for k in 0..a.eta.len() {
            prop_assert!((b.eta[k] - sigma * a.eta[k]).abs() <= 1e-9 * (1.0 + a.eta[k].abs()));
            prop_assert!((b.eta1[k] - sigma * sigma * a.eta1[k]).abs() <= 1e-9 * (1.0 + a.eta1[k].abs()));
        }
        prop_assert!((b.theta1 - sigma * sigma * a.theta1).abs() <= 1e-9 * (1.0 + a.theta1.abs()));
    }

    #[test]
    fn period_matrix_is_symmetric_positive(g in gap_set(4)) {
        let h = build_curve(&g).unwrap();
        let t = &h.period_matrix_im;
        for j in 0..t.len() {
            prop_assert!(t[j][j] > 0.0);
            for (k, row) in t.iter().enumerate() {
                prop_assert!((t[j][k] - row[j]).abs() <= 1e-8 * (1.0 + t[j][k].abs()));
            }
        }
        for (j, row) in h.a_period_matrix().iter().enumerate() {
            for (k, v) in row.iter().enumerate() {
                let delta = if j == k { 1.0 } else { 0.0 };
                prop_assert!((v - delta).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn abel_map_is_continuous_through_gap_edges(g in gap_set(3), which in 0usize..3, right in any::<bool>()) {
        let j = which % g.len();
        let h = build_curve(&g).unwrap();
        let (a, b) = g.gap(j);
        let edge = if right { b } else { a };
        let inward = if right { -1.0 } else { 1.0 };
        let base: Vec<DivisorPoint> = g
            .gaps()
            .iter()
            .map(|&(a, b)| DivisorPoint { mu: 0.5 * (a + b), sheet: Sheet::Plus })
            .collect();
        let at = |mu: f64, sheet: Sheet| {
            let mut pts = base.clone();
            pts[j] = DivisorPoint { mu, sheet };
            let d = Divisor::new(pts);
            let mut v = abel_character(&d, &h).unwrap();
            v.push(abel_rotation(&d, &h).unwrap());
            v
        };
        let at_edge = at(edge, Sheet::Edge);
        let eps = 1e-10 * (b - a);
        for sheet in [Sheet::Plus, Sheet::Minus] {
            let near = at(edge + inward * eps, sheet);
            for (p, q) in near.iter().zip(&at_edge) {
                prop_assert!(frac_dist(*p, *q) <= 1e-4);
            }
        }
    }
}

#[test]
fn three_routes_to_the_frequencies_agree() {
    let g = GapSet::new(vec![(-2.0, -1.4), (-0.3, 0.6), (1.5, 2.7)], 1).unwrap();
    let h = build_curve(&g).unwrap();
    let a = frequencies(&h);
    let b = frequencies_by_laurent(&h);
    let (em, e1m) = translation_frequencies_by_moments(&h);
    for k in 0..a.eta.len() {
        assert!((a.eta[k] - b.eta[k]).abs() < 1e-10);
        assert!((a.eta[k] - em[k]).abs() < 1e-10);
        assert!((a.eta1[k] - e1m[k]).abs() < 1e-10);
    }
    assert!((a.theta0 - b.theta0).abs() < 1e-10);
}

#[test]
fn one_gap_rotation_slopes() {
    let g = GapSet::single(0.0, 2.0).unwrap();
    let h = build_curve(&g).unwrap();
    let (t0, t1) = rotation_frequencies(&h);
    assert!((t0 - 1.0 / std::f64::consts::PI).abs() < 1e-12);
    // The plane wave with gap (s - c, s + c) has phase 2s x + (4s² + 2c²) t
    // up to sign, and the rotation coordinate is that phase over 2π.
    assert!((t1 - (4.0 + 2.0) / (2.0 * std::f64::consts::PI)).abs() < 1e-10);
}
