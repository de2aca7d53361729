// SPDX-License-Identifier: MIT OR Apache-2.0

use gapflow::spectral_domain::*;
use proptest::prelude::*;

/// Up to `max` disjoint gaps inside `[-6, 6]`, at least `0.05` apart.
fn gap_set(max: usize) -> impl Strategy<Value = GapSet> {
    prop::collection::vec(0.05f64..1.0, 2..=2 * max)
        .prop_filter("even count", |v| v.len() % 2 == 0)
        .prop_map(|steps| {
            let mut x = -6.0;
            let gaps = steps
                .chunks(2)
                .map(|c| {
                    let a = x + c[0];
                    let b = a + c[1];
                    x = b;
                    (a, b)
                })
                .collect();
            GapSet::new(gaps, 0).unwrap()
        })
}

fn divisor_on(g: &GapSet, fractions: &[f64], sheets: &[bool]) -> Divisor {
    Divisor::new(
        g.gaps()
            .iter()
            .zip(fractions.iter().zip(sheets))
            .map(|(&(a, b), (&f, &s))| {
                let mu = a + f * (b - a);
                let sheet = if mu == a || mu == b {
                    Sheet::Edge
                } else if s {
                    Sheet::Plus
                } else {
                    Sheet::Minus
                };
                DivisorPoint { mu, sheet }
            })
            .collect(),
    )
}

proptest! {
    #[test]
    fn divisor_round_trip(
        g in gap_set(4),
        fr in prop::collection::vec(0.0f64..=1.0, 4),
        sh in prop::collection::vec(any::<bool>(), 4),
    ) {
        let d = divisor_on(&g, &fr, &sh);
        let back = phases_to_divisor(&divisor_to_phases(&d, &g).unwrap(), &g).unwrap();
        for (p, q) in d.points.iter().zip(&back.points) {
            prop_assert!((p.mu - q.mu).abs() <= 1e-12);
            prop_assert_eq!(p.sheet, q.sheet);
        }
    }

    #[test]
    fn phases_land_in_their_gaps(g in gap_set(4), y in prop::collection::vec(-10.0f64..10.0, 4)) {
        let y = PhaseVector(y[..g.len()].to_vec());
        let d = phases_to_divisor(&y, &g).unwrap();
        prop_assert!(d.validate(&g).is_ok());
    }

    #[test]
    fn comparability_constants_are_at_least_one(g in gap_set(5)) {
        for c in comparability_constants(&g) {
            prop_assert!(c >= 1.0);
        }
    }

    #[test]
    fn homogeneity_drops_as_gaps_widen(g in gap_set(3), grow in 1.0f64..1.6) {
        let wider = GapSet::new(
            g.gaps()
                .iter()
                .map(|&(a, b)| {
                    let (m, h) = (0.5 * (a + b), 0.5 * (b - a));
                    (m - grow * h, m + grow * h)
                })
                .collect(),
            0,
        );
        prop_assume!(wider.is_ok());
        let wider = wider.unwrap();
        let window = (-8.0, 8.0);
        let before = homogeneity_estimate(&g, window, 401).unwrap().value;
        let after = homogeneity_estimate(&wider, window, 401).unwrap().value;
        prop_assert!(after <= before + 1e-12, "{after} > {before}");
    }
}

#[test]
fn scaling_and_shifting_preserve_structure() {
    let g = GapSet::new(vec![(-2.0, -1.0), (0.5, 1.5)], 1).unwrap();
    let s = g.scaled(2.0).unwrap().shifted(1.0).unwrap();
    assert_eq!(s.gaps(), &[(-3.0, -1.0), (2.0, 4.0)]);
    assert_eq!(s.reference_index(), 1);
    assert!(g.scaled(0.0).is_err());
}

#[test]
fn synthetic_craig_verdicts() {
    let exp = craig_report(SyntheticFamily::Exponential, 0.25, 6, 2).unwrap();
    assert!(exp.satisfied);
    assert!(exp.first_tail_bound.unwrap() < 1e-2);
    let pow = craig_report(SyntheticFamily::Power, 0.25, 256, 4).unwrap();
    assert_eq!(pow.verdicts[1], Convergence::Diverging);
    assert!(!pow.satisfied);
    assert!(pow.first_tail_bound.unwrap().is_infinite());
}

#[test]
fn exponential_family_is_homogeneous_on_windows() {
    let g = SyntheticFamily::Exponential.truncate(24).unwrap();
    for window in [(2.0, 8.0), (-9.0, -3.0), (10.0, 20.0)] {
        assert!(homogeneity_estimate(&g, window, 401).unwrap().value >= 0.4);
    }
    assert!(SyntheticFamily::Exponential.truncate(64).is_err());
}

#[test]
fn gap_set_json_layout() {
    let g: GapSet = serde_json_from(r#"{"gaps": [[-1.0, 1.0], [2.0, 3.0]], "reference_index": 0}"#);
    assert_eq!(g.len(), 2);
    assert_eq!(g.width(1), 1.0);
}

fn serde_json_from(s: &str) -> GapSet {
    serde_json::from_str(s).unwrap()
}
