use kpz_core::stats::ks_two_sample;
use kpz_core::web::*;
use kpz_core::Error;
use proptest::prelude::*;

fn on_lattice(i: i64, n: i64) -> bool {
    (i + n).rem_euclid(2) == 0
}

#[test]
fn walk_examples() {
    let up = |_: i64, _: i64| 1;
    assert_eq!(walk_from(&up, (0, 0), 5).unwrap(), vec![0, 1, 2, 3, 4, 5]);
    let f = |i: i64, n: i64| if (i, n) == (2, 0) { -1 } else { 1 };
    assert_eq!(walk_from(&f, (0, 0), 1).unwrap()[1], 1);
    assert_eq!(walk_from(&f, (2, 0), 1).unwrap()[1], 1);
    assert!(matches!(
        walk_from(&up, (1, 0), 3),
        Err(Error::OffLattice(1, 0))
    ));
    assert!(walk_from(&RademacherField::new(1, (-1, 1, 0, 10)), (0, 0), 10).is_err());
}

#[test]
fn coalescence_is_absorbing() {
    for seed in 0..100 {
        let f = RademacherField::unbounded(seed);
        let a = walk_from(&f, (0, 0), 60).unwrap();
        let b = walk_from(&f, (4, 0), 60).unwrap();
        if let Some(k) = (0..=60).find(|&k| a[k] == b[k]) {
            assert_eq!(a[k..], b[k..]);
        }
    }
}

#[test]
fn one_step_examples() {
    let f = RademacherField::unbounded(3);
    for i in (-6..=6).step_by(2) {
        let z = f.zeta(i, 0);
        assert_eq!(drw(&f, (i, 0), (i + z, 1)).unwrap(), WebDist::Finite(0));
        assert_eq!(drw(&f, (i, 0), (i - z, 1)).unwrap(), WebDist::Finite(1));
        assert_eq!(drw(&f, (i, 0), (i + 4, 2)).unwrap(), WebDist::Infinite);
    }
    assert_eq!(drw(&f, (1, 5), (1, 3)).unwrap(), WebDist::Infinite);
}

#[test]
fn oracle_agrees_on_small_boxes() {
    for seed in 0..50 {
        let f = RademacherField::unbounded(1000 + seed);
        for n in 0..8 {
            for i in (0..8).filter(|&i| on_lattice(i, n)) {
                for m in n..8 {
                    for j in (0..8).filter(|&j| on_lattice(j, m)) {
                        assert_eq!(
                            drw(&f, (i, n), (j, m)).unwrap(),
                            drw_bruteforce(&f, (i, n), (j, m)).unwrap(),
                            "seed {seed} ({i},{n}) -> ({j},{m})"
                        );
                    }
                }
            }
        }
    }
}

#[test]
fn zero_cost_points_are_the_walk() {
    let f = RademacherField::unbounded(8);
    let walk = walk_from(&f, (0, 0), 10).unwrap();
    for m in 1..=10i64 {
        for j in (-m..=m).step_by(2) {
            let d = drw(&f, (0, 0), (j, m)).unwrap();
            assert_eq!(d == WebDist::Finite(0), j == walk[m as usize], "({j},{m})");
        }
    }
}

#[test]
fn reachable_sets_grow_with_jumps() {
    let f = RademacherField::unbounded(21);
    let m = 9;
    let (first, d) = drw_layer(&f, (0, 0), m, (-m, m)).unwrap();
    let reach = |k: u64| {
        d.iter()
            .filter(|v| v.finite().is_some_and(|x| x <= k))
            .count()
    };
    let sizes: Vec<usize> = (0..=m as u64).map(reach).collect();
    assert!(sizes.windows(2).all(|w| w[0] <= w[1]));
    assert_eq!(*sizes.last().unwrap(), (m + 1) as usize);
    assert_eq!(first, -m);
}

#[test]
fn light_cone_is_exact() {
    for seed in 0..20 {
        let f = RademacherField::unbounded(seed);
        for m in 0..10i64 {
            for j in (-14..=14).filter(|&j| on_lattice(j, m)) {
                let d = drw(&f, (0, 0), (j, m)).unwrap();
                assert_eq!(d.finite().is_some(), j.abs() <= m, "({j},{m})");
            }
        }
    }
}

#[test]
fn concatenation_needs_at_most_one_extra_jump() {
    for seed in 0..30 {
        let f = RademacherField::unbounded(seed);
        let o = (0, 0);
        for pm in 1..6i64 {
            for pi in (-pm..=pm).step_by(2) {
                for qm in pm + 1..10 {
                    for qi in (-qm..=qm).step_by(2) {
                        let (a, b) = (
                            drw(&f, o, (pi, pm)).unwrap(),
                            drw(&f, (pi, pm), (qi, qm)).unwrap(),
                        );
                        let (Some(a), Some(b)) = (a.finite(), b.finite()) else {
                            continue;
                        };
                        let c = drw(&f, o, (qi, qm)).unwrap().finite().unwrap();
                        assert!(c <= a + b + 1, "seed {seed}");
                    }
                }
            }
        }
    }
}

#[test]
fn translation_invariance_in_law() {
    let sample = |seed: u64, i: i64| {
        drw(&RademacherField::unbounded(seed), (i, 0), (i, 20))
            .unwrap()
            .finite()
            .unwrap() as f64
    };
    let a: Vec<f64> = (0..1000).map(|s| sample(s, 0)).collect();
    let b: Vec<f64> = (1000..2000).map(|s| sample(s, 2)).collect();
    assert!(!ks_two_sample(&a, &b).unwrap().reject);
}

#[test]
fn constants_at_three_fifths() {
    let k = web_constants(0.6).unwrap();
    assert!((k.b - 0.1).abs() < 1e-12);
    assert!((k.a - 2.0716).abs() < 5e-4, "a {}", k.a);
    assert!((k.d - 0.9944).abs() < 5e-4, "d {}", k.d);
    // independent evaluation of c
    let c = 0.6f64.cbrt() * 0.64f64.powf(1.0 / 6.0) / 2f64.cbrt();
    assert!((k.c - c).abs() < 1e-12);
    assert!(k.a > 0.0 && k.b > 0.0 && k.c > 0.0 && k.d > 0.0);
    assert!(web_constants(0.0).is_err() && web_constants(1.0).is_err());
}

#[test]
fn diagonal_is_zero_and_map_decreases() {
    let f = RademacherField::unbounded(5);
    let p = ScaledPair {
        x: 0.3,
        s: 0.5,
        y: 0.3,
        t: 0.5,
    };
    assert_eq!(rescale_m_eta(&f, 0.6, 500.0, &[p]).unwrap()[0], 0.0);
    // across fields at a fixed pair, larger D gives smaller M
    let q = ScaledPair {
        x: 0.0,
        s: 0.0,
        y: 0.0,
        t: 1.0,
    };
    let (src, dst) = (lattice_point(0.6 * 500.0, -500.0), lattice_point(0.0, 0.0));
    let pts: Vec<(u64, f64)> = (0..40)
        .map(|seed| {
            let f = RademacherField::unbounded(seed);
            (
                drw(&f, src, dst).unwrap().finite().unwrap(),
                rescale_m_eta(&f, 0.6, 500.0, &[q]).unwrap()[0],
            )
        })
        .collect();
    for a in &pts {
        for b in &pts {
            if a.0 > b.0 {
                assert!(a.1 < b.1);
            }
        }
    }
}

#[test]
fn wedge_never_looks_right() {
    let samples = [(-0.5, 1.0), (0.0, 2.0), (0.5, 100.0)];
    let kind = SoftWedge::F;
    assert_eq!(kind.weight(8.0, 0.0), 0.0);
    assert_eq!(kind.weight(8.0, 0.1), f64::NEG_INFINITY);
    assert_eq!(soft_wedge_lift(&samples, 0.0, 8.0, kind), 2.0);
    // steep slope: the value at x itself
    assert_eq!(soft_wedge_lift(&samples, 0.0, 1e12, kind), 2.0);
    assert_eq!(soft_wedge_lift(&samples, -0.5, 8.0, kind), 1.0);
}

#[test]
fn backward_sweep_matches_point_queries() {
    for seed in 0..10 {
        let f = RademacherField::unbounded(seed);
        let targets = [(-4, 3.0), (0, 0.0), (6, 1.0)];
        let (first, v) = drw_to_layer(&f, -10, (-8, 8), 0, &targets).unwrap();
        for (k, got) in v.iter().enumerate() {
            let p = (first + 2 * k as i64, -10);
            let want = targets
                .iter()
                .filter_map(|&(q, c)| drw(&f, p, (q, 0)).unwrap().finite().map(|d| d as f64 + c))
                .fold(f64::INFINITY, f64::min);
            assert_eq!(*got, want, "seed {seed} p {p:?}");
        }
    }
}

#[test]
fn slack_profile_matches_direct_lifts() {
    let (eta, n) = (0.6, 250.0);
    let f = RademacherField::unbounded(42);
    let prof = lifted_slack_profile(&f, eta, n, 1.0).unwrap();
    assert!(!prof.is_empty());
    let oq = lifted_m_eta(
        &f,
        eta,
        n,
        ScaledPair {
            x: 0.0,
            s: 0.0,
            y: 0.0,
            t: 1.0,
        },
        2.0,
    )
    .unwrap();
    for &(y, slack) in prof.iter().step_by(7) {
        let op = lifted_m_eta(
            &f,
            eta,
            n,
            ScaledPair {
                x: 0.0,
                s: 0.0,
                y,
                t: 0.5,
            },
            2.0,
        )
        .unwrap();
        let pq = lifted_m_eta(
            &f,
            eta,
            n,
            ScaledPair {
                x: y,
                s: 0.5,
                y: 0.0,
                t: 1.0,
            },
            4.0,
        )
        .unwrap();
        assert!(
            (op + pq - oq - slack).abs() < 1e-4,
            "y {y}: {} vs {slack}",
            op + pq - oq
        );
    }
}

#[test]
fn slack_rate_is_reported() {
    let r = slack_violation_rate(1, 0.6, 250.0, 8, 0.2).unwrap();
    assert_eq!(r.replicas, 8);
    assert!(r.chains > 0);
    assert!(r.rate >= 0.0 && r.rate <= 1.0);
    assert_eq!(r.violations as f64 / r.chains as f64, r.rate);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn layer_sweep_matches_point_queries(seed in any::<u64>(), m in 1i64..14, i in -3i64..=3) {
        let f = RademacherField::unbounded(seed);
        let i = if on_lattice(i, 0) { i } else { i + 1 };
        let (first, v) = drw_layer(&f, (i, 0), m, (i - m, i + m)).unwrap();
        for (k, d) in v.iter().enumerate() {
            prop_assert_eq!(*d, drw(&f, (i, 0), (first + 2 * k as i64, m)).unwrap());
        }
    }
}
