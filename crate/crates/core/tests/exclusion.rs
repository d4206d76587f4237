use std::collections::BTreeMap;

use kpz_core::audit::COUPLINGS;
use kpz_core::clock::{mix, quotient_key, ClockField, StreamKey};
use kpz_core::exclusion::*;
use kpz_core::lattice::{narrow_wedge, shift_map, HeightFunction};
use kpz_core::stats::{mean, variance};
use kpz_core::Error;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sawtooth(lo: i64, hi: i64) -> HeightFunction {
    // peak at 0
    HeightFunction::from_fn(lo, hi, |x| -(x.rem_euclid(2))).unwrap()
}

fn tasep_engine(copies: Vec<HeightFunction>, seed: u64, horizon: f64) -> BasicEngine {
    BasicEngine::new(
        CoupledEnsemble::new(copies, ClockField::tasep(seed, horizon)).unwrap(),
        JumpDistribution::tasep(),
    )
    .unwrap()
}

#[test]
fn jump_distribution_checks() {
    assert!(JumpDistribution::new(BTreeMap::from([(1, 1.0)])).is_ok());
    // mean drift must be 1
    assert!(JumpDistribution::new(BTreeMap::from([(1, 0.5)])).is_err());
    // {2} does not generate Z
    assert!(JumpDistribution::new(BTreeMap::from([(2, 0.5)])).is_err());
    let p =
        JumpDistribution::new(BTreeMap::from([(1, 0.6), (3, 0.3), (-3, 0.3 - 0.4 / 3.0)])).unwrap();
    assert_eq!(p.range(), 3);
}

#[test]
fn no_time_no_change() {
    let copies = vec![sawtooth(-8, 8), narrow_wedge(0, -8, 8).unwrap()];
    let ens =
        CoupledEnsemble::new(copies.clone(), ClockField::asep_exotic(4, 2, 1, 0.5, 3.0)).unwrap();
    let out = evolve_asep_exotic(ens, (2, 1), &BTreeMap::from([(1, 1.5), (-1, 0.5)]), 0.0).unwrap();
    assert_eq!(out.copies(), copies.as_slice());
    assert!(out.log().is_empty());
}

#[test]
fn single_swap_at_the_peak() {
    let h = sawtooth(-6, 6);
    assert_eq!(h.at(0), 0);
    // the particle/hole pair around the peak has left site -1
    let (l, k) = pair_labels(&h, -1);
    let ens =
        CoupledEnsemble::new(vec![h.clone()], ClockField::asep_exotic(1, 1, 1, 0.0, 1.0)).unwrap();
    let mut eng = ExoticEngine::new(ens).unwrap();
    eng.apply_event(
        0.5,
        StreamKey::Exotic {
            index: quotient_key(l, k, 1, 1).unwrap(),
            dir: 1,
        },
    )
    .unwrap();
    let after = &eng.ensemble().copies()[0];
    assert_eq!(after.at(0), -2);
    for x in (-6..=6).filter(|&x| x != 0) {
        assert_eq!(after.at(x), h.at(x));
    }
}

#[test]
fn identical_copies_stay_identical() {
    for (a, b) in COUPLINGS {
        let mut rng = ChaCha8Rng::seed_from_u64(a as u64 * 10 + b as u64);
        let h = bernoulli_profile(-30, 30, 0.5, &mut rng).unwrap();
        let ens = CoupledEnsemble::new(
            vec![h.clone(), h],
            ClockField::asep_exotic(9, a, b, 0.5, 4.0),
        )
        .unwrap();
        let out =
            evolve_asep_exotic(ens, (a, b), &BTreeMap::from([(1, 1.5), (-1, 0.5)]), 4.0).unwrap();
        assert_eq!(out.copies()[0], out.copies()[1]);
        assert!(!out.log().is_empty());
    }
}

#[test]
fn non_nearest_neighbour_rates_rejected() {
    let ens = CoupledEnsemble::new(
        vec![sawtooth(-4, 4)],
        ClockField::asep_exotic(1, 1, 1, 0.0, 1.0),
    )
    .unwrap();
    let r = evolve_asep_exotic(ens, (1, 1), &BTreeMap::from([(2, 0.5)]), 1.0);
    assert!(matches!(r, Err(Error::NotNearestNeighbour(2))));
}

#[test]
fn basic_tasep_matches_one_one_exotic_event_by_event() {
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let copies = vec![
            bernoulli_profile(-10, 10, 0.5, &mut rng).unwrap(),
            narrow_wedge(0, -10, 10).unwrap(),
        ];
        let mut basic = tasep_engine(copies.clone(), seed, 100.0);
        let ens =
            CoupledEnsemble::new(copies, ClockField::asep_exotic(seed, 1, 1, 0.0, 100.0)).unwrap();
        let mut exotic = ExoticEngine::new(ens).unwrap();
        let mut t = 0.0;
        for _ in 0..200 {
            t += rng.random::<f64>() * 0.1;
            // occupancy site x jumping to x + 1 is the pair with left site x,
            // whose class under (1, 1) is fixed by l - k = -x
            let x = rng.random_range(-10..9);
            basic.apply_event(t, x, 1).unwrap();
            let key = StreamKey::Exotic {
                index: quotient_key(-x, 0, 1, 1).unwrap(),
                dir: 1,
            };
            exotic.apply_event(t, key).unwrap();
            assert_eq!(basic.ensemble().copies(), exotic.ensemble().copies());
        }
    }
}

#[test]
fn long_jump_moves_particle() {
    // single particle at 0 in an empty window
    let h = HeightFunction::from_fn(-4, 6, |x| if x <= 0 { x } else { 2 - x }).unwrap();
    let p = JumpDistribution::new(BTreeMap::from([(1, 0.5), (2, 0.25)])).unwrap();
    let clock = ClockField::tasep(1, 1.0).with_rates(p.rates().clone());
    let mut eng =
        BasicEngine::new(CoupledEnsemble::new(vec![h.clone()], clock).unwrap(), p).unwrap();
    eng.apply_event(0.1, 0, 2).unwrap();
    let after = eng.ensemble().copies()[0].clone();
    for x in -4..=6 {
        let d = if x == 1 || x == 2 { -2 } else { 0 };
        assert_eq!(after.at(x), h.at(x) + d, "site {x}");
    }
    // now occupied target: the particle at 2 cannot land on itself from 1 (empty) etc.
    eng.apply_event(0.2, 1, 1).unwrap();
    assert_eq!(eng.ensemble().copies()[0], after);
}

#[test]
fn blocked_jump_is_a_no_op() {
    let h = HeightFunction::from_fn(-4, 4, |x| x.abs()).unwrap();
    // particles fill [0, 3], so 0 -> 1 is blocked
    let mut eng = tasep_engine(vec![h.clone()], 1, 1.0);
    eng.apply_event(0.3, 0, 1).unwrap();
    assert_eq!(eng.ensemble().copies()[0], h);
}

#[test]
fn certified_region_examples() {
    assert_eq!(
        certified_region(-20, 20, 1, 0.0),
        CertifiedRegion { lo: -20, hi: 20 }
    );
    assert_eq!(
        certified_region(-20, 20, 1, 2.0),
        CertifiedRegion { lo: -12, hi: 12 }
    );
    assert!(certified_region(-20, 20, 2, 3.0).is_empty());
}

#[test]
fn monotone_identical_copies() {
    let h = narrow_wedge(0, -20, 20).unwrap();
    let mut eng = tasep_engine(vec![h.clone(), h], 3, 4.0);
    eng.evolve(4.0).unwrap();
    assert!(check_monotone(eng.ensemble()).ok);
}

#[test]
fn shifted_wedges_stay_ordered_under_every_exotic_coupling() {
    for (a, b) in COUPLINGS {
        for seed in 0..100u64 {
            let w = narrow_wedge(0, -32, 32).unwrap();
            let low = shift_map(&w, 0, -2).unwrap();
            let ens =
                CoupledEnsemble::new(vec![low, w], ClockField::asep_exotic(seed, a, b, 0.5, 8.0))
                    .unwrap();
            let out = evolve_asep_exotic(ens, (a, b), &BTreeMap::from([(1, 1.5), (-1, 0.5)]), 8.0)
                .unwrap();
            let r = check_monotone(&out);
            assert!(r.ok, "({a},{b}) seed {seed}: {:?}", r.violation);
            assert!(check_monotone_window(&out).ok);
        }
    }
}

#[test]
fn injected_violation_is_reported() {
    let w = narrow_wedge(0, -10, 10).unwrap();
    let low = shift_map(&w, 0, -2).unwrap();
    let mut ens = CoupledEnsemble::new(vec![low, w], ClockField::tasep(1, 1.0)).unwrap();
    // the upper wedge's particle at -1 jumps to 0 twice in a row: h(0) drops by 4
    ens.inject_move(AppliedMove {
        time: 0.1,
        copy: 1,
        from: -1,
        to: 0,
    });
    ens.inject_move(AppliedMove {
        time: 0.2,
        copy: 1,
        from: -2,
        to: -1,
    });
    ens.inject_move(AppliedMove {
        time: 0.3,
        copy: 1,
        from: -1,
        to: 0,
    });
    let r = check_monotone(&ens);
    assert!(!r.ok);
    let v = r.violation.unwrap();
    assert_eq!((v.lower, v.upper, v.time), (0, 1, 0.3));
    assert_eq!(v.site, 0);
}

#[test]
fn shift_equivariance_examples() {
    for seed in 0..10 {
        assert!(shift_equivariance_check((1, 1), 0, seed, 4.0).unwrap());
        assert!(shift_equivariance_check((1, 1), 1, seed, 4.0).unwrap());
        assert!(shift_equivariance_check((1, 0), 2, seed, 4.0).unwrap());
    }
    assert!(matches!(
        shift_equivariance_check((1, 0), 1, 0, 4.0),
        Err(Error::InadmissibleShift(1))
    ));
}

#[test]
fn shift_report_compares_sites() {
    let r = shift_equivariance_report((2, 1), 2, 5, 2.0, 0.5, 40).unwrap();
    assert!(r.ok);
    assert!(r.compared_sites > 0);
    // a window swallowed by the light cone compares nothing and does not pass
    let r = shift_equivariance_report((2, 1), 2, 5, 8.0, 0.5, 40).unwrap();
    assert_eq!(r.compared_sites, 0);
    assert!(!r.ok);
}

#[test]
fn stationary_drift_is_minus_half() {
    let t = 4.0;
    let n = 600;
    let d: Vec<f64> = (0..n)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(mix(&[0xD1, i]));
            let h = bernoulli_profile(-30, 30, 0.5, &mut rng).unwrap();
            let h0 = h.at(0);
            let mut eng = tasep_engine(vec![h], mix(&[0xD2, i]), t);
            eng.evolve(t).unwrap();
            (eng.ensemble().copies()[0].at(0) - h0) as f64
        })
        .collect();
    let m = mean(&d);
    let se = (variance(&d) / n as f64).sqrt();
    assert!((m + t / 2.0).abs() <= 3.0 * se, "mean {m} se {se}");
}

fn local_perturbation(h: &HeightFunction, n: i64, rng: &mut ChaCha8Rng) -> HeightFunction {
    // shuffle the steps on [-n, n], which keeps h(-n) and h(n)
    let lo = h.window_lo();
    let mut v = h.values().to_vec();
    let (a, b) = ((-n - lo) as usize, (n - lo) as usize);
    let mut steps: Vec<i64> = (a..b).map(|i| v[i + 1] - v[i]).collect();
    steps.shuffle(rng);
    for (k, s) in steps.into_iter().enumerate() {
        v[a + k + 1] = v[a + k] + s;
    }
    HeightFunction::new(lo, v).unwrap()
}

#[test]
fn basic_coupling_is_local() {
    let rates = BTreeMap::from([(1, 0.6), (3, 0.3), (-3, 0.3 - 0.4 / 3.0)]);
    for (p, t, half) in [
        (JumpDistribution::tasep(), 2.0, 40),
        (JumpDistribution::new(rates).unwrap(), 0.5, 60),
    ] {
        let k = p.range();
        let n = 3;
        let reach = (4.0 * (k * k) as f64 * t).ceil() as i64 + n;
        for seed in 0..100u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let h = bernoulli_profile(-half, half, 0.5, &mut rng).unwrap();
            let g = local_perturbation(&h, n, &mut rng);
            let clock = ClockField::tasep(seed, t).with_rates(p.rates().clone());
            let out =
                evolve_aep_basic(CoupledEnsemble::new(vec![h, g], clock).unwrap(), &p, t).unwrap();
            let region = out.certified();
            let (u, v) = (&out.copies()[0], &out.copies()[1]);
            for x in (region.lo..=region.hi).filter(|x| x.abs() > reach) {
                assert_eq!(u.at(x), v.at(x), "K={k} seed {seed} site {x}");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn heights_stay_valid_and_ordered(seed in any::<u64>(), ab in 0usize..5, p in 0.0f64..1.0) {
        let (a, b) = COUPLINGS[ab];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lower = bernoulli_profile(-16, 16, 0.5, &mut rng).unwrap();
        let upper = lower.max_with(&bernoulli_profile(-16, 16, 0.5, &mut rng).unwrap()).unwrap();
        let mut rates = BTreeMap::from([(1, p + 1.0)]);
        if p > 0.0 { rates.insert(-1, p); }
        let ens = CoupledEnsemble::new(vec![lower, upper], ClockField::asep_exotic(seed, a, b, p, 2.0)).unwrap();
        let out = evolve_asep_exotic(ens, (a, b), &rates, 2.0).unwrap();
        for c in out.copies() {
            prop_assert!(c.values().windows(2).all(|w| (w[1] - w[0]).abs() == 1));
            prop_assert!(c.anchored());
        }
        prop_assert!(check_monotone_window(&out).ok);
    }

    #[test]
    fn particle_count_is_conserved_in_window(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = bernoulli_profile(-20, 20, 0.5, &mut rng).unwrap();
        let mut eng = tasep_engine(vec![h.clone()], seed, 3.0);
        eng.evolve(3.0).unwrap();
        let after = &eng.ensemble().copies()[0];
        // frozen boundary: end-to-end height change is conserved
        prop_assert_eq!(after.at(20) - after.at(-20), h.at(20) - h.at(-20));
    }
}
