use kpz_core::clock::*;
use kpz_core::Error;
use proptest::prelude::*;

#[test]
fn quotient_key_examples() {
    assert_eq!(
        quotient_key(5, 3, 1, 1).unwrap(),
        quotient_key(2, 0, 1, 1).unwrap()
    );
    assert_eq!(
        quotient_key(5, 3, 1, 0).unwrap(),
        quotient_key(0, 3, 1, 0).unwrap()
    );
    assert_eq!(
        quotient_key(4, 6, 2, 3).unwrap(),
        quotient_key(0, 0, 2, 3).unwrap()
    );
    assert!(matches!(quotient_key(1, 2, 0, 0), Err(Error::ZeroCoupling)));
}

#[test]
fn zero_rate_is_empty() {
    let f = ClockField::tasep(1, 5.0);
    let s = f
        .sample_stream(StreamKey::Site { x: 0, v: 1 }, 0.0)
        .unwrap();
    assert!(s.events.is_empty());
    assert!(matches!(
        f.sample_stream(StreamKey::Site { x: 0, v: 1 }, -1.0),
        Err(Error::NegativeRate(_))
    ));
}

#[test]
fn same_key_same_events() {
    let f = ClockField::tasep(77, 10.0);
    let k = StreamKey::Site { x: -4, v: 1 };
    let a = f.sample_stream(k, 1.0).unwrap();
    let other = f
        .sample_stream(StreamKey::Site { x: 9, v: 1 }, 1.0)
        .unwrap();
    let b = f.sample_stream(k, 1.0).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, other);
    assert!(a.events.windows(2).all(|w| w[0] < w[1]));
    assert!(a.events.iter().all(|&t| t > 0.0 && t <= 10.0));
}

#[test]
fn rate_one_mean_count() {
    // Poisson(1) counts over 10^4 streams: mean within 3 sigma = 0.03 of 1,
    // well inside [0.94, 1.06]
    let f = ClockField::tasep(2024, 1.0);
    let total: usize = (0..10_000)
        .map(|x| {
            f.sample_stream(StreamKey::Site { x, v: 1 }, 1.0)
                .unwrap()
                .events
                .len()
        })
        .sum();
    let m = total as f64 / 1e4;
    assert!((0.94..=1.06).contains(&m), "mean count {m}");
}

#[test]
fn events_in_examples() {
    let empty = PoissonStream {
        rate: 1.0,
        horizon: 1.0,
        events: vec![],
    };
    assert!(events_in(&empty, 0.0, 1.0).unwrap().is_empty());
    let s = PoissonStream {
        rate: 1.0,
        horizon: 1.0,
        events: vec![0.2, 0.7, 0.9],
    };
    assert_eq!(events_in(&s, 0.2, 0.9).unwrap(), vec![0.7, 0.9]);
    assert_eq!(events_in(&s, 0.0, 1.0).unwrap(), s.events);
    assert!(matches!(
        events_in(&s, 0.5, 0.4),
        Err(Error::BadInterval(..))
    ));
}

#[test]
fn materialization_order_does_not_matter() {
    let f = ClockField::asep_exotic(5, 2, 1, 0.5, 6.0);
    let keys: Vec<StreamKey> = (0..20)
        .map(|i| StreamKey::Exotic {
            index: quotient_key(i, 3 * i, 2, 1).unwrap(),
            dir: if i % 2 == 0 { 1 } else { -1 },
        })
        .collect();
    let fwd: Vec<_> = keys
        .iter()
        .map(|&k| f.sample_stream(k, 1.5).unwrap())
        .collect();
    let mut rev: Vec<_> = keys
        .iter()
        .rev()
        .map(|&k| f.sample_stream(k, 1.5).unwrap())
        .collect();
    rev.reverse();
    assert_eq!(fwd, rev);
}

#[test]
fn annihilation_uniforms_are_reproducible() {
    let f = ClockField::tasep(3, 1.0);
    let k = StreamKey::Annihilation { count: 4 };
    let u = f.aux_uniform(k, 0);
    assert_eq!(u, f.aux_uniform(k, 0));
    assert_ne!(u, f.aux_uniform(k, 1));
    assert!((0.0..1.0).contains(&u));
}

#[test]
fn disjoint_windows_uncorrelated() {
    let f = ClockField::tasep(11, 2.0);
    let (a, b): (Vec<f64>, Vec<f64>) = (0..1000)
        .map(|x| {
            let s = f.sample_stream(StreamKey::Site { x, v: 1 }, 1.0).unwrap();
            (
                events_in(&s, 0.0, 1.0).unwrap().len() as f64,
                events_in(&s, 1.0, 2.0).unwrap().len() as f64,
            )
        })
        .unzip();
    let rho = kpz_core::stats::pearson(&a, &b).unwrap();
    assert!(rho.abs() <= 0.1, "rho {rho}");
}

proptest! {
    #[test]
    fn quotient_identifies_exactly_lattice_multiples(
        l in -30i64..30, k in -30i64..30, dl in -30i64..30, dk in -30i64..30,
        a in 0i64..4, b in 0i64..4,
    ) {
        prop_assume!(a != 0 || b != 0);
        let same = quotient_key(l, k, a, b).unwrap() == quotient_key(l + dl, k + dk, a, b).unwrap();
        // (dl, dk) is an integer multiple of (a, b)
        let multiple = (-40..=40).any(|t| t * a == dl && t * b == dk);
        prop_assert_eq!(same, multiple);
    }

    #[test]
    fn cursor_agrees_with_stream(seed in any::<u64>(), after in 0.0f64..5.0, rate in 0.1f64..4.0) {
        let f = ClockField::tasep(seed, 8.0);
        let key = StreamKey::Site { x: 1, v: 1 };
        let full = f.sample_stream(key, rate).unwrap();
        let mut c = f.cursor(key, rate, after).unwrap();
        let mut tail = Vec::new();
        while let Some(t) = c.next_event(&f) {
            if t > 8.0 { break; }
            tail.push(t);
        }
        prop_assert_eq!(tail, events_in(&full, after, 8.0).unwrap());
    }
}
