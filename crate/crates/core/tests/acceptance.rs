//! End-to-end acceptance run: one line per criterion, non-zero exit if any
//! fails. Runs without the libtest harness so the lines always show.

use std::collections::BTreeMap;
use std::time::Instant;

use kpz_core::audit::{axiom_audit, marginal_stat, AxiomResult};
use kpz_core::clock::{mix, replica_seed, ClockField};
use kpz_core::config::ExperimentConfig;
use kpz_core::exclusion::JumpDistribution;
use kpz_core::horizon::{property_star_test, single_walk_stationarity, PropertyStarConfig};
use kpz_core::lattice::{narrow_wedge, HeightFunction};
use kpz_core::metric::{
    dp_from_rings, dpi_bruteforce, dpi_by_dp, dpi_by_evolution, evolve_wedges_on_rings,
    variational_check, Dist, PathSign, SpaceTime,
};
use kpz_core::multitype::{takeover_tail, y_tail, TailConfig};
use kpz_core::stats::{mean, null_calibration, QuantileTable};
use kpz_core::tolerances::Tolerances;
use kpz_core::web::{
    drw, drw_bruteforce, m_eta_one_point, slack_violation_rate, RademacherField, WebDist,
};
use rayon::prelude::*;

type Outcome = Result<(bool, String), kpz_core::Error>;

const SEED: u64 = 20240611;

fn variational() -> Outcome {
    let (lo, hi) = (-20, 20);
    let mut inits: Vec<HeightFunction> = Vec::new();
    for x in [-10, -3, 0, 5, 12] {
        inits.push(narrow_wedge(x, lo, hi)?);
    }
    inits.push(HeightFunction::from_fn(lo, hi, |x| x.rem_euclid(2))?);
    inits.push(HeightFunction::from_fn(lo, hi, |x| 2 - x.rem_euclid(2))?);
    for (a, b) in [(-8, 8), (-2, 6), (-14, 0)] {
        inits.push(narrow_wedge(a, lo, hi)?.max_with(&narrow_wedge(b, lo, hi)?)?);
    }
    let mut checked = 0;
    let mut bad = 0;
    for s in 0..20 {
        let clock = ClockField::tasep(replica_seed(mix(&[SEED, 1]), s), 4.0);
        for h0 in &inits {
            let r = variational_check(&clock, h0, 0.0, 4.0)?;
            checked += r.checked;
            bad += (!r.ok) as usize;
        }
    }
    Ok((
        bad == 0 && checked > 0,
        format!(
            "{} initial conditions x 20 seeds, {checked} sites, {bad} mismatching runs",
            inits.len()
        ),
    ))
}

fn all_placements(sites: &[i64], max: usize) -> Vec<Vec<i64>> {
    let mut out = vec![vec![]];
    let mut layer = vec![vec![]];
    for _ in 0..max {
        let mut next = Vec::new();
        for p in &layer {
            for &z in sites {
                let mut q: Vec<i64> = p.clone();
                q.push(z);
                next.push(q);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

fn path_equivalence() -> Outcome {
    let w = (0, 5);
    let placements = all_placements(&[1, 2, 3, 4], 5);
    let mut bad = 0;
    for p in &placements {
        let rings: Vec<(f64, i64)> = p
            .iter()
            .enumerate()
            .map(|(k, &z)| ((k + 1) as f64 / 8.0, z))
            .collect();
        for x in w.0..=w.1 {
            let dp = dp_from_rings(w, SpaceTime::new(x, 0.0), &rings, &[1.0]);
            let ev = &evolve_wedges_on_rings(w, &[x], &rings)?[0];
            for y in w.0..=w.1 {
                let k = (y - w.0) as usize;
                let brute = dpi_bruteforce(w, x, y, &rings, PathSign::Negative)?;
                if dp[0][k] != Dist::Finite(ev[k]) || brute != ev[k] {
                    bad += 1;
                }
            }
        }
    }
    let mut random_bad = 0;
    for s in 0..50u64 {
        let clock = ClockField::tasep(replica_seed(mix(&[SEED, 2]), s), 2.0);
        let targets: Vec<SpaceTime> = (-3..=3).map(|y| SpaceTime::new(y, 1.5)).collect();
        for x in [-4, 0, 3] {
            let o = SpaceTime::new(x, 0.0);
            let ev = dpi_by_evolution(&clock, &[o], &targets, (-10, 9))?;
            let dp = dpi_by_dp(&clock, o, &targets, (-10, 9))?;
            random_bad += (0..targets.len())
                .filter(|&j| ev.get(0, j) != dp[j])
                .count();
        }
    }
    let fixture = include_str!("fixtures/sign_calibration.json");
    let committed = fixture.contains("\"verdict\": \"negative\"");
    Ok((
        bad == 0 && random_bad == 0 && committed,
        format!(
            "{} placements on 6 sites: {bad} mismatches; 50 random windows: {random_bad}; calibration fixture negative: {committed}",
            placements.len()
        ),
    ))
}

fn audit_one(key: &str, model: &str) -> Result<AxiomResult, kpz_core::Error> {
    let mut cfg = ExperimentConfig::default();
    cfg.run.seed = SEED;
    cfg.run.model = model.into();
    cfg.audit.axioms = vec![key.into()];
    Ok(axiom_audit(&cfg)?.axioms.remove(0))
}

fn triangle() -> Outcome {
    let r = audit_one("triangle", "tasep")?;
    let chains = r.statistics["chains"].as_u64().unwrap_or(0);
    Ok((r.pass && chains >= 10_000, format!("{}", r.statistics)))
}

fn monotone() -> Outcome {
    let r = audit_one("monotonicity", "asep-exotic")?;
    Ok((
        r.pass && r.seed_count >= 100,
        format!("{} seeds per coupling, {}", r.seed_count, r.statistics),
    ))
}

fn shift() -> Outcome {
    let r = audit_one("shift-commutativity", "asep-exotic")?;
    Ok((
        r.pass && r.seed_count >= 50,
        format!("{} seeds, {}", r.seed_count, r.statistics),
    ))
}

fn web_oracle() -> Outcome {
    let lattice = |i: i64, n: i64| (i + n).rem_euclid(2) == 0;
    let mut pairs = 0;
    let mut bad = 0;
    let mut cone_bad = 0;
    for f in 0..50 {
        let field = RademacherField::unbounded(replica_seed(mix(&[SEED, 6]), f));
        for n in 0..8 {
            for i in (0..8).filter(|&i| lattice(i, n)) {
                for m in 0..8 {
                    for j in (0..8).filter(|&j| lattice(j, m)) {
                        let d = drw(&field, (i, n), (j, m))?;
                        pairs += 1;
                        if m >= n && d != drw_bruteforce(&field, (i, n), (j, m))? {
                            bad += 1;
                        }
                        let inside = m >= n && (j - i).abs() <= m - n;
                        if (d != WebDist::Infinite) != inside {
                            cone_bad += 1;
                        }
                    }
                }
            }
        }
    }
    Ok((
        bad == 0 && cone_bad == 0,
        format!(
            "{pairs} pairs over 50 fields: {bad} oracle mismatches, {cone_bad} light-cone errors"
        ),
    ))
}

fn kpz_marginal(tol: &Tolerances) -> Outcome {
    let table = QuantileTable::tw_gue();
    let m = &tol.marginal;
    let sweep = m
        .sweep_eps
        .iter()
        .map(|&e| marginal_stat(SEED, e, m.replicas))
        .collect::<Result<Vec<_>, _>>()?;
    let main = sweep
        .iter()
        .find(|s| s.eps == m.eps)
        .cloned()
        .map_or_else(|| marginal_stat(SEED, m.eps, m.replicas), Ok)?;
    let ks_ok = main.ks <= m.ks_max;
    let mean_ok = (main.mean - table.mean).abs() <= m.mean_tol;
    let mono = sweep.windows(2).all(|w| w[1].ks <= w[0].ks);
    let trail: Vec<String> = sweep
        .iter()
        .map(|s| format!("eps {} ks {:.4} (raw {:.4})", s.eps, s.ks, s.ks_raw))
        .collect();
    Ok((
        ks_ok && mean_ok && mono,
        format!(
            "ks {:.4}, mean {:.4} vs {:.4}; sweep [{}]",
            main.ks,
            main.mean,
            table.mean,
            trail.join(", ")
        ),
    ))
}

fn web_marginal(tol: &Tolerances) -> Outcome {
    let table = QuantileTable::tw_gue();
    let w = &tol.web;
    let base = mix(&[SEED, 8]);
    let v = (0..w.replicas as u64)
        .into_par_iter()
        .map(|i| m_eta_one_point(replica_seed(base, i), w.eta, w.n))
        .collect::<Result<Vec<_>, _>>()?;
    let m = mean(&v);
    let rates = w
        .slack_n
        .iter()
        .map(|&n| slack_violation_rate(SEED, w.eta, n, w.slack_replicas, w.slack_delta))
        .collect::<Result<Vec<_>, _>>()?;
    let mono = rates.windows(2).all(|p| p[1].rate <= p[0].rate);
    let trail: Vec<String> = rates
        .iter()
        .map(|r| {
            format!(
                "n {} rate {:.4} over {} chains (max excess {:.3})",
                r.n, r.rate, r.chains, r.max_excess
            )
        })
        .collect();
    Ok((
        (m - table.mean).abs() <= w.mean_tol && mono,
        format!(
            "mean {m:.4} vs {:.4}; slack [{}]",
            table.mean,
            trail.join(", ")
        ),
    ))
}

fn increments() -> Outcome {
    let r = audit_one("independent-increments", "tasep")?;
    Ok((r.pass, format!("{}", r.statistics)))
}

fn multitype(tol: &Tolerances) -> Outcome {
    let p = JumpDistribution::new(BTreeMap::from([(1, 0.6), (3, 0.3), (-3, 0.3 - 0.4 / 3.0)]))?;
    let t = &tol.multitype;
    let cfg = TailConfig {
        replicas: 1000,
        horizon: 4.0,
        box_half: 20,
        seed: SEED,
    };
    let tail = takeover_tail(&p, &cfg)?;
    let fit = tail.log_linear_fit(t.fit_from)?;
    let upper = fit.slope_upper(t.confidence);
    let takeover_ok = tail.counts.len() >= t.min_labels && tail.is_nonincreasing() && upper < 0.0;
    let ycfg = TailConfig {
        replicas: t.y_replicas,
        ..cfg
    };
    let y = y_tail(&p, &ycfg, 5)?;
    let env = y.envelope(t.envelope_head)?;
    Ok((
        takeover_ok && env.dominates,
        format!(
            "{} labels, survival {:?}, slope {:.3} (99% upper {:.3}); Y tail {:?}, envelope c {:.3} C {:.3} worst ratio {:.3}",
            tail.counts.len(),
            tail.survival.iter().map(|s| format!("{:.4}", s.1)).collect::<Vec<_>>(),
            fit.slope,
            upper,
            y.survival.iter().map(|s| format!("{:.4}", s.1)).collect::<Vec<_>>(),
            env.c,
            env.scale,
            env.worst_ratio
        ),
    ))
}

fn stationarity(tol: &Tolerances) -> Outcome {
    let h = &tol.horizon;
    let single = single_walk_stationarity(h.single_replicas, SEED, 20.0, &[-8, -3, -1, 1, 4, 10])?;
    let cfg = PropertyStarConfig {
        eps: h.eps,
        dt: h.dt,
        replicas: h.replicas,
        seed: SEED,
        ..Default::default()
    };
    let star = property_star_test(&cfg)?;
    let worst = star
        .increments
        .iter()
        .map(|t| t.ks.statistic / t.ks.threshold)
        .fold(0.0, f64::max);
    let slopes: Vec<String> = star
        .slopes
        .iter()
        .map(|s| format!("{:.3}/{}", s.mean_slope, s.drift))
        .collect();
    Ok((
        single.pass && star.pass,
        format!(
            "single walk pass {}; horizon pass {} (worst KS/threshold {:.3}, slopes {})",
            single.pass,
            star.pass,
            worst,
            slopes.join(" ")
        ),
    ))
}

fn reproducibility(tol: &Tolerances) -> Outcome {
    let mut cfg = ExperimentConfig::default();
    cfg.run.seed = SEED;
    cfg.audit.marginal_replicas = 500;
    let a = serde_json::to_string_pretty(&axiom_audit(&cfg)?).expect("report serializes");
    let b = serde_json::to_string_pretty(&axiom_audit(&cfg)?).expect("report serializes");
    let c = null_calibration(tol.calibration.runs, tol.calibration.n, SEED)?;
    let limit = tol.calibration.max_rate_factor * tol.ks.alpha;
    Ok((
        a == b && c.rate <= limit,
        format!(
            "audit JSON identical: {} ({} bytes); null rejection rate {:.3} (limit {limit})",
            a == b,
            a.len(),
            c.rate
        ),
    ))
}

type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn main() {
    let tol = Tolerances::vendored();
    let criteria: Vec<Criterion> = vec![
        ("variational formula", Box::new(variational)),
        ("path/evolution equivalence", Box::new(path_equivalence)),
        ("reverse triangle inequality", Box::new(triangle)),
        ("exotic monotonicity", Box::new(monotone)),
        ("shift equivariance", Box::new(shift)),
        ("web distance oracle", Box::new(web_oracle)),
        ("KPZ one-point marginal", Box::new(|| kpz_marginal(&tol))),
        ("web distance marginal", Box::new(|| web_marginal(&tol))),
        ("independent increments", Box::new(increments)),
        ("multi-type tails", Box::new(|| multitype(&tol))),
        ("stationarity", Box::new(|| stationarity(&tol))),
        ("reproducibility", Box::new(|| reproducibility(&tol))),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .and_then(|s| s.parse().ok());
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        if only.is_some_and(|k| k != i + 1) {
            continue;
        }
        let start = Instant::now();
        let (ok, detail) = match run() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        failed += (!ok) as usize;
        println!(
            "criterion {:>2} {} {}: {} [{:.1}s]",
            i + 1,
            if ok { "PASS" } else { "FAIL" },
            name,
            detail,
            start.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("acceptance: {failed} criteria failed");
        std::process::exit(1);
    }
    println!("acceptance: all criteria passed");
}
