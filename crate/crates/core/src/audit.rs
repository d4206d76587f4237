//! Axiom audits: exact checks where the lattice model satisfies the axiom
//! exactly, statistical ones otherwise, collected into one JSON report.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::clock::{mix, replica_seed, ClockField};
use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::exclusion::{
    bernoulli_profile, check_monotone, check_monotone_window, shift_equivariance_check,
    BasicEngine, CoupledEnsemble, ExoticEngine, JumpDistribution,
};
use crate::lattice::HeightFunction;
use crate::metric::{
    certified_half_width, dpi_by_evolution, one_point_sample, triangle_audit, SpaceTime,
};
use crate::stats::{ks_against_table, ks_against_table_lattice, mean, pearson, QuantileTable};

/// One key per axiom.
pub const AXIOMS: [&str; 5] = [
    "triangle",
    "independent-increments",
    "marginals",
    "monotonicity",
    "shift-commutativity",
];

/// Exotic couplings exercised by the exact audits.
pub const COUPLINGS: [(i64, i64); 5] = [(1, 1), (1, 0), (0, 1), (2, 1), (1, 2)];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AuditSection {
    pub axioms: Vec<String>,
    /// Drive each copy by its own clock (detector sanity check).
    pub broken_coupling: bool,
    pub triangle_seeds: u64,
    pub triangle_half: i64,
    pub triangle_reach: i64,
    pub triangle_times: Vec<f64>,
    pub increment_replicas: usize,
    pub increment_time: f64,
    pub marginal_eps: f64,
    pub marginal_replicas: usize,
    pub marginal_ks_max: f64,
    pub marginal_mean_tol: f64,
    pub monotone_seeds: u64,
    pub monotone_half: i64,
    pub monotone_horizon: f64,
    pub shift_seeds: u64,
    pub shift_max: i64,
    pub shift_horizon: f64,
    pub max_abs_corr: f64,
}

impl Default for AuditSection {
    fn default() -> Self {
        Self {
            axioms: AXIOMS.iter().map(|s| s.to_string()).collect(),
            broken_coupling: false,
            triangle_seeds: 100,
            triangle_half: 40,
            triangle_reach: 4,
            triangle_times: vec![0.0, 1.0, 2.0, 3.0],
            increment_replicas: 1000,
            increment_time: 4.0,
            marginal_eps: 0.1,
            marginal_replicas: 2000,
            marginal_ks_max: 0.10,
            marginal_mean_tol: 0.15,
            monotone_seeds: 100,
            monotone_half: 32,
            monotone_horizon: 8.0,
            shift_seeds: 50,
            shift_max: 3,
            shift_horizon: 8.0,
            max_abs_corr: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxiomResult {
    pub axiom: String,
    pub pass: bool,
    /// Replica seeds are `replica_seed(mix([master, tag]), i)` for `i < count`.
    pub master_seed: u64,
    pub seed_tag: u64,
    pub seed_count: u64,
    pub statistics: serde_json::Value,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub tool_version: String,
    pub config_hash: String,
    pub model: String,
    pub axioms: Vec<AxiomResult>,
    pub pass: bool,
}

fn seeds(master: u64, tag: u64, count: u64) -> Vec<u64> {
    let base = mix(&[master, tag]);
    (0..count).map(|i| replica_seed(base, i)).collect()
}

/// Runs the configured audits in the order given.
pub fn axiom_audit(cfg: &ExperimentConfig) -> Result<AuditReport> {
    let a = &cfg.audit;
    for key in &a.axioms {
        if !AXIOMS.contains(&key.as_str()) {
            return Err(Error::UnknownAxiom(key.clone()));
        }
    }
    let master = cfg.run.seed;
    let mut out = Vec::new();
    for key in &a.axioms {
        let r = match key.as_str() {
            "triangle" => triangle(a, master)?,
            "independent-increments" => independent_increments(a, master)?,
            "marginals" => marginals(a, master)?,
            "monotonicity" => monotonicity(a, &cfg.run.model, master)?,
            _ => shift_commutativity(a, master)?,
        };
        out.push(r);
    }
    Ok(AuditReport {
        tool_version: env!("CARGO_PKG_VERSION").into(),
        config_hash: cfg.hash()?,
        model: cfg.run.model.clone(),
        pass: out.iter().all(|r| r.pass),
        axioms: out,
    })
}

fn triangle(a: &AuditSection, master: u64) -> Result<AxiomResult> {
    let tag = 0x7121;
    let times = &a.triangle_times;
    let last = times.iter().copied().fold(0.0, f64::max);
    let pts = |ts: &[f64]| -> Vec<SpaceTime> {
        ts.iter()
            .flat_map(|&t| {
                (-a.triangle_reach..=a.triangle_reach).map(move |x| SpaceTime::new(x, t))
            })
            .collect()
    };
    let sources = pts(&times[..times.len().saturating_sub(1)]);
    let targets = pts(times.get(1..).unwrap_or(&[]));
    let reports = seeds(master, tag, a.triangle_seeds)
        .into_par_iter()
        .map(|s| {
            let clock = ClockField::tasep(s, last);
            let grid = dpi_by_evolution(
                &clock,
                &sources,
                &targets,
                (-a.triangle_half, a.triangle_half),
            )?;
            Ok(triangle_audit(&grid))
        })
        .collect::<Result<Vec<_>>>()?;
    let chains: usize = reports.iter().map(|r| r.chains).sum();
    let violations: usize = reports.iter().map(|r| r.violations).sum();
    let equalities: usize = reports.iter().map(|r| r.equalities).sum();
    let worst = reports.iter().filter_map(|r| r.worst_excess).max();
    Ok(AxiomResult {
        axiom: "triangle".into(),
        pass: violations == 0,
        master_seed: master,
        seed_tag: tag,
        seed_count: a.triangle_seeds,
        statistics: json!({ "chains": chains, "violations": violations, "equalities": equalities, "worst_excess": worst }),
    })
}

/// `h(x) = x mod 2`.
pub fn flat_profile(lo: i64, hi: i64) -> Result<HeightFunction> {
    HeightFunction::from_fn(lo, hi, |x| x.rem_euclid(2))
}

/// Functionals of one clock realization over `[0, t]` and `[t, 2t]`:
/// metric values `d(0, 0; 0, t)`, `d(0, t; 0, 2t)` and height increments at 0
/// of the flat profile restarted at each window's start.
pub fn increment_functionals(seed: u64, t: f64) -> Result<([f64; 2], [f64; 2])> {
    let half = certified_half_width(2.0 * t, 2);
    let clock = ClockField::tasep(seed, 2.0 * t);
    let grid = dpi_by_evolution(
        &clock,
        &[SpaceTime::new(0, 0.0), SpaceTime::new(0, t)],
        &[SpaceTime::new(0, t), SpaceTime::new(0, 2.0 * t)],
        (-half, half),
    )?;
    let d = [grid.get(0, 0).to_f64(), grid.get(1, 1).to_f64()];
    let mut h = [0.0; 2];
    for (i, s) in [0.0, t].into_iter().enumerate() {
        let h0 = flat_profile(-half, half)?;
        let ens = CoupledEnsemble::starting_at(vec![h0.clone()], clock.clone(), s)?.without_log();
        let mut eng = BasicEngine::new(ens, JumpDistribution::tasep())?;
        eng.evolve(s + t)?;
        h[i] = (eng.ensemble().copies()[0].at(0) - h0.at(0)) as f64;
    }
    Ok((d, h))
}

fn independent_increments(a: &AuditSection, master: u64) -> Result<AxiomResult> {
    let tag = 0x1AC5;
    let vals = seeds(master, tag, a.increment_replicas as u64)
        .into_par_iter()
        .map(|s| increment_functionals(s, a.increment_time))
        .collect::<Result<Vec<_>>>()?;
    let (d, h): (Vec<[f64; 2]>, Vec<[f64; 2]>) = vals.into_iter().unzip();
    let col = |v: &[[f64; 2]], i: usize| v.iter().map(|p| p[i]).collect::<Vec<f64>>();
    let rho_d = pearson(&col(&d, 0), &col(&d, 1))?;
    let rho_h = pearson(&col(&h, 0), &col(&h, 1))?;
    Ok(AxiomResult {
        axiom: "independent-increments".into(),
        pass: rho_d.abs() <= a.max_abs_corr && rho_h.abs() <= a.max_abs_corr,
        master_seed: master,
        seed_tag: tag,
        seed_count: a.increment_replicas as u64,
        statistics: json!({ "corr_metric": rho_d, "corr_height": rho_h, "time": a.increment_time }),
    })
}

/// Raw and lattice-corrected comparison of one-point samples with TW-GUE.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginalStat {
    pub eps: f64,
    pub replicas: usize,
    pub ks_raw: f64,
    pub ks: f64,
    pub mean_raw: f64,
    /// Mean after spreading each sample over its lattice cell.
    pub mean: f64,
}

/// Rescaled narrow-wedge values `d^eps(0, 0; 0, 1)` over replicas.
pub fn one_point_samples(master: u64, eps: f64, replicas: usize) -> Result<Vec<f64>> {
    seeds(master, 0x3A26 ^ eps.to_bits(), replicas as u64)
        .into_par_iter()
        .map(|s| one_point_sample(s, eps))
        .collect()
}

pub fn marginal_stat(master: u64, eps: f64, replicas: usize) -> Result<MarginalStat> {
    let table = QuantileTable::tw_gue();
    let v = one_point_samples(master, eps, replicas)?;
    // samples live on a lattice of spacing 2 eps^{1/2}
    let spacing = 2.0 * eps.sqrt();
    let mean_raw = mean(&v);
    Ok(MarginalStat {
        eps,
        replicas,
        ks_raw: ks_against_table(&v, &table)?,
        ks: ks_against_table_lattice(&v, &table, spacing)?,
        mean_raw,
        mean: mean_raw - spacing / 2.0,
    })
}

fn marginals(a: &AuditSection, master: u64) -> Result<AxiomResult> {
    let st = marginal_stat(master, a.marginal_eps, a.marginal_replicas)?;
    let table = QuantileTable::tw_gue();
    let pass = st.ks <= a.marginal_ks_max && (st.mean - table.mean).abs() <= a.marginal_mean_tol;
    Ok(AxiomResult {
        axiom: "marginals".into(),
        pass,
        master_seed: master,
        seed_tag: 0x3A26 ^ a.marginal_eps.to_bits(),
        seed_count: a.marginal_replicas as u64,
        statistics: serde_json::to_value(&st).map_err(|e| Error::Io(e.to_string()))?,
    })
}

/// Three ordered profiles `lower <= middle <= upper` on `[-half, half]`.
pub fn ordered_triple(seed: u64, half: i64) -> Result<Vec<HeightFunction>> {
    let mut rng = ChaCha8Rng::seed_from_u64(mix(&[seed, 0x0DE7]));
    let lower = bernoulli_profile(-half, half, 0.5, &mut rng)?;
    let middle = lower.max_with(&bernoulli_profile(-half, half, 0.5, &mut rng)?)?;
    let upper = middle.max_with(&bernoulli_profile(-half, half, 0.5, &mut rng)?)?;
    Ok(vec![lower, middle, upper])
}

fn evolve_coupled(
    model: &str,
    copies: Vec<HeightFunction>,
    seed: u64,
    horizon: f64,
    ab: (i64, i64),
) -> Result<CoupledEnsemble> {
    match model {
        "asep-exotic" => {
            let clock = ClockField::asep_exotic(seed, ab.0, ab.1, 0.5, horizon);
            let mut eng = ExoticEngine::new(CoupledEnsemble::new(copies, clock)?)?;
            eng.evolve(horizon)?;
            Ok(eng.into_ensemble())
        }
        _ => {
            let mut eng = BasicEngine::new(
                CoupledEnsemble::new(copies, ClockField::tasep(seed, horizon))?,
                JumpDistribution::tasep(),
            )?;
            eng.evolve(horizon)?;
            Ok(eng.into_ensemble())
        }
    }
}

fn monotonicity(a: &AuditSection, model: &str, master: u64) -> Result<AxiomResult> {
    if !matches!(model, "tasep" | "asep-exotic") {
        return Err(Error::Config(format!(
            "no monotonicity audit for model {model}"
        )));
    }
    let tag = 0x3070;
    let couplings: Vec<(i64, i64)> = if model == "asep-exotic" {
        COUPLINGS.to_vec()
    } else {
        vec![(0, 0)]
    };
    let jobs: Vec<((i64, i64), u64)> = couplings
        .iter()
        .flat_map(|&ab| {
            seeds(master, tag, a.monotone_seeds)
                .into_iter()
                .map(move |s| (ab, s))
        })
        .collect();
    let reports = jobs
        .into_par_iter()
        .map(|(ab, s)| {
            let copies = ordered_triple(s, a.monotone_half)?;
            let ens = if a.broken_coupling {
                let parts = copies
                    .into_iter()
                    .enumerate()
                    .map(|(i, c)| {
                        evolve_coupled(model, vec![c], mix(&[s, i as u64]), a.monotone_horizon, ab)
                    })
                    .collect::<Result<Vec<_>>>()?;
                CoupledEnsemble::merge_independent(parts)?
            } else {
                evolve_coupled(model, copies, s, a.monotone_horizon, ab)?
            };
            Ok((ab, check_monotone(&ens), check_monotone_window(&ens).ok))
        })
        .collect::<Result<Vec<_>>>()?;
    let failures = reports.iter().filter(|r| !r.1.ok).count();
    let window_failures = reports.iter().filter(|r| !r.2).count();
    let events: usize = reports.iter().map(|r| r.1.events_checked).sum();
    let first = reports
        .iter()
        .find(|r| !r.1.ok)
        .map(|r| json!({ "coupling": [r.0 .0, r.0 .1], "violation": r.1.violation }));
    Ok(AxiomResult {
        axiom: "monotonicity".into(),
        pass: failures == 0 && window_failures == 0,
        master_seed: master,
        seed_tag: tag,
        seed_count: a.monotone_seeds,
        statistics: json!({
            "runs": reports.len(),
            "failed_runs": failures,
            "failed_runs_whole_window": window_failures,
            "events_checked": events,
            "broken_coupling": a.broken_coupling,
            "first_failure": first,
        }),
    })
}

/// Shifts `m` with `|m| <= max` whose height shift `m (a + b)` is even.
pub fn admissible_shifts((a, b): (i64, i64), max: i64) -> Vec<i64> {
    (-max..=max)
        .filter(|m| (m * (a + b)).rem_euclid(2) == 0)
        .collect()
}

fn shift_commutativity(a: &AuditSection, master: u64) -> Result<AxiomResult> {
    let tag = 0x5417;
    let jobs: Vec<((i64, i64), i64, u64)> = COUPLINGS
        .iter()
        .flat_map(|&ab| {
            admissible_shifts(ab, a.shift_max)
                .into_iter()
                .flat_map(move |m| {
                    seeds(master, tag, a.shift_seeds)
                        .into_iter()
                        .map(move |s| (ab, m, s))
                })
        })
        .collect();
    let results = jobs
        .into_par_iter()
        .map(|(ab, m, s)| Ok((ab, m, shift_equivariance_check(ab, m, s, a.shift_horizon)?)))
        .collect::<Result<Vec<_>>>()?;
    let failures: Vec<_> = results
        .iter()
        .filter(|r| !r.2)
        .map(|r| json!([r.0 .0, r.0 .1, r.1]))
        .collect();
    Ok(AxiomResult {
        axiom: "shift-commutativity".into(),
        pass: failures.is_empty(),
        master_seed: master,
        seed_tag: tag,
        seed_count: a.shift_seeds,
        statistics: json!({ "checks": results.len(), "failures": failures }),
    })
}
