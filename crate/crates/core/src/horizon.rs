//! Last passage over drifted walk ensembles, the stationary horizon
//! transform, and its stationarity under TASEP metric evolution.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::clock::{mix, ClockField};
use crate::error::{Error, Result};
use crate::exclusion::{
    bernoulli_profile, certified_region, BasicEngine, CoupledEnsemble, JumpDistribution,
};
use crate::lattice::{srw_envelope_height, NarrowWedgeCombo};
use crate::metric::lattice_time;
use crate::stats::{ks_two_sample, mean, KsResult};

/// Functions on the grid `{k dx : -m <= k <= m}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriftedWalkEnsemble {
    pub dx: f64,
    pub m: usize,
    pub drifts: Vec<f64>,
    /// `walks[i][k + m]` is walk `i` at `k dx`.
    pub walks: Vec<Vec<f64>>,
}

impl DriftedWalkEnsemble {
    pub fn new(dx: f64, m: usize, drifts: Vec<f64>, walks: Vec<Vec<f64>>) -> Result<Self> {
        if drifts.len() != walks.len() || walks.is_empty() {
            return Err(Error::BadEnsemble("one drift per walk".into()));
        }
        if drifts.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::BadEnsemble("drifts must increase".into()));
        }
        if walks.iter().any(|w| w.len() != 2 * m + 1 || w[m] != 0.0) {
            return Err(Error::BadEnsemble(
                "walks must cover the grid and vanish at 0".into(),
            ));
        }
        Ok(Self {
            dx,
            m,
            drifts,
            walks,
        })
    }

    /// Independent walks with Gaussian increments of mean `a_i dx` and
    /// variance `2 dx`.
    pub fn sample<R: Rng>(drifts: &[f64], dx: f64, m: usize, rng: &mut R) -> Result<Self> {
        let mut walks = Vec::with_capacity(drifts.len());
        for &a in drifts {
            let inc = Normal::new(a * dx, (2.0 * dx).sqrt())
                .map_err(|e| Error::BadEnsemble(e.to_string()))?;
            let mut w = vec![0.0; 2 * m + 1];
            for k in m + 1..=2 * m {
                w[k] = w[k - 1] + inc.sample(rng);
            }
            for k in (0..m).rev() {
                w[k] = w[k + 1] - inc.sample(rng);
            }
            walks.push(w);
        }
        Self::new(dx, m, drifts.to_vec(), walks)
    }

    pub fn k(&self) -> usize {
        self.walks.len()
    }

    pub fn position(&self, idx: usize) -> f64 {
        (idx as f64 - self.m as f64) * self.dx
    }

    /// Exactly linear walks `a_i x`.
    pub fn linear(drifts: &[f64], dx: f64, m: usize) -> Result<Self> {
        let walks = drifts
            .iter()
            .map(|&a| {
                (0..=2 * m)
                    .map(|k| a * (k as f64 - m as f64) * dx)
                    .collect()
            })
            .collect();
        Self::new(dx, m, drifts.to_vec(), walks)
    }
}

/// `f[i -> x]` for every grid point `x` (lines numbered from 1).
pub fn last_passage_all(f: &DriftedWalkEnsemble, i: usize) -> Result<Vec<f64>> {
    if i == 0 || i > f.k() {
        return Err(Error::IndexOutOfRange(i));
    }
    let mut l = f.walks[i - 1].clone();
    for j in (0..i - 1).rev() {
        let fj = &f.walks[j];
        let mut run = f64::NEG_INFINITY;
        for y in 0..l.len() {
            run = run.max(l[y] - fj[y]);
            l[y] = fj[y] + run;
        }
    }
    Ok(l)
}

/// `f[i -> x]` at grid index `x_idx`.
pub fn last_passage(f: &DriftedWalkEnsemble, i: usize, x_idx: usize) -> Result<f64> {
    last_passage_all(f, i)?
        .get(x_idx)
        .copied()
        .ok_or(Error::IndexOutOfRange(x_idx))
}

/// `R_i(x) = B[i -> x] - B[i -> 0]` on the walk grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HorizonEnsemble {
    pub dx: f64,
    pub m: usize,
    pub lines: Vec<Vec<f64>>,
}

impl HorizonEnsemble {
    pub fn position(&self, idx: usize) -> f64 {
        (idx as f64 - self.m as f64) * self.dx
    }
}

pub fn horizon_from_walks(b: &DriftedWalkEnsemble) -> Result<HorizonEnsemble> {
    let lines = (1..=b.k())
        .map(|i| {
            let l = last_passage_all(b, i)?;
            let z = l[b.m];
            Ok(l.into_iter().map(|v| v - z).collect())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(HorizonEnsemble {
        dx: b.dx,
        m: b.m,
        lines,
    })
}

/// Parameters of [`property_star_test`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PropertyStarConfig {
    pub drifts: Vec<f64>,
    pub eps: f64,
    /// The horizon lives on `[-half_range, half_range]`.
    pub half_range: f64,
    /// Scaled evolution time `t - s`.
    pub dt: f64,
    pub replicas: usize,
    pub seed: u64,
    /// Increment offsets `x` (increments `F(x) - F(0)`).
    pub offsets: Vec<f64>,
    /// End-to-end slope measured on `[-slope_range, slope_range]`.
    pub slope_range: f64,
}

impl Default for PropertyStarConfig {
    fn default() -> Self {
        Self {
            drifts: vec![-1.0, 1.0],
            eps: 0.1,
            half_range: 12.0,
            dt: 0.5,
            replicas: 500,
            seed: 1,
            offsets: vec![-1.0, -0.5, -0.25, 0.25, 0.5, 1.0],
            slope_range: 4.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IncrementTest {
    /// Line number, or 0 for the gap `F_2 - F_1`.
    pub line: usize,
    pub offset: f64,
    pub ks: KsResult,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeCheck {
    pub line: usize,
    pub drift: f64,
    pub mean_slope: f64,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropertyStarReport {
    pub increments: Vec<IncrementTest>,
    pub slopes: Vec<SlopeCheck>,
    pub pass: bool,
}

fn site_of(x: f64, eps: f64) -> i64 {
    (2.0 * x / eps).round() as i64
}

/// Projects a scaled increment over `site` lattice steps onto the values
/// `eps^{1/2} n` with `n = site mod 2`.
fn snap(v: f64, site: i64, eps: f64) -> f64 {
    let root = eps.sqrt();
    let n =
        2.0 * ((v / root - site.rem_euclid(2) as f64) / 2.0).round() + site.rem_euclid(2) as f64;
    root * n
}

/// Increments of `r` at the configured offsets, projected onto lattice
/// values, and end-to-end slopes.
pub fn horizon_increments(
    cfg: &PropertyStarConfig,
    r: &HorizonEnsemble,
) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let mut incs = Vec::new();
    let mut slopes = Vec::new();
    for line in &r.lines {
        let at = |x: f64| -> Result<f64> {
            let k = (x / r.dx).round() + r.m as f64;
            if k < 0.0 || (x / r.dx - (k - r.m as f64)).abs() > 1e-9 {
                return Err(Error::GridMismatch(format!("{x} is not on the walk grid")));
            }
            line.get(k as usize)
                .copied()
                .ok_or(Error::OutsideWindow(site_of(x, cfg.eps)))
        };
        incs.push(
            cfg.offsets
                .iter()
                .map(|&x| Ok(snap(at(x)?, site_of(x, cfg.eps), cfg.eps)))
                .collect::<Result<Vec<_>>>()?,
        );
        slopes.push((at(cfg.slope_range)? - at(-cfg.slope_range)?) / (2.0 * cfg.slope_range));
    }
    Ok((incs, slopes))
}

/// Embeds the horizon lines at scale `eps` through their minimal walk
/// envelopes, evolves them jointly by TASEP for scaled time `dt` and returns
/// recentred increments at the offsets with end-to-end slopes. Zero time is
/// the identity and returns [`horizon_increments`].
pub fn evolve_horizon(
    cfg: &PropertyStarConfig,
    r: &HorizonEnsemble,
    seed: u64,
    dt: f64,
) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    if dt == 0.0 {
        return horizon_increments(cfg, r);
    }
    let eps = cfg.eps;
    let half = site_of(cfg.half_range, eps);
    let points: Vec<f64> = (0..r.lines[0].len()).map(|k| r.position(k)).collect();
    let mut copies = Vec::with_capacity(r.lines.len());
    for line in &r.lines {
        let combo = NarrowWedgeCombo::new(points.clone(), line.clone())?;
        copies.push(srw_envelope_height(&combo, eps, -half, half)?);
    }
    let t = lattice_time(dt, eps);
    let clock = ClockField::tasep(seed, t);
    let ens = CoupledEnsemble::new(copies, clock)?.without_log();
    let mut eng = BasicEngine::new(ens, JumpDistribution::tasep())?;
    eng.evolve(t)?;
    let out = eng.into_ensemble().into_copies();
    let region = certified_region(-half, half, 1, t);
    let root = eps.sqrt();
    let mut incs = Vec::new();
    let mut slopes = Vec::new();
    for h in &out {
        let at = |x: f64| -> Result<i64> {
            let s = site_of(x, eps);
            if !region.contains(s) {
                return Err(Error::NotCertified { x: s, t });
            }
            Ok(h.at(s))
        };
        let z = at(0.0)?;
        incs.push(
            cfg.offsets
                .iter()
                .map(|&x| Ok(root * (at(x)? - z) as f64))
                .collect::<Result<Vec<_>>>()?,
        );
        slopes.push(
            root * (at(cfg.slope_range)? - at(-cfg.slope_range)?) as f64 / (2.0 * cfg.slope_range),
        );
    }
    Ok((incs, slopes))
}

/// A horizon on the grid of step `eps / 2`, one point per lattice site.
pub fn sample_horizon(cfg: &PropertyStarConfig, seed: u64) -> Result<HorizonEnsemble> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dx = cfg.eps / 2.0;
    let m = (cfg.half_range / dx).round() as usize;
    let b = DriftedWalkEnsemble::sample(&cfg.drifts, dx, m, &mut rng)?;
    horizon_from_walks(&b)
}

/// Compares increments of fresh horizon samples with those of independent
/// samples evolved by the TASEP metric for `dt`.
pub fn property_star_test(cfg: &PropertyStarConfig) -> Result<PropertyStarReport> {
    if cfg.drifts.len() != 2 {
        return Err(Error::NeedTwoLines(cfg.drifts.len()));
    }
    let nl = 2;
    let no = cfg.offsets.len();
    let mut reference = vec![vec![Vec::new(); no]; nl];
    let mut evolved = vec![vec![Vec::new(); no]; nl];
    let mut slopes = vec![Vec::new(); nl];
    for rep in 0..cfg.replicas as u64 {
        let r0 = sample_horizon(cfg, mix(&[cfg.seed, 0xAE0, rep]))?;
        let (inc0, _) = horizon_increments(cfg, &r0)?;
        let r1 = sample_horizon(cfg, mix(&[cfg.seed, 0xAE1, rep]))?;
        let (inc1, sl) = evolve_horizon(cfg, &r1, mix(&[cfg.seed, 0xC10C, rep]), cfg.dt)?;
        for i in 0..nl {
            for k in 0..no {
                reference[i][k].push(inc0[i][k]);
                evolved[i][k].push(inc1[i][k]);
            }
            slopes[i].push(sl[i]);
        }
    }
    let mut increments = Vec::new();
    for i in 0..nl {
        for k in 0..no {
            increments.push(IncrementTest {
                line: i + 1,
                offset: cfg.offsets[k],
                ks: ks_two_sample(&reference[i][k], &evolved[i][k])?,
            });
        }
    }
    // Joint law through the gap between the lines.
    let root = cfg.eps.sqrt();
    let gap = |s: &[Vec<Vec<f64>>], k: usize| -> Vec<f64> {
        s[1][k]
            .iter()
            .zip(&s[0][k])
            .map(|(b, a)| root * ((b - a) / root).round())
            .collect()
    };
    for k in 0..no {
        increments.push(IncrementTest {
            line: 0,
            offset: cfg.offsets[k],
            ks: ks_two_sample(&gap(&reference, k), &gap(&evolved, k))?,
        });
    }
    let slopes: Vec<SlopeCheck> = (0..nl)
        .map(|i| {
            let a = cfg.drifts[i];
            let ms = mean(&slopes[i]);
            SlopeCheck {
                line: i + 1,
                drift: a,
                mean_slope: ms,
                ok: (ms - a).abs() <= 0.1 * a.abs(),
            }
        })
        .collect();
    let pass = increments.iter().all(|t| !t.ks.reject) && slopes.iter().all(|s| s.ok);
    Ok(PropertyStarReport {
        increments,
        slopes,
        pass,
    })
}

/// Increments `h(x) - h(0)` at lattice offsets: fresh Bernoulli(1/2)
/// profiles against profiles evolved by TASEP for lattice time `t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationarityReport {
    pub offsets: Vec<i64>,
    pub tests: Vec<KsResult>,
    pub pass: bool,
}

pub fn single_walk_stationarity(
    replicas: usize,
    seed: u64,
    t: f64,
    offsets: &[i64],
) -> Result<StationarityReport> {
    let reach = offsets.iter().map(|o| o.abs()).max().unwrap_or(0);
    let half = reach + (4.0 * t).ceil() as i64 + 2;
    let mut fresh = vec![Vec::new(); offsets.len()];
    let mut evolved = vec![Vec::new(); offsets.len()];
    for rep in 0..replicas as u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(mix(&[seed, 0xF5E5, rep]));
        let h = bernoulli_profile(-half, half, 0.5, &mut rng)?;
        for (k, &o) in offsets.iter().enumerate() {
            fresh[k].push((h.at(o) - h.at(0)) as f64);
        }
        let h = bernoulli_profile(-half, half, 0.5, &mut rng)?;
        let ens = CoupledEnsemble::new(vec![h], ClockField::tasep(mix(&[seed, 0xE70, rep]), t))?
            .without_log();
        let mut eng = BasicEngine::new(ens, JumpDistribution::tasep())?;
        eng.evolve(t)?;
        let h = &eng.ensemble().copies()[0];
        for (k, &o) in offsets.iter().enumerate() {
            evolved[k].push((h.at(o) - h.at(0)) as f64);
        }
    }
    let tests = fresh
        .iter()
        .zip(&evolved)
        .map(|(a, b)| ks_two_sample(a, b))
        .collect::<Result<Vec<_>>>()?;
    let pass = tests.iter().all(|t| !t.reject);
    Ok(StationarityReport {
        offsets: offsets.to_vec(),
        tests,
        pass,
    })
}
