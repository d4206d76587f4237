//! The TASEP directed metric: wedge evolution, path dynamic programming,
//! the variational formula, triangle audits and KPZ rescaling.
//!
//! Rings at height site `z` are the events of the stream `Site { x: z - 1,
//! v: 1 }`: the particle at `z - 1` attempting to jump to `z`. A ring turns a
//! local maximum at `z` into a local minimum.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::clock::{ClockField, ClockScheme, StreamKey};
use crate::error::{Error, Result};
use crate::exclusion::{certified_region, BasicEngine, CoupledEnsemble, JumpDistribution};
use crate::lattice::{diamond, narrow_wedge, scaled_to_site, HeightFunction, MaxPlusMatrix};

/// An integer or minus infinity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Dist {
    NegInf,
    Finite(i64),
}

impl Dist {
    pub fn finite(self) -> Option<i64> {
        match self {
            Dist::Finite(v) => Some(v),
            Dist::NegInf => None,
        }
    }

    pub fn plus(self, other: Dist) -> Dist {
        match (self, other) {
            (Dist::Finite(a), Dist::Finite(b)) => Dist::Finite(a + b),
            _ => Dist::NegInf,
        }
    }

    pub fn to_f64(self) -> f64 {
        match self {
            Dist::Finite(v) => v as f64,
            Dist::NegInf => f64::NEG_INFINITY,
        }
    }
}

impl std::fmt::Display for Dist {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Dist::Finite(v) => write!(f, "{v}"),
            Dist::NegInf => write!(f, "-inf"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceTime {
    pub x: i64,
    pub t: f64,
}

impl SpaceTime {
    pub fn new(x: i64, t: f64) -> Self {
        Self { x, t }
    }

    fn key(&self) -> (i64, u64) {
        (self.x, self.t.to_bits())
    }
}

/// Values `d(source; target)` for all source/target pairs of one realization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricSampleGrid {
    pub window: (i64, i64),
    pub seed: u64,
    pub sources: Vec<SpaceTime>,
    pub targets: Vec<SpaceTime>,
    values: Vec<Dist>,
}

impl MetricSampleGrid {
    pub fn get(&self, i: usize, j: usize) -> Dist {
        self.values[i * self.targets.len() + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Dist) {
        let n = self.targets.len();
        self.values[i * n + j] = v;
    }

    /// Value between two points given by coordinates.
    pub fn lookup(&self, o: SpaceTime, p: SpaceTime) -> Option<Dist> {
        let i = self.sources.iter().position(|s| s.key() == o.key())?;
        let j = self.targets.iter().position(|s| s.key() == p.key())?;
        Some(self.get(i, j))
    }

    pub fn entries(&self) -> impl Iterator<Item = (SpaceTime, SpaceTime, Dist)> + '_ {
        self.sources.iter().enumerate().flat_map(move |(i, &o)| {
            self.targets
                .iter()
                .enumerate()
                .map(move |(j, &p)| (o, p, self.get(i, j)))
        })
    }
}

fn check_tasep(clock: &ClockField) -> Result<()> {
    if clock.scheme != ClockScheme::Basic {
        return Err(Error::SchemeMismatch(
            "the metric needs the basic coupling".into(),
        ));
    }
    if clock.rates.len() != 1 || clock.rate(1) != 1.0 {
        return Err(Error::SchemeMismatch("the metric needs TASEP rates".into()));
    }
    Ok(())
}

/// `d(x, s; y, t) = h_t(y; Delta_x, s)` with every source wedge driven by the
/// same clock, on the window `[lo, hi]`.
pub fn dpi_by_evolution(
    clock: &ClockField,
    sources: &[SpaceTime],
    targets: &[SpaceTime],
    (lo, hi): (i64, i64),
) -> Result<MetricSampleGrid> {
    check_tasep(clock)?;
    let mut grid = MetricSampleGrid {
        window: (lo, hi),
        seed: clock.master_seed,
        sources: sources.to_vec(),
        targets: targets.to_vec(),
        values: vec![Dist::NegInf; sources.len() * targets.len()],
    };
    for o in sources {
        if o.x < lo || o.x > hi {
            return Err(Error::NotCertified { x: o.x, t: o.t });
        }
    }
    let mut by_time: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    for (i, o) in sources.iter().enumerate() {
        by_time.entry(o.t.to_bits()).or_default().push(i);
    }
    let mut target_order: Vec<usize> = (0..targets.len()).collect();
    target_order.sort_by(|&a, &b| targets[a].t.total_cmp(&targets[b].t));
    for (sbits, idx) in by_time {
        let s = f64::from_bits(sbits);
        let copies = idx
            .iter()
            .map(|&i| narrow_wedge(sources[i].x, lo, hi))
            .collect::<Result<Vec<_>>>()?;
        let ens = CoupledEnsemble::starting_at(copies, clock.clone(), s)?.without_log();
        let mut eng = BasicEngine::new(ens, JumpDistribution::tasep())?;
        for &j in &target_order {
            let p = targets[j];
            if p.t < s {
                continue;
            }
            if !certified_region(lo, hi, 1, p.t - s).contains(p.x) {
                return Err(Error::NotCertified { x: p.x, t: p.t });
            }
            eng.evolve(p.t)?;
            for (c, &i) in idx.iter().enumerate() {
                grid.set(i, j, Dist::Finite(eng.ensemble().copies()[c].at(p.x)));
            }
        }
    }
    Ok(grid)
}

/// Ring events `(time, site)` at interior sites of `[lo, hi]` in `(s, t]`,
/// in the order the engine processes them.
pub fn ring_events(
    clock: &ClockField,
    (lo, hi): (i64, i64),
    s: f64,
    t: f64,
) -> Result<Vec<(f64, i64)>> {
    let mut ev = Vec::new();
    for z in lo + 1..hi {
        let mut c = clock.cursor(StreamKey::Site { x: z - 1, v: 1 }, 1.0, s)?;
        while let Some(r) = c.next_event(clock) {
            if r > t {
                break;
            }
            ev.push((r, z));
        }
    }
    ev.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    Ok(ev)
}

/// Piecewise-constant path: starts at `start.x`, takes value `pos` from
/// each jump time on, and must sit at `end.x` at time `end.t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticePath {
    pub start: SpaceTime,
    pub end: SpaceTime,
    /// `(time, new position)`, times strictly increasing in `(s, t]`.
    pub jumps: Vec<(f64, i64)>,
}

impl LatticePath {
    pub fn constant(x: i64, s: f64, t: f64) -> Self {
        Self {
            start: SpaceTime::new(x, s),
            end: SpaceTime::new(x, t),
            jumps: Vec::new(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.end.t < self.start.t {
            return Err(Error::BadPath("ends before it starts".into()));
        }
        let mut last_t = self.start.t;
        let mut last_x = self.start.x;
        for &(r, x) in &self.jumps {
            if r <= last_t || r > self.end.t {
                return Err(Error::BadPath(format!("jump time {r} out of order")));
            }
            if x == last_x {
                return Err(Error::BadPath(format!("empty jump at {r}")));
            }
            last_t = r;
            last_x = x;
        }
        if last_x != self.end.x {
            return Err(Error::BadPath("does not reach its endpoint".into()));
        }
        Ok(())
    }

    /// Total variation.
    pub fn variation(&self) -> i64 {
        let mut x = self.start.x;
        let mut v = 0;
        for &(_, y) in &self.jumps {
            v += (y - x).abs();
            x = y;
        }
        v
    }

    /// Number of rings met at the path's position at times it does not jump.
    pub fn rings_hit(&self, rings: &[(f64, i64)]) -> i64 {
        let mut hits = 0;
        for &(r, z) in rings {
            if r <= self.start.t || r > self.end.t {
                continue;
            }
            if self.jumps.iter().any(|&(j, _)| j == r) {
                continue;
            }
            let k = self.jumps.partition_point(|&(j, _)| j < r);
            let pos = if k == 0 {
                self.start.x
            } else {
                self.jumps[k - 1].1
            };
            if pos == z {
                hits += 1;
            }
        }
        hits
    }
}

/// Sign convention of the path length.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PathSign {
    /// `-V - 2 #rings`, the convention the metric uses.
    Negative,
    /// `V + 2 #rings`.
    Positive,
}

pub fn path_length_with(path: &LatticePath, rings: &[(f64, i64)], sign: PathSign) -> Result<i64> {
    path.validate()?;
    let cost = path.variation() + 2 * path.rings_hit(rings);
    Ok(match sign {
        PathSign::Negative => -cost,
        PathSign::Positive => cost,
    })
}

/// Path length against the rings of `clock` on the interior of `window`.
pub fn path_length(path: &LatticePath, clock: &ClockField, window: (i64, i64)) -> Result<i64> {
    let rings = ring_events(clock, window, path.start.t, path.end.t)?;
    path_length_with(path, &rings, PathSign::Negative)
}

/// `max_{y'} v(y') - |y - y'|` in two linear passes.
fn relocate(v: &mut [Dist]) {
    for i in 1..v.len() {
        let c = v[i - 1].plus(Dist::Finite(-1));
        if c > v[i] {
            v[i] = c;
        }
    }
    for i in (0..v.len().saturating_sub(1)).rev() {
        let c = v[i + 1].plus(Dist::Finite(-1));
        if c > v[i] {
            v[i] = c;
        }
    }
}

/// Best path lengths from `source` to every window site, reported at each
/// time in `times` (sorted), over an explicit ring list.
pub fn dp_from_rings(
    (lo, hi): (i64, i64),
    source: SpaceTime,
    rings: &[(f64, i64)],
    times: &[f64],
) -> Vec<Vec<Dist>> {
    let n = (hi - lo + 1) as usize;
    let mut v: Vec<Dist> = (lo..=hi)
        .map(|y| Dist::Finite(-(y - source.x).abs()))
        .collect();
    let mut e = 0;
    let mut sorted: Vec<(usize, f64)> = times.iter().copied().enumerate().collect();
    sorted.sort_by(|a, b| a.1.total_cmp(&b.1));
    let mut results = vec![Vec::new(); times.len()];
    for (slot, t) in sorted {
        if t < source.t {
            results[slot] = vec![Dist::NegInf; n];
            continue;
        }
        while e < rings.len() && rings[e].0 <= t {
            let (r, z) = rings[e];
            e += 1;
            if r <= source.t || z <= lo || z >= hi {
                continue;
            }
            let i = (z - lo) as usize;
            // staying on z pays 2; arriving exactly now pays the distance
            let mut best = v[i].plus(Dist::Finite(-2));
            for (j, &w) in v.iter().enumerate() {
                if j != i {
                    let c = w.plus(Dist::Finite(-(j as i64 - i as i64).abs()));
                    if c > best {
                        best = c;
                    }
                }
            }
            v[i] = best;
            relocate(&mut v);
        }
        results[slot] = v.clone();
    }
    results
}

/// Path dynamic program over the clock's rings. Returns one value per target.
pub fn dpi_by_dp(
    clock: &ClockField,
    source: SpaceTime,
    targets: &[SpaceTime],
    window: (i64, i64),
) -> Result<Vec<Dist>> {
    check_tasep(clock)?;
    let t_max = targets.iter().map(|p| p.t).fold(source.t, f64::max);
    let rings = ring_events(clock, window, source.t, t_max)?;
    let times: Vec<f64> = targets.iter().map(|p| p.t).collect();
    let table = dp_from_rings(window, source, &rings, &times);
    targets
        .iter()
        .zip(table)
        .map(|(p, row)| {
            if p.x < window.0 || p.x > window.1 {
                Err(Error::OutsideWindow(p.x))
            } else {
                Ok(row[(p.x - window.0) as usize])
            }
        })
        .collect()
}

/// Wedge evolution over an explicit ring list; `out[c][y - lo]` for each
/// source `c` at the final time.
pub fn evolve_wedges_on_rings(
    (lo, hi): (i64, i64),
    sources: &[i64],
    rings: &[(f64, i64)],
) -> Result<Vec<Vec<i64>>> {
    let copies = sources
        .iter()
        .map(|&x| narrow_wedge(x, lo, hi))
        .collect::<Result<Vec<_>>>()?;
    let horizon = rings.last().map_or(1.0, |r| r.0 + 1.0);
    let ens = CoupledEnsemble::new(copies, ClockField::tasep(0, horizon))?.without_log();
    let mut eng = BasicEngine::new(ens, JumpDistribution::tasep())?;
    for &(r, z) in rings {
        eng.apply_event(r, z - 1, 1)?;
    }
    Ok(eng
        .into_ensemble()
        .into_copies()
        .into_iter()
        .map(|h| h.values().to_vec())
        .collect())
}

/// Exhaustive maximum of the path length over event-skeleton paths: the
/// position at each ring time, with the path starting at `x` and ending at
/// `y`. `sign` selects the length convention under test.
pub fn dpi_bruteforce(
    (lo, hi): (i64, i64),
    x: i64,
    y: i64,
    rings: &[(f64, i64)],
    sign: PathSign,
) -> Result<i64> {
    let e = rings.len();
    let n = (hi - lo + 1) as usize;
    if e > 6 || n > 8 {
        return Err(Error::SizeCap(format!("{e} events on {n} sites")));
    }
    let mut best = i64::MIN;
    let mut pos = vec![0usize; e];
    loop {
        let mut var = 0;
        let mut hits = 0;
        let mut prev = x;
        for (i, &(_, z)) in rings.iter().enumerate() {
            let c = lo + pos[i] as i64;
            var += (c - prev).abs();
            // a path sitting at c since the last ring can only dodge this ring
            // by a detour of length 2, which costs what the ring does
            if c == z && c == prev {
                hits += 1;
            }
            prev = c;
        }
        var += (y - prev).abs();
        let len = match sign {
            PathSign::Negative => -(var + 2 * hits),
            PathSign::Positive => var + 2 * hits,
        };
        best = best.max(len);
        let mut k = 0;
        while k < e {
            pos[k] += 1;
            if pos[k] < n {
                break;
            }
            pos[k] = 0;
            k += 1;
        }
        if k == e {
            break;
        }
    }
    Ok(best)
}

/// Result of [`variational_check`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariationalReport {
    pub ok: bool,
    pub checked: usize,
    pub mismatch: Option<i64>,
}

/// Checks `h_t(y; h0, s) = max_x h0(x) + d(x, s; y, t)` on the certified
/// region of `h0`'s window.
pub fn variational_check(
    clock: &ClockField,
    h0: &HeightFunction,
    s: f64,
    t: f64,
) -> Result<VariationalReport> {
    check_tasep(clock)?;
    let (lo, hi) = (h0.window_lo(), h0.window_hi());
    let mut copies = vec![h0.clone()];
    for x in lo..=hi {
        copies.push(narrow_wedge(x, lo, hi)?);
    }
    let ens = CoupledEnsemble::starting_at(copies, clock.clone(), s)?.without_log();
    let mut eng = BasicEngine::new(ens, JumpDistribution::tasep())?;
    eng.evolve(t)?;
    let cs = eng.ensemble().copies();
    let region = certified_region(lo, hi, 1, t - s);
    let mut checked = 0;
    for y in region.lo..=region.hi {
        let rhs = (lo..=hi)
            .map(|x| h0.at(x) + cs[(x - lo + 1) as usize].at(y))
            .max()
            .expect("window is non-empty");
        checked += 1;
        if cs[0].at(y) != rhs {
            return Ok(VariationalReport {
                ok: false,
                checked,
                mismatch: Some(y),
            });
        }
    }
    Ok(VariationalReport {
        ok: true,
        checked,
        mismatch: None,
    })
}

/// `d(x, s; y, t)` for `x` in `rows`, `y` in `cols`, as a max-plus matrix.
pub fn metric_matrix(
    clock: &ClockField,
    window: (i64, i64),
    s: f64,
    t: f64,
    rows: &[i64],
    cols: &[i64],
) -> Result<MaxPlusMatrix> {
    let sources: Vec<SpaceTime> = rows.iter().map(|&x| SpaceTime::new(x, s)).collect();
    let targets: Vec<SpaceTime> = cols.iter().map(|&y| SpaceTime::new(y, t)).collect();
    let g = dpi_by_evolution_uncertified(clock, &sources, &targets, window)?;
    MaxPlusMatrix::from_fn(rows.to_vec(), cols.to_vec(), |x, y| {
        let i = rows.iter().position(|&r| r == x).expect("row");
        let j = cols.iter().position(|&c| c == y).expect("col");
        g.get(i, j).to_f64()
    })
}

/// Whether `d_{s,t} = d_{s,r} <> d_{r,t}` on `rows x cols`, with the middle
/// grid the whole window.
pub fn composition_check(
    clock: &ClockField,
    window: (i64, i64),
    (s, r, t): (f64, f64, f64),
    rows: &[i64],
    cols: &[i64],
) -> Result<bool> {
    let mid: Vec<i64> = (window.0..=window.1).collect();
    let direct = metric_matrix(clock, window, s, t, rows, cols)?;
    let left = metric_matrix(clock, window, s, r, rows, &mid)?;
    let right = metric_matrix(clock, window, r, t, &mid, cols)?;
    Ok(diamond(&left, &right)? == direct)
}

/// Like [`dpi_by_evolution`] but reads the windowed dynamics everywhere,
/// which is exact for statements about the windowed process itself.
pub fn dpi_by_evolution_uncertified(
    clock: &ClockField,
    sources: &[SpaceTime],
    targets: &[SpaceTime],
    (lo, hi): (i64, i64),
) -> Result<MetricSampleGrid> {
    let wide = (lo, hi);
    let mut grid = MetricSampleGrid {
        window: wide,
        seed: clock.master_seed,
        sources: sources.to_vec(),
        targets: targets.to_vec(),
        values: vec![Dist::NegInf; sources.len() * targets.len()],
    };
    for (i, o) in sources.iter().enumerate() {
        let ens =
            CoupledEnsemble::starting_at(vec![narrow_wedge(o.x, lo, hi)?], clock.clone(), o.t)?
                .without_log();
        let mut eng = BasicEngine::new(ens, JumpDistribution::tasep())?;
        let mut order: Vec<usize> = (0..targets.len())
            .filter(|&j| targets[j].t >= o.t)
            .collect();
        order.sort_by(|&a, &b| targets[a].t.total_cmp(&targets[b].t));
        for j in order {
            eng.evolve(targets[j].t)?;
            let v = eng.ensemble().copies()[0]
                .get(targets[j].x)
                .ok_or(Error::OutsideWindow(targets[j].x))?;
            grid.set(i, j, Dist::Finite(v));
        }
    }
    Ok(grid)
}

/// Outcome of [`triangle_audit`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TriangleReport {
    pub chains: usize,
    pub violations: usize,
    pub equalities: usize,
    /// Largest `d(o;p) + d(p;q) - d(o;q)` seen.
    pub worst_excess: Option<i64>,
}

/// Counts strict violations of `d(o;p) + d(p;q) <= d(o;q)` over all chains
/// with increasing times that the grid contains.
pub fn triangle_audit(grid: &MetricSampleGrid) -> TriangleReport {
    let src: HashMap<(i64, u64), usize> = grid
        .sources
        .iter()
        .enumerate()
        .map(|(i, p)| (p.key(), i))
        .collect();
    let tgt: HashMap<(i64, u64), usize> = grid
        .targets
        .iter()
        .enumerate()
        .map(|(i, p)| (p.key(), i))
        .collect();
    let mut rep = TriangleReport {
        chains: 0,
        violations: 0,
        equalities: 0,
        worst_excess: None,
    };
    for (io, o) in grid.sources.iter().enumerate() {
        for (jp, p) in grid.targets.iter().enumerate() {
            if p.t <= o.t {
                continue;
            }
            let Some(&ip) = src.get(&p.key()) else {
                continue;
            };
            for (jq, q) in grid.targets.iter().enumerate() {
                if q.t <= p.t || !tgt.contains_key(&q.key()) {
                    continue;
                }
                let (a, b, c) = (grid.get(io, jp), grid.get(ip, jq), grid.get(io, jq));
                rep.chains += 1;
                let lhs = a.plus(b);
                if lhs > c {
                    rep.violations += 1;
                }
                if lhs == c {
                    rep.equalities += 1;
                }
                if let (Some(l), Some(r)) = (lhs.finite(), c.finite()) {
                    let ex = l - r;
                    rep.worst_excess = Some(rep.worst_excess.map_or(ex, |w| w.max(ex)));
                }
            }
        }
    }
    rep
}

/// One entry of a rescaled metric grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaledSample {
    pub x: f64,
    pub s: f64,
    pub y: f64,
    pub t: f64,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaledMetricGrid {
    pub eps: f64,
    pub samples: Vec<ScaledSample>,
}

impl ScaledMetricGrid {
    /// Value at scaled coordinates, rounding positions by the lattice rule.
    pub fn value_at(&self, x: f64, s: f64, y: f64, t: f64) -> Option<f64> {
        let (xs, ys) = (scaled_to_site(x, self.eps), scaled_to_site(y, self.eps));
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * (1.0 + a.abs());
        self.samples
            .iter()
            .find(|p| {
                scaled_to_site(p.x, self.eps) == xs
                    && scaled_to_site(p.y, self.eps) == ys
                    && close(p.s, s)
                    && close(p.t, t)
            })
            .map(|p| p.value)
    }
}

/// `d^eps(x, s; y, t) = eps^{1/2} d(2x/eps, 2s/eps^{3/2}; ...) + (t - s)/eps`
/// expressed at the scaled coordinates of each lattice sample.
pub fn rescale_dpi(grid: &MetricSampleGrid, eps: f64) -> Result<ScaledMetricGrid> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::BadScale(eps));
    }
    let r = eps.sqrt();
    let time = |t: f64| eps.powf(1.5) * t / 2.0;
    let samples = grid
        .entries()
        .map(|(o, p, d)| {
            let (s, t) = (time(o.t), time(p.t));
            let value = match d {
                Dist::Finite(v) => r * v as f64 + (t - s) / eps,
                Dist::NegInf => f64::NEG_INFINITY,
            };
            ScaledSample {
                x: eps * o.x as f64 / 2.0,
                s,
                y: eps * p.x as f64 / 2.0,
                t,
                value,
            }
        })
        .collect();
    Ok(ScaledMetricGrid { eps, samples })
}

/// Lattice duration of a scaled time span.
pub fn lattice_time(scaled: f64, eps: f64) -> f64 {
    2.0 * eps.powf(-1.5) * scaled
}

/// Window half-width certifying a single site after lattice time `t`.
pub fn certified_half_width(t: f64, margin: i64) -> i64 {
    (4.0 * t).ceil() as i64 + margin
}

/// `d^eps(0, 0; 0, 1)` for one clock realization.
pub fn one_point_sample(seed: u64, eps: f64) -> Result<f64> {
    let t = lattice_time(1.0, eps);
    let half = certified_half_width(t, 2);
    let clock = ClockField::tasep(seed, t);
    let ens = CoupledEnsemble::new(vec![narrow_wedge(0, -half, half)?], clock)?.without_log();
    let mut eng = BasicEngine::new(ens, JumpDistribution::tasep())?;
    eng.evolve(t)?;
    let d = eng.ensemble().copies()[0].at(0);
    Ok(eps.sqrt() * d as f64 + 1.0 / eps)
}

/// Largest `|d^eps + (x - y)^2 / (t - s)| / ((t - s)^{1/3} log(2 + |x| + |y|))`
/// over finite samples with `t > s`.
pub fn parabolic_ratio(grid: &ScaledMetricGrid) -> f64 {
    grid.samples
        .iter()
        .filter(|p| p.t > p.s && p.value.is_finite())
        .map(|p| {
            let dt = p.t - p.s;
            let dev = (p.value + (p.x - p.y).powi(2) / dt).abs();
            dev / (dt.powf(1.0 / 3.0) * (2.0 + p.x.abs() + p.y.abs()).ln())
        })
        .fold(0.0, f64::max)
}
