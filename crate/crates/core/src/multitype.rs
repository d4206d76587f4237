//! Multi-type exclusion encoding a basic-coupled pair, with labelled
//! discrepancies, randomized label removal at annihilations and takeover
//! accounting.

use std::collections::{BTreeMap, HashMap, HashSet};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::clock::{mix, ClockField, ClockScheme, StreamKey};
use crate::error::{Error, Result};
use crate::exclusion::{
    bernoulli_profile, certified_region, CertifiedRegion, JumpDistribution, Scheduler,
};
use crate::lattice::{particles_from_height, HeightFunction};
use crate::stats::{linear_fit, linear_fit_known_variance, LinearFit};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Species {
    Hole,
    Particle,
    /// Present in the upper copy only.
    Second,
    /// Present in the lower copy only.
    Third,
}

impl Species {
    pub fn code(self) -> u8 {
        match self {
            Species::Hole => 0,
            Species::Particle => 1,
            Species::Second => 2,
            Species::Third => 3,
        }
    }

    fn from_pair(minus: bool, plus: bool) -> Self {
        match (minus, plus) {
            (true, true) => Species::Particle,
            (false, false) => Species::Hole,
            (false, true) => Species::Second,
            (true, false) => Species::Third,
        }
    }

    /// Occupancy in the (lower, upper) copies.
    pub fn pair(self) -> (bool, bool) {
        match self {
            Species::Hole => (false, false),
            Species::Particle => (true, true),
            Species::Second => (false, true),
            Species::Third => (true, false),
        }
    }

    fn is_discrepancy(self) -> bool {
        matches!(self, Species::Second | Species::Third)
    }
}

/// Types on occupancy sites `lo..lo + types.len()` and labels by site.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiTypeConfig {
    pub lo: i64,
    pub types: Vec<Species>,
    pub labels2: BTreeMap<i64, f64>,
    pub labels3: BTreeMap<i64, f64>,
    /// Heights of the lower and upper copies at `lo`.
    pub anchors: (i64, i64),
}

impl MultiTypeConfig {
    pub fn hi(&self) -> i64 {
        self.lo + self.types.len() as i64
    }

    pub fn get(&self, x: i64) -> Option<Species> {
        if x < self.lo {
            return None;
        }
        self.types.get((x - self.lo) as usize).copied()
    }

    fn set(&mut self, x: i64, s: Species) {
        let i = (x - self.lo) as usize;
        self.types[i] = s;
    }

    fn labels(&self, s: Species) -> &BTreeMap<i64, f64> {
        if s == Species::Second {
            &self.labels2
        } else {
            &self.labels3
        }
    }

    fn labels_mut(&mut self, s: Species) -> &mut BTreeMap<i64, f64> {
        if s == Species::Second {
            &mut self.labels2
        } else {
            &mut self.labels3
        }
    }

    /// Label placement matches the types and labels increase left to right.
    pub fn check(&self) -> Result<()> {
        for s in [Species::Second, Species::Third] {
            let sites: Vec<i64> = (self.lo..self.hi())
                .filter(|&x| self.get(x) == Some(s))
                .collect();
            let labelled: Vec<i64> = self.labels(s).keys().copied().collect();
            if sites != labelled {
                return Err(Error::IllegalMove(format!(
                    "type-{} labels do not match particles",
                    s.code()
                )));
            }
            let v: Vec<f64> = self.labels(s).values().copied().collect();
            if v.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::IllegalMove(format!(
                    "type-{} labels out of order",
                    s.code()
                )));
            }
        }
        Ok(())
    }

    /// The (lower, upper) height functions.
    pub fn heights(&self) -> Result<(HeightFunction, HeightFunction)> {
        let mut lower = vec![self.anchors.0];
        let mut upper = vec![self.anchors.1];
        for s in &self.types {
            let (m, p) = s.pair();
            lower.push(lower.last().unwrap() + if m { 1 } else { -1 });
            upper.push(upper.last().unwrap() + if p { 1 } else { -1 });
        }
        Ok((
            HeightFunction::new(self.lo, lower)?,
            HeightFunction::new(self.lo, upper)?,
        ))
    }
}

/// Encodes `(h_minus, h_plus)` site by site; labels are the site indices.
pub fn encode_pair(h_minus: &HeightFunction, h_plus: &HeightFunction) -> Result<MultiTypeConfig> {
    if h_minus.window_lo() != h_plus.window_lo() || h_minus.window_hi() != h_plus.window_hi() {
        return Err(Error::WindowMismatch);
    }
    if !h_minus.anchored() || !h_plus.anchored() {
        return Err(Error::Parity {
            site: h_minus.window_lo(),
            value: h_minus.at(h_minus.window_lo()),
        });
    }
    let (em, ep) = (
        particles_from_height(h_minus),
        particles_from_height(h_plus),
    );
    let lo = h_minus.window_lo();
    let types: Vec<Species> = em
        .occupancy
        .iter()
        .zip(&ep.occupancy)
        .map(|(&m, &p)| Species::from_pair(m, p))
        .collect();
    let mut labels2 = BTreeMap::new();
    let mut labels3 = BTreeMap::new();
    for (i, s) in types.iter().enumerate() {
        let x = lo + i as i64;
        match s {
            Species::Second => {
                labels2.insert(x, x as f64);
            }
            Species::Third => {
                labels3.insert(x, x as f64);
            }
            _ => {}
        }
    }
    Ok(MultiTypeConfig {
        lo,
        types,
        labels2,
        labels3,
        anchors: (h_minus.at(lo), h_plus.at(lo)),
    })
}

/// An attempted move of whatever occupies `x` to `x + v`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttemptedMove {
    pub x: i64,
    pub v: i64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MoveKind {
    Jump,
    Swap,
    Annihilation,
}

/// What the attempted move does, or `None` if it is suppressed.
pub fn classify(cfg: &MultiTypeConfig, mv: AttemptedMove) -> Option<MoveKind> {
    let a = cfg.get(mv.x)?;
    let b = cfg.get(mv.x + mv.v)?;
    if mv.v == 0 {
        return None;
    }
    match (a, b) {
        (Species::Hole, _) => None,
        (_, Species::Hole) => Some(MoveKind::Jump),
        (Species::Particle, s) if s.is_discrepancy() => Some(MoveKind::Swap),
        (Species::Second, Species::Third) | (Species::Third, Species::Second) => {
            Some(MoveKind::Annihilation)
        }
        _ => None,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Removal {
    pub time: f64,
    pub label2: f64,
    pub label3: f64,
    /// Landing site of the annihilating jump.
    pub site: i64,
}

/// Takeover counters and removal records.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TakeoverLedger {
    counts2: HashMap<u64, u64>,
    counts3: HashMap<u64, u64>,
    removed2: HashSet<u64>,
    removed3: HashSet<u64>,
    /// Pairs `(type-2, type-3)` where the type-3 label has been on the left.
    crossed: HashSet<(u64, u64)>,
    pub removals: Vec<Removal>,
}

impl TakeoverLedger {
    /// Starts counting for every label of `cfg`.
    pub fn new(cfg: &MultiTypeConfig) -> Self {
        let mut l = Self::default();
        for (&x2, &a) in &cfg.labels2 {
            l.counts2.insert(a.to_bits(), 0);
            for (&x3, &b) in cfg.labels3.range(..x2) {
                debug_assert!(x3 < x2);
                l.crossed.insert((a.to_bits(), b.to_bits()));
            }
        }
        for &b in cfg.labels3.values() {
            l.counts3.insert(b.to_bits(), 0);
        }
        l
    }

    pub fn takeovers2(&self, label: f64) -> Option<u64> {
        self.counts2.get(&label.to_bits()).copied()
    }

    pub fn takeovers3(&self, label: f64) -> Option<u64> {
        self.counts3.get(&label.to_bits()).copied()
    }

    pub fn is_removed2(&self, label: f64) -> bool {
        self.removed2.contains(&label.to_bits())
    }

    pub fn is_removed3(&self, label: f64) -> bool {
        self.removed3.contains(&label.to_bits())
    }

    fn bump2(&mut self, a: u64) {
        if !self.removed2.contains(&a) {
            *self.counts2.entry(a).or_insert(0) += 1;
        }
    }

    fn bump3(&mut self, b: u64) {
        if !self.removed3.contains(&b) {
            *self.counts3.entry(b).or_insert(0) += 1;
        }
    }

    /// Records first crossings between the current positions.
    fn scan(&mut self, cfg: &MultiTypeConfig, moved2: &[f64], moved3: &[f64]) {
        let pos3: Vec<(i64, u64)> = cfg
            .labels3
            .iter()
            .map(|(&x, &b)| (x, b.to_bits()))
            .collect();
        let pos2: Vec<(i64, u64)> = cfg
            .labels2
            .iter()
            .map(|(&x, &a)| (x, a.to_bits()))
            .collect();
        let m2: HashSet<u64> = moved2.iter().map(|a| a.to_bits()).collect();
        let m3: HashSet<u64> = moved3.iter().map(|b| b.to_bits()).collect();
        for &(x2, a) in &pos2 {
            for &(x3, b) in &pos3 {
                if x3 < x2 && (m2.contains(&a) || m3.contains(&b)) && self.crossed.insert((a, b)) {
                    self.bump2(a);
                    self.bump3(b);
                }
            }
        }
    }
}

fn sorted_in(map: &BTreeMap<i64, f64>, lo: i64, hi: i64) -> Vec<(i64, f64)> {
    map.range(lo..=hi).map(|(&x, &l)| (x, l)).collect()
}

/// Reassigns the labels found in `[lo, hi]` to `sites` in increasing order
/// and returns the labels whose site changed.
fn reassign(
    map: &mut BTreeMap<i64, f64>,
    lo: i64,
    hi: i64,
    mut labels: Vec<f64>,
    mut sites: Vec<i64>,
) -> Vec<f64> {
    let before: HashMap<u64, i64> = map
        .range(lo..=hi)
        .map(|(&x, &l)| (l.to_bits(), x))
        .collect();
    let old: Vec<i64> = map.range(lo..=hi).map(|(&x, _)| x).collect();
    for x in old {
        map.remove(&x);
    }
    labels.sort_by(f64::total_cmp);
    sites.sort_unstable();
    let mut moved = Vec::new();
    for (x, l) in sites.into_iter().zip(labels) {
        if before.get(&l.to_bits()) != Some(&x) {
            moved.push(l);
        }
        map.insert(x, l);
    }
    moved
}

/// Applies `mv` at `time`. Annihilations draw the removed type-2 and type-3
/// labels through `choose(n2, n3) -> (i2, i3)`, indices into the labels of
/// `[x - k, x + k]` sorted left to right.
pub fn step_multitype(
    cfg: &mut MultiTypeConfig,
    ledger: &mut TakeoverLedger,
    mv: AttemptedMove,
    k: i64,
    time: f64,
    choose: impl FnOnce(usize, usize) -> (usize, usize),
) -> Result<MoveKind> {
    let kind = classify(cfg, mv).ok_or_else(|| {
        Error::IllegalMove(format!(
            "{:?} at {} onto {:?} at {}",
            cfg.get(mv.x),
            mv.x,
            cfg.get(mv.x + mv.v),
            mv.x + mv.v
        ))
    })?;
    let (x, y) = (mv.x, mv.x + mv.v);
    let (a, b) = (cfg.get(x).unwrap(), cfg.get(y).unwrap());
    let (lo, hi) = (x.min(y), x.max(y));
    match kind {
        MoveKind::Jump | MoveKind::Swap => {
            cfg.set(x, b);
            cfg.set(y, a);
            let mut moved2 = Vec::new();
            let mut moved3 = Vec::new();
            for s in [Species::Second, Species::Third] {
                let (from, to) = if a == s {
                    (x, y)
                } else if b == s {
                    (y, x)
                } else {
                    continue;
                };
                let entries = sorted_in(cfg.labels(s), lo, hi);
                let labels = entries.iter().map(|e| e.1).collect();
                let sites = entries
                    .iter()
                    .map(|e| if e.0 == from { to } else { e.0 })
                    .collect();
                let moved = reassign(cfg.labels_mut(s), lo, hi, labels, sites);
                if s == Species::Second {
                    moved2 = moved;
                } else {
                    moved3 = moved;
                }
            }
            ledger.scan(cfg, &moved2, &moved3);
        }
        MoveKind::Annihilation => {
            let (wlo, whi) = (x - k, x + k);
            let e2 = sorted_in(&cfg.labels2, wlo, whi);
            let e3 = sorted_in(&cfg.labels3, wlo, whi);
            let (i2, i3) = choose(e2.len(), e3.len());
            if i2 >= e2.len() || i3 >= e3.len() {
                return Err(Error::IllegalMove("removal index out of range".into()));
            }
            let (p2, l2) = e2[i2];
            let (p3, l3) = e3[i3];
            // Virtual crossings use positions before the move.
            let before2: Vec<(i64, f64)> = cfg.labels2.iter().map(|(&s, &l)| (s, l)).collect();
            let before3: Vec<(i64, f64)> = cfg.labels3.iter().map(|(&s, &l)| (s, l)).collect();
            for &(s, l) in &before2 {
                if l != l2
                    && p2 < s
                    && p3 > s
                    && !ledger.crossed.contains(&(l.to_bits(), l3.to_bits()))
                {
                    ledger.bump2(l.to_bits());
                }
            }
            for &(s, l) in &before3 {
                if l != l3
                    && p3 > s
                    && p2 < s
                    && !ledger.crossed.contains(&(l2.to_bits(), l.to_bits()))
                {
                    ledger.bump3(l.to_bits());
                }
            }
            ledger.removed2.insert(l2.to_bits());
            ledger.removed3.insert(l3.to_bits());
            ledger.removals.push(Removal {
                time,
                label2: l2,
                label3: l3,
                site: y,
            });
            cfg.set(x, Species::Hole);
            cfg.set(y, Species::Particle);
            let mut moved2 = Vec::new();
            let mut moved3 = Vec::new();
            for (s, entries, gone) in [(Species::Second, &e2, l2), (Species::Third, &e3, l3)] {
                let labels = entries.iter().map(|e| e.1).filter(|&l| l != gone).collect();
                let sites = entries
                    .iter()
                    .map(|e| e.0)
                    .filter(|&p| p != x && p != y)
                    .collect();
                let moved = reassign(cfg.labels_mut(s), wlo, whi, labels, sites);
                if s == Species::Second {
                    moved2 = moved;
                } else {
                    moved3 = moved;
                }
            }
            ledger.scan(cfg, &moved2, &moved3);
        }
    }
    Ok(kind)
}

/// Continuous-time multi-type dynamics driven by per-site clocks, with the
/// annihilation choices drawn from auxiliary streams.
#[derive(Debug)]
pub struct MultiTypeEngine {
    cfg: MultiTypeConfig,
    ledger: TakeoverLedger,
    clock: ClockField,
    jumps: JumpDistribution,
    time: f64,
    annihilations: u64,
    sched: Scheduler,
    check_each: bool,
}

impl MultiTypeEngine {
    pub fn new(cfg: MultiTypeConfig, clock: ClockField, jumps: JumpDistribution) -> Result<Self> {
        if clock.scheme != ClockScheme::Basic {
            return Err(Error::SchemeMismatch(
                "multi-type dynamics needs the per-site scheme".into(),
            ));
        }
        cfg.check()?;
        let ledger = TakeoverLedger::new(&cfg);
        let mut eng = Self {
            cfg,
            ledger,
            clock,
            jumps,
            time: 0.0,
            annihilations: 0,
            sched: Scheduler::default(),
            check_each: false,
        };
        for x in eng.cfg.lo..eng.cfg.hi() {
            eng.touch_around(x)?;
        }
        Ok(eng)
    }

    /// Re-validates the label order after every applied move.
    pub fn checking(mut self) -> Self {
        self.check_each = true;
        self
    }

    pub fn config(&self) -> &MultiTypeConfig {
        &self.cfg
    }

    pub fn ledger(&self) -> &TakeoverLedger {
        &self.ledger
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn annihilations(&self) -> u64 {
        self.annihilations
    }

    pub fn certified(&self) -> CertifiedRegion {
        certified_region(self.cfg.lo, self.cfg.hi(), self.jumps.range(), self.time)
    }

    fn touch_around(&mut self, s: i64) -> Result<()> {
        let support: Vec<(i64, f64)> = self.jumps.rates().iter().map(|(&v, &p)| (v, p)).collect();
        for (v, p) in support {
            for x in [s, s - v] {
                if classify(&self.cfg, AttemptedMove { x, v }).is_some() {
                    self.sched
                        .touch(&self.clock, StreamKey::Site { x, v }, p, self.time)?;
                }
            }
        }
        Ok(())
    }

    /// Applies the attempted move if it is enabled.
    pub fn apply_event(&mut self, time: f64, mv: AttemptedMove) -> Result<Option<MoveKind>> {
        self.time = time;
        if classify(&self.cfg, mv).is_none() {
            return Ok(None);
        }
        let key = StreamKey::Annihilation {
            count: self.annihilations,
        };
        let clock = &self.clock;
        let kind = step_multitype(
            &mut self.cfg,
            &mut self.ledger,
            mv,
            self.jumps.range(),
            time,
            |n2, n3| {
                let pick = |u: f64, n: usize| ((u * n as f64) as usize).min(n - 1);
                (
                    pick(clock.aux_uniform(key, 0), n2),
                    pick(clock.aux_uniform(key, 1), n3),
                )
            },
        )?;
        if kind == MoveKind::Annihilation {
            self.annihilations += 1;
        }
        if self.check_each {
            self.cfg.check()?;
        }
        self.touch_around(mv.x)?;
        self.touch_around(mv.x + mv.v)?;
        Ok(Some(kind))
    }

    pub fn evolve(&mut self, until: f64) -> Result<()> {
        if until < self.time {
            return Err(Error::Backwards {
                from: self.time,
                to: until,
            });
        }
        if until > self.clock.horizon {
            return Err(Error::BeyondHorizon {
                requested: until,
                horizon: self.clock.horizon,
            });
        }
        while let Some((t, key)) = self.sched.pop_until(&self.clock, until) {
            if let StreamKey::Site { x, v } = key {
                self.apply_event(t, AttemptedMove { x, v })?;
            }
        }
        self.time = until;
        Ok(())
    }
}

/// `max_{|x| <= w} h_minus(x) - h_plus(x)` at the engine's current time.
pub fn y_statistic(eng: &MultiTypeEngine, w: i64) -> Result<i64> {
    let region = eng.certified();
    if !region.contains(-w) || !region.contains(w) {
        return Err(Error::NotCertified { x: w, t: eng.time });
    }
    let (lower, upper) = eng.cfg.heights()?;
    Ok((-w..=w).map(|x| lower.at(x) - upper.at(x)).max().unwrap())
}

/// Geometry and seed of the takeover and discrepancy experiments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailConfig {
    pub replicas: usize,
    pub horizon: f64,
    /// Labels are tracked if they start in `[-box_half, box_half]`.
    pub box_half: i64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailCurve {
    /// Takeover count of each tracked label.
    pub counts: Vec<u64>,
    /// `(m, P[count >= m])` for `m = 0..=max`.
    pub survival: Vec<(u64, f64)>,
}

impl TailCurve {
    pub fn from_counts(counts: Vec<u64>) -> Self {
        let n = counts.len().max(1) as f64;
        let top = counts.iter().copied().max().unwrap_or(0);
        let survival = (0..=top)
            .map(|m| (m, counts.iter().filter(|&&c| c >= m).count() as f64 / n))
            .collect();
        Self { counts, survival }
    }

    pub fn is_nonincreasing(&self) -> bool {
        self.survival.windows(2).all(|w| w[1].1 <= w[0].1)
    }

    /// Fit of `log P[count >= m]` on `m >= from` (positive tail only), weighted
    /// by the binomial inverse variance of each log.
    pub fn log_linear_fit(&self, from: u64) -> Result<LinearFit> {
        let n = self.counts.len() as f64;
        let pts: Vec<(f64, f64, f64)> = self
            .survival
            .iter()
            .filter(|&&(m, p)| m >= from && p > 0.0)
            .map(|&(m, p)| (m as f64, p.ln(), n * p / (1.0 - p).max(1.0 / n)))
            .collect();
        let x: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let y: Vec<f64> = pts.iter().map(|p| p.1).collect();
        let w: Vec<f64> = pts.iter().map(|p| p.2).collect();
        linear_fit_known_variance(&x, &y, &w)
    }
}

fn window_half(cfg: &TailConfig, k: i64, extra: i64) -> i64 {
    let region = certified_region(0, 0, k, cfg.horizon);
    cfg.box_half + extra + region.lo + k
}

/// Takeover counts of labels starting in the box, for an independent
/// Bernoulli(1/2) pair.
pub fn takeover_tail(p: &JumpDistribution, cfg: &TailConfig) -> Result<TailCurve> {
    if p.rate(1) <= 0.5 {
        return Err(Error::BadJumpDistribution(
            "takeover bounds need p(1) > 1/2".into(),
        ));
    }
    let half = window_half(cfg, p.range(), 0);
    let mut counts = Vec::new();
    for rep in 0..cfg.replicas as u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(mix(&[cfg.seed, 0x7A11, rep]));
        let lower = bernoulli_profile(-half, half, 0.5, &mut rng)?;
        let upper = bernoulli_profile(-half, half, 0.5, &mut rng)?;
        let mt = encode_pair(&lower, &upper)?;
        let tracked2: Vec<f64> = mt
            .labels2
            .range(-cfg.box_half..=cfg.box_half)
            .map(|e| *e.1)
            .collect();
        let tracked3: Vec<f64> = mt
            .labels3
            .range(-cfg.box_half..=cfg.box_half)
            .map(|e| *e.1)
            .collect();
        let clock = ClockField::tasep(mix(&[cfg.seed, 0xC10C, rep]), cfg.horizon)
            .with_rates(p.rates().clone());
        let mut eng = MultiTypeEngine::new(mt, clock, p.clone())?;
        eng.evolve(cfg.horizon)?;
        counts.extend(
            tracked2
                .iter()
                .map(|&l| eng.ledger.takeovers2(l).unwrap_or(0)),
        );
        counts.extend(
            tracked3
                .iter()
                .map(|&l| eng.ledger.takeovers3(l).unwrap_or(0)),
        );
    }
    Ok(TailCurve::from_counts(counts))
}

/// Tail of `Y_{t,w}` started from an ordered pair `h_minus <= h_plus`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancyTail {
    pub w: i64,
    pub values: Vec<i64>,
    /// `(m, P[Y > m])` for `m = 0..=max`.
    pub survival: Vec<(i64, f64)>,
}

/// Exponential envelope `C exp(-c m)` with `c` fitted on the head and `C`
/// the smallest constant dominating the head. The fit uses add-half
/// smoothed counts so that empty head bins still carry a finite log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub c: f64,
    pub scale: f64,
    pub head_end: i64,
    /// Largest `P[Y > m] / (C exp(-c m))` beyond the head.
    pub worst_ratio: f64,
    pub dominates: bool,
}

impl DiscrepancyTail {
    pub fn envelope(&self, head_end: i64) -> Result<Envelope> {
        if self.values.is_empty() {
            return Err(Error::EmptySample);
        }
        let n = self.values.len() as f64;
        let exceed = |m: i64| self.values.iter().filter(|&&y| y > m).count() as f64;
        let x: Vec<f64> = (0..=head_end).map(|m| m as f64).collect();
        let y: Vec<f64> = (0..=head_end)
            .map(|m| ((exceed(m) + 0.5) / (n + 1.0)).ln())
            .collect();
        let fit = linear_fit(&x, &y, &vec![1.0; x.len()])?;
        let c = -fit.slope;
        let scale = (0..=head_end)
            .map(|m| exceed(m) / n * (c * m as f64).exp())
            .fold(0.0, f64::max);
        let worst_ratio = self
            .survival
            .iter()
            .filter(|&&(m, _)| m > head_end)
            .map(|&(m, p)| p / (scale * (-c * m as f64).exp()))
            .fold(0.0, f64::max);
        Ok(Envelope {
            c,
            scale,
            head_end,
            worst_ratio,
            dominates: c > 0.0 && worst_ratio <= 1.0,
        })
    }
}

/// `Y_{t,w}` over replicas; the upper copy is the maximum of the lower one
/// and an independent Bernoulli(1/2) profile.
pub fn y_tail(p: &JumpDistribution, cfg: &TailConfig, w: i64) -> Result<DiscrepancyTail> {
    let half = window_half(cfg, p.range(), w);
    let mut values = Vec::with_capacity(cfg.replicas);
    for rep in 0..cfg.replicas as u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(mix(&[cfg.seed, 0x7A12, rep]));
        let lower = bernoulli_profile(-half, half, 0.5, &mut rng)?;
        let other = bernoulli_profile(-half, half, 0.5, &mut rng)?;
        let upper = lower.max_with(&other)?;
        let mt = encode_pair(&lower, &upper)?;
        let clock = ClockField::tasep(mix(&[cfg.seed, 0xC10D, rep]), cfg.horizon)
            .with_rates(p.rates().clone());
        let mut eng = MultiTypeEngine::new(mt, clock, p.clone())?;
        eng.evolve(cfg.horizon)?;
        values.push(y_statistic(&eng, w)?);
    }
    let n = values.len().max(1) as f64;
    let top = values.iter().copied().max().unwrap_or(0).max(0);
    let survival = (0..=top)
        .map(|m| (m, values.iter().filter(|&&y| y > m).count() as f64 / n))
        .collect();
    Ok(DiscrepancyTail {
        w,
        values,
        survival,
    })
}
