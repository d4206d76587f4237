//! Event-driven evolution of coupled height functions.
//!
//! Streams are materialized the first time one of their moves becomes
//! possible in some copy; from then on their events are merged through a
//! single time-ordered heap. Boundary heights never move.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, HashMap};

use ordered_float::OrderedFloat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::clock::{mix, quotient_key, ClockField, ClockScheme, StreamCursor, StreamKey};
use crate::error::{Error, Result};
use crate::lattice::{shift_map, HeightFunction};

/// Finite-range jump rates with unit mean drift.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpDistribution {
    rates: BTreeMap<i64, f64>,
    k: i64,
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

impl JumpDistribution {
    pub fn new(rates: BTreeMap<i64, f64>) -> Result<Self> {
        let rates: BTreeMap<i64, f64> = rates.into_iter().filter(|(_, p)| *p != 0.0).collect();
        if rates.is_empty() {
            return Err(Error::BadJumpDistribution("empty support".into()));
        }
        for (&v, &p) in &rates {
            if v == 0 {
                return Err(Error::BadJumpDistribution("zero jump".into()));
            }
            if !(p > 0.0 && p.is_finite()) {
                return Err(Error::NegativeRate(p));
            }
        }
        let drift: f64 = rates.iter().map(|(&v, &p)| v as f64 * p).sum();
        if (drift - 1.0).abs() > 1e-9 {
            return Err(Error::BadJumpDistribution(format!(
                "mean drift {drift} != 1"
            )));
        }
        if rates.keys().fold(0, |g, &v| gcd(g, v)) != 1 {
            return Err(Error::BadJumpDistribution(
                "support does not generate Z".into(),
            ));
        }
        let max_v = rates.keys().map(|v| v.abs()).max().unwrap_or(1);
        let max_p = rates.values().fold(0.0f64, |m, &p| m.max(p)).ceil() as i64;
        Ok(Self {
            k: max_v.max(max_p),
            rates,
        })
    }

    pub fn tasep() -> Self {
        Self::new(BTreeMap::from([(1, 1.0)])).expect("tasep rates are valid")
    }

    pub fn rates(&self) -> &BTreeMap<i64, f64> {
        &self.rates
    }

    pub fn rate(&self, v: i64) -> f64 {
        self.rates.get(&v).copied().unwrap_or(0.0)
    }

    /// Range bound `K`.
    pub fn range(&self) -> i64 {
        self.k
    }
}

/// Sites `[lo, hi]` unaffected by the window boundary; empty when `lo > hi`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertifiedRegion {
    pub lo: i64,
    pub hi: i64,
}

impl CertifiedRegion {
    pub fn is_empty(&self) -> bool {
        self.lo > self.hi
    }

    pub fn contains(&self, x: i64) -> bool {
        x >= self.lo && x <= self.hi
    }
}

pub fn certified_region(window_lo: i64, window_hi: i64, k: i64, t: f64) -> CertifiedRegion {
    let m = (4.0 * (k * k) as f64 * t.max(0.0) - 1e-9).ceil().max(0.0) as i64;
    CertifiedRegion {
        lo: window_lo + m,
        hi: window_hi - m,
    }
}

/// One particle displacement in one copy, on occupancy sites.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AppliedMove {
    pub time: f64,
    pub copy: usize,
    pub from: i64,
    pub to: i64,
}

/// Moves a particle in a height array: sites strictly between the endpoints
/// (and the far one) shift by `-2 sign(to - from)`.
fn move_particle(values: &mut [i64], lo: i64, from: i64, to: i64) {
    let (a, b, d) = if to > from {
        (from, to, -2)
    } else {
        (to, from, 2)
    };
    for z in (a + 1)..=b {
        values[(z - lo) as usize] += d;
    }
}

/// Height copies driven by one clock field.
#[derive(Clone, Debug)]
pub struct CoupledEnsemble {
    copies: Vec<HeightFunction>,
    initial: Vec<HeightFunction>,
    clock: ClockField,
    start: f64,
    time: f64,
    k: i64,
    log: Vec<AppliedMove>,
    logging: bool,
}

impl CoupledEnsemble {
    pub fn new(copies: Vec<HeightFunction>, clock: ClockField) -> Result<Self> {
        Self::starting_at(copies, clock, 0.0)
    }

    pub fn starting_at(copies: Vec<HeightFunction>, clock: ClockField, time: f64) -> Result<Self> {
        let first = copies.first().ok_or(Error::EmptyWindow)?;
        if copies
            .iter()
            .any(|c| c.window_lo() != first.window_lo() || c.len() != first.len())
        {
            return Err(Error::WindowMismatch);
        }
        Ok(Self {
            initial: copies.clone(),
            copies,
            clock,
            start: time,
            time,
            k: 1,
            log: Vec::new(),
            logging: true,
        })
    }

    /// Disables the event log (and with it [`check_monotone`]).
    pub fn without_log(mut self) -> Self {
        self.logging = false;
        self
    }

    pub fn copies(&self) -> &[HeightFunction] {
        &self.copies
    }

    pub fn initial(&self) -> &[HeightFunction] {
        &self.initial
    }

    pub fn into_copies(self) -> Vec<HeightFunction> {
        self.copies
    }

    pub fn clock(&self) -> &ClockField {
        &self.clock
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn start_time(&self) -> f64 {
        self.start
    }

    pub fn range(&self) -> i64 {
        self.k
    }

    pub fn log(&self) -> &[AppliedMove] {
        &self.log
    }

    pub fn window(&self) -> (i64, i64) {
        (self.copies[0].window_lo(), self.copies[0].window_hi())
    }

    pub fn certified(&self) -> CertifiedRegion {
        let (lo, hi) = self.window();
        certified_region(lo, hi, self.k, self.time - self.start)
    }

    /// Appends a move to the log without touching the state; used to
    /// exercise the audit on hand-made histories.
    pub fn inject_move(&mut self, m: AppliedMove) {
        self.log.push(m);
    }

    /// Puts independently evolved ensembles side by side, merging their logs
    /// by time. The result no longer describes a coupling.
    pub fn merge_independent(parts: Vec<CoupledEnsemble>) -> Result<CoupledEnsemble> {
        let mut it = parts.into_iter();
        let mut out = it.next().ok_or(Error::EmptyWindow)?;
        for p in it {
            if p.window() != out.window() {
                return Err(Error::WindowMismatch);
            }
            let off = out.copies.len();
            out.copies.extend(p.copies);
            out.initial.extend(p.initial);
            out.log.extend(p.log.into_iter().map(|m| AppliedMove {
                copy: m.copy + off,
                ..m
            }));
            out.k = out.k.max(p.k);
            out.time = out.time.max(p.time);
        }
        out.log.sort_by(|x, y| x.time.total_cmp(&y.time));
        Ok(out)
    }

    fn occupied(&self, c: usize, x: i64) -> bool {
        let h = self.copies[c].values();
        let i = (x - self.copies[c].window_lo()) as usize;
        h[i + 1] > h[i]
    }

    fn apply_move(&mut self, time: f64, copy: usize, from: i64, to: i64) {
        let lo = self.copies[copy].window_lo();
        move_particle(self.copies[copy].values_mut(), lo, from, to);
        if self.logging {
            self.log.push(AppliedMove {
                time,
                copy,
                from,
                to,
            });
        }
    }
}

/// Time-ordered merge of materialized streams.
#[derive(Debug, Default)]
pub(crate) struct Scheduler {
    heap: BinaryHeap<Reverse<(OrderedFloat<f64>, StreamKey)>>,
    cursors: HashMap<StreamKey, StreamCursor>,
}

impl Scheduler {
    pub(crate) fn touch(
        &mut self,
        clock: &ClockField,
        key: StreamKey,
        rate: f64,
        now: f64,
    ) -> Result<()> {
        if rate <= 0.0 || self.cursors.contains_key(&key) {
            return Ok(());
        }
        let mut c = clock.cursor(key, rate, now)?;
        if let Some(t) = c.next_event(clock) {
            self.heap.push(Reverse((OrderedFloat(t), key)));
        }
        self.cursors.insert(key, c);
        Ok(())
    }

    pub(crate) fn pop_until(&mut self, clock: &ClockField, until: f64) -> Option<(f64, StreamKey)> {
        let &Reverse((t, key)) = self.heap.peek()?;
        if t.0 > until {
            return None;
        }
        self.heap.pop();
        if let Some(next) = self.cursors.get_mut(&key).and_then(|c| c.next_event(clock)) {
            self.heap.push(Reverse((OrderedFloat(next), key)));
        }
        Some((t.0, key))
    }
}

fn check_until(ens: &CoupledEnsemble, until: f64) -> Result<()> {
    if until < ens.time {
        return Err(Error::Backwards {
            from: ens.time,
            to: until,
        });
    }
    if until > ens.clock.horizon {
        return Err(Error::BeyondHorizon {
            requested: until,
            horizon: ens.clock.horizon,
        });
    }
    Ok(())
}

/// General finite-range exclusion under the basic coupling.
#[derive(Debug)]
pub struct BasicEngine {
    ens: CoupledEnsemble,
    jumps: JumpDistribution,
    sched: Scheduler,
}

impl BasicEngine {
    pub fn new(mut ens: CoupledEnsemble, jumps: JumpDistribution) -> Result<Self> {
        if ens.clock.scheme != ClockScheme::Basic {
            return Err(Error::SchemeMismatch(
                "basic engine needs the per-site scheme".into(),
            ));
        }
        ens.k = ens.k.max(jumps.range());
        let mut eng = Self {
            ens,
            jumps,
            sched: Scheduler::default(),
        };
        let (lo, hi) = eng.ens.window();
        for x in lo..hi {
            eng.touch_around(x)?;
        }
        Ok(eng)
    }

    pub fn ensemble(&self) -> &CoupledEnsemble {
        &self.ens
    }

    pub fn into_ensemble(self) -> CoupledEnsemble {
        self.ens
    }

    fn enabled(&self, x: i64, v: i64) -> bool {
        let (lo, hi) = self.ens.window();
        let y = x + v;
        if x < lo || x >= hi || y < lo || y >= hi {
            return false;
        }
        (0..self.ens.copies.len()).any(|c| self.ens.occupied(c, x) && !self.ens.occupied(c, y))
    }

    /// Materializes every stream whose move involves occupancy site `s`.
    fn touch_around(&mut self, s: i64) -> Result<()> {
        let now = self.ens.time;
        let support: Vec<(i64, f64)> = self.jumps.rates.iter().map(|(&v, &p)| (v, p)).collect();
        for (v, p) in support {
            for x in [s, s - v] {
                if self.enabled(x, v) {
                    self.sched
                        .touch(&self.ens.clock, StreamKey::Site { x, v }, p, now)?;
                }
            }
        }
        Ok(())
    }

    /// Applies the attempted jump `(x, v)` at `time` in every copy.
    pub fn apply_event(&mut self, time: f64, x: i64, v: i64) -> Result<()> {
        self.ens.time = time;
        let (lo, hi) = self.ens.window();
        let y = x + v;
        if v == 0 || x < lo || x >= hi || y < lo || y >= hi {
            return Ok(());
        }
        let mut moved = false;
        for c in 0..self.ens.copies.len() {
            if self.ens.occupied(c, x) && !self.ens.occupied(c, y) {
                self.ens.apply_move(time, c, x, y);
                moved = true;
            }
        }
        if moved {
            self.touch_around(x)?;
            self.touch_around(y)?;
        }
        Ok(())
    }

    pub fn evolve(&mut self, until: f64) -> Result<()> {
        check_until(&self.ens, until)?;
        while let Some((t, key)) = self.sched.pop_until(&self.ens.clock, until) {
            if let StreamKey::Site { x, v } = key {
                self.apply_event(t, x, v)?;
            }
        }
        self.ens.time = until;
        Ok(())
    }
}

/// Nearest-neighbour exclusion under an `(a, b)`-exotic coupling.
#[derive(Debug)]
pub struct ExoticEngine {
    ens: CoupledEnsemble,
    a: i64,
    b: i64,
    sched: Scheduler,
}

/// `(particle label, hole label)` of the adjacent pair with left site `x`.
pub fn pair_labels(h: &HeightFunction, x: i64) -> (i64, i64) {
    let hx = h.at(x);
    (-(hx + x).div_euclid(2), (x - hx).div_euclid(2))
}

/// Swap direction available at the pair with left site `x`: `+1` for a local
/// maximum at `x + 1`, `-1` for a local minimum.
fn pair_dir(h: &[i64], i: usize) -> Option<i8> {
    let (l, m, r) = (h[i], h[i + 1], h[i + 2]);
    if m > l && m > r {
        Some(1)
    } else if m < l && m < r {
        Some(-1)
    } else {
        None
    }
}

impl ExoticEngine {
    pub fn new(mut ens: CoupledEnsemble) -> Result<Self> {
        let (a, b) = match ens.clock.scheme {
            ClockScheme::Exotic { a, b } => (a, b),
            ClockScheme::Basic => {
                return Err(Error::SchemeMismatch(
                    "exotic engine needs an exotic scheme".into(),
                ))
            }
        };
        if a == 0 && b == 0 {
            return Err(Error::ZeroCoupling);
        }
        for &v in ens.clock.rates.keys() {
            if v != 1 && v != -1 {
                return Err(Error::NotNearestNeighbour(v));
            }
        }
        if let Some(c) = ens.copies.iter().find(|c| !c.anchored()) {
            return Err(Error::Parity {
                site: c.window_lo(),
                value: c.values()[0],
            });
        }
        let p_max = ens
            .clock
            .rates
            .values()
            .fold(0.0f64, |m, &p| m.max(p))
            .ceil() as i64;
        ens.k = ens.k.max(p_max.max(1));
        let mut eng = Self {
            ens,
            a,
            b,
            sched: Scheduler::default(),
        };
        let (lo, hi) = eng.ens.window();
        for x in lo..=hi - 2 {
            eng.touch_pair(x)?;
        }
        Ok(eng)
    }

    pub fn ensemble(&self) -> &CoupledEnsemble {
        &self.ens
    }

    pub fn into_ensemble(self) -> CoupledEnsemble {
        self.ens
    }

    fn touch_pair(&mut self, x: i64) -> Result<()> {
        let (lo, hi) = self.ens.window();
        if x < lo || x > hi - 2 {
            return Ok(());
        }
        let i = (x - lo) as usize;
        let now = self.ens.time;
        for c in 0..self.ens.copies.len() {
            let h = &self.ens.copies[c];
            if let Some(dir) = pair_dir(h.values(), i) {
                let (l, k) = pair_labels(h, x);
                let index = quotient_key(l, k, self.a, self.b)?;
                let rate = self.ens.clock.swap_rate(dir);
                self.sched
                    .touch(&self.ens.clock, StreamKey::Exotic { index, dir }, rate, now)?;
            }
        }
        Ok(())
    }

    /// Left sites of the members of `index` present, with orientation `dir`,
    /// in copy `c`.
    fn members(&self, c: usize, index: crate::clock::ExoticIndex, dir: i8) -> Vec<i64> {
        let h = &self.ens.copies[c];
        let (lo, hi) = self.ens.window();
        let (l0, k0) = index.rep;
        let (a, b) = (self.a, self.b);
        let x_of = |j: i64| (k0 - l0) + j * (b - a);
        let h_of = |j: i64| -(l0 + k0) - j * (a + b);
        let mut out = Vec::new();
        let check = |j: i64, out: &mut Vec<i64>| {
            let x = x_of(j);
            if x < lo || x > hi - 2 || h.at(x) != h_of(j) {
                return;
            }
            if pair_dir(h.values(), (x - lo) as usize) == Some(dir) {
                out.push(x);
            }
        };
        if a == b {
            let x = x_of(0);
            if x >= lo && x <= hi - 2 {
                let num = -(l0 + k0) - h.at(x);
                if num % (a + b) == 0 {
                    check(num / (a + b), &mut out);
                }
            }
        } else {
            let d = b - a;
            let (j1, j2) = (
                (lo - (k0 - l0)) as f64 / d as f64,
                (hi - 2 - (k0 - l0)) as f64 / d as f64,
            );
            let (jl, jh) = (j1.min(j2).ceil() as i64, j1.max(j2).floor() as i64);
            for j in jl..=jh {
                check(j, &mut out);
            }
        }
        out
    }

    /// Applies one event of stream `key` at `time` in every copy.
    pub fn apply_event(&mut self, time: f64, key: StreamKey) -> Result<()> {
        self.ens.time = time;
        let StreamKey::Exotic { index, dir } = key else {
            return Ok(());
        };
        let mut touched = Vec::new();
        for c in 0..self.ens.copies.len() {
            for x in self.members(c, index, dir) {
                let (from, to) = if dir > 0 { (x, x + 1) } else { (x + 1, x) };
                self.ens.apply_move(time, c, from, to);
                touched.push(x + 1);
            }
        }
        for z in touched {
            for x in z - 2..=z {
                self.touch_pair(x)?;
            }
        }
        Ok(())
    }

    pub fn evolve(&mut self, until: f64) -> Result<()> {
        check_until(&self.ens, until)?;
        while let Some((t, key)) = self.sched.pop_until(&self.ens.clock, until) {
            self.apply_event(t, key)?;
        }
        self.ens.time = until;
        Ok(())
    }
}

/// Evolves nearest-neighbour rates `rates` (keys `+-1`) under the
/// `(a, b)`-exotic coupling up to `until`.
pub fn evolve_asep_exotic(
    mut ensemble: CoupledEnsemble,
    (a, b): (i64, i64),
    rates: &BTreeMap<i64, f64>,
    until: f64,
) -> Result<CoupledEnsemble> {
    if let Some(&v) = rates.keys().find(|&&v| v != 1 && v != -1) {
        return Err(Error::NotNearestNeighbour(v));
    }
    ensemble.clock.scheme = ClockScheme::Exotic { a, b };
    ensemble.clock.rates = rates.clone();
    let mut eng = ExoticEngine::new(ensemble)?;
    eng.evolve(until)?;
    Ok(eng.into_ensemble())
}

pub fn evolve_aep_basic(
    ensemble: CoupledEnsemble,
    p: &JumpDistribution,
    until: f64,
) -> Result<CoupledEnsemble> {
    let mut eng = BasicEngine::new(ensemble, p.clone())?;
    eng.evolve(until)?;
    Ok(eng.into_ensemble())
}

/// First ordering violation found by [`check_monotone`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderViolation {
    pub time: f64,
    pub site: i64,
    /// Copy expected to stay below.
    pub lower: usize,
    pub upper: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotoneReport {
    pub ok: bool,
    pub events_checked: usize,
    pub violation: Option<OrderViolation>,
}

/// Replays the event log from the initial copies and checks that every pair
/// ordered at the start stays ordered inside the certified region.
pub fn check_monotone(ensemble: &CoupledEnsemble) -> MonotoneReport {
    monotone_replay(ensemble, true)
}

/// [`check_monotone`] over the whole window. The windowed dynamics is itself
/// a coupled exclusion process, so order must hold everywhere.
pub fn check_monotone_window(ensemble: &CoupledEnsemble) -> MonotoneReport {
    monotone_replay(ensemble, false)
}

fn monotone_replay(ensemble: &CoupledEnsemble, certified: bool) -> MonotoneReport {
    let mut state: Vec<HeightFunction> = ensemble.initial.clone();
    let n = state.len();
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && state[i].le(&state[j]) {
                pairs.push((i, j));
            }
        }
    }
    let (lo, hi) = ensemble.window();
    let log = &ensemble.log;
    let mut start = 0;
    // Moves sharing a time are one event; check after all of them.
    while start < log.len() {
        let time = log[start].time;
        let end = start + log[start..].iter().take_while(|m| m.time == time).count();
        for m in &log[start..end] {
            move_particle(state[m.copy].values_mut(), lo, m.from, m.to);
        }
        let region = if certified {
            certified_region(lo, hi, ensemble.k, time - ensemble.start)
        } else {
            CertifiedRegion { lo, hi }
        };
        for m in &log[start..end] {
            let (a, b) = (m.from.min(m.to) + 1, m.from.max(m.to));
            for &(i, j) in pairs.iter().filter(|(i, j)| *i == m.copy || *j == m.copy) {
                for z in a.max(region.lo)..=b.min(region.hi) {
                    if state[i].at(z) > state[j].at(z) {
                        return MonotoneReport {
                            ok: false,
                            events_checked: end,
                            violation: Some(OrderViolation {
                                time,
                                site: z,
                                lower: i,
                                upper: j,
                            }),
                        };
                    }
                }
            }
        }
        start = end;
    }
    MonotoneReport {
        ok: true,
        events_checked: ensemble.log.len(),
        violation: None,
    }
}

/// Bernoulli(`density`) occupations on `[lo, hi - 1]`, heights anchored so
/// that `h(0) = 0` (or `h(lo)` has the parity of `lo` if 0 is outside).
pub fn bernoulli_profile<R: Rng>(
    lo: i64,
    hi: i64,
    density: f64,
    rng: &mut R,
) -> Result<HeightFunction> {
    if hi <= lo {
        return Err(Error::EmptyWindow);
    }
    let mut values = Vec::with_capacity((hi - lo + 1) as usize);
    let mut h = 0i64;
    values.push(h);
    for _ in lo..hi {
        h += if rng.random::<f64>() < density { 1 } else { -1 };
        values.push(h);
    }
    let shift = if lo <= 0 && 0 <= hi {
        -values[(-lo) as usize]
    } else {
        lo.rem_euclid(2)
    };
    HeightFunction::new(lo, values.into_iter().map(|v| v + shift).collect())
}

/// Outcome of [`shift_equivariance_check`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftReport {
    pub ok: bool,
    pub compared_sites: usize,
    pub first_mismatch: Option<i64>,
}

/// Evolves a random profile and its `(m (a - b), m (a + b))` shift under
/// the same clock field and compares them in the certified region, on a
/// window leaving 32 certified sites either side of the origin.
pub fn shift_equivariance_check(
    (a, b): (i64, i64),
    m: i64,
    seed: u64,
    horizon: f64,
) -> Result<bool> {
    let p = 0.5;
    let k = (p + 1.0_f64).ceil() as i64;
    let half = certified_region(0, 0, k, horizon).lo + 32;
    Ok(shift_equivariance_report((a, b), m, seed, horizon, p, half)?.ok)
}

/// [`shift_equivariance_check`] with ASEP parameter `p` (rates `p + 1`,
/// `p`) on the window `[-half, half]`.
pub fn shift_equivariance_report(
    (a, b): (i64, i64),
    m: i64,
    seed: u64,
    horizon: f64,
    p: f64,
    half: i64,
) -> Result<ShiftReport> {
    let (ds, dh) = (m * (a - b), m * (a + b));
    if dh.rem_euclid(2) != 0 {
        return Err(Error::InadmissibleShift(m));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(mix(&[seed, 0x5417]));
    let h = bernoulli_profile(-half, half, 0.5, &mut rng)?;
    let h2 = shift_map(&h, ds, dh)?;
    let clock = ClockField::asep_exotic(seed, a, b, p, horizon);
    let run = |h: HeightFunction| -> Result<HeightFunction> {
        let ens = CoupledEnsemble::new(vec![h], clock.clone())?.without_log();
        let mut eng = ExoticEngine::new(ens)?;
        eng.evolve(horizon)?;
        Ok(eng.into_ensemble().into_copies().remove(0))
    };
    let ht = run(h)?;
    let h2t = run(h2)?;
    let expected = shift_map(&ht, ds, dh)?;
    let k = (p + 1.0).ceil() as i64;
    let region = certified_region(h2t.window_lo(), h2t.window_hi(), k, horizon);
    let mut compared = 0;
    for x in region.lo..=region.hi {
        compared += 1;
        if h2t.at(x) != expected.at(x) {
            return Ok(ShiftReport {
                ok: false,
                compared_sites: compared,
                first_mismatch: Some(x),
            });
        }
    }
    Ok(ShiftReport {
        ok: compared > 0,
        compared_sites: compared,
        first_mismatch: None,
    })
}
