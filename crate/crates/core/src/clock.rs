//! Seeded Poisson event streams keyed by coupling classes.
//!
//! Every stream is cut into unit-time blocks. Block `j` of stream `key` is
//! drawn from its own ChaCha generator seeded by `mix(seed, hash(key), j)`, so
//! any prefix of any stream can be regenerated without touching other
//! streams, and the order in which streams are first read is irrelevant.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// The splitmix64 finaliser.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Order-sensitive fold of words through splitmix64.
pub fn mix(words: &[u64]) -> u64 {
    words.iter().fold(0x243F_6A88_85A3_08D3, |acc, &w| {
        splitmix64(acc ^ splitmix64(w))
    })
}

/// Derives an independent seed for replica `index` of a run.
pub fn replica_seed(master: u64, index: u64) -> u64 {
    mix(&[master, 0x5EED, index])
}

/// Class of `(particle label, hole label)` pairs modulo `Z (a, b)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ExoticIndex {
    pub a: i64,
    pub b: i64,
    /// Canonical representative `(l, k)`.
    pub rep: (i64, i64),
}

pub fn quotient_key(l: i64, k: i64, a: i64, b: i64) -> Result<ExoticIndex> {
    if a < 0 || b < 0 {
        return Err(Error::BadJumpDistribution(format!(
            "negative coupling ({a}, {b})"
        )));
    }
    if a == 0 && b == 0 {
        return Err(Error::ZeroCoupling);
    }
    let t = if a > 0 {
        l.div_euclid(a)
    } else {
        k.div_euclid(b)
    };
    Ok(ExoticIndex {
        a,
        b,
        rep: (l - t * a, k - t * b),
    })
}

/// Identifies one Poisson stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum StreamKey {
    /// Basic coupling: attempted jumps from site `x` by `v`.
    Site { x: i64, v: i64 },
    /// Exotic coupling: swaps of class `index` in direction `dir` (+1: particle
    /// left of hole, -1: hole left of particle).
    Exotic { index: ExoticIndex, dir: i8 },
    /// Auxiliary uniforms consumed by the `count`-th annihilation.
    Annihilation { count: u64 },
}

impl StreamKey {
    /// Stable 64-bit hash, independent of platform and std hashing.
    pub fn hash64(&self) -> u64 {
        match *self {
            StreamKey::Site { x, v } => mix(&[1, x as u64, v as u64]),
            StreamKey::Exotic { index, dir } => mix(&[
                2,
                index.a as u64,
                index.b as u64,
                index.rep.0 as u64,
                index.rep.1 as u64,
                dir as i64 as u64,
            ]),
            StreamKey::Annihilation { count } => mix(&[3, count]),
        }
    }
}

impl std::fmt::Display for StreamKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StreamKey::Site { x, v } => write!(f, "site:{x}:{v}"),
            StreamKey::Exotic { index, dir } => write!(
                f,
                "exotic:{}:{}:{}:{}:{dir}",
                index.a, index.b, index.rep.0, index.rep.1
            ),
            StreamKey::Annihilation { count } => write!(f, "anni:{count}"),
        }
    }
}

/// Which stream family drives the dynamics.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClockScheme {
    /// Per-site, per-jump streams (general AEP).
    Basic,
    /// Streams per class of label pairs modulo `(a, b)`.
    Exotic { a: i64, b: i64 },
}

/// Which height move the rate `p + 1` drives.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum RateOrientation {
    /// Local maxima flip down at rate `p(1)`, local minima flip up at `p(-1)`.
    #[default]
    Standard,
    /// The two rates exchanged.
    Literal,
}

/// Immutable description of all randomness of one realization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClockField {
    pub master_seed: u64,
    pub scheme: ClockScheme,
    /// Jump rates `p(v)`.
    pub rates: BTreeMap<i64, f64>,
    pub horizon: f64,
    pub orientation: RateOrientation,
}

impl ClockField {
    /// TASEP under the basic coupling.
    pub fn tasep(master_seed: u64, horizon: f64) -> Self {
        Self {
            master_seed,
            scheme: ClockScheme::Basic,
            rates: BTreeMap::from([(1, 1.0)]),
            horizon,
            orientation: RateOrientation::Standard,
        }
    }

    /// Nearest-neighbour ASEP with `p(1) = p + 1`, `p(-1) = p` under an
    /// exotic coupling.
    pub fn asep_exotic(master_seed: u64, a: i64, b: i64, p: f64, horizon: f64) -> Self {
        let mut rates = BTreeMap::from([(1, p + 1.0)]);
        if p > 0.0 {
            rates.insert(-1, p);
        }
        Self {
            master_seed,
            scheme: ClockScheme::Exotic { a, b },
            rates,
            horizon,
            orientation: RateOrientation::Standard,
        }
    }

    pub fn with_rates(mut self, rates: BTreeMap<i64, f64>) -> Self {
        self.rates = rates;
        self
    }

    pub fn with_seed(&self, master_seed: u64) -> Self {
        Self {
            master_seed,
            ..self.clone()
        }
    }

    pub fn rate(&self, v: i64) -> f64 {
        self.rates.get(&v).copied().unwrap_or(0.0)
    }

    /// Rate of the swap stream in direction `dir` after orientation.
    pub fn swap_rate(&self, dir: i8) -> f64 {
        let v = match self.orientation {
            RateOrientation::Standard => dir as i64,
            RateOrientation::Literal => -(dir as i64),
        };
        self.rate(v)
    }

    /// Events of block `j`, i.e. in `(j, j + 1]`, sorted.
    fn block(&self, key: &StreamKey, rate: f64, j: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(mix(&[self.master_seed, key.hash64(), j]));
        let n = Poisson::new(rate)
            .map(|d| d.sample(&mut rng) as usize)
            .unwrap_or(0);
        let mut ev: Vec<f64> = (0..n)
            .map(|_| j as f64 + 1.0 - rng.random::<f64>())
            .collect();
        ev.sort_by(f64::total_cmp);
        ev.dedup();
        ev
    }

    /// Cursor over the events of `key` strictly after `after`.
    pub fn cursor(&self, key: StreamKey, rate: f64, after: f64) -> Result<StreamCursor> {
        if rate < 0.0 || rate.is_nan() {
            return Err(Error::NegativeRate(rate));
        }
        let block = after.max(0.0).floor() as u64;
        let mut c = StreamCursor {
            key,
            rate,
            block,
            buf: Vec::new(),
            pos: 0,
        };
        c.buf = if rate > 0.0 {
            self.block(&key, rate, block)
        } else {
            Vec::new()
        };
        c.pos = c.buf.partition_point(|&t| t <= after);
        Ok(c)
    }

    /// Full stream on `(0, horizon]`.
    pub fn sample_stream(&self, key: StreamKey, rate: f64) -> Result<PoissonStream> {
        let mut cur = self.cursor(key, rate, 0.0)?;
        let mut events = Vec::new();
        while let Some(t) = cur.next_event(self) {
            if t > self.horizon {
                break;
            }
            events.push(t);
        }
        Ok(PoissonStream {
            rate,
            horizon: self.horizon,
            events,
        })
    }

    /// Uniform in `[0, 1)` from an auxiliary stream, indexed by `slot`.
    pub fn aux_uniform(&self, key: StreamKey, slot: u64) -> f64 {
        let mut rng =
            ChaCha8Rng::seed_from_u64(mix(&[self.master_seed, key.hash64(), u64::MAX - slot]));
        rng.random::<f64>()
    }
}

/// Lazily generated tail of one stream.
#[derive(Clone, Debug)]
pub struct StreamCursor {
    key: StreamKey,
    rate: f64,
    block: u64,
    buf: Vec<f64>,
    pos: usize,
}

impl StreamCursor {
    pub fn key(&self) -> StreamKey {
        self.key
    }

    /// Next event time, or `None` for a zero-rate stream.
    pub fn next_event(&mut self, field: &ClockField) -> Option<f64> {
        if self.rate <= 0.0 {
            return None;
        }
        while self.pos >= self.buf.len() {
            self.block += 1;
            self.buf = field.block(&self.key, self.rate, self.block);
            self.pos = 0;
        }
        let t = self.buf[self.pos];
        self.pos += 1;
        Some(t)
    }
}

/// A materialized stream on `(0, T]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoissonStream {
    pub rate: f64,
    pub horizon: f64,
    pub events: Vec<f64>,
}

/// Events of `stream` in `(s, t]`.
pub fn events_in(stream: &PoissonStream, s: f64, t: f64) -> Result<Vec<f64>> {
    if s > t {
        return Err(Error::BadInterval(s, t));
    }
    Ok(stream
        .events
        .iter()
        .copied()
        .filter(|&e| e > s && e <= t)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quotient_examples() {
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
        assert_ne!(
            quotient_key(4, 5, 2, 3).unwrap(),
            quotient_key(0, 0, 2, 3).unwrap()
        );
        assert_eq!(quotient_key(1, 1, 0, 0), Err(Error::ZeroCoupling));
    }

    #[test]
    fn cursor_matches_full_stream() {
        let f = ClockField::tasep(9, 20.0);
        let key = StreamKey::Site { x: 3, v: 1 };
        let full = f.sample_stream(key, 1.3).unwrap();
        let mut c = f.cursor(key, 1.3, 7.25).unwrap();
        let mut tail = Vec::new();
        while let Some(t) = c.next_event(&f) {
            if t > 20.0 {
                break;
            }
            tail.push(t);
        }
        assert_eq!(tail, events_in(&full, 7.25, 20.0).unwrap());
    }
}
