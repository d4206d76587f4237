//! Coalescing random walk web and the jump-count distance on it.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clock::{mix, replica_seed};
use crate::error::{Error, Result};

/// Seeded `+-1` field on the even lattice `{(i, n): i + n even}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RademacherField {
    pub seed: u64,
    /// `(i_min, i_max, n_min, n_max)`; `None` means unbounded.
    pub bounds: Option<(i64, i64, i64, i64)>,
}

impl RademacherField {
    pub fn new(seed: u64, bounds: (i64, i64, i64, i64)) -> Self {
        Self {
            seed,
            bounds: Some(bounds),
        }
    }

    pub fn unbounded(seed: u64) -> Self {
        Self { seed, bounds: None }
    }

    pub fn zeta(&self, i: i64, n: i64) -> i64 {
        if mix(&[self.seed, i as u64, n as u64]) & 1 == 1 {
            1
        } else {
            -1
        }
    }

    pub fn in_box(&self, i: i64, n: i64) -> bool {
        match self.bounds {
            None => true,
            Some((i0, i1, n0, n1)) => i >= i0 && i <= i1 && n >= n0 && n <= n1,
        }
    }
}

/// Field given by an explicit function, for hand-built examples.
pub trait Zeta {
    fn zeta(&self, i: i64, n: i64) -> i64;
    fn in_box(&self, _i: i64, _n: i64) -> bool {
        true
    }
}

impl Zeta for RademacherField {
    fn zeta(&self, i: i64, n: i64) -> i64 {
        RademacherField::zeta(self, i, n)
    }

    fn in_box(&self, i: i64, n: i64) -> bool {
        RademacherField::in_box(self, i, n)
    }
}

impl<F: Fn(i64, i64) -> i64> Zeta for F {
    fn zeta(&self, i: i64, n: i64) -> i64 {
        self(i, n)
    }
}

fn check_lattice(i: i64, n: i64) -> Result<()> {
    if (i + n).rem_euclid(2) != 0 {
        return Err(Error::OffLattice(i, n));
    }
    Ok(())
}

/// Positions `Y(n), ..., Y(n + steps)` of the walk from `(i, n)`.
pub fn walk_from(field: &impl Zeta, (i, n): (i64, i64), steps: usize) -> Result<Vec<i64>> {
    check_lattice(i, n)?;
    let mut out = Vec::with_capacity(steps + 1);
    let mut y = i;
    out.push(y);
    for k in 0..steps as i64 {
        if !field.in_box(y, n + k) {
            return Err(Error::LeavesBox(y, n + k));
        }
        y += field.zeta(y, n + k);
        out.push(y);
    }
    if !field.in_box(y, n + steps as i64) {
        return Err(Error::LeavesBox(y, n + steps as i64));
    }
    Ok(out)
}

/// A jump count or infinity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum WebDist {
    Finite(u64),
    Infinite,
}

impl WebDist {
    pub fn finite(self) -> Option<u64> {
        match self {
            WebDist::Finite(k) => Some(k),
            WebDist::Infinite => None,
        }
    }
}

impl std::fmt::Display for WebDist {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            WebDist::Finite(k) => write!(f, "{k}"),
            WebDist::Infinite => write!(f, "inf"),
        }
    }
}

const INF: u32 = u32::MAX;

/// Distances from `(i, n)` to every site of layer `m` within `[lo, hi]`.
/// Returns `(first position, costs)` with costs indexed in steps of 2.
pub fn drw_layer(
    field: &impl Zeta,
    (i, n): (i64, i64),
    m: i64,
    (lo, hi): (i64, i64),
) -> Result<(i64, Vec<WebDist>)> {
    check_lattice(i, n)?;
    if m < n {
        return Ok((lo, Vec::new()));
    }
    let span = m - n;
    // targets of the right parity inside the forward cone
    let mut t_lo = lo.max(i - span);
    let t_hi = hi.min(i + span);
    if (t_lo + m).rem_euclid(2) != 0 {
        t_lo += 1;
    }
    if t_lo > t_hi {
        return Ok((t_lo, Vec::new()));
    }
    let mut base = i;
    let mut cost = vec![0u32];
    for l in n..m {
        let rem = m - l - 1;
        // next layer restricted to the backward cone of the target range
        let nb_lo = (base - 1).max(t_lo - rem);
        let nb_hi = (base + 2 * (cost.len() as i64 - 1) + 1).min(t_hi + rem);
        let mut nb_lo = nb_lo;
        if (nb_lo + l + 1).rem_euclid(2) != 0 {
            nb_lo += 1;
        }
        if nb_lo > nb_hi {
            return Ok((
                t_lo,
                vec![WebDist::Infinite; ((t_hi - t_lo) / 2 + 1) as usize],
            ));
        }
        let mut next = vec![INF; ((nb_hi - nb_lo) / 2 + 1) as usize];
        for (k, &c) in cost.iter().enumerate() {
            if c == INF {
                continue;
            }
            let x = base + 2 * k as i64;
            if !field.in_box(x, l) {
                return Err(Error::LeavesBox(x, l));
            }
            let z = field.zeta(x, l);
            for (y, add) in [(x + z, 0), (x - z, 1)] {
                if y < nb_lo || y > nb_hi {
                    continue;
                }
                let slot = &mut next[((y - nb_lo) / 2) as usize];
                *slot = (*slot).min(c + add);
            }
        }
        base = nb_lo;
        cost = next;
    }
    let out = (0..=((t_hi - t_lo) / 2))
        .map(|k| {
            let y = t_lo + 2 * k;
            let idx = y - base;
            if idx < 0 || idx / 2 >= cost.len() as i64 {
                WebDist::Infinite
            } else {
                match cost[(idx / 2) as usize] {
                    INF => WebDist::Infinite,
                    c => WebDist::Finite(c as u64),
                }
            }
        })
        .collect();
    Ok((t_lo, out))
}

/// Minimum number of jumps from `(i, n)` to `(j, m)`; following the field
/// is free, stepping against it costs one.
pub fn drw(field: &impl Zeta, (i, n): (i64, i64), (j, m): (i64, i64)) -> Result<WebDist> {
    check_lattice(i, n)?;
    check_lattice(j, m)?;
    if m < n || (j - i).abs() > m - n {
        return Ok(WebDist::Infinite);
    }
    let (_, v) = drw_layer(field, (i, n), m, (j, j))?;
    Ok(v.first().copied().unwrap_or(WebDist::Infinite))
}

/// The literal definition: the smallest `k` such that some choice of `k`
/// jump layers along the successively followed walks reaches `(j, m)`.
pub fn drw_bruteforce(
    field: &impl Zeta,
    (i, n): (i64, i64),
    (j, m): (i64, i64),
) -> Result<WebDist> {
    check_lattice(i, n)?;
    check_lattice(j, m)?;
    if m - n > 10 || (j - i).abs() > 10 {
        return Err(Error::SizeCap(format!("({i}, {n}) -> ({j}, {m})")));
    }
    if m < n {
        return Ok(WebDist::Infinite);
    }
    let span = (m - n) as usize;
    for k in 0..=span {
        for mask in 0u32..(1 << span) {
            if mask.count_ones() as usize != k {
                continue;
            }
            let mut y = i;
            for s in 0..span {
                let l = n + s as i64;
                let z = field.zeta(y, l);
                // a jump at (y, l) resumes the walk from (y - z, l + 1)
                y += if mask >> s & 1 == 1 { -z } else { z };
            }
            if y == j {
                return Ok(WebDist::Finite(k as u64));
            }
        }
    }
    Ok(WebDist::Infinite)
}

/// Scaling constants of the rescaled web distance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WebConstants {
    pub eta: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

pub fn web_constants(eta: f64) -> Result<WebConstants> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::BadEta(eta));
    }
    let r = 1.0 - eta * eta;
    Ok(WebConstants {
        eta,
        a: r.powf(1.0 / 6.0) / (eta / 2.0).powf(2.0 / 3.0),
        b: (1.0 - r.sqrt()) / 2.0,
        c: eta.powf(1.0 / 3.0) * r.powf(1.0 / 6.0) / 2f64.powf(1.0 / 3.0),
        d: 2f64.powf(2.0 / 3.0) * eta.powf(1.0 / 3.0) * r.powf(2.0 / 3.0),
    })
}

/// Even-lattice point for a real position at a real layer: the layer is
/// floored, then the position is floored to the admissible parity.
pub fn lattice_point(pos: f64, layer: f64) -> (i64, i64) {
    let n = layer.floor() as i64;
    let mut i = pos.floor() as i64;
    if (i + n).rem_euclid(2) != 0 {
        i -= 1;
    }
    (i, n)
}

/// One argument quadruple `(x, s; y, t)` of the rescaled distance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaledPair {
    pub x: f64,
    pub s: f64,
    pub y: f64,
    pub t: f64,
}

/// `M(x, s; y, t) = -a n^{-1/3} (D - b n (t - s) - c n^{2/3} (y - x))` with
/// `D` taken from `(eta n t + d n^{2/3} y, -n t)` to `(eta n s + d n^{2/3} x, -n s)`.
pub fn rescale_m_eta(
    field: &impl Zeta,
    eta: f64,
    n: f64,
    points: &[ScaledPair],
) -> Result<Vec<f64>> {
    let k = web_constants(eta)?;
    let n13 = n.powf(1.0 / 3.0);
    let n23 = n13 * n13;
    points
        .iter()
        .map(|p| {
            let src = lattice_point(eta * n * p.t + k.d * n23 * p.y, -n * p.t);
            let dst = lattice_point(eta * n * p.s + k.d * n23 * p.x, -n * p.s);
            Ok(match drw(field, src, dst)? {
                WebDist::Infinite => f64::NEG_INFINITY,
                WebDist::Finite(dv) => {
                    -k.a / n13 * (dv as f64 - k.b * n * (p.t - p.s) - k.c * n23 * (p.y - p.x))
                }
            })
        })
        .collect()
}

/// `z -> M(z, s; y, t)` for every reachable D-target position whose `z`
/// lies in `[z_lo, z_hi]`, from one distance sweep.
#[allow(clippy::too_many_arguments)]
pub fn m_eta_row(
    field: &impl Zeta,
    eta: f64,
    n: f64,
    s: f64,
    y: f64,
    t: f64,
    (z_lo, z_hi): (f64, f64),
) -> Result<Vec<(f64, f64)>> {
    let k = web_constants(eta)?;
    let n13 = n.powf(1.0 / 3.0);
    let n23 = n13 * n13;
    let src = lattice_point(eta * n * t + k.d * n23 * y, -n * t);
    let layer = (-n * s).floor() as i64;
    let pos = |z: f64| eta * n * s + k.d * n23 * z;
    let range = (pos(z_lo).floor() as i64 - 1, pos(z_hi).ceil() as i64 + 1);
    let (first, costs) = drw_layer(field, src, layer, range)?;
    let mut out = Vec::new();
    for (idx, c) in costs.iter().enumerate() {
        let q = first + 2 * idx as i64;
        let z = (q as f64 - eta * n * s) / (k.d * n23);
        if let WebDist::Finite(dv) = c {
            out.push((
                z,
                -k.a / n13 * (*dv as f64 - k.b * n * (t - s) - k.c * n23 * (y - z)),
            ));
        }
    }
    Ok(out)
}

/// The soft wedge weight.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum SoftWedge {
    /// `f_n(x) = 2 n^{1/3} x` for `x <= 0`.
    F,
    /// `g_n(x) = c a n^{1/3} x` for `x <= 0`.
    G { eta: f64 },
}

impl SoftWedge {
    pub fn weight(&self, n: f64, x: f64) -> f64 {
        if x > 0.0 {
            return f64::NEG_INFINITY;
        }
        let slope = match *self {
            SoftWedge::F => 2.0,
            SoftWedge::G { eta } => {
                let k = web_constants(eta).expect("eta checked at construction");
                k.c * k.a
            }
        };
        slope * n.powf(1.0 / 3.0) * x
    }
}

/// `max_z kind(z - x) + sample(z)` over the sampled `z`.
pub fn soft_wedge_lift(samples: &[(f64, f64)], x: f64, n: f64, kind: SoftWedge) -> f64 {
    samples
        .iter()
        .filter(|(z, v)| *z <= x && v.is_finite())
        .map(|&(z, v)| kind.weight(n, z - x) + v)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Lifted value `max_{z <= x} g(z - x) + M(z, s; y, t)`.
pub fn lifted_m_eta(field: &impl Zeta, eta: f64, n: f64, p: ScaledPair, reach: f64) -> Result<f64> {
    let row = m_eta_row(field, eta, n, p.s, p.y, p.t, (p.x - reach, p.x))?;
    Ok(soft_wedge_lift(&row, p.x, n, SoftWedge::G { eta }))
}

/// Backward sweep: for every site `p` of layer `n` in `[lo, hi]`, the
/// minimum over targets `q` on layer `m > n` of `cost(q) + D(p; q)`.
/// Returns `(first position, values)` in steps of 2; unreachable is `+inf`.
pub fn drw_to_layer(
    field: &impl Zeta,
    n: i64,
    (lo, hi): (i64, i64),
    m: i64,
    targets: &[(i64, f64)],
) -> Result<(i64, Vec<f64>)> {
    if m <= n {
        return Err(Error::Config(format!("target layer {m} not after {n}")));
    }
    let mut p_lo = lo;
    if (p_lo + n).rem_euclid(2) != 0 {
        p_lo += 1;
    }
    // layer l holds positions first(l) + 2k covering the forward cone of [p_lo, hi]
    let first = |l: i64| p_lo - (l - n);
    let len = |l: i64| ((hi - p_lo).max(0) + 2 * (l - n)) / 2 + 1;
    let mut cost = vec![f64::INFINITY; len(m) as usize];
    for &(q, c) in targets {
        check_lattice(q, m)?;
        let idx = q - first(m);
        if idx >= 0 && idx / 2 < cost.len() as i64 {
            let slot = &mut cost[(idx / 2) as usize];
            *slot = slot.min(c);
        }
    }
    for l in (n..m).rev() {
        let (f0, f1) = (first(l), first(l + 1));
        let mut prev = vec![f64::INFINITY; len(l) as usize];
        for (k, slot) in prev.iter_mut().enumerate() {
            let x = f0 + 2 * k as i64;
            if !field.in_box(x, l) {
                return Err(Error::LeavesBox(x, l));
            }
            let z = field.zeta(x, l);
            let at = |y: i64| {
                cost.get(((y - f1) / 2) as usize)
                    .copied()
                    .unwrap_or(f64::INFINITY)
            };
            *slot = at(x + z).min(at(x - z) + 1.0);
        }
        cost = prev;
    }
    Ok((p_lo, cost))
}

/// Lifted triangle slack along the middle layer of `(0, 0) -> (0, 1)`:
/// for every lattice midpoint `p = (y, 1/2)` with `|y| <= reach`,
/// `lift(o; p) + lift(p; q) - lift(o; q)` with the `g` soft wedge.
pub fn lifted_slack_profile(
    field: &impl Zeta,
    eta: f64,
    n: f64,
    reach: f64,
) -> Result<Vec<(f64, f64)>> {
    let k = web_constants(eta)?;
    let n13 = n.powf(1.0 / 3.0);
    let n23 = n13 * n13;
    let kind = SoftWedge::G { eta };
    // lift(o; q) and lift(p; q) from forward rows out of q
    let oq_row = m_eta_row(field, eta, n, 0.0, 0.0, 1.0, (-2.0 * reach, 0.0))?;
    let oq = soft_wedge_lift(&oq_row, 0.0, n, kind);
    let pq_row = m_eta_row(field, eta, n, 0.5, 0.0, 1.0, (-3.0 * reach, reach))?;
    // lift(o; p) for all p at once: min over z of D(p; z) plus the z-dependent terms
    let top = (-0.5 * n).floor() as i64;
    let pos = |z: f64| eta * n * 0.5 + k.d * n23 * z;
    let (lo, hi) = (pos(-reach).floor() as i64 - 1, pos(reach).ceil() as i64 + 1);
    let mut targets = Vec::new();
    let (z_lo, z_hi) = ((k.d * n23 * -2.0 * reach).floor() as i64 - 1, 0);
    for q in z_lo..=z_hi {
        if q.rem_euclid(2) != 0 {
            continue;
        }
        let z = q as f64 / (k.d * n23);
        if z > 0.0 {
            continue;
        }
        // -a n^{-1/3} (D - c n^{2/3} (y - z)) + g(z) = -a n^{-1/3} (D + w(z) - c n^{2/3} y)
        let w = k.c * n23 * z - kind.weight(n, z) * n13 / k.a;
        targets.push((q, w));
    }
    let (first, vals) = drw_to_layer(field, top, (lo, hi), 0, &targets)?;
    let mut out = Vec::new();
    for (idx, v) in vals.iter().enumerate() {
        let x = first + 2 * idx as i64;
        let y = (x as f64 - eta * n * 0.5) / (k.d * n23);
        if y.abs() > reach || !v.is_finite() {
            continue;
        }
        let op = -k.a / n13 * (v - k.b * n * 0.5 - k.c * n23 * y);
        let pq = soft_wedge_lift(&pq_row, y, n, kind);
        if pq.is_finite() && oq.is_finite() {
            out.push((y, op + pq - oq));
        }
    }
    Ok(out)
}

/// `M(0, 0; 0, 1)` on the field seeded by `seed`.
pub fn m_eta_one_point(seed: u64, eta: f64, n: f64) -> Result<f64> {
    let f = RademacherField::unbounded(seed);
    let p = ScaledPair {
        x: 0.0,
        s: 0.0,
        y: 0.0,
        t: 1.0,
    };
    Ok(rescale_m_eta(&f, eta, n, &[p])?[0])
}

/// Lifted triangle violations beyond `delta` over all middle-layer chains.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlackRate {
    pub n: f64,
    pub replicas: usize,
    pub chains: usize,
    pub violations: usize,
    pub rate: f64,
    pub max_excess: f64,
}

pub fn slack_violation_rate(
    master: u64,
    eta: f64,
    n: f64,
    replicas: usize,
    delta: f64,
) -> Result<SlackRate> {
    let profiles = (0..replicas)
        .into_par_iter()
        .map(|r| {
            lifted_slack_profile(
                &RademacherField::unbounded(replica_seed(mix(&[master, 0x51AC]), r as u64)),
                eta,
                n,
                1.0,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let excess: Vec<f64> = profiles.into_iter().flatten().map(|p| p.1).collect();
    let violations = excess.iter().filter(|&&e| e > delta).count();
    Ok(SlackRate {
        n,
        replicas,
        chains: excess.len(),
        violations,
        rate: violations as f64 / excess.len().max(1) as f64,
        max_excess: excess.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layer_agrees_with_point_queries() {
        let f = RademacherField::unbounded(11);
        let (first, v) = drw_layer(&f, (0, 0), 12, (-20, 20)).unwrap();
        for (k, d) in v.iter().enumerate() {
            let j = first + 2 * k as i64;
            assert_eq!(*d, drw(&f, (0, 0), (j, 12)).unwrap());
        }
    }
}
