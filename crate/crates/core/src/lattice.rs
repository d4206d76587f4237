//! Height functions, scaled walks, grid functions and max-plus composition.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How a height function is read outside its window.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum BoundaryPolicy {
    /// Continue the boundary increment outward.
    #[default]
    WedgeExtension,
    /// Fall away with slope -1 on both sides, whatever the boundary increment.
    FrozenSlope,
}

/// Integer profile with +-1 increments on `[window_lo, window_hi]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeightFunction {
    lo: i64,
    values: Vec<i64>,
    policy: BoundaryPolicy,
}

impl HeightFunction {
    /// Builds a profile and checks the +-1 increments. Parity is not
    /// enforced here; see [`HeightFunction::anchored`].
    pub fn new(window_lo: i64, values: Vec<i64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyWindow);
        }
        for (i, w) in values.windows(2).enumerate() {
            if (w[1] - w[0]).abs() != 1 {
                let x = window_lo + i as i64;
                return Err(Error::BadIncrement(x, x + 1));
            }
        }
        Ok(Self {
            lo: window_lo,
            values,
            policy: BoundaryPolicy::default(),
        })
    }

    /// Like [`HeightFunction::new`] but also requires `h(x) + x` even,
    /// i.e. `h(0)` even.
    pub fn new_anchored(window_lo: i64, values: Vec<i64>) -> Result<Self> {
        let h = Self::new(window_lo, values)?;
        if !h.anchored() {
            return Err(Error::Parity {
                site: window_lo,
                value: h.values[0],
            });
        }
        Ok(h)
    }

    pub fn from_fn(window_lo: i64, window_hi: i64, f: impl Fn(i64) -> i64) -> Result<Self> {
        if window_hi < window_lo {
            return Err(Error::EmptyWindow);
        }
        Self::new(window_lo, (window_lo..=window_hi).map(f).collect())
    }

    pub fn with_policy(mut self, policy: BoundaryPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn policy(&self) -> BoundaryPolicy {
        self.policy
    }

    pub fn window_lo(&self) -> i64 {
        self.lo
    }

    pub fn window_hi(&self) -> i64 {
        self.lo + self.values.len() as i64 - 1
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[i64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [i64] {
        &mut self.values
    }

    /// True when `h(x) + x` is even, which is the same as `h(0)` even.
    pub fn anchored(&self) -> bool {
        (self.values[0] + self.lo).rem_euclid(2) == 0
    }

    pub fn contains(&self, x: i64) -> bool {
        x >= self.lo && x <= self.window_hi()
    }

    pub fn get(&self, x: i64) -> Option<i64> {
        if self.contains(x) {
            Some(self.values[(x - self.lo) as usize])
        } else {
            None
        }
    }

    /// Value at `x`, panicking outside the window.
    pub fn at(&self, x: i64) -> i64 {
        self.get(x)
            .unwrap_or_else(|| panic!("site {x} outside [{}, {}]", self.lo, self.window_hi()))
    }

    /// Value at any site, using the boundary policy outside the window.
    pub fn value(&self, x: i64) -> i64 {
        let hi = self.window_hi();
        if let Some(v) = self.get(x) {
            return v;
        }
        let n = self.values.len();
        match self.policy {
            BoundaryPolicy::WedgeExtension => {
                if x > hi {
                    let slope = if n > 1 {
                        self.values[n - 1] - self.values[n - 2]
                    } else {
                        -1
                    };
                    self.values[n - 1] + slope * (x - hi)
                } else {
                    let slope = if n > 1 {
                        self.values[1] - self.values[0]
                    } else {
                        1
                    };
                    self.values[0] - slope * (self.lo - x)
                }
            }
            BoundaryPolicy::FrozenSlope => {
                if x > hi {
                    self.values[n - 1] - (x - hi)
                } else {
                    self.values[0] - (self.lo - x)
                }
            }
        }
    }

    /// Pointwise `self <= other` on the common window.
    pub fn le(&self, other: &HeightFunction) -> bool {
        let lo = self.lo.max(other.lo);
        let hi = self.window_hi().min(other.window_hi());
        (lo..=hi).all(|x| self.at(x) <= other.at(x))
    }

    /// Pointwise maximum; both inputs must share window and parity class.
    pub fn max_with(&self, other: &HeightFunction) -> Result<HeightFunction> {
        if self.lo != other.lo || self.len() != other.len() {
            return Err(Error::WindowMismatch);
        }
        if self.anchored() != other.anchored() {
            return Err(Error::Parity {
                site: other.lo,
                value: other.values[0],
            });
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| *a.max(b))
            .collect();
        Ok(HeightFunction::new(self.lo, values)?.with_policy(self.policy))
    }

    /// Writes `index,value` rows.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["index", "value"])?;
        for (i, v) in self.values.iter().enumerate() {
            wr.write_record([(self.lo + i as i64).to_string(), v.to_string()])?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Occupation variables on `[window_lo, window_lo + len - 1]` plus the height
/// at `window_lo`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParticleConfig {
    pub window_lo: i64,
    pub occupancy: Vec<bool>,
    pub anchor_height: i64,
}

pub fn height_from_particles(cfg: &ParticleConfig) -> HeightFunction {
    let mut values = Vec::with_capacity(cfg.occupancy.len() + 1);
    let mut h = cfg.anchor_height;
    values.push(h);
    for &occ in &cfg.occupancy {
        h += if occ { 1 } else { -1 };
        values.push(h);
    }
    HeightFunction {
        lo: cfg.window_lo,
        values,
        policy: BoundaryPolicy::default(),
    }
}

pub fn particles_from_height(h: &HeightFunction) -> ParticleConfig {
    ParticleConfig {
        window_lo: h.lo,
        occupancy: h.values.windows(2).map(|w| w[1] > w[0]).collect(),
        anchor_height: h.values[0],
    }
}

/// `y -> -|x0 - y|` on `[lo, hi]`.
pub fn narrow_wedge(x0: i64, lo: i64, hi: i64) -> Result<HeightFunction> {
    if x0 < lo || x0 > hi {
        return Err(Error::OutsideWindow(x0));
    }
    HeightFunction::from_fn(lo, hi, |y| -(x0 - y).abs())
}

/// `x -> h(x - space_shift) + height_shift`, on the shifted window.
pub fn shift_map(
    h: &HeightFunction,
    space_shift: i64,
    height_shift: i64,
) -> Result<HeightFunction> {
    if (height_shift - space_shift).rem_euclid(2) != 0 {
        let value = h.value(-space_shift) + height_shift;
        return Err(Error::Parity { site: 0, value });
    }
    Ok(HeightFunction {
        lo: h.lo + space_shift,
        values: h.values.iter().map(|v| v + height_shift).collect(),
        policy: h.policy,
    })
}

fn check_finite_or_neg_inf(v: f64) -> Result<()> {
    if v.is_nan() || v == f64::INFINITY {
        return Err(Error::GridMismatch(format!("invalid sample {v}")));
    }
    Ok(())
}

/// Samples on the grid `{eps * x / 2}` for lattice indices `x` in
/// `[lo, lo + len - 1]`. `f64::NEG_INFINITY` is the only allowed non-finite
/// value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    eps: f64,
    lo: i64,
    samples: Vec<f64>,
    walk: bool,
}

impl GridFunction {
    pub fn new(eps: f64, lo: i64, samples: Vec<f64>) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::BadScale(eps));
        }
        if samples.is_empty() {
            return Err(Error::EmptyWindow);
        }
        for &v in &samples {
            check_finite_or_neg_inf(v)?;
        }
        Ok(Self {
            eps,
            lo,
            samples,
            walk: false,
        })
    }

    /// The scaled image `x -> eps^{1/2} h(2 x / eps)` of an anchored height
    /// function, tagged as a walk.
    pub fn walk_from_height(h: &HeightFunction, eps: f64) -> Result<Self> {
        if !h.anchored() {
            return Err(Error::Parity {
                site: h.lo,
                value: h.values[0],
            });
        }
        let r = eps.sqrt();
        let mut g = Self::new(eps, h.lo, h.values.iter().map(|&v| r * v as f64).collect())?;
        g.walk = true;
        Ok(g)
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn hi(&self) -> i64 {
        self.lo + self.samples.len() as i64 - 1
    }

    pub fn is_walk(&self) -> bool {
        self.walk
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// Real position of lattice index `i`.
    pub fn position(&self, i: i64) -> f64 {
        self.eps * i as f64 / 2.0
    }

    pub fn get(&self, i: i64) -> Option<f64> {
        if i < self.lo || i > self.hi() {
            None
        } else {
            Some(self.samples[(i - self.lo) as usize])
        }
    }

    /// Value at a real position, rounded to the nearest even index.
    pub fn at_position(&self, x: f64) -> Option<f64> {
        self.get(scaled_to_site(x, self.eps))
    }

    /// Recovers the integer heights of a walk.
    pub fn to_height(&self) -> Result<HeightFunction> {
        if !self.walk {
            return Err(Error::GridMismatch("not a walk".into()));
        }
        let r = self.eps.sqrt();
        let values = self
            .samples
            .iter()
            .map(|v| (v / r).round() as i64)
            .collect();
        HeightFunction::new_anchored(self.lo, values)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["index", "value"])?;
        for (i, v) in self.samples.iter().enumerate() {
            wr.write_record([(self.lo + i as i64).to_string(), fmt_ext(*v)])?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(eps: f64, r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let mut lo = None;
        let mut samples = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            let idx: i64 = rec[0]
                .trim()
                .parse()
                .map_err(|_| Error::Io(format!("bad index {}", &rec[0])))?;
            let start = *lo.get_or_insert(idx);
            if idx != start + samples.len() as i64 {
                return Err(Error::Io("indices must be consecutive".into()));
            }
            samples.push(parse_ext(&rec[1])?);
        }
        Self::new(eps, lo.ok_or(Error::EmptyWindow)?, samples)
    }
}

/// Formats a max-plus value, writing `-inf` for the sentinel.
pub fn fmt_ext(v: f64) -> String {
    if v == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        v.to_string()
    }
}

pub fn parse_ext(s: &str) -> Result<f64> {
    let s = s.trim();
    if s == "-inf" {
        return Ok(f64::NEG_INFINITY);
    }
    s.parse().map_err(|_| Error::Io(format!("bad value {s}")))
}

/// `max_i (delta_{x_i} + q_i)`: `q_i` at `x_i`, minus infinity elsewhere.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NarrowWedgeCombo {
    points: Vec<f64>,
    heights: Vec<f64>,
}

impl NarrowWedgeCombo {
    pub fn new(points: Vec<f64>, heights: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::NoFiniteSupport);
        }
        if points.len() != heights.len() {
            return Err(Error::SizeMismatch(points.len(), heights.len()));
        }
        if points.iter().chain(&heights).any(|v| !v.is_finite()) {
            return Err(Error::GridMismatch("non-finite wedge data".into()));
        }
        Ok(Self { points, heights })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn heights(&self) -> &[f64] {
        &self.heights
    }
}

/// Input of [`srw_envelope`].
#[derive(Clone, Copy, Debug)]
pub enum EnvelopeInput<'a> {
    Wedges(&'a NarrowWedgeCombo),
    Grid(&'a GridFunction),
}

impl<'a> From<&'a NarrowWedgeCombo> for EnvelopeInput<'a> {
    fn from(f: &'a NarrowWedgeCombo) -> Self {
        EnvelopeInput::Wedges(f)
    }
}

impl<'a> From<&'a GridFunction> for EnvelopeInput<'a> {
    fn from(f: &'a GridFunction) -> Self {
        EnvelopeInput::Grid(f)
    }
}

const SNAP: f64 = 1e-9;

/// Smallest integer `>= v` with the parity of `site`.
fn parity_ceil(v: f64, site: i64) -> i64 {
    let c = (v - SNAP).ceil() as i64;
    if (c - site).rem_euclid(2) == 0 {
        c
    } else {
        c + 1
    }
}

/// Minimal walk (in integer units, `H(x) = x mod 2`) lying above every
/// `(index, value)` constraint, evaluated on `[lo, hi]`. Off-grid constraint
/// points are compared against the linear interpolation of the walk.
pub fn minimal_walk(constraints: &[(f64, f64)], lo: i64, hi: i64) -> Result<Vec<i64>> {
    if constraints.is_empty() {
        return Err(Error::NoFiniteSupport);
    }
    if hi < lo {
        return Err(Error::EmptyWindow);
    }
    // For a +-1 walk, g(p) = max_j H(j) - |p - j|, so each constraint is met
    // by one of the two neighbouring grid values; the minimal walk is the
    // maximum over constraints of the cheaper of the two cones.
    let mut out = vec![i64::MIN; (hi - lo + 1) as usize];
    for &(p, q) in constraints {
        let k = (p + SNAP).floor() as i64;
        let frac = p - k as f64;
        if frac.abs() < SNAP {
            let a = parity_ceil(q, k);
            for (i, o) in out.iter_mut().enumerate() {
                let x = lo + i as i64;
                *o = (*o).max(a - (x - k).abs());
            }
        } else {
            let a = parity_ceil(q + frac, k);
            let b = parity_ceil(q + 1.0 - frac, k + 1);
            for (i, o) in out.iter_mut().enumerate() {
                let x = lo + i as i64;
                let e = (a - (x - k).abs()).min(b - (x - k - 1).abs());
                *o = (*o).max(e);
            }
        }
    }
    Ok(out)
}

/// The minimal SRW_eps walk dominating `f`, on lattice indices `[lo, hi]`.
pub fn srw_envelope<'a>(
    f: impl Into<EnvelopeInput<'a>>,
    eps: f64,
    lo: i64,
    hi: i64,
) -> Result<GridFunction> {
    let h = srw_envelope_height(f, eps, lo, hi)?;
    GridFunction::walk_from_height(&h, eps)
}

/// [`srw_envelope`] returned as the unscaled integer height function.
pub fn srw_envelope_height<'a>(
    f: impl Into<EnvelopeInput<'a>>,
    eps: f64,
    lo: i64,
    hi: i64,
) -> Result<HeightFunction> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::BadScale(eps));
    }
    let r = eps.sqrt();
    let constraints: Vec<(f64, f64)> = match f.into() {
        EnvelopeInput::Wedges(w) => w
            .points
            .iter()
            .zip(&w.heights)
            .map(|(&x, &q)| (2.0 * x / eps, q / r))
            .collect(),
        EnvelopeInput::Grid(g) => {
            if (g.eps - eps).abs() > 1e-12 * eps {
                return Err(Error::GridMismatch("grid scale differs from eps".into()));
            }
            g.samples
                .iter()
                .enumerate()
                .filter(|(_, v)| v.is_finite())
                .map(|(i, &v)| ((g.lo + i as i64) as f64, v / r))
                .collect()
        }
    };
    let values = minimal_walk(&constraints, lo, hi)?;
    HeightFunction::new_anchored(lo, values)
}

/// Nearest even integer to `y`, ties toward minus infinity.
pub fn round_to_even_site(y: f64) -> i64 {
    2 * (y / 2.0 - 0.5).ceil() as i64
}

/// Lattice site of a scaled position: `2 x / eps` rounded to an even site.
pub fn scaled_to_site(x: f64, eps: f64) -> i64 {
    round_to_even_site(2.0 * x / eps)
}

/// `x -> eps^{1/2} h(2 x / eps) + t / eps` on the grid `{eps x / 2}`.
pub fn rescale_height(h: &HeightFunction, t: f64, eps: f64) -> Result<GridFunction> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::BadScale(eps));
    }
    let r = eps.sqrt();
    GridFunction::new(
        eps,
        h.lo,
        h.values.iter().map(|&v| r * v as f64 + t / eps).collect(),
    )
}

/// `2 eps^{1/2} floor(eps^{-3/2} (t - s) / 2)`.
pub fn k_epsilon_correction(t_minus_s: f64, eps: f64) -> f64 {
    2.0 * eps.sqrt() * (eps.powf(-1.5) * t_minus_s / 2.0).floor()
}

/// Dense max-plus kernel `f(x, z)` with lattice coordinates on both axes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaxPlusMatrix {
    rows: Vec<i64>,
    cols: Vec<i64>,
    data: Vec<f64>,
}

impl MaxPlusMatrix {
    pub fn new(rows: Vec<i64>, cols: Vec<i64>, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows.len() * cols.len() {
            return Err(Error::SizeMismatch(data.len(), rows.len() * cols.len()));
        }
        for &v in &data {
            check_finite_or_neg_inf(v)?;
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: Vec<i64>, cols: Vec<i64>, f: impl Fn(i64, i64) -> f64) -> Result<Self> {
        let data = rows
            .iter()
            .flat_map(|&x| cols.iter().map(move |&z| (x, z)))
            .map(|(x, z)| f(x, z))
            .collect();
        Self::new(rows, cols, data)
    }

    /// Max-plus identity on `coords`.
    pub fn identity(coords: Vec<i64>) -> Self {
        Self::from_fn(coords.clone(), coords, |x, y| {
            if x == y {
                0.0
            } else {
                f64::NEG_INFINITY
            }
        })
        .expect("identity is well formed")
    }

    pub fn rows(&self) -> &[i64] {
        &self.rows
    }

    pub fn cols(&self) -> &[i64] {
        &self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols.len() + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let n = self.cols.len();
        self.data[i * n + j] = v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Value at coordinates `(x, y)`.
    pub fn at(&self, x: i64, y: i64) -> Option<f64> {
        let i = self.rows.iter().position(|&r| r == x)?;
        let j = self.cols.iter().position(|&c| c == y)?;
        Some(self.get(i, j))
    }

    pub fn le(&self, other: &MaxPlusMatrix) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && self.data.iter().zip(&other.data).all(|(a, b)| a <= b)
    }
}

/// `(f ⋄ g)(x, y) = max_z f(x, z) + g(z, y)`.
pub fn diamond(f: &MaxPlusMatrix, g: &MaxPlusMatrix) -> Result<MaxPlusMatrix> {
    if f.cols.is_empty() || g.rows.is_empty() {
        return Err(Error::EmptyMiddleGrid);
    }
    if f.cols != g.rows {
        return Err(Error::GridMismatch("middle grids differ".into()));
    }
    let (n, m, p) = (f.rows.len(), f.cols.len(), g.cols.len());
    let mut data = vec![f64::NEG_INFINITY; n * p];
    for i in 0..n {
        for k in 0..m {
            let a = f.data[i * m + k];
            if a == f64::NEG_INFINITY {
                continue;
            }
            for j in 0..p {
                let b = g.data[k * p + j];
                if b == f64::NEG_INFINITY {
                    continue;
                }
                let v = a + b;
                if v > data[i * p + j] {
                    data[i * p + j] = v;
                }
            }
        }
    }
    Ok(MaxPlusMatrix {
        rows: f.rows.clone(),
        cols: g.cols.clone(),
        data,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_ties_go_down() {
        assert_eq!(round_to_even_site(1.0), 0);
        assert_eq!(round_to_even_site(-1.0), -2);
        assert_eq!(round_to_even_site(1.2), 2);
        assert_eq!(round_to_even_site(0.9), 0);
        assert_eq!(round_to_even_site(3.0), 2);
    }

    #[test]
    fn extension_policies() {
        let h = HeightFunction::new(0, vec![0, 1, 2]).unwrap();
        assert_eq!(h.value(4), 4);
        assert_eq!(h.value(-2), -2);
        let h = h.with_policy(BoundaryPolicy::FrozenSlope);
        assert_eq!(h.value(4), 0);
        assert_eq!(h.value(-2), -2);
    }

    #[test]
    fn off_grid_constraint() {
        // point halfway between sites 0 and 1 at height 0.4: needs H(0) >= 0.9
        // or H(1) >= 0.9; the cheap option is H(1) = 1.
        let w = minimal_walk(&[(0.5, 0.4)], -2, 3).unwrap();
        assert_eq!(w, vec![-2, -1, 0, 1, 0, -1]);
    }
}
