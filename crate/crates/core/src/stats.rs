//! Kolmogorov-Smirnov and Wasserstein statistics, quantile tables and small
//! regression helpers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal as UnitNormal, StudentsT};

use crate::clock::mix;
use crate::error::{Error, Result};

/// Critical value of the two-sample KS test at level 0.01.
pub const KS_C_001: f64 = 1.628;

/// Named finite sample with optional provenance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub label: String,
    values: Vec<f64>,
    /// `(seed, config hash)`.
    pub provenance: Option<(u64, String)>,
}

impl SampleSet {
    pub fn new(label: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySample);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::BadTable("sample holds a non-finite value".into()));
        }
        Ok(Self {
            label: label.into(),
            values,
            provenance: None,
        })
    }

    pub fn with_provenance(mut self, seed: u64, config_hash: impl Into<String>) -> Self {
        self.provenance = Some((seed, config_hash.into()));
        self
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub threshold: f64,
    pub reject: bool,
}

fn sorted(v: &[f64]) -> Vec<f64> {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

/// Two-sample KS statistic with the level-0.01 decision.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    ks_two_sample_at(a, b, KS_C_001)
}

/// Two-sample KS with critical value `c`: reject when `D > c sqrt((n+m)/(nm))`.
pub fn ks_two_sample_at(a: &[f64], b: &[f64], c: f64) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySample);
    }
    let (sa, sb) = (sorted(a), sorted(b));
    let (n, m) = (sa.len() as f64, sb.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < sa.len() && j < sb.len() {
        let x = sa[i].min(sb[j]);
        while i < sa.len() && sa[i] <= x {
            i += 1;
        }
        while j < sb.len() && sb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    let threshold = c * ((n + m) / (n * m)).sqrt();
    Ok(KsResult {
        statistic: d,
        threshold,
        reject: d > threshold,
    })
}

/// Mean absolute difference of sorted samples.
pub fn wasserstein1(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::SizeMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(Error::EmptySample);
    }
    let (sa, sb) = (sorted(a), sorted(b));
    Ok(sa.iter().zip(&sb).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64)
}

/// Levels and quantiles of a continuous law, with its mean and variance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantileTable {
    pub levels: Vec<f64>,
    pub quantiles: Vec<f64>,
    pub mean: f64,
    pub variance: f64,
}

const TW_GUE_CSV: &str = include_str!("../data/tw_gue.csv");

impl QuantileTable {
    /// Parses `#` comments, `mean,<v>`, `variance,<v>`, a `level,quantile`
    /// header and one row per level.
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut levels = Vec::new();
        let mut quantiles = Vec::new();
        let (mut mean, mut variance) = (None, None);
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once(',')
                .ok_or_else(|| Error::BadTable(format!("bad line {line}")))?;
            let parse = |s: &str| -> Result<f64> {
                s.trim()
                    .parse()
                    .map_err(|_| Error::BadTable(format!("bad number {s}")))
            };
            match k.trim() {
                "level" => {}
                "mean" => mean = Some(parse(v)?),
                "variance" => variance = Some(parse(v)?),
                lvl => {
                    levels.push(parse(lvl)?);
                    quantiles.push(parse(v)?);
                }
            }
        }
        let t = Self {
            levels,
            quantiles,
            mean: mean.ok_or_else(|| Error::BadTable("missing mean".into()))?,
            variance: variance.ok_or_else(|| Error::BadTable("missing variance".into()))?,
        };
        t.validate()?;
        Ok(t)
    }

    fn validate(&self) -> Result<()> {
        if self.levels.is_empty() {
            return Err(Error::EmptyTable);
        }
        if self.levels.len() != self.quantiles.len() {
            return Err(Error::SizeMismatch(self.levels.len(), self.quantiles.len()));
        }
        let inc = |v: &[f64]| v.windows(2).all(|w| w[1] > w[0]);
        if !inc(&self.levels) || !inc(&self.quantiles) {
            return Err(Error::BadTable("levels and quantiles must increase".into()));
        }
        if self.levels[0] <= 0.0 || *self.levels.last().expect("non-empty") >= 1.0 {
            return Err(Error::BadTable("levels must lie in (0, 1)".into()));
        }
        Ok(())
    }

    /// The vendored Tracy-Widom GUE table.
    pub fn tw_gue() -> Self {
        Self::from_csv_str(TW_GUE_CSV).expect("vendored table is well formed")
    }

    /// Piecewise-linear inverse CDF, extended linearly past the end levels.
    pub fn quantile(&self, u: f64) -> f64 {
        let (l, q) = (&self.levels, &self.quantiles);
        let k = l.partition_point(|&x| x < u).clamp(1, l.len() - 1);
        let (l0, l1, q0, q1) = (l[k - 1], l[k], q[k - 1], q[k]);
        q0 + (u - l0) * (q1 - q0) / (l1 - l0)
    }
}

/// `sup_level |ECDF(quantile) - level|` over the table levels.
pub fn ks_against_table(a: &[f64], table: &QuantileTable) -> Result<f64> {
    table.validate()?;
    if a.is_empty() {
        return Err(Error::EmptySample);
    }
    let s = sorted(a);
    let n = s.len() as f64;
    Ok(table
        .levels
        .iter()
        .zip(&table.quantiles)
        .map(|(&l, &q)| (s.partition_point(|&v| v <= q) as f64 / n - l).abs())
        .fold(0.0, f64::max))
}

/// [`ks_against_table`] for samples confined to a lattice of the given
/// spacing: each sample `v` is spread uniformly over `(v - spacing, v]`, so
/// the smoothed ECDF agrees with the lattice ECDF at lattice points and is
/// linear in between.
pub fn ks_against_table_lattice(a: &[f64], table: &QuantileTable, spacing: f64) -> Result<f64> {
    if spacing <= 0.0 {
        return ks_against_table(a, table);
    }
    table.validate()?;
    if a.is_empty() {
        return Err(Error::EmptySample);
    }
    let s = sorted(a);
    let n = s.len() as f64;
    Ok(table
        .levels
        .iter()
        .zip(&table.quantiles)
        .map(|(&l, &q)| {
            let full = s.partition_point(|&v| v <= q);
            let part: f64 = s[full..s.partition_point(|&v| v < q + spacing)]
                .iter()
                .map(|&v| ((q - (v - spacing)) / spacing).clamp(0.0, 1.0))
                .sum();
            ((full as f64 + part) / n - l).abs()
        })
        .fold(0.0, f64::max))
}

pub fn mean(a: &[f64]) -> f64 {
    a.iter().sum::<f64>() / a.len() as f64
}

/// Unbiased sample variance.
pub fn variance(a: &[f64]) -> f64 {
    let m = mean(a);
    a.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (a.len() as f64 - 1.0)
}

/// Pearson correlation; zero if either sample is constant.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::SizeMismatch(a.len(), b.len()));
    }
    if a.len() < 2 {
        return Err(Error::EmptySample);
    }
    let (ma, mb) = (mean(a), mean(b));
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    if saa == 0.0 || sbb == 0.0 {
        return Ok(0.0);
    }
    Ok(sab / (saa * sbb).sqrt())
}

/// Ordinary least squares fit `y = intercept + slope x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    pub df: f64,
}

impl LinearFit {
    /// Upper end of the two-sided confidence interval for the slope.
    pub fn slope_upper(&self, confidence: f64) -> f64 {
        let level = 1.0 - (1.0 - confidence) / 2.0;
        let t = if self.df.is_infinite() {
            UnitNormal::new(0.0, 1.0)
                .expect("unit normal")
                .inverse_cdf(level)
        } else {
            StudentsT::new(0.0, 1.0, self.df)
                .map(|d| d.inverse_cdf(level))
                .unwrap_or(f64::INFINITY)
        };
        self.slope + t * self.slope_se
    }
}

/// Weighted least squares (weights `w`); plain OLS when all weights are 1.
pub fn linear_fit(x: &[f64], y: &[f64], w: &[f64]) -> Result<LinearFit> {
    Ok(weighted_fit(x, y, w)?.0)
}

/// Weighted least squares where `w` are the exact inverse variances of `y`:
/// the slope error comes from the weights alone and intervals are normal.
pub fn linear_fit_known_variance(x: &[f64], y: &[f64], w: &[f64]) -> Result<LinearFit> {
    let (fit, sxx) = weighted_fit(x, y, w)?;
    Ok(LinearFit {
        slope_se: sxx.recip().sqrt(),
        df: f64::INFINITY,
        ..fit
    })
}

fn weighted_fit(x: &[f64], y: &[f64], w: &[f64]) -> Result<(LinearFit, f64)> {
    if x.len() != y.len() || x.len() != w.len() {
        return Err(Error::SizeMismatch(x.len(), y.len()));
    }
    if x.len() < 3 {
        return Err(Error::EmptySample);
    }
    let sw: f64 = w.iter().sum();
    let mx = x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let my = y.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let sxx: f64 = x.iter().zip(w).map(|(a, b)| b * (a - mx).powi(2)).sum();
    let sxy: f64 = x
        .iter()
        .zip(y)
        .zip(w)
        .map(|((a, c), b)| b * (a - mx) * (c - my))
        .sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let df = x.len() as f64 - 2.0;
    let rss: f64 = x
        .iter()
        .zip(y)
        .zip(w)
        .map(|((a, c), b)| b * (c - intercept - slope * a).powi(2))
        .sum();
    let fit = LinearFit {
        slope,
        intercept,
        slope_se: (rss / df / sxx).sqrt(),
        df,
    };
    Ok((fit, sxx))
}

/// Rejections of the level-0.01 KS test over `runs` pairs of same-law
/// Gaussian samples of size `n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NullCalibration {
    pub runs: usize,
    pub rejections: usize,
    pub rate: f64,
}

pub fn null_calibration(runs: usize, n: usize, seed: u64) -> Result<NullCalibration> {
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut rejections = 0;
    for r in 0..runs {
        let mut rng = ChaCha8Rng::seed_from_u64(mix(&[seed, 0x0CA1, r as u64]));
        let a: Vec<f64> = (0..n).map(|_| normal.sample(&mut rng)).collect();
        let b: Vec<f64> = (0..n).map(|_| normal.sample(&mut rng)).collect();
        if ks_two_sample(&a, &b)?.reject {
            rejections += 1;
        }
    }
    Ok(NullCalibration {
        runs,
        rejections,
        rate: rejections as f64 / runs as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_loads() {
        let t = QuantileTable::tw_gue();
        assert!(t.levels.len() >= 99);
        assert!((t.mean + 1.7711).abs() < 1e-3);
        assert!((t.variance - 0.8132).abs() < 1e-3);
    }

    #[test]
    fn lattice_ks_agrees_at_lattice_points() {
        let t = QuantileTable::tw_gue();
        let a: Vec<f64> = (0..1000)
            .map(|i| t.quantile((i as f64 + 0.5) / 1000.0))
            .collect();
        let plain = ks_against_table(&a, &t).unwrap();
        let smooth = ks_against_table_lattice(&a, &t, 1e-9).unwrap();
        assert!((plain - smooth).abs() < 1e-3);
    }
}
