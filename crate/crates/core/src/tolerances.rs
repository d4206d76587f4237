//! Versioned acceptance thresholds, vendored as TOML.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const VENDORED: &str = include_str!("../data/tolerances.toml");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub version: u32,
    pub ks: KsTol,
    pub marginal: MarginalTol,
    pub web: WebTol,
    pub increments: IncrementTol,
    pub horizon: HorizonTol,
    pub multitype: MultitypeTol,
    pub calibration: CalibrationTol,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KsTol {
    pub c_001: f64,
    pub alpha: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginalTol {
    pub eps: f64,
    pub replicas: usize,
    pub ks_max: f64,
    pub mean_tol: f64,
    pub sweep_eps: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WebTol {
    pub eta: f64,
    pub n: f64,
    pub replicas: usize,
    pub mean_tol: f64,
    pub slack_delta: f64,
    pub slack_n: Vec<f64>,
    pub slack_replicas: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IncrementTol {
    pub replicas: usize,
    pub max_abs_corr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HorizonTol {
    pub eps: f64,
    pub dt: f64,
    pub replicas: usize,
    pub slope_rel: f64,
    pub single_replicas: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultitypeTol {
    pub min_labels: usize,
    pub fit_from: u64,
    pub confidence: f64,
    pub y_replicas: usize,
    pub envelope_head: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationTol {
    pub runs: usize,
    pub n: usize,
    pub max_rate_factor: f64,
}

impl Tolerances {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// The thresholds shipped with the crate.
    pub fn vendored() -> Self {
        Self::parse(VENDORED).expect("vendored tolerances parse")
    }
}
