//! Seeded simulation lab for coupled exclusion processes, the TASEP directed
//! metric, multi-type label dynamics, random walk web distances and
//! stationary horizons, with statistical and exact audits.

pub mod audit;
pub mod clock;
pub mod config;
pub mod error;
pub mod exclusion;
pub mod horizon;
pub mod lattice;
pub mod metric;
pub mod multitype;
pub mod stats;
pub mod tolerances;
pub mod web;

pub use error::{Error, Result};
