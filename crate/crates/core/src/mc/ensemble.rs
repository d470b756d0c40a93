use std::collections::BTreeMap;

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{path_rng, McError};
use crate::path::CadlagPath;

/// Uniform time grid `dt, 2dt, ..., horizon` (the last step may be shorter).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    pub dt: f64,
    pub horizon: f64,
}

impl Grid {
    pub fn new(dt: f64, horizon: f64) -> Result<Self, McError> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(McError::BadGrid(format!("dt must be positive, got {dt}")));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(McError::BadGrid(format!("horizon must be positive, got {horizon}")));
        }
        Ok(Self { dt, horizon })
    }

    /// Largest power of two `≤ dt`, so grid times are exact binary fractions.
    pub fn dyadic(dt: f64, horizon: f64) -> Result<Self, McError> {
        Self::new(dt, horizon)?;
        Self::new(2f64.powi(dt.log2().floor() as i32), horizon)
    }

    pub fn n_steps(&self) -> usize {
        (self.horizon / self.dt).ceil() as usize
    }

    pub fn times(&self) -> Vec<f64> {
        let n = self.n_steps();
        (1..=n).map(|k| (k as f64 * self.dt).min(self.horizon)).collect()
    }

    /// Grid times strictly before `t`.
    pub fn times_before(&self, t: f64) -> Vec<f64> {
        self.times().into_iter().take_while(|&s| s < t).collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PathBundle {
    pub paths: BTreeMap<String, CadlagPath>,
    pub scalars: BTreeMap<String, f64>,
}

impl PathBundle {
    pub fn with_path(mut self, name: &str, path: CadlagPath) -> Self {
        self.paths.insert(name.to_string(), path);
        self
    }

    pub fn with_scalar(mut self, name: &str, value: f64) -> Self {
        self.scalars.insert(name.to_string(), value);
        self
    }

    pub fn path(&self, name: &str) -> Result<&CadlagPath, McError> {
        self.paths.get(name).ok_or_else(|| McError::MissingProcess(name.to_string()))
    }

    pub fn scalar(&self, name: &str) -> Result<f64, McError> {
        self.scalars.get(name).copied().ok_or_else(|| McError::MissingProcess(name.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub scenario: String,
    pub n_paths: usize,
    pub master_seed: u64,
    pub grid: Grid,
    pub bundles: Vec<PathBundle>,
}

impl Ensemble {
    /// Runs `generate(path_index, rng)` for every path. Each path gets its own
    /// stream (substream 0); results are collected in index order.
    pub fn build<E, F>(
        scenario: &str,
        n_paths: usize,
        master_seed: u64,
        grid: Grid,
        generate: F,
    ) -> Result<Self, E>
    where
        E: Send + From<McError>,
        F: Fn(usize, &mut ChaCha8Rng) -> Result<PathBundle, E> + Sync,
    {
        if n_paths == 0 {
            return Err(McError::NoPaths.into());
        }
        let bundles = (0..n_paths)
            .into_par_iter()
            .map(|i| generate(i, &mut path_rng(master_seed, i as u64, 0)))
            .collect::<Result<Vec<_>, E>>()?;
        Ok(Self { scenario: scenario.to_string(), n_paths, master_seed, grid, bundles })
    }

    pub fn paths(&self, name: &str) -> Result<Vec<&CadlagPath>, McError> {
        self.bundles.iter().map(|b| b.path(name)).collect()
    }

    pub fn scalars(&self, name: &str) -> Result<Vec<f64>, McError> {
        self.bundles.iter().map(|b| b.scalar(name)).collect()
    }
}
