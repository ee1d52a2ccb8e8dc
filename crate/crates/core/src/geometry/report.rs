use serde::Serialize;

use super::chart::Grid;
use super::field::Backend;
use super::tensor::NormKind;
use crate::error::Result;

/// Residual of a named identity sampled over a grid.
#[derive(Debug, Clone, Serialize)]
pub struct ResidualReport {
    pub identity: String,
    pub grid: String,
    pub backend: Backend,
    pub norm: NormKind,
    pub samples: Vec<f64>,
    pub sup: f64,
    pub argmax: Vec<f64>,
}

impl ResidualReport {
    /// Evaluate `residual` at every grid point (in parallel) and reduce in
    /// grid order.
    pub fn sweep<F>(identity: &str, grid: &Grid, backend: Backend, norm: NormKind, residual: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> Result<f64> + Sync,
    {
        let samples = grid.sweep(|p| residual(p))?;
        Ok(ResidualReport::from_samples(identity, grid, backend, norm, samples))
    }

    pub fn from_samples(identity: &str, grid: &Grid, backend: Backend, norm: NormKind, samples: Vec<f64>) -> Self {
        let mut sup = 0.0;
        let mut at = 0;
        for (i, &s) in samples.iter().enumerate() {
            // NaN must surface as a failure, not vanish in the max
            if s > sup || (s.is_nan() && !sup.is_nan()) {
                sup = s;
                at = i;
            }
        }
        ResidualReport {
            identity: identity.to_string(),
            grid: grid.describe(),
            backend,
            norm,
            argmax: if samples.is_empty() { vec![] } else { grid.point(at) },
            samples,
            sup,
        }
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.sup <= tol
    }
}
