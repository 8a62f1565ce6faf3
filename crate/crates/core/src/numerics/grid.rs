use serde::{Deserialize, Serialize};

use crate::error::{require_positive, Error, Result};

/// Uniform sampling grid `t_k = t_start + k·dt`, `k = 0..n_samples`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    t_start: f64,
    dt: f64,
    n_samples: usize,
}

impl TimeGrid {
    pub fn new(t_start: f64, dt: f64, n_samples: usize) -> Result<Self> {
        require_positive("dt", dt)?;
        if n_samples == 0 {
            return Err(Error::InvalidParameter {
                name: "n_samples",
                reason: "must be at least 1".into(),
            });
        }
        if !t_start.is_finite() {
            return Err(Error::NonFinite("t_start"));
        }
        Ok(Self { t_start, dt, n_samples })
    }

    /// Grid covering `[0, duration)` with step `dt`.
    pub fn covering(duration: f64, dt: f64) -> Result<Self> {
        require_positive("duration", duration)?;
        Self::new(0.0, dt, ((duration / dt).round() as usize).max(1))
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }
    pub fn dt(&self) -> f64 {
        self.dt
    }
    pub fn len(&self) -> usize {
        self.n_samples
    }
    pub fn is_empty(&self) -> bool {
        false
    }
    pub fn time(&self, k: usize) -> f64 {
        self.t_start + k as f64 * self.dt
    }
    /// End of the last sample cell.
    pub fn t_end(&self) -> f64 {
        self.time(self.n_samples)
    }
    pub fn duration(&self) -> f64 {
        self.n_samples as f64 * self.dt
    }
    pub fn nyquist(&self) -> f64 {
        0.5 / self.dt
    }
    /// Index of the cell `[t_k, t_k + dt)` containing `t`, if any.
    pub fn cell_of(&self, t: f64) -> Option<usize> {
        let x = (t - self.t_start) / self.dt;
        if x < 0.0 {
            return None;
        }
        let k = x.floor() as usize;
        (k < self.n_samples).then_some(k)
    }
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_samples).map(|k| self.time(k))
    }
}
