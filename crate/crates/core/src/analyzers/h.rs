//! Trigger-conditioned averages of a sampled current: the wave-particle
//! correlation `h(τ)` and, applied to a conditional-rate record, `g²(τ)`.

use super::{CorrelationSeries, Normalization};
use crate::error::{require_positive, Error, Result};
use crate::records::{CountRecord, PhotocurrentRecord};

/// Number of trigger batches kept for batch-means error bars.
pub const N_BATCHES: usize = 20;

/// Accumulates current segments centred on trigger times. Each segment is
/// reduced to bins of `bin_samples` consecutive samples. All state is sums,
/// so accumulators merge associatively.
#[derive(Debug, Clone, PartialEq)]
pub struct TriggeredAverage {
    dt: f64,
    half_samples: usize,
    bin_samples: usize,
    half_bins: usize,
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
    segments: u64,
    skipped: u64,
    batch_sum: Vec<Vec<f64>>,
    batch_n: Vec<u64>,
    chunk_sum: Vec<f64>,
    chunk_n: Vec<u64>,
}

impl TriggeredAverage {
    /// `halfwidth` and `bin_width` are rounded to whole samples of `dt`;
    /// bins are centred, so `bin_width` becomes an odd sample count.
    pub fn new(dt: f64, halfwidth: f64, bin_width: f64) -> Result<Self> {
        require_positive("dt", dt)?;
        require_positive("halfwidth", halfwidth)?;
        let half_samples = (halfwidth / dt).round() as usize;
        let mut bin_samples = ((bin_width / dt).round() as usize).max(1);
        if bin_samples.is_multiple_of(2) {
            bin_samples += 1;
        }
        let edge = (bin_samples - 1) / 2;
        if half_samples < edge {
            return Err(Error::InvalidParameter { name: "bin_width", reason: "wider than the window".into() });
        }
        let half_bins = (half_samples - edge) / bin_samples;
        let n = 2 * half_bins + 1;
        Ok(Self {
            dt,
            half_samples,
            bin_samples,
            half_bins,
            sum: vec![0.0; n],
            sum_sq: vec![0.0; n],
            segments: 0,
            skipped: 0,
            batch_sum: vec![vec![0.0; n]; N_BATCHES],
            batch_n: vec![0; N_BATCHES],
            chunk_sum: vec![0.0; N_BATCHES],
            chunk_n: vec![0; N_BATCHES],
        })
    }

    pub fn lag_step(&self) -> f64 {
        self.bin_samples as f64 * self.dt
    }

    pub fn segments(&self) -> u64 {
        self.segments
    }

    /// Triggers dropped because their window left the current record.
    pub fn skipped(&self) -> u64 {
        self.skipped
    }

    /// Add every trigger of `triggers` whose window fits inside `current`.
    pub fn add(&mut self, triggers: &CountRecord, current: &PhotocurrentRecord) -> Result<()> {
        if (current.grid.dt() - self.dt).abs() > 1e-12 * self.dt {
            return Err(Error::IncompatibleGrids(format!("current dt {} vs accumulator dt {}", current.grid.dt(), self.dt)));
        }
        let x = &current.samples;
        let n = x.len();
        let t0 = current.grid.t_start();
        let edge = (self.bin_samples - 1) / 2;
        let mut seg = vec![0.0; self.sum.len()];
        for &t in triggers.timestamps() {
            let c = ((t - t0) / self.dt + 1e-9).floor();
            if c < self.half_samples as f64 || c as usize + self.half_samples >= n {
                self.skipped += 1;
                continue;
            }
            let c = c as usize;
            for (j, s) in seg.iter_mut().enumerate() {
                let centre = c + j * self.bin_samples - self.half_bins * self.bin_samples;
                let lo = centre - edge;
                *s = x[lo..=centre + edge].iter().sum::<f64>() / self.bin_samples as f64;
            }
            let b = (self.segments % N_BATCHES as u64) as usize;
            for (j, &s) in seg.iter().enumerate() {
                self.sum[j] += s;
                self.sum_sq[j] += s * s;
                self.batch_sum[b][j] += s;
            }
            self.batch_n[b] += 1;
            self.segments += 1;
        }
        // unconditional mean, kept in contiguous chunks for its error bar
        let per = n.div_ceil(N_BATCHES);
        for (k, chunk) in x.chunks(per.max(1)).enumerate() {
            self.chunk_sum[k] += chunk.iter().sum::<f64>();
            self.chunk_n[k] += chunk.len() as u64;
        }
        Ok(())
    }

    pub fn merge(&mut self, other: &Self) {
        assert_eq!(self.sum.len(), other.sum.len(), "incompatible accumulators");
        let add = |a: &mut [f64], b: &[f64]| a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        add(&mut self.sum, &other.sum);
        add(&mut self.sum_sq, &other.sum_sq);
        // keep batch membership balanced: rotate by our segment count
        let shift = (self.segments % N_BATCHES as u64) as usize;
        for b in 0..N_BATCHES {
            let to = (b + shift) % N_BATCHES;
            add(&mut self.batch_sum[to], &other.batch_sum[b]);
            self.batch_n[to] += other.batch_n[b];
        }
        add(&mut self.chunk_sum, &other.chunk_sum);
        for (a, b) in self.chunk_n.iter_mut().zip(&other.chunk_n) {
            *a += b;
        }
        self.segments += other.segments;
        self.skipped += other.skipped;
    }

    /// Unconditional mean of the current and its batch-means standard error.
    pub fn unconditional_mean(&self) -> (f64, f64) {
        let total: u64 = self.chunk_n.iter().sum();
        let mean = self.chunk_sum.iter().sum::<f64>() / total.max(1) as f64;
        let means: Vec<f64> = self
            .chunk_sum
            .iter()
            .zip(&self.chunk_n)
            .filter(|(_, &n)| n > 0)
            .map(|(s, &n)| s / n as f64)
            .collect();
        let k = means.len() as f64;
        let se = if means.len() > 1 {
            (means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (k - 1.0) / k).sqrt()
        } else {
            f64::INFINITY
        };
        (mean, se)
    }

    /// Raw conditional average, or normalized by the unconditional mean so
    /// that the result tends to 1 at large |τ| (`H` or `G2`).
    pub fn finish(&self, normalization: Normalization) -> Result<CorrelationSeries> {
        if self.segments == 0 {
            return Err(Error::InsufficientEvents(0));
        }
        let n = self.segments as f64;
        let (scale, mu, mu_se) = match normalization {
            Normalization::Raw => (1.0, 1.0, 0.0),
            _ => {
                let (mu, se) = self.unconditional_mean();
                if !mu.is_finite() || mu.abs() < 1e-300 || (se.is_finite() && mu.abs() < 1e-9 * se) {
                    return Err(Error::UndefinedNormalization("unconditional mean current is zero"));
                }
                (1.0 / mu, mu, se)
            }
        };
        let lags: Vec<f64> = (0..self.sum.len()).map(|j| (j as f64 - self.half_bins as f64) * self.lag_step()).collect();
        let mut values = Vec::with_capacity(lags.len());
        let mut stderr = Vec::with_capacity(lags.len());
        for j in 0..self.sum.len() {
            let m = self.sum[j] / n;
            let var = if n > 1.0 { ((self.sum_sq[j] - n * m * m) / (n - 1.0)).max(0.0) } else { f64::INFINITY };
            let v = m * scale;
            let se_seg = (var / n).sqrt() * scale.abs();
            let se_norm = if normalization == Normalization::Raw { 0.0 } else { v.abs() * mu_se / mu.abs() };
            values.push(v);
            stderr.push((se_seg * se_seg + se_norm * se_norm).sqrt());
        }
        let mut s = CorrelationSeries::new(lags, values, stderr, normalization)?;
        s.events = self.segments as usize;
        s.batches = self
            .batch_sum
            .iter()
            .zip(&self.batch_n)
            .filter(|(_, &bn)| bn > 0)
            .map(|(b, &bn)| b.iter().map(|x| x / bn as f64 * scale).collect())
            .collect();
        if s.batches.len() < 2 {
            s.batches.clear();
        }
        Ok(s)
    }
}

/// `h(τ)`: trigger-centred average of `current`, one lag per sample,
/// normalized by the unconditional mean current.
pub fn estimate_h(triggers: &CountRecord, current: &PhotocurrentRecord, halfwidth: f64) -> Result<CorrelationSeries> {
    estimate_h_binned(triggers, current, halfwidth, current.grid.dt())
}

/// As [`estimate_h`], averaging each segment over bins of `bin_width`.
pub fn estimate_h_binned(
    triggers: &CountRecord,
    current: &PhotocurrentRecord,
    halfwidth: f64,
    bin_width: f64,
) -> Result<CorrelationSeries> {
    let mut acc = TriggeredAverage::new(current.grid.dt(), halfwidth, bin_width)?;
    acc.add(triggers, current)?;
    acc.finish(Normalization::H)
}
