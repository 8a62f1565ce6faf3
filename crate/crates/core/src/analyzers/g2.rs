//! Intensity correlation `g²(τ)` from photodetection time tags.

use super::{CorrelationSeries, Normalization, N_BATCHES};
use crate::error::{require_positive, Error, Result};
use crate::records::CountRecord;

/// Pair-count histogram over all ordered pairs within `max_lag`, accumulated
/// over any number of independent records. Merging is a plain sum, so
/// partial histograms from parallel workers combine in any order.
///
/// Each record is cut into [`N_BATCHES`] equal slices and every pair is
/// filed under the slice of its earlier event. Pair counts are
/// overdispersed (one event belongs to many pairs), so error bars come from
/// a leave-one-slice-out jackknife rather than from `√count`.
#[derive(Debug, Clone, PartialEq)]
pub struct G2Accumulator {
    bin_width: f64,
    half_bins: usize,
    coincidences: Vec<Vec<u64>>,
    /// Σ over records of the time available to a pair at lag `τ_k` whose
    /// earlier event falls in the slice.
    exposure: Vec<Vec<f64>>,
    events: Vec<u64>,
    time: Vec<f64>,
}

impl G2Accumulator {
    pub fn new(bin_width: f64, max_lag: f64) -> Result<Self> {
        require_positive("bin_width", bin_width)?;
        require_positive("max_lag", max_lag)?;
        let half_bins = (max_lag / bin_width + 1e-9).floor() as usize;
        let n = 2 * half_bins + 1;
        Ok(Self {
            bin_width,
            half_bins,
            coincidences: vec![vec![0; n]; N_BATCHES],
            exposure: vec![vec![0.0; n]; N_BATCHES],
            events: vec![0; N_BATCHES],
            time: vec![0.0; N_BATCHES],
        })
    }

    fn lag(&self, idx: usize) -> f64 {
        (idx as f64 - self.half_bins as f64) * self.bin_width
    }

    pub fn add(&mut self, record: &CountRecord) {
        let ts = record.timestamps();
        let (t0, t1) = record.window();
        let slice = (t1 - t0) / N_BATCHES as f64;
        let batch_of = |t: f64| (((t - t0) / slice) as usize).min(N_BATCHES - 1);
        let k = self.half_bins;
        let reach = (k as f64 + 0.5) * self.bin_width;
        for (i, &ti) in ts.iter().enumerate() {
            let c = &mut self.coincidences[batch_of(ti)];
            for &tj in &ts[i + 1..] {
                let d = tj - ti;
                if d >= reach {
                    break;
                }
                let b = (d / self.bin_width + 0.5).floor() as usize;
                if b == 0 {
                    c[k] += 2;
                } else {
                    c[k + b] += 1;
                    c[k - b] += 1;
                }
            }
            self.events[batch_of(ti)] += 1;
        }
        for s in 0..N_BATCHES {
            let a = t0 + s as f64 * slice;
            for idx in 0..self.coincidences[s].len() {
                let last = t1 - self.lag(idx).abs();
                self.exposure[s][idx] += (last.min(a + slice) - a).max(0.0);
            }
            self.time[s] += slice;
        }
    }

    pub fn merge(&mut self, other: &Self) {
        assert_eq!(self.coincidences[0].len(), other.coincidences[0].len(), "incompatible g2 accumulators");
        for s in 0..N_BATCHES {
            for (a, b) in self.coincidences[s].iter_mut().zip(&other.coincidences[s]) {
                *a += b;
            }
            for (a, b) in self.exposure[s].iter_mut().zip(&other.exposure[s]) {
                *a += b;
            }
            self.events[s] += other.events[s];
            self.time[s] += other.time[s];
        }
    }

    pub fn events(&self) -> u64 {
        self.events.iter().sum()
    }

    /// `g²` in bin `idx` from all slices except `skip`.
    fn estimate(&self, idx: usize, skip: Option<usize>) -> Option<(f64, u64)> {
        let keep = |s: &usize| Some(*s) != skip;
        let c: u64 = (0..N_BATCHES).filter(keep).map(|s| self.coincidences[s][idx]).sum();
        let e: f64 = (0..N_BATCHES).filter(keep).map(|s| self.exposure[s][idx]).sum();
        let n = (0..N_BATCHES).filter(keep).map(|s| self.events[s]).sum::<u64>() as f64;
        let t: f64 = (0..N_BATCHES).filter(keep).map(|s| self.time[s]).sum();
        let expected = n * (n - 1.0) / (t * t) * e * self.bin_width;
        (expected > 0.0).then(|| (c as f64 / expected, c))
    }

    /// Normalize by the uncorrelated expectation `r²·(T−|τ|)·w`, with
    /// `r² = N(N−1)/T²` (unbiased for Poisson counts).
    pub fn finish(&self) -> Result<CorrelationSeries> {
        let total = self.events();
        if total < 2 {
            return Err(Error::InsufficientEvents(total as usize));
        }
        let nb = N_BATCHES as f64;
        let bins = self.coincidences[0].len();
        let (mut lags, mut values, mut stderr) = (Vec::with_capacity(bins), Vec::with_capacity(bins), Vec::with_capacity(bins));
        for idx in 0..bins {
            lags.push(self.lag(idx));
            let Some((v, c)) = self.estimate(idx, None) else {
                values.push(1.0);
                stderr.push(f64::INFINITY);
                continue;
            };
            let mut jack = 0.0;
            for s in 0..N_BATCHES {
                match self.estimate(idx, Some(s)) {
                    Some((vs, _)) => jack += (vs - v).powi(2),
                    None => jack = f64::INFINITY,
                }
            }
            // the zero bin holds every pair twice
            let dup = if idx == self.half_bins { 2.0 } else { 1.0 };
            let counting = if c > 0 { (dup * c as f64).sqrt() * v / c as f64 } else { self.estimate_floor(idx) };
            values.push(v);
            stderr.push(((nb - 1.0) / nb * jack).sqrt().max(counting));
        }
        let mut s = CorrelationSeries::new(lags, values, stderr, Normalization::G2)?;
        s.events = total as usize;
        Ok(s)
    }

    /// One expected pair's worth of `g²`, the resolution of an empty bin.
    fn estimate_floor(&self, idx: usize) -> f64 {
        let n = self.events() as f64;
        let t: f64 = self.time.iter().sum();
        let e: f64 = (0..N_BATCHES).map(|s| self.exposure[s][idx]).sum();
        1.0 / (n * (n - 1.0) / (t * t) * e * self.bin_width)
    }
}

/// `g²(τ)` on lags `k·bin_width`, `|k·bin_width| ≤ max_lag`.
pub fn estimate_g2(record: &CountRecord, bin_width: f64, max_lag: f64) -> Result<CorrelationSeries> {
    let mut acc = G2Accumulator::new(bin_width, max_lag)?;
    acc.add(record);
    acc.finish()
}
