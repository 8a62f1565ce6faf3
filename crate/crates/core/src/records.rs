//! Detection records shared by the semiclassical and quantum engines, and
//! their text formats. Both engines write the same formats so the analyzers
//! never need to know where a record came from.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::TimeGrid;

/// 17 significant digits; round-trips every `f64` exactly.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

pub(crate) fn parse_f64(s: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|e| Error::Parse(format!("`{s}`: {e}")))
}

/// Photoelectric detection times within an observation window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountRecord {
    timestamps: Vec<f64>,
    t0: f64,
    t1: f64,
}

impl CountRecord {
    pub fn new(timestamps: Vec<f64>, t0: f64, t1: f64) -> Result<Self> {
        if !(t1 > t0) {
            return Err(Error::InvalidParameter { name: "window", reason: format!("[{t0}, {t1}] is empty") });
        }
        if timestamps.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Parse("timestamps must be strictly increasing".into()));
        }
        if timestamps.iter().any(|&t| !(t >= t0 && t <= t1)) {
            return Err(Error::Parse("timestamp outside observation window".into()));
        }
        Ok(Self { timestamps, t0, t1 })
    }

    pub fn empty(t0: f64, t1: f64) -> Result<Self> {
        Self::new(Vec::new(), t0, t1)
    }

    pub fn timestamps(&self) -> &[f64] {
        &self.timestamps
    }
    pub fn len(&self) -> usize {
        self.timestamps.len()
    }
    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }
    pub fn window(&self) -> (f64, f64) {
        (self.t0, self.t1)
    }
    pub fn duration(&self) -> f64 {
        self.t1 - self.t0
    }
    pub fn rate(&self) -> f64 {
        self.len() as f64 / self.duration()
    }

    /// Number of events in `[a, b)`.
    pub fn count_between(&self, a: f64, b: f64) -> usize {
        let lo = self.timestamps.partition_point(|&t| t < a);
        let hi = self.timestamps.partition_point(|&t| t < b);
        hi - lo
    }

    /// Text format: `#` header lines (seed, model, window) then one
    /// timestamp per line.
    pub fn to_text(&self, seed: u64, model: &str) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# seed={seed}");
        let _ = writeln!(out, "# model={model}");
        let _ = writeln!(out, "# window={},{}", fmt17(self.t0), fmt17(self.t1));
        for &t in &self.timestamps {
            let _ = writeln!(out, "{}", fmt17(t));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut window = None;
        let mut ts = Vec::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            if let Some(h) = line.strip_prefix('#') {
                if let Some(w) = h.trim().strip_prefix("window=") {
                    let (a, b) = w.split_once(',').ok_or_else(|| Error::Parse(format!("bad window `{w}`")))?;
                    window = Some((parse_f64(a)?, parse_f64(b)?));
                }
                continue;
            }
            ts.push(parse_f64(line)?);
        }
        let (t0, t1) = window.ok_or_else(|| Error::Parse("missing `# window=` header".into()))?;
        Self::new(ts, t0, t1)
    }
}

/// Uniformly sampled real current with the bandwidth of its post-detection
/// filter. Each sample is the current averaged over its grid cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhotocurrentRecord {
    pub grid: TimeGrid,
    pub samples: Vec<f64>,
    pub bandwidth: f64,
}

impl PhotocurrentRecord {
    pub fn new(grid: TimeGrid, samples: Vec<f64>, bandwidth: f64) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), found: samples.len() });
        }
        if !(bandwidth > 0.0) || bandwidth > grid.nyquist() * (1.0 + 1e-12) {
            return Err(Error::BandwidthAboveNyquist { bandwidth, nyquist: grid.nyquist() });
        }
        if samples.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("photocurrent"));
        }
        Ok(Self { grid, samples, bandwidth })
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    pub fn std_dev(&self) -> f64 {
        let m = self.mean();
        (self.samples.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (self.samples.len().max(2) - 1) as f64).sqrt()
    }

    /// CSV `t,i` with `#` header lines carrying dt and bandwidth.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# dt={}", fmt17(self.grid.dt()));
        let _ = writeln!(out, "# bandwidth={}", fmt17(self.bandwidth));
        let _ = writeln!(out, "t,i");
        for (k, x) in self.samples.iter().enumerate() {
            let _ = writeln!(out, "{},{}", fmt17(self.grid.time(k)), fmt17(*x));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let (mut dt, mut bw) = (None, None);
        let mut t0 = None;
        let mut samples = Vec::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            if let Some(h) = line.strip_prefix('#') {
                let h = h.trim();
                if let Some(v) = h.strip_prefix("dt=") {
                    dt = Some(parse_f64(v)?);
                } else if let Some(v) = h.strip_prefix("bandwidth=") {
                    bw = Some(parse_f64(v)?);
                }
                continue;
            }
            if line.starts_with('t') {
                continue;
            }
            let (t, i) = line.split_once(',').ok_or_else(|| Error::Parse(format!("expected t,i: `{line}`")))?;
            t0.get_or_insert(parse_f64(t)?);
            samples.push(parse_f64(i)?);
        }
        let dt = dt.ok_or_else(|| Error::Parse("missing `# dt=` header".into()))?;
        let bw = bw.ok_or_else(|| Error::Parse("missing `# bandwidth=` header".into()))?;
        let t0 = t0.ok_or_else(|| Error::Parse("no samples".into()))?;
        Self::new(TimeGrid::new(t0, dt, samples.len())?, samples, bw)
    }
}
