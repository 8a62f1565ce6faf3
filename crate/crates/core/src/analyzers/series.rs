use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::records::{fmt17, parse_f64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    G2,
    H,
    Raw,
}

/// A correlation function sampled on a uniform lag grid, with per-bin
/// standard errors.
///
/// Monte Carlo estimators fill `batches` with the same estimate computed on
/// disjoint subsets of triggers; downstream linear transforms use them for
/// batch-means error bars that respect correlations between bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSeries {
    pub lags: Vec<f64>,
    pub values: Vec<f64>,
    pub stderr: Vec<f64>,
    pub normalization: Normalization,
    /// Number of triggers or events the estimate rests on (0 for oracles).
    #[serde(default)]
    pub events: usize,
    #[serde(skip)]
    pub batches: Vec<Vec<f64>>,
}

impl CorrelationSeries {
    pub fn new(lags: Vec<f64>, values: Vec<f64>, stderr: Vec<f64>, normalization: Normalization) -> Result<Self> {
        if values.len() != lags.len() {
            return Err(Error::DimensionMismatch { expected: lags.len(), found: values.len() });
        }
        if stderr.len() != lags.len() {
            return Err(Error::DimensionMismatch { expected: lags.len(), found: stderr.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("correlation values"));
        }
        if stderr.iter().any(|s| *s < 0.0 || s.is_nan()) {
            return Err(Error::InvalidParameter { name: "stderr", reason: "must be non-negative".into() });
        }
        Ok(Self { lags, values, stderr, normalization, events: 0, batches: Vec::new() })
    }

    pub fn len(&self) -> usize {
        self.lags.len()
    }
    pub fn is_empty(&self) -> bool {
        self.lags.is_empty()
    }

    pub fn lag_step(&self) -> f64 {
        if self.lags.len() < 2 {
            0.0
        } else {
            self.lags[1] - self.lags[0]
        }
    }

    /// Index of the lag closest to zero.
    pub fn zero_index(&self) -> Option<usize> {
        (0..self.lags.len()).min_by(|&a, &b| self.lags[a].abs().total_cmp(&self.lags[b].abs()))
    }

    /// `(value, stderr)` at zero delay.
    pub fn at_zero(&self) -> Option<(f64, f64)> {
        self.zero_index().map(|i| (self.values[i], self.stderr[i]))
    }

    /// Lags symmetric about zero to within a tenth of the step.
    pub fn is_symmetric(&self) -> bool {
        let n = self.lags.len();
        let tol = 0.1 * self.lag_step().abs().max(1e-300);
        n % 2 == 1 && (0..n).all(|i| (self.lags[i] + self.lags[n - 1 - i]).abs() <= tol)
    }

    /// Keep only lags ≥ 0.
    pub fn nonnegative_half(&self) -> Self {
        let keep: Vec<usize> = (0..self.len()).filter(|&i| self.lags[i] >= -1e-12 * self.lag_step().abs()).collect();
        let pick = |v: &[f64]| keep.iter().map(|&i| v[i]).collect::<Vec<_>>();
        Self {
            lags: pick(&self.lags),
            values: pick(&self.values),
            stderr: pick(&self.stderr),
            normalization: self.normalization,
            events: self.events,
            batches: self.batches.iter().map(|b| pick(b)).collect(),
        }
    }

    /// Extend a series defined on lags ≥ 0 (starting at 0) to a symmetric
    /// one by `f(−τ) = f(τ)`.
    pub fn mirrored(&self) -> Result<Self> {
        if self.lags.first().is_none_or(|&l| l.abs() > 1e-12) || self.lags.iter().any(|&l| l < 0.0) {
            return Err(Error::InvalidParameter { name: "lags", reason: "mirroring needs lags ≥ 0 starting at 0".into() });
        }
        let mirror = |v: &[f64], neg: bool| {
            let mut out: Vec<f64> = v[1..].iter().rev().map(|x| if neg { -x } else { *x }).collect();
            out.extend_from_slice(v);
            out
        };
        Ok(Self {
            lags: mirror(&self.lags, true),
            values: mirror(&self.values, false),
            stderr: mirror(&self.stderr, false),
            normalization: self.normalization,
            events: self.events,
            batches: self.batches.iter().map(|b| mirror(b, false)).collect(),
        })
    }

    /// CSV `tau,value,stderr`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("tau,value,stderr\n");
        for i in 0..self.len() {
            let _ = writeln!(out, "{},{},{}", fmt17(self.lags[i]), fmt17(self.values[i]), fmt17(self.stderr[i]));
        }
        out
    }

    pub fn from_csv(text: &str, normalization: Normalization) -> Result<Self> {
        let (mut l, mut v, mut s) = (Vec::new(), Vec::new(), Vec::new());
        for line in text.lines().map(str::trim).filter(|x| !x.is_empty() && !x.starts_with('#') && !x.starts_with("tau")) {
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 3 {
                return Err(Error::Parse(format!("expected tau,value,stderr: `{line}`")));
            }
            l.push(parse_f64(cols[0])?);
            v.push(parse_f64(cols[1])?);
            s.push(parse_f64(cols[2])?);
        }
        Self::new(l, v, s, normalization)
    }
}
