//! Spectrum of squeezing from a normalized wave-particle correlation.

use serde::{Deserialize, Serialize};

use super::{CorrelationSeries, Normalization};
use crate::error::{Error, Result};
use crate::numerics::discrete_fourier_transform;

/// Zero-padding factor applied before the transform.
pub const PADDING: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SqueezingSpectrum {
    pub frequencies: Vec<f64>,
    pub values: Vec<f64>,
    pub stderr: Vec<f64>,
}

impl SqueezingSpectrum {
    /// `(frequency, value, stderr)` at the most negative value.
    pub fn minimum(&self) -> Option<(f64, f64, f64)> {
        (0..self.values.len())
            .min_by(|&a, &b| self.values[a].total_cmp(&self.values[b]))
            .map(|i| (self.frequencies[i], self.values[i], self.stderr[i]))
    }

    /// CSV `freq,value`; standard errors travel in the JSON report.
    pub fn to_csv(&self) -> String {
        use crate::records::fmt17;
        let mut out = String::from("freq,value\n");
        for i in 0..self.values.len() {
            out.push_str(&format!("{},{}\n", fmt17(self.frequencies[i]), fmt17(self.values[i])));
        }
        out
    }
}

/// Bartlett-windowed cosine transform of `h(τ) − 1`:
/// `S(f) = Δ Σ_k w_k (h_k − 1) cos(2π f τ_k)`, `w_k = 1 − |τ_k|/((K+1)Δ)`.
/// Negative values indicate squeezing of the detected quadrature.
pub fn squeezing_spectrum(h: &CorrelationSeries) -> Result<SqueezingSpectrum> {
    if h.normalization != Normalization::H {
        return Err(Error::InvalidParameter { name: "normalization", reason: "spectrum needs an h-normalized series".into() });
    }
    if h.len() < 3 || !h.is_symmetric() {
        return Err(Error::InvalidParameter { name: "lags", reason: "spectrum needs a symmetric lag grid".into() });
    }
    let delta = h.lag_step();
    let k = (h.len() - 1) / 2;
    let weights: Vec<f64> = h.lags.iter().map(|t| 1.0 - t.abs() / ((k as f64 + 1.0) * delta)).collect();
    let transform = |vals: &[f64]| -> Result<(Vec<f64>, Vec<f64>)> {
        // fold τ ≥ 0 to the front and τ < 0 to the tail, padded in between
        let n = PADDING * h.len();
        let mut buf = vec![0.0; n];
        for (i, v) in vals.iter().enumerate() {
            let j = i as isize - k as isize;
            buf[j.rem_euclid(n as isize) as usize] = weights[i] * (v - 1.0);
        }
        let s = discrete_fourier_transform(&buf, delta)?;
        Ok((s.frequencies.clone(), s.bins.iter().map(|c| c.re * delta).collect()))
    };
    let (frequencies, values) = transform(&h.values)?;
    let stderr = if h.batches.len() >= 2 {
        let per: Vec<Vec<f64>> = h.batches.iter().map(|b| transform(b).map(|t| t.1)).collect::<Result<_>>()?;
        let nb = per.len() as f64;
        (0..values.len())
            .map(|i| {
                let m = per.iter().map(|p| p[i]).sum::<f64>() / nb;
                (per.iter().map(|p| (p[i] - m).powi(2)).sum::<f64>() / (nb - 1.0) / nb).sqrt()
            })
            .collect()
    } else {
        frequencies
            .iter()
            .map(|f| {
                let v: f64 = h
                    .lags
                    .iter()
                    .zip(&h.stderr)
                    .zip(&weights)
                    .map(|((t, s), w)| (delta * w * s * (2.0 * std::f64::consts::PI * f * t).cos()).powi(2))
                    .sum();
                v.sqrt()
            })
            .collect()
    };
    Ok(SqueezingSpectrum { frequencies, values, stderr })
}
