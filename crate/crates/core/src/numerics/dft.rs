use rustfft::FftPlanner;

use super::{C64, ZERO};
use crate::error::{require_positive, Error, Result};

/// One-sided spectrum of a real series: bins `k = 0..=N/2` at `k/(N·dt)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub frequencies: Vec<f64>,
    pub bins: Vec<C64>,
    /// Length of the transformed series.
    pub n: usize,
    pub dt: f64,
}

impl Spectrum {
    /// Index of the largest-magnitude bin, excluding zero frequency.
    pub fn peak_bin(&self) -> Option<usize> {
        (1..self.bins.len()).max_by(|&a, &b| self.bins[a].norm().total_cmp(&self.bins[b].norm()))
    }

    /// Two-sided energy Σ_k |X_k|² reconstructed from the one-sided bins.
    pub fn full_energy(&self) -> f64 {
        let n = self.n;
        self.bins
            .iter()
            .enumerate()
            .map(|(k, z)| {
                let paired = k != 0 && !(n.is_multiple_of(2) && k == n / 2);
                z.norm_sqr() * if paired { 2.0 } else { 1.0 }
            })
            .sum()
    }
}

/// Unnormalized forward DFT `X_k = Σ_n x_n e^{-2πikn/N}` of a real series.
pub fn discrete_fourier_transform(series: &[f64], dt: f64) -> Result<Spectrum> {
    if series.len() < 2 {
        return Err(Error::SeriesTooShort { needed: 2, found: series.len() });
    }
    require_positive("dt", dt)?;
    let n = series.len();
    let mut buf: Vec<C64> = series.iter().map(|&x| C64::new(x, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    buf.truncate(n / 2 + 1);
    let frequencies = (0..buf.len()).map(|k| k as f64 / (n as f64 * dt)).collect();
    Ok(Spectrum { frequencies, bins: buf, n, dt })
}

/// Inverse of [`discrete_fourier_transform`], rebuilding the real series.
pub fn inverse_dft(spectrum: &Spectrum) -> Vec<f64> {
    let n = spectrum.n;
    let mut full = vec![ZERO; n];
    for (k, z) in spectrum.bins.iter().enumerate() {
        full[k] = *z;
        if k != 0 && n - k != k {
            full[n - k] = z.conj();
        }
    }
    FftPlanner::new().plan_fft_inverse(n).process(&mut full);
    full.iter().map(|z| z.re / n as f64).collect()
}
