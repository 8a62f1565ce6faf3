//! Mean and variance of a thermal oscillator's energy under a continuous
//! (Boltzmann integral) and a discrete (Planck sum) energy variable.
//!
//! Everything is expressed through the dimensionless `x = hν/kT`; energies
//! are in units of `hν`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalParameter(f64);

impl ThermalParameter {
    pub fn new(x: f64) -> Result<Self> {
        if x > 0.0 && x.is_finite() {
            Ok(Self(x))
        } else {
            Err(Error::InvalidParameter { name: "x", reason: format!("must be > 0, got {x}") })
        }
    }
    pub fn value(self) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyMoments {
    pub mean: f64,
    pub variance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnergyModel {
    Continuous,
    Discrete,
}

impl std::str::FromStr for EnergyModel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "continuous" => Ok(Self::Continuous),
            "discrete" => Ok(Self::Discrete),
            other => Err(Error::InvalidParameter { name: "model", reason: format!("unknown energy model `{other}`") }),
        }
    }
}

/// `ȳ = 1/x`, `Δy² = ȳ²`.
pub fn moments_continuous(x: ThermalParameter) -> EnergyMoments {
    let mean = 1.0 / x.0;
    EnergyMoments { mean, variance: mean * mean }
}

/// `n̄ = 1/(eˣ−1)`, `Δn² = n̄² + n̄`.
pub fn moments_discrete(x: ThermalParameter) -> EnergyMoments {
    let mean = 1.0 / x.0.exp_m1();
    EnergyMoments { mean, variance: mean * mean + mean }
}

pub fn moments(x: ThermalParameter, model: EnergyModel) -> EnergyMoments {
    match model {
        EnergyModel::Continuous => moments_continuous(x),
        EnergyModel::Discrete => moments_discrete(x),
    }
}

/// Draw `n` energies from the Boltzmann-weighted distribution.
///
/// The discrete sampler is the exact inverse CDF of the geometric law
/// `P(n) = (1−q)qⁿ`, `q = e⁻ˣ`: `n = ⌊ln U / (−x)⌋` with `U ∈ (0,1]`.
pub fn sample_energy(x: ThermalParameter, model: EnergyModel, n: usize, stream: &mut RngStream) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidParameter { name: "n", reason: "need at least one sample".into() });
    }
    let x = x.0;
    Ok(match model {
        EnergyModel::Continuous => (0..n).map(|_| stream.exponential(1.0 / x)).collect(),
        EnergyModel::Discrete => (0..n).map(|_| (-stream.uniform_open0().ln() / x).floor()).collect(),
    })
}

/// Sample mean and unbiased variance, with their standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleMoments {
    pub mean: f64,
    pub variance: f64,
    pub mean_stderr: f64,
    pub variance_stderr: f64,
    pub n: usize,
}

pub fn sample_moments(samples: &[f64]) -> SampleMoments {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let (mut m2, mut m4) = (0.0, 0.0);
    for &s in samples {
        let d = (s - mean).powi(2);
        m2 += d;
        m4 += d * d;
    }
    let variance = m2 / (n - 1.0).max(1.0);
    let m2n = m2 / n;
    let m4n = m4 / n;
    SampleMoments {
        mean,
        variance,
        mean_stderr: (variance / n).sqrt(),
        // large-n standard error of the sample variance
        variance_stderr: ((m4n - m2n * m2n).max(0.0) / n).sqrt(),
        n: samples.len(),
    }
}
