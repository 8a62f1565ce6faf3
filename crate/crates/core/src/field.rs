//! Classical stochastic light: complex-envelope field paths, 50/50 beam
//! splitting and superposition with a local oscillator.
//!
//! The carrier is factored out. An envelope sample `α_t = A_t e^{iφ_t}` is in
//! root-rate units, so `|α_t|²` is directly a photoelectron rate.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{require_nonneg, require_positive, Error, Result};
use crate::numerics::{RngStream, TimeGrid, C64};
use crate::records::{fmt17, parse_f64};

const SQRT_HALF: f64 = std::f64::consts::FRAC_1_SQRT_2;

#[derive(Debug, Clone, PartialEq)]
pub struct FieldPath {
    pub grid: TimeGrid,
    pub envelope: Vec<C64>,
}

impl FieldPath {
    pub fn new(grid: TimeGrid, envelope: Vec<C64>) -> Result<Self> {
        if envelope.len() != grid.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), found: envelope.len() });
        }
        if envelope.iter().any(|z| !z.is_finite()) {
            return Err(Error::NonFinite("field envelope"));
        }
        Ok(Self { grid, envelope })
    }

    /// `|α_t|²` at every sample.
    pub fn intensity(&self) -> Vec<f64> {
        self.envelope.iter().map(|z| z.norm_sqr()).collect()
    }

    /// In-phase quadrature `Re(α_t e^{-iθ})`.
    pub fn quadrature(&self, theta: f64) -> Vec<f64> {
        let rot = C64::from_polar(1.0, -theta);
        self.envelope.iter().map(|z| (z * rot).re).collect()
    }

    fn map(&self, f: impl Fn(C64) -> C64) -> Self {
        Self { grid: self.grid, envelope: self.envelope.iter().map(|&z| f(z)).collect() }
    }

    /// CSV text: `#` header lines, then `t,re,im` rows.
    pub fn to_csv(&self, model: &str, seed: u64) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# model={model}");
        let _ = writeln!(out, "# seed={seed}");
        let _ = writeln!(out, "# dt={}", fmt17(self.grid.dt()));
        let _ = writeln!(out, "t,re,im");
        for (k, z) in self.envelope.iter().enumerate() {
            let _ = writeln!(out, "{},{},{}", fmt17(self.grid.time(k)), fmt17(z.re), fmt17(z.im));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut dt = None;
        let mut times = Vec::new();
        let mut env = Vec::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            if let Some(h) = line.strip_prefix('#') {
                if let Some(v) = h.trim().strip_prefix("dt=") {
                    dt = Some(parse_f64(v)?);
                }
                continue;
            }
            if line.starts_with('t') {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 3 {
                return Err(Error::Parse(format!("expected t,re,im: `{line}`")));
            }
            times.push(parse_f64(cols[0])?);
            env.push(C64::new(parse_f64(cols[1])?, parse_f64(cols[2])?));
        }
        let dt = dt.ok_or_else(|| Error::Parse("missing `# dt=` header".into()))?;
        let t0 = *times.first().ok_or_else(|| Error::Parse("no samples".into()))?;
        Self::new(TimeGrid::new(t0, dt, env.len())?, env)
    }
}

/// Sign statistics of the burst amplitudes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BurstSign {
    /// Every burst adds to the background amplitude.
    #[default]
    Positive,
    /// Each burst sign is ±1 with equal probability.
    Symmetric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldModel {
    /// Noise-free wave of fixed amplitude and phase.
    Coherent { amplitude: f64, #[serde(default)] phase: f64 },
    /// Chaotic light: a stationary complex Ornstein-Uhlenbeck envelope with
    /// `⟨|z|²⟩ = mean_intensity` and amplitude correlation time
    /// `correlation_time`, optionally on top of a real coherent `offset`.
    ThermalOu {
        correlation_time: f64,
        mean_intensity: f64,
        #[serde(default)]
        offset: f64,
    },
    /// Background amplitude plus Poisson-placed bursts
    /// `s·amplitude·e^{-decay|t−t_k|} cos(frequency·(t−t_k))` centred on the
    /// burst times `t_k`. `frequency` and `decay` are angular rates.
    ModulatedBurst {
        background: f64,
        burst_rate: f64,
        burst_amplitude: f64,
        frequency: f64,
        decay: f64,
        #[serde(default)]
        sign: BurstSign,
    },
}

impl FieldModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            FieldModel::Coherent { amplitude, phase } => {
                require_nonneg("amplitude", amplitude)?;
                if !phase.is_finite() {
                    return Err(Error::NonFinite("phase"));
                }
            }
            FieldModel::ThermalOu { correlation_time, mean_intensity, offset } => {
                require_positive("correlation_time", correlation_time)?;
                require_positive("mean_intensity", mean_intensity)?;
                require_nonneg("offset", offset)?;
            }
            FieldModel::ModulatedBurst { background, burst_rate, burst_amplitude, frequency, decay, .. } => {
                require_nonneg("background", background)?;
                require_positive("burst_rate", burst_rate)?;
                require_nonneg("burst_amplitude", burst_amplitude)?;
                require_nonneg("frequency", frequency)?;
                require_positive("decay", decay)?;
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &'static str {
        match self {
            FieldModel::Coherent { .. } => "coherent",
            FieldModel::ThermalOu { .. } => "thermal_ou",
            FieldModel::ModulatedBurst { .. } => "modulated_burst",
        }
    }

    /// Phase of the mean field, i.e. the LO phase that measures the amplitude.
    pub fn mean_phase(&self) -> f64 {
        match *self {
            FieldModel::Coherent { phase, .. } => phase,
            _ => 0.0,
        }
    }

    /// Stationary mean intensity `⟨|α|²⟩`.
    pub fn mean_intensity(&self) -> f64 {
        match *self {
            FieldModel::Coherent { amplitude, .. } => amplitude * amplitude,
            FieldModel::ThermalOu { mean_intensity, offset, .. } => mean_intensity + offset * offset,
            FieldModel::ModulatedBurst { background, burst_rate, burst_amplitude, frequency, decay, sign } => {
                // Campbell: ⟨δ⟩ = λ∫f, ⟨δ²⟩−⟨δ⟩² = λ∫f²
                let int_f = 2.0 * decay / (decay * decay + frequency * frequency);
                let int_f2 = 0.5 / decay + decay / (2.0 * (decay * decay + frequency * frequency));
                let mean_delta = match sign {
                    BurstSign::Positive => burst_rate * burst_amplitude * int_f,
                    BurstSign::Symmetric => 0.0,
                };
                let var = burst_rate * burst_amplitude * burst_amplitude * int_f2;
                (background + mean_delta).powi(2) + var
            }
        }
    }

    /// Longest correlation time of the envelope, used to size windows.
    pub fn correlation_time(&self) -> f64 {
        match *self {
            FieldModel::Coherent { .. } => 0.0,
            FieldModel::ThermalOu { correlation_time, .. } => correlation_time,
            FieldModel::ModulatedBurst { decay, .. } => 1.0 / decay,
        }
    }
}

/// Sample one realization of `model` on `grid`.
pub fn generate_path(model: &FieldModel, grid: TimeGrid, stream: &mut RngStream) -> Result<FieldPath> {
    model.validate()?;
    let n = grid.len();
    let dt = grid.dt();
    let envelope = match *model {
        FieldModel::Coherent { amplitude, phase } => vec![C64::from_polar(amplitude, phase); n],
        FieldModel::ThermalOu { correlation_time, mean_intensity, offset } => {
            // exact OU update; each quadrature carries half the intensity
            let rho = (-dt / correlation_time).exp();
            let kick = (mean_intensity * (1.0 - rho * rho) / 2.0).sqrt();
            let s0 = (mean_intensity / 2.0).sqrt();
            let mut z = C64::new(s0 * stream.gaussian(), s0 * stream.gaussian());
            let mut env = Vec::with_capacity(n);
            for _ in 0..n {
                env.push(z + offset);
                z = z * rho + C64::new(kick * stream.gaussian(), kick * stream.gaussian());
            }
            env
        }
        FieldModel::ModulatedBurst { background, burst_rate, burst_amplitude, frequency, decay, sign } => {
            let mut delta = vec![0.0; n];
            let reach = 12.0 / decay;
            let (lo, hi) = (grid.t_start() - reach, grid.t_end() + reach);
            let mut t = lo + stream.exponential(1.0 / burst_rate);
            while t < hi {
                let s = match sign {
                    BurstSign::Positive => 1.0,
                    BurstSign::Symmetric => {
                        if stream.uniform() < 0.5 {
                            -1.0
                        } else {
                            1.0
                        }
                    }
                };
                let k0 = (((t - reach - grid.t_start()) / dt).floor().max(0.0)) as usize;
                let k1 = ((((t + reach - grid.t_start()) / dt).ceil()).max(0.0) as usize).min(n);
                for (k, d) in delta.iter_mut().enumerate().take(k1).skip(k0) {
                    let u = grid.time(k) - t;
                    *d += s * burst_amplitude * (-decay * u.abs()).exp() * (frequency * u).cos();
                }
                t += stream.exponential(1.0 / burst_rate);
            }
            delta.into_iter().map(|d| C64::new(background + d, 0.0)).collect()
        }
    };
    FieldPath::new(grid, envelope)
}

/// 50/50 beam splitter with vacuum in the unused port: both outputs carry
/// `α/√2`; the reflected arm's π phase is dropped since only intensities
/// and the LO-referenced quadrature of each arm are used downstream.
pub fn split_beam(path: &FieldPath) -> (FieldPath, FieldPath) {
    let half = path.map(|z| z * SQRT_HALF);
    (half.clone(), half)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalOscillator {
    pub amplitude: f64,
    pub phase: f64,
}

impl LocalOscillator {
    pub fn new(amplitude: f64, phase: f64) -> Result<Self> {
        require_nonneg("lo_amplitude", amplitude)?;
        if !phase.is_finite() {
            return Err(Error::NonFinite("lo_phase"));
        }
        Ok(Self { amplitude, phase })
    }

    pub fn envelope(&self) -> C64 {
        C64::from_polar(self.amplitude, self.phase)
    }
}

/// Superpose `signal` with the local oscillator on a 50/50 splitter:
/// port 1 = (LO + s)/√2, port 2 = (LO − s)/√2. The exact quadratic form is
/// kept; no `A_t ≪ A_LO` approximation is made here.
pub fn mix_with_local_oscillator(signal: &FieldPath, lo: &LocalOscillator) -> Result<(FieldPath, FieldPath)> {
    LocalOscillator::new(lo.amplitude, lo.phase)?;
    let l = lo.envelope();
    Ok((signal.map(|s| (l + s) * SQRT_HALF), signal.map(|s| (l - s) * SQRT_HALF)))
}
