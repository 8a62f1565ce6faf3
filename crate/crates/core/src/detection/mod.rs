//! Semiclassical photodetection: a classical intensity drives an
//! inhomogeneous Poisson process of photoelectrons. Builds count records,
//! balanced-homodyne difference currents, and the click-triggered
//! wave-particle correlator.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analyzers::{CorrelationSeries, G2Accumulator, Normalization, TriggeredAverage};
use crate::error::{require_nonneg, require_positive, Error, Result};
use crate::field::{generate_path, mix_with_local_oscillator, split_beam, FieldModel, FieldPath, LocalOscillator};
use crate::numerics::{RngStream, TimeGrid};
use crate::records::{CountRecord, PhotocurrentRecord};

/// Ratio of the thinning majorant to the largest sampled intensity.
pub const MAJORANT_FACTOR: f64 = 1.1;

/// Non-ideal detector hooks. The defaults describe the ideal detector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectorConfig {
    pub efficiency: f64,
    pub dark_rate: f64,
    /// Non-paralyzable dead time after each registered count.
    pub dead_time: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self { efficiency: 1.0, dark_rate: 0.0, dead_time: 0.0 }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.efficiency > 0.0 && self.efficiency <= 1.0) {
            return Err(Error::InvalidParameter { name: "efficiency", reason: format!("{} not in (0, 1]", self.efficiency) });
        }
        require_nonneg("dark_rate", self.dark_rate)?;
        require_nonneg("dead_time", self.dead_time)
    }
}

fn check_intensity(intensity: &[f64], grid: &TimeGrid) -> Result<f64> {
    if intensity.len() != grid.len() {
        return Err(Error::DimensionMismatch { expected: grid.len(), found: intensity.len() });
    }
    let mut max = 0.0f64;
    for (index, &value) in intensity.iter().enumerate() {
        if !value.is_finite() {
            return Err(Error::NonFinite("intensity"));
        }
        if value < 0.0 {
            return Err(Error::NegativeIntensity { index, value });
        }
        max = max.max(value);
    }
    Ok(max)
}

/// Photoelectron times for a rate equal to `intensity`, held constant over
/// each grid cell, on the window `[t_start, t_end]`. Sampled by thinning a
/// homogeneous process at `MAJORANT_FACTOR × max(intensity)`.
pub fn sample_counts(intensity: &[f64], grid: TimeGrid, stream: &mut RngStream) -> Result<CountRecord> {
    sample_counts_with(intensity, grid, &DetectorConfig::default(), stream)
}

pub fn sample_counts_with(
    intensity: &[f64],
    grid: TimeGrid,
    detector: &DetectorConfig,
    stream: &mut RngStream,
) -> Result<CountRecord> {
    detector.validate()?;
    let max = check_intensity(intensity, &grid)?;
    let (t0, t1) = (grid.t_start(), grid.t_end());
    let majorant = MAJORANT_FACTOR * (detector.efficiency * max + detector.dark_rate);
    let mut ts = Vec::new();
    if majorant > 0.0 {
        let mut t = t0 + stream.exponential(1.0 / majorant);
        let mut last = f64::NEG_INFINITY;
        while t < t1 {
            let k = (((t - t0) / grid.dt()) as usize).min(grid.len() - 1);
            let rate = detector.efficiency * intensity[k] + detector.dark_rate;
            if stream.uniform() * majorant < rate && t - last >= detector.dead_time && t > last {
                ts.push(t);
                last = t;
            }
            t += stream.exponential(1.0 / majorant);
        }
    }
    CountRecord::new(ts, t0, t1)
}

/// One-pole low-pass coefficient `β = 1 − exp(−2π B dt)` for the update
/// `y ← y + β (x − y)`.
pub fn filter_coefficient(bandwidth: f64, dt: f64) -> f64 {
    1.0 - (-2.0 * PI * bandwidth * dt).exp()
}

/// Counts per cell of `grid`.
fn bin_counts(record: &CountRecord, grid: &TimeGrid) -> Vec<f64> {
    let mut bins = vec![0.0; grid.len()];
    for &t in record.timestamps() {
        if let Some(k) = grid.cell_of(t) {
            bins[k] += 1.0;
        } else if t >= grid.t_end() {
            bins[grid.len() - 1] += 1.0;
        }
    }
    bins
}

/// Balanced-homodyne difference current: two independent count records at
/// the port intensities, binned into impulses `(n₁ − n₂)/dt`, then one-pole
/// filtered at `bandwidth`. The filter starts at the first-cell rate
/// difference so no start-up transient appears.
pub fn bhd_difference_current(
    port1: &[f64],
    port2: &[f64],
    grid: TimeGrid,
    bandwidth: f64,
    stream: &mut RngStream,
) -> Result<PhotocurrentRecord> {
    require_positive("bandwidth", bandwidth)?;
    if bandwidth > grid.nyquist() * (1.0 + 1e-12) {
        return Err(Error::BandwidthAboveNyquist { bandwidth, nyquist: grid.nyquist() });
    }
    check_intensity(port1, &grid)?;
    check_intensity(port2, &grid)?;
    let c1 = sample_counts(port1, grid, &mut stream.derive(1))?;
    let c2 = sample_counts(port2, grid, &mut stream.derive(2))?;
    let (b1, b2) = (bin_counts(&c1, &grid), bin_counts(&c2, &grid));
    let dt = grid.dt();
    let beta = filter_coefficient(bandwidth, dt);
    let mut y = port1[0] - port2[0];
    let samples = b1
        .iter()
        .zip(&b2)
        .map(|(n1, n2)| {
            y += beta * ((n1 - n2) / dt - y);
            y
        })
        .collect();
    PhotocurrentRecord::new(grid, samples, bandwidth)
}

/// Analytic noise widths (standard deviations) of the filtered difference
/// current.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseWidthPrediction {
    /// `A_LO·√(π B)`: shot noise of total rate `A_LO²` through the filter,
    /// whose equivalent noise bandwidth is `π B / 2`.
    pub shot_width: f64,
    /// `2 A_LO·√var(x)`, for a signal quadrature `x` slow compared with `B`.
    pub signal_width: f64,
}

impl NoiseWidthPrediction {
    /// Independent contributions add in quadrature.
    pub fn total(&self) -> f64 {
        self.shot_width.hypot(self.signal_width)
    }
}

/// Widths in the continuous-time limit `B·dt → 0`.
pub fn predict_noise_widths(lo: &LocalOscillator, signal_variance: f64, bandwidth: f64) -> Result<NoiseWidthPrediction> {
    require_nonneg("signal_variance", signal_variance)?;
    require_nonneg("bandwidth", bandwidth)?;
    let a = lo.amplitude;
    Ok(NoiseWidthPrediction { shot_width: a * (PI * bandwidth).sqrt(), signal_width: 2.0 * a * signal_variance.sqrt() })
}

/// Widths for the discrete filter on a grid of step `dt`: the impulse
/// variance `A_LO²/dt` is reduced by `β/(2 − β)`.
pub fn predict_noise_widths_discrete(
    lo: &LocalOscillator,
    signal_variance: f64,
    bandwidth: f64,
    dt: f64,
) -> Result<NoiseWidthPrediction> {
    let mut p = predict_noise_widths(lo, signal_variance, bandwidth)?;
    require_positive("dt", dt)?;
    let beta = filter_coefficient(bandwidth, dt);
    p.shot_width = lo.amplitude * (beta / (2.0 - beta) / dt).sqrt();
    Ok(p)
}

/// Sampling and analysis settings for the wave-particle correlator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelatorSettings {
    pub dt: f64,
    pub bandwidth: f64,
    pub halfwidth: f64,
    /// Lag bin of the conditional average; rounded to an odd sample count.
    pub bin_width: f64,
    pub detector: DetectorConfig,
}

impl CorrelatorSettings {
    pub fn validate(&self) -> Result<()> {
        require_positive("dt", self.dt)?;
        require_positive("bandwidth", self.bandwidth)?;
        require_positive("halfwidth", self.halfwidth)?;
        require_positive("bin_width", self.bin_width)?;
        if self.bandwidth > 0.5 / self.dt {
            return Err(Error::BandwidthAboveNyquist { bandwidth: self.bandwidth, nyquist: 0.5 / self.dt });
        }
        self.detector.validate()
    }
}

/// One realization of the correlator.
#[derive(Debug, Clone)]
pub struct CorrelatorRun {
    pub path: FieldPath,
    /// Clicks of the particle detector.
    pub triggers: CountRecord,
    /// Homodyne current of the wave detector.
    pub current: PhotocurrentRecord,
    pub accumulator: TriggeredAverage,
    /// Raw click-conditioned average of the current; `None` without usable
    /// triggers.
    pub conditional: Option<CorrelationSeries>,
    pub counts_used: u64,
    pub unconditional_mean: f64,
}

/// Generate a field path, split it 50/50, count one arm and homodyne the
/// other, and average current segments centred on each click.
pub fn run_semiclassical_correlator(
    model: &FieldModel,
    lo: &LocalOscillator,
    settings: &CorrelatorSettings,
    duration: f64,
    stream: &RngStream,
) -> Result<CorrelatorRun> {
    settings.validate()?;
    if settings.halfwidth * 4.0 > duration {
        return Err(Error::InvalidParameter { name: "halfwidth", reason: "must be much shorter than the duration".into() });
    }
    let grid = TimeGrid::covering(duration, settings.dt)?;
    let path = generate_path(model, grid, &mut stream.derive(0))?;
    let (particle_arm, wave_arm) = split_beam(&path);
    let triggers = sample_counts_with(&particle_arm.intensity(), grid, &settings.detector, &mut stream.derive(1))?;
    let (p1, p2) = mix_with_local_oscillator(&wave_arm, lo)?;
    let current = bhd_difference_current(&p1.intensity(), &p2.intensity(), grid, settings.bandwidth, &mut stream.derive(2))?;
    let mut accumulator = TriggeredAverage::new(settings.dt, settings.halfwidth, settings.bin_width)?;
    accumulator.add(&triggers, &current)?;
    let conditional = match accumulator.finish(Normalization::Raw) {
        Ok(s) => Some(s),
        Err(Error::InsufficientEvents(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(CorrelatorRun {
        counts_used: accumulator.segments(),
        unconditional_mean: current.mean(),
        path,
        triggers,
        current,
        accumulator,
        conditional,
    })
}

/// Merged statistics of independent correlator realizations.
#[derive(Debug, Clone)]
pub struct SemiclassicalEnsemble {
    pub g2: G2Accumulator,
    pub h: TriggeredAverage,
    pub realizations: usize,
    pub counts: u64,
}

/// Run `realizations` independent correlators on streams derived from
/// `stream` by realization index. Realizations run in parallel; their
/// accumulators are merged in index order, so results do not depend on the
/// thread count.
#[allow(clippy::too_many_arguments)]
pub fn run_semiclassical_ensemble(
    model: &FieldModel,
    lo: &LocalOscillator,
    settings: &CorrelatorSettings,
    duration: f64,
    realizations: usize,
    g2_bin_width: f64,
    g2_max_lag: f64,
    stream: &RngStream,
) -> Result<SemiclassicalEnsemble> {
    if realizations == 0 {
        return Err(Error::InvalidParameter { name: "realizations", reason: "must be at least 1".into() });
    }
    let parts: Vec<Result<(G2Accumulator, TriggeredAverage, u64)>> = (0..realizations)
        .into_par_iter()
        .map(|i| {
            let run = run_semiclassical_correlator(model, lo, settings, duration, &stream.derive(i as u64))?;
            let mut g2 = G2Accumulator::new(g2_bin_width, g2_max_lag)?;
            g2.add(&run.triggers);
            Ok((g2, run.accumulator, run.triggers.len() as u64))
        })
        .collect();
    let mut iter = parts.into_iter();
    let (mut g2, mut h, mut counts) = iter.next().expect("at least one realization")?;
    for p in iter {
        let (g, a, c) = p?;
        g2.merge(&g);
        h.merge(&a);
        counts += c;
    }
    Ok(SemiclassicalEnsemble { g2, h, realizations, counts })
}
