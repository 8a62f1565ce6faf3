//! Experiment configuration: a TOML file with one table per block. Every
//! field has a default and unknown keys are rejected.

use std::path::Path;

use lightfluct::detection::{CorrelatorSettings, DetectorConfig};
use lightfluct::field::FieldModel;
use lightfluct::quantum::{MixedUnraveling, SystemParams};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const SEED_ENV: &str = "LIGHTFLUCT_SEED";
pub const OUTPUT_DIR_ENV: &str = "LIGHTFLUCT_OUTPUT_DIR";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    #[default]
    Semiclassical,
    Quantum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub engine: Engine,
    /// Classical field model, used by the semiclassical engine.
    pub model: FieldModel,
    /// Atom-cavity parameters, used by the quantum engine.
    pub system: SystemParams,
    pub detection: DetectionConfig,
    pub run: RunConfig,
    pub analysis: AnalysisConfig,
    pub units: UnitsConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            engine: Engine::default(),
            model: FieldModel::Coherent { amplitude: 2.0, phase: 0.0 },
            system: SystemParams::default(),
            detection: DetectionConfig::default(),
            run: RunConfig::default(),
            analysis: AnalysisConfig::default(),
            units: UnitsConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectionConfig {
    pub lo_amplitude: f64,
    /// LO phase; when absent the phase of the mean field is used.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lo_phase: Option<f64>,
    /// Post-detection filter bandwidth (semiclassical engine).
    pub bandwidth: f64,
    /// Fraction of the cavity output sent to the counter (quantum engine;
    /// the semiclassical correlator always splits 50/50).
    pub split_to_counter: f64,
    pub efficiency: f64,
    pub dark_rate: f64,
    pub dead_time: f64,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        let d = DetectorConfig::default();
        Self {
            lo_amplitude: 10.0,
            lo_phase: None,
            bandwidth: 10.0,
            split_to_counter: 0.5,
            efficiency: d.efficiency,
            dark_rate: d.dark_rate,
            dead_time: d.dead_time,
        }
    }
}

impl DetectionConfig {
    pub fn detector(&self) -> DetectorConfig {
        DetectorConfig { efficiency: self.efficiency, dark_rate: self.dark_rate, dead_time: self.dead_time }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Recorded duration of each realization or trajectory.
    pub duration: f64,
    pub dt: f64,
    pub n_trajectories: usize,
    pub seed: u64,
    /// Unrecorded quantum evolution before the record starts.
    pub settle: f64,
    /// Worker threads; 0 uses every available core.
    pub workers: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self { duration: 400.0, dt: 0.01, n_trajectories: 8, seed: 1, settle: 20.0, workers: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    /// Lag bin of the pair histogram and of measured-current averages.
    pub bin_width: f64,
    /// Largest `|τ|` of the g² estimate.
    pub max_lag: f64,
    /// Largest `|τ|` of the h estimate.
    pub halfwidth: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self { bin_width: 0.11, max_lag: 2.0, halfwidth: 2.0 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnitMode {
    #[default]
    Dimensionless,
    Si,
}

/// Report-time relabeling: one time unit (1/κ) equals `time_unit_ns`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UnitsConfig {
    pub mode: UnitMode,
    pub time_unit_ns: f64,
}

impl Default for UnitsConfig {
    fn default() -> Self {
        Self { mode: UnitMode::Dimensionless, time_unit_ns: 50.0 }
    }
}

impl UnitsConfig {
    /// Frequency in MHz for a frequency in cycles per time unit, if SI.
    pub fn mhz(&self, f: f64) -> Option<f64> {
        (self.mode == UnitMode::Si).then(|| f / self.time_unit_ns * 1e3)
    }

    pub fn ns(&self, tau: f64) -> Option<f64> {
        (self.mode == UnitMode::Si).then_some(tau * self.time_unit_ns)
    }
}

fn field_error(block: &str, e: lightfluct::Error) -> CliError {
    CliError::Config(format!("[{block}] {e}"))
}

fn positive(key: &str, v: f64) -> CliResult<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::Config(format!("{key} must be positive, got {v}")))
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Read `path`, then apply the seed override from the environment.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        if let Ok(s) = std::env::var(SEED_ENV) {
            cfg.run.seed = s.trim().parse().map_err(|e| CliError::Config(format!("{SEED_ENV}=`{s}`: {e}")))?;
            cfg.validate()?;
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical serialization.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }

    pub fn validate(&self) -> CliResult<()> {
        let r = &self.run;
        positive("run.duration", r.duration)?;
        positive("run.dt", r.dt)?;
        if r.n_trajectories == 0 {
            return Err(CliError::Config("run.n_trajectories must be at least 1".into()));
        }
        if r.seed > i64::MAX as u64 {
            return Err(CliError::Config(format!("run.seed must be below 2^63, got {}", r.seed)));
        }
        if !(r.settle >= 0.0 && r.settle.is_finite()) {
            return Err(CliError::Config(format!("run.settle must be non-negative, got {}", r.settle)));
        }
        let a = &self.analysis;
        positive("analysis.bin_width", a.bin_width)?;
        positive("analysis.max_lag", a.max_lag)?;
        positive("analysis.halfwidth", a.halfwidth)?;
        if 4.0 * a.halfwidth.max(a.max_lag) > r.duration {
            return Err(CliError::Config("analysis.halfwidth and analysis.max_lag must be below run.duration / 4".into()));
        }
        positive("units.time_unit_ns", self.units.time_unit_ns)?;
        let d = &self.detection;
        if d.lo_phase.is_some_and(|p| !p.is_finite()) {
            return Err(CliError::Config("detection.lo_phase must be finite".into()));
        }
        match self.engine {
            Engine::Semiclassical => {
                self.model.validate().map_err(|e| field_error("model", e))?;
                self.correlator_settings().validate().map_err(|e| field_error("detection", e))?;
                positive("detection.lo_amplitude", d.lo_amplitude)?;
                if d.split_to_counter != 0.5 {
                    return Err(CliError::Config("detection.split_to_counter: the semiclassical correlator splits 50/50".into()));
                }
            }
            Engine::Quantum => {
                self.system.validate().map_err(|e| field_error("system", e))?;
                self.unraveling(0.0).validate(&self.system).map_err(|e| field_error("detection", e))?;
                if d.detector() != DetectorConfig::default() {
                    return Err(CliError::Config("detection.efficiency/dark_rate/dead_time: the quantum engine models an ideal detector".into()));
                }
            }
        }
        Ok(())
    }

    pub fn correlator_settings(&self) -> CorrelatorSettings {
        CorrelatorSettings {
            dt: self.run.dt,
            bandwidth: self.detection.bandwidth,
            halfwidth: self.analysis.halfwidth,
            bin_width: self.analysis.bin_width,
            detector: self.detection.detector(),
        }
    }

    pub fn unraveling(&self, lo_phase: f64) -> MixedUnraveling {
        MixedUnraveling { split_to_counter: self.detection.split_to_counter, lo_phase, dt: self.run.dt, settle: self.run.settle }
    }
}
