use std::path::Path;
use std::time::Instant;

use lightfluct::detection::run_semiclassical_correlator;
use lightfluct::field::LocalOscillator;
use lightfluct::numerics::RngStream;
use lightfluct::quantum::{mean_field_phase, run_trajectories};
use rayon::prelude::*;

use crate::config::{Engine, ExperimentConfig};
use crate::error::{CliError, CliResult};
use crate::manifest::{write_artifact, RecordSet, RunManifest, CONFIG_FILE};

fn name(kind: &str, i: usize, ext: &str) -> String {
    format!("records/{kind}_{i:05}.{ext}")
}

/// Resolved LO phase: the configured one, or the phase of the mean field.
pub fn lo_phase(cfg: &ExperimentConfig) -> CliResult<f64> {
    match (cfg.detection.lo_phase, cfg.engine) {
        (Some(p), _) => Ok(p),
        (None, Engine::Semiclassical) => Ok(cfg.model.mean_phase()),
        (None, Engine::Quantum) => Ok(mean_field_phase(&cfg.system)?),
    }
}

fn semiclassical(cfg: &ExperimentConfig, dir: &Path, phase: f64) -> CliResult<Vec<RecordSet>> {
    let lo = LocalOscillator::new(cfg.detection.lo_amplitude, phase).map_err(|e| CliError::Config(format!("[detection] {e}")))?;
    let settings = cfg.correlator_settings();
    let stream = RngStream::new(cfg.run.seed, 0);
    let model_name = cfg.model.name();
    (0..cfg.run.n_trajectories)
        .into_par_iter()
        .map(|i| {
            let r = run_semiclassical_correlator(&cfg.model, &lo, &settings, cfg.run.duration, &stream.derive(i as u64))?;
            Ok(RecordSet {
                index: i,
                counts: write_artifact(dir, &name("counts", i, "txt"), &r.triggers.to_text(cfg.run.seed, model_name))?,
                current: write_artifact(dir, &name("current", i, "csv"), &r.current.to_csv())?,
                expected_current: None,
                counting_rate: None,
            })
        })
        .collect()
}

fn quantum(cfg: &ExperimentConfig, dir: &Path, phase: f64) -> CliResult<Vec<RecordSet>> {
    let u = cfg.unraveling(phase);
    let stream = RngStream::new(cfg.run.seed, 0);
    let sets = run_trajectories(&cfg.system, &u, cfg.run.duration, cfg.run.n_trajectories, &stream, |i, r| {
        let write = || -> CliResult<RecordSet> {
            Ok(RecordSet {
                index: i,
                counts: write_artifact(dir, &name("counts", i, "txt"), &r.jump_times.to_text(cfg.run.seed, "quantum"))?,
                current: write_artifact(dir, &name("current", i, "csv"), &r.quadrature_current.to_csv())?,
                expected_current: Some(write_artifact(dir, &name("expected_current", i, "csv"), &r.expected_current.to_csv())?),
                counting_rate: Some(write_artifact(dir, &name("counting_rate", i, "csv"), &r.counting_rate.to_csv())?),
            })
        };
        Ok(write())
    })?;
    sets.into_iter().collect()
}

/// Generate every record of `cfg` under `dir` and write the manifest.
pub fn run(cfg: &ExperimentConfig, dir: &Path) -> CliResult<RunManifest> {
    cfg.validate()?;
    let start = Instant::now();
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let config = write_artifact(dir, CONFIG_FILE, &cfg.to_toml())?;
    let phase = lo_phase(cfg)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.run.workers)
        .build()
        .map_err(|e| CliError::Runtime(format!("thread pool: {e}")))?;
    let records = pool.install(|| match cfg.engine {
        Engine::Semiclassical => semiclassical(cfg, dir, phase),
        Engine::Quantum => quantum(cfg, dir, phase),
    })?;
    let manifest = RunManifest {
        engine_version: env!("CARGO_PKG_VERSION").to_string(),
        engine: cfg.engine,
        config_hash: cfg.hash(),
        seed: cfg.run.seed,
        lo_phase: phase,
        config,
        records,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    };
    manifest.save(dir)?;
    Ok(manifest)
}
