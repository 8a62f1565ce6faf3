use std::path::Path;

use lightfluct::analyzers::{
    audit_classical_bounds, squeezing_spectrum, AuditReport, CorrelationSeries, G2Accumulator, Normalization, SqueezingSpectrum, TriggeredAverage,
    SIGMA_RULE,
};
use lightfluct::records::{CountRecord, PhotocurrentRecord};
use lightfluct::Error;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Engine, ExperimentConfig};
use crate::error::{CliError, CliResult};
use crate::manifest::{write_artifact, Artifact, RunManifest};

/// Analysis parameters that may be overridden on the command line.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub bin_width: Option<f64>,
    pub max_lag: Option<f64>,
    pub halfwidth: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

impl Estimate {
    fn at_zero(s: &CorrelationSeries) -> Option<Self> {
        s.at_zero().map(|(value, stderr)| Self { value, stderr })
    }
}

/// What `analyze` produced, before it is written out.
pub struct Analysis {
    pub g2: Option<CorrelationSeries>,
    pub h: Option<CorrelationSeries>,
    pub spectrum: Option<SqueezingSpectrum>,
    /// Raw-record estimates, kept separately when the headline estimates
    /// are conditional (quantum engine).
    pub measured_g2: Option<CorrelationSeries>,
    pub measured_h: Option<CorrelationSeries>,
    pub report: Value,
    pub audit: AuditReport,
    pub problems: Vec<String>,
}

fn load_counts(dir: &Path, a: &Artifact) -> CliResult<CountRecord> {
    CountRecord::from_text(&RunManifest::read(dir, a)?).map_err(|e| CliError::Runtime(format!("{}: {e}", a.path)))
}

fn load_current(dir: &Path, a: &Artifact) -> CliResult<PhotocurrentRecord> {
    PhotocurrentRecord::from_csv(&RunManifest::read(dir, a)?).map_err(|e| CliError::Runtime(format!("{}: {e}", a.path)))
}

fn missing(a: &Option<Artifact>, what: &str) -> CliResult<Artifact> {
    a.clone().ok_or_else(|| CliError::Runtime(format!("quantum run lacks {what} records")))
}

/// Finish an estimator, turning statistical shortfalls into a note.
fn settle(r: lightfluct::Result<CorrelationSeries>, what: &str, problems: &mut Vec<String>) -> CliResult<Option<CorrelationSeries>> {
    match r {
        Ok(s) => Ok(Some(s)),
        Err(e @ (Error::InsufficientEvents(_) | Error::UndefinedNormalization(_))) => {
            problems.push(format!("{what}: {e}"));
            Ok(None)
        }
        Err(e) => Err(e.into()),
    }
}

/// Conditional estimates are valid for τ ≥ 0 only; extend them by symmetry.
fn symmetric_half(s: CorrelationSeries) -> CliResult<CorrelationSeries> {
    Ok(s.nonnegative_half().mirrored()?)
}

pub fn analyze(dir: &Path, overrides: Overrides) -> CliResult<Analysis> {
    let manifest = RunManifest::load(dir)?;
    let mut cfg = ExperimentConfig::parse(&RunManifest::read(dir, &manifest.config)?)?;
    let a = &mut cfg.analysis;
    a.bin_width = overrides.bin_width.unwrap_or(a.bin_width);
    a.max_lag = overrides.max_lag.unwrap_or(a.max_lag);
    a.halfwidth = overrides.halfwidth.unwrap_or(a.halfwidth);
    cfg.validate()?;
    let a = cfg.analysis;
    let dt = cfg.run.dt;
    let mut problems = Vec::new();

    let mut pairs = G2Accumulator::new(a.bin_width, a.max_lag)?;
    let mut measured = TriggeredAverage::new(dt, a.halfwidth, a.bin_width)?;
    let mut cond_g2 = TriggeredAverage::new(dt, a.max_lag, dt)?;
    let mut cond_h = TriggeredAverage::new(dt, a.halfwidth, dt)?;
    let mut events = 0usize;
    for set in &manifest.records {
        let counts = load_counts(dir, &set.counts)?;
        events += counts.len();
        pairs.add(&counts);
        measured.add(&counts, &load_current(dir, &set.current)?)?;
        if manifest.engine == Engine::Quantum {
            cond_g2.add(&counts, &load_current(dir, &missing(&set.counting_rate, "counting-rate")?)?)?;
            cond_h.add(&counts, &load_current(dir, &missing(&set.expected_current, "expected-current")?)?)?;
        }
    }

    // for the quantum engine the raw estimates are supplementary
    let mut notes = Vec::new();
    let sink = if manifest.engine == Engine::Quantum { &mut notes } else { &mut problems };
    let pair_g2 = settle(pairs.finish(), "g2 pair histogram", sink)?;
    let measured_h = settle(measured.finish(Normalization::H), "h from the measured current", sink)?;
    let (g2, h, estimator) = match manifest.engine {
        Engine::Semiclassical => (pair_g2.clone(), measured_h.clone(), "measured"),
        Engine::Quantum => {
            let g = settle(cond_g2.finish(Normalization::G2), "conditional g2", &mut problems)?.map(symmetric_half).transpose()?;
            let h = settle(cond_h.finish(Normalization::H), "conditional h", &mut problems)?.map(symmetric_half).transpose()?;
            (g, h, "conditional")
        }
    };

    let audit = match &g2 {
        Some(g) => audit_classical_bounds(g, h.as_ref()),
        None => AuditReport::default(),
    };
    if audit.any_inconclusive() {
        problems.push("audit has inconclusive checks".into());
    }
    let spectrum = match &h {
        Some(h) => Some(squeezing_spectrum(h)?),
        None => None,
    };
    let spectrum_min = spectrum.as_ref().and_then(|s| s.minimum()).map(|(f, v, se)| {
        json!({ "frequency": f, "value": v, "stderr": se, "frequency_mhz": cfg.units.mhz(f) })
    });

    let mut report = json!({
        "engine": manifest.engine,
        "engine_version": manifest.engine_version,
        "config_hash": manifest.config_hash,
        "seed": manifest.seed,
        "lo_phase": manifest.lo_phase,
        "records": manifest.records.len(),
        "events": events,
        "estimator": estimator,
        "analysis": a,
        "units": cfg.units,
        "g2_zero": g2.as_ref().and_then(Estimate::at_zero),
        "h_zero": h.as_ref().and_then(Estimate::at_zero),
        "spectrum_minimum": spectrum_min,
        "sigma_rule": SIGMA_RULE,
        "violations": audit.violations(),
        "verdicts": audit.checks.iter().map(|c| (c.name.clone(), json!(c.verdict))).collect::<serde_json::Map<_, _>>(),
        "problems": problems,
    });
    if manifest.engine == Engine::Quantum {
        report["measured"] = json!({
            "g2_zero": pair_g2.as_ref().and_then(Estimate::at_zero),
            "h_zero": measured_h.as_ref().and_then(Estimate::at_zero),
            "notes": notes,
        });
    }
    let (measured_g2, measured_h) = match manifest.engine {
        Engine::Quantum => (pair_g2, measured_h),
        Engine::Semiclassical => (None, None),
    };
    Ok(Analysis { g2, h, spectrum, measured_g2, measured_h, report, audit, problems })
}

/// Run [`analyze`] and write g2.csv, h.csv, spectrum.csv, audit.json and
/// report.json into the run directory.
pub fn analyze_and_write(dir: &Path, overrides: Overrides) -> CliResult<Analysis> {
    let an = analyze(dir, overrides)?;
    if let Some(g) = &an.g2 {
        write_artifact(dir, "g2.csv", &g.to_csv())?;
    }
    if let Some(h) = &an.h {
        write_artifact(dir, "h.csv", &h.to_csv())?;
    }
    if let Some(s) = &an.spectrum {
        write_artifact(dir, "spectrum.csv", &s.to_csv())?;
    }
    if let Some(g) = &an.measured_g2 {
        write_artifact(dir, "g2_measured.csv", &g.to_csv())?;
    }
    if let Some(h) = &an.measured_h {
        write_artifact(dir, "h_measured.csv", &h.to_csv())?;
    }
    write_artifact(dir, "audit.json", &(serde_json::to_string_pretty(&an.audit).expect("audit serializes") + "\n"))?;
    write_artifact(dir, "report.json", &(serde_json::to_string_pretty(&an.report).expect("report serializes") + "\n"))?;
    Ok(an)
}
