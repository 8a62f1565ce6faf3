use std::fmt::Write as _;
use std::path::Path;

use lightfluct::analyzers::{CorrelationSeries, Normalization, SIGMA_RULE};
use lightfluct::records::fmt17;
use serde::Serialize;

use crate::error::{CliError, CliResult};

/// Shape of `h` at zero delay under the three-standard-error rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Extremum {
    /// `h(0)` significantly above 1 and not below any other lag.
    Maximum,
    /// `h(0)` significantly below 1 and not above any other lag.
    Minimum,
    Neither,
}

pub fn extremum_at_zero(h: &CorrelationSeries) -> Extremum {
    let Some(z) = h.zero_index() else { return Extremum::Neither };
    let (h0, s0) = (h.values[z], h.stderr[z]);
    let tol = |i: usize| SIGMA_RULE * h.stderr[i].hypot(s0);
    if h0 > 1.0 + SIGMA_RULE * s0 && (0..h.len()).all(|i| h0 >= h.values[i] - tol(i)) {
        Extremum::Maximum
    } else if h0 < 1.0 - SIGMA_RULE * s0 && (0..h.len()).all(|i| h0 <= h.values[i] + tol(i)) {
        Extremum::Minimum
    } else {
        Extremum::Neither
    }
}

#[derive(Debug, Serialize)]
pub struct SeriesDifference {
    pub name: &'static str,
    pub lags: usize,
    pub max_abs_difference: f64,
    /// Largest `|a − b| / √(se_a² + se_b²)`.
    pub max_z: f64,
    pub beyond_sigma_rule: usize,
}

#[derive(Debug, Serialize)]
pub struct Comparison {
    pub a: String,
    pub b: String,
    pub h_extremum_a: Extremum,
    pub h_extremum_b: Extremum,
    pub differences: Vec<SeriesDifference>,
    #[serde(skip)]
    pub table: String,
}

fn load(dir: &Path, file: &str, norm: Normalization) -> CliResult<CorrelationSeries> {
    let p = dir.join(file);
    let text = std::fs::read_to_string(&p).map_err(|e| CliError::Runtime(format!("{} (run `analyze` first?): {e}", p.display())))?;
    CorrelationSeries::from_csv(&text, norm).map_err(|e| CliError::Runtime(format!("{}: {e}", p.display())))
}

fn aligned(name: &str, a: &CorrelationSeries, b: &CorrelationSeries) -> CliResult<()> {
    let tol = 1e-9 * a.lag_step().abs().max(1e-300);
    if a.len() != b.len() || a.lags.iter().zip(&b.lags).any(|(x, y)| (x - y).abs() > tol) {
        return Err(CliError::Runtime(format!(
            "incompatible grids for {name}: {} lags (step {}) vs {} lags (step {})",
            a.len(),
            a.lag_step(),
            b.len(),
            b.lag_step()
        )));
    }
    Ok(())
}

fn difference(name: &'static str, a: &CorrelationSeries, b: &CorrelationSeries) -> SeriesDifference {
    let mut d = SeriesDifference { name, lags: a.len(), max_abs_difference: 0.0, max_z: 0.0, beyond_sigma_rule: 0 };
    for i in 0..a.len() {
        let diff = (a.values[i] - b.values[i]).abs();
        let se = a.stderr[i].hypot(b.stderr[i]);
        let z = if diff == 0.0 { 0.0 } else { diff / se };
        d.max_abs_difference = d.max_abs_difference.max(diff);
        d.max_z = d.max_z.max(z);
        d.beyond_sigma_rule += usize::from(z > SIGMA_RULE);
    }
    d
}

/// Align the `h` and `g²` estimates of two analyzed runs.
pub fn compare(a: &Path, b: &Path) -> CliResult<Comparison> {
    let (ha, hb) = (load(a, "h.csv", Normalization::H)?, load(b, "h.csv", Normalization::H)?);
    let (ga, gb) = (load(a, "g2.csv", Normalization::G2)?, load(b, "g2.csv", Normalization::G2)?);
    aligned("h", &ha, &hb)?;
    aligned("g2", &ga, &gb)?;
    let mut table = String::from("tau,h_a,stderr_a,h_b,stderr_b,difference,difference_stderr\n");
    for i in 0..ha.len() {
        let (diff, se) = (ha.values[i] - hb.values[i], ha.stderr[i].hypot(hb.stderr[i]));
        let row = [ha.lags[i], ha.values[i], ha.stderr[i], hb.values[i], hb.stderr[i], diff, se].map(fmt17);
        let _ = writeln!(table, "{}", row.join(","));
    }
    Ok(Comparison {
        a: a.display().to_string(),
        b: b.display().to_string(),
        h_extremum_a: extremum_at_zero(&ha),
        h_extremum_b: extremum_at_zero(&hb),
        differences: vec![difference("h", &ha, &hb), difference("g2", &ga, &gb)],
        table,
    })
}
