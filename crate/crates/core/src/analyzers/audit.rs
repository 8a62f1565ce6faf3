//! Classical-bound audits with a three-standard-error decision rule.

use serde::{Deserialize, Serialize};

use super::CorrelationSeries;

/// A margin counts as a violation only beyond this many standard errors.
pub const SIGMA_RULE: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Satisfied,
    Violated,
    Inconclusive,
}

/// One inequality. `margin` is the signed amount by which the estimate
/// breaks the bound (negative when the bound holds), reported at the lag
/// where `margin / stderr` is largest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub inequality: String,
    pub lag: f64,
    pub margin: f64,
    pub stderr: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub checks: Vec<Check>,
}

impl AuditReport {
    pub fn violations(&self) -> usize {
        self.checks.iter().filter(|c| c.verdict == Verdict::Violated).count()
    }

    pub fn any_inconclusive(&self) -> bool {
        self.checks.iter().any(|c| c.verdict == Verdict::Inconclusive)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn verdict(&self, name: &str) -> Option<Verdict> {
        self.check(name).map(|c| c.verdict)
    }
}

fn decide(margin: f64, stderr: f64) -> Verdict {
    if !margin.is_finite() || !stderr.is_finite() {
        Verdict::Inconclusive
    } else if margin > SIGMA_RULE * stderr {
        Verdict::Violated
    } else {
        Verdict::Satisfied
    }
}

fn score(margin: f64, stderr: f64) -> f64 {
    if stderr > 0.0 {
        margin / stderr
    } else if margin > 0.0 {
        f64::INFINITY
    } else if margin < 0.0 {
        f64::NEG_INFINITY
    } else {
        0.0
    }
}

/// Worst case over a set of `(lag, margin, stderr)` candidates.
fn worst(name: &str, inequality: &str, candidates: impl Iterator<Item = (f64, f64, f64)>) -> Check {
    let mut best: Option<(f64, f64, f64)> = None;
    let mut inconclusive = false;
    for (lag, m, s) in candidates {
        if !s.is_finite() {
            inconclusive = true;
            continue;
        }
        if best.is_none_or(|(_, bm, bs)| score(m, s) > score(bm, bs)) {
            best = Some((lag, m, s));
        }
    }
    let (lag, margin, stderr) = best.unwrap_or((0.0, f64::NAN, f64::INFINITY));
    let mut verdict = decide(margin, stderr);
    if inconclusive && verdict == Verdict::Satisfied {
        verdict = Verdict::Inconclusive;
    }
    Check { name: name.into(), inequality: inequality.into(), lag, margin, stderr, verdict }
}

fn zero_delay(series: &CorrelationSeries, name: &str, inequality: &str) -> Check {
    match series.at_zero() {
        Some((v, s)) => worst(name, inequality, std::iter::once((0.0, 1.0 - v, s))),
        None => worst(name, inequality, std::iter::empty()),
    }
}

fn bounded_by_zero_delay(series: &CorrelationSeries, name: &str, inequality: &str) -> Check {
    let Some(z) = series.zero_index() else {
        return worst(name, inequality, std::iter::empty());
    };
    let (v0, s0) = (series.values[z], series.stderr[z]);
    let cands = (0..series.len()).filter(|&i| i != z).map(|i| {
        let m = (series.values[i] - 1.0).abs() - (v0 - 1.0).abs();
        (series.lags[i], m, series.stderr[i].hypot(s0))
    });
    worst(name, inequality, cands)
}

/// The h-side bounds: `h(0) ≥ 1`, `|h(τ)−1| ≤ |h(0)−1|` and `h(τ) ≤ 2`.
pub fn audit_h(h: &CorrelationSeries) -> Vec<Check> {
    vec![
        zero_delay(h, "h_zero_delay", "h(0) >= 1"),
        bounded_by_zero_delay(h, "h_bounded_by_zero_delay", "|h(tau)-1| <= |h(0)-1|"),
        worst(
            "h_absolute_bound",
            "h(tau) <= 2",
            (0..h.len()).map(|i| (h.lags[i], h.values[i] - 2.0, h.stderr[i])),
        ),
    ]
}

/// Evaluate the classical intensity-correlation inequalities on `g2`, and
/// the wave-particle bounds on `h` when given.
pub fn audit_classical_bounds(g2: &CorrelationSeries, h: Option<&CorrelationSeries>) -> AuditReport {
    let mut checks = vec![
        zero_delay(g2, "g2_zero_delay", "g2(0) - 1 >= 0"),
        bounded_by_zero_delay(g2, "g2_bounded_by_zero_delay", "|g2(tau)-1| <= |g2(0)-1|"),
    ];
    if let Some(h) = h {
        checks.extend(audit_h(h));
    }
    AuditReport { checks }
}
