//! Source-agnostic estimators and auditors shared by both engines.

mod audit;
mod g2;
mod h;
mod series;
mod spectrum;

pub use audit::{audit_classical_bounds, audit_h, AuditReport, Check, Verdict, SIGMA_RULE};
pub use g2::{estimate_g2, G2Accumulator};
pub use h::{estimate_h, estimate_h_binned, TriggeredAverage, N_BATCHES};
pub use series::{CorrelationSeries, Normalization};
pub use spectrum::{squeezing_spectrum, SqueezingSpectrum, PADDING};
