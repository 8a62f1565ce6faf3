//! Simulation of the photodetection statistics that separate a classical,
//! semiclassically detected field from a quantized one: blackbody energy
//! fluctuations, Poisson photodetection of classical field paths, a driven
//! single-atom cavity solved by master equation and quantum trajectories,
//! and the estimators and classical-bound audits that compare them.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analyzers;
pub mod blackbody;
pub mod detection;
pub mod error;
pub mod field;
pub mod numerics;
pub mod quantum;
pub mod records;

pub use error::{Error, Result};
