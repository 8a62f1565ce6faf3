//! Small dense complex linear algebra, fixed-step ODE integration, DFT and
//! reproducible random streams.

mod dft;
mod grid;
mod matrix;
mod ode;
mod rng;

pub use dft::{discrete_fourier_transform, inverse_dft, Spectrum};
pub use grid::TimeGrid;
pub use matrix::{kron, ComplexMatrix, CsrMatrix, LinearOperator};
pub use ode::integrate_linear_ode;
pub(crate) use ode::Rk4;
pub use rng::{draw, DrawKind, RngStream};

pub use num_complex::Complex64 as C64;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

pub fn norm_sqr(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// ⟨u|v⟩
pub fn inner(u: &[C64], v: &[C64]) -> C64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}
