use serde::{Deserialize, Serialize};

use crate::error::{require_nonneg, Error, Result};
use crate::numerics::{kron, ComplexMatrix, C64};

/// Which oscillator the coherent drive couples to.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DriveTarget {
    /// `drive·(σ + σ†)`
    #[default]
    Atom,
    /// `drive·(a + a†)`
    Cavity,
}

/// Resonant single-atom cavity with coherent drive, in units of the rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemParams {
    pub g: f64,
    pub kappa: f64,
    pub gamma: f64,
    pub drive: f64,
    pub fock_cutoff: usize,
    pub drive_target: DriveTarget,
}

impl Default for SystemParams {
    fn default() -> Self {
        Self { g: 3.0, kappa: 1.0, gamma: 1.0, drive: 0.1, fock_cutoff: 8, drive_target: DriveTarget::Atom }
    }
}

impl SystemParams {
    pub fn validate(&self) -> Result<()> {
        require_nonneg("g", self.g)?;
        require_nonneg("kappa", self.kappa)?;
        require_nonneg("gamma", self.gamma)?;
        if !self.drive.is_finite() {
            return Err(Error::NonFinite("drive"));
        }
        if self.fock_cutoff < 2 {
            return Err(Error::InvalidParameter { name: "fock_cutoff", reason: format!("{} < 2", self.fock_cutoff) });
        }
        Ok(())
    }

    /// Hilbert-space dimension `2·fock_cutoff`.
    pub fn dim(&self) -> usize {
        2 * self.fock_cutoff
    }

    /// Fastest rate in the model; steps must resolve it.
    pub fn max_rate(&self) -> f64 {
        self.kappa.max(self.gamma).max(self.g).max(self.drive.abs())
    }
}

/// Operators on atom ⊗ cavity, basis index `atom·N + n` with atom 0 the
/// ground state.
#[derive(Debug, Clone)]
pub struct OperatorSet {
    pub params: SystemParams,
    pub hamiltonian: ComplexMatrix,
    /// Cavity annihilation `a`; the detected output field is `√κ·a`.
    pub field: ComplexMatrix,
    /// Atomic lowering `σ`.
    pub sigma: ComplexMatrix,
    pub collapse_cavity: ComplexMatrix,
    pub collapse_atom: ComplexMatrix,
}

impl OperatorSet {
    pub fn dim(&self) -> usize {
        self.hamiltonian.rows()
    }

    pub fn number(&self) -> ComplexMatrix {
        &self.field.adjoint() * &self.field
    }

    /// `(a e^{−iθ} + a† e^{iθ}) / 2`
    pub fn quadrature(&self, theta: f64) -> ComplexMatrix {
        let e = C64::from_polar(1.0, -theta);
        &self.field.scale(e * 0.5) + &self.field.adjoint().scale(e.conj() * 0.5)
    }

    /// Index of `|atom, n⟩`.
    pub fn index(&self, atom: usize, n: usize) -> usize {
        atom * self.params.fock_cutoff + n
    }
}

/// Truncated annihilation operator on `n` Fock levels.
pub fn annihilation(n: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(n, n, |i, j| if j == i + 1 { C64::new((j as f64).sqrt(), 0.0) } else { C64::new(0.0, 0.0) })
}

/// `H = g(a†σ + aσ†) + drive·X` with `X` chosen by `drive_target`.
pub fn build_system(params: &SystemParams) -> Result<OperatorSet> {
    params.validate()?;
    let n = params.fock_cutoff;
    let lower = ComplexMatrix::from_fn(2, 2, |i, j| if i == 0 && j == 1 { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) });
    let a = kron(&ComplexMatrix::identity(2), &annihilation(n));
    let sigma = kron(&lower, &ComplexMatrix::identity(n));
    let coupling = &(&a.adjoint() * &sigma) + &(&a * &sigma.adjoint());
    let x = match params.drive_target {
        DriveTarget::Atom => &sigma + &sigma.adjoint(),
        DriveTarget::Cavity => &a + &a.adjoint(),
    };
    let hamiltonian = &coupling.scale_real(params.g) + &x.scale_real(params.drive);
    Ok(OperatorSet {
        params: *params,
        collapse_cavity: a.scale_real(params.kappa.sqrt()),
        collapse_atom: sigma.scale_real(params.gamma.sqrt()),
        hamiltonian,
        field: a,
        sigma,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn undriven_uncoupled_hamiltonian_vanishes() {
        let p = SystemParams { g: 0.0, drive: 0.0, ..Default::default() };
        assert_eq!(build_system(&p).unwrap().hamiltonian.max_abs(), 0.0);
    }

    #[test]
    fn commutator_is_identity_below_top_level() {
        let ops = build_system(&SystemParams::default()).unwrap();
        let a = &ops.field;
        let c = a.commutator(&a.adjoint());
        let n = ops.params.fock_cutoff;
        for atom in 0..2 {
            for k in 0..n {
                let i = ops.index(atom, k);
                let expect = if k == n - 1 { -((n - 1) as f64) } else { 1.0 };
                assert!((c[(i, i)] - C64::new(expect, 0.0)).norm() < 1e-12);
            }
        }
        let off: f64 = (0..c.rows()).flat_map(|i| (0..c.cols()).filter(move |&j| j != i).map(move |j| (i, j))).map(|ij| c[ij].norm()).sum();
        assert_eq!(off, 0.0);
    }

    #[test]
    fn hamiltonian_is_exactly_hermitian() {
        for target in [DriveTarget::Atom, DriveTarget::Cavity] {
            let ops = build_system(&SystemParams { drive_target: target, ..Default::default() }).unwrap();
            assert_eq!(ops.hamiltonian, ops.hamiltonian.adjoint());
            assert_eq!(ops.dim(), 16);
        }
    }

    #[test]
    fn rejects_small_cutoff() {
        assert!(build_system(&SystemParams { fock_cutoff: 1, ..Default::default() }).is_err());
        assert!(build_system(&SystemParams { kappa: -1.0, ..Default::default() }).is_err());
    }

    #[test]
    fn sigma_lowers_the_atom() {
        let ops = build_system(&SystemParams::default()).unwrap();
        let mut v = vec![C64::new(0.0, 0.0); ops.dim()];
        v[ops.index(1, 3)] = C64::new(1.0, 0.0);
        let w = ops.sigma.mul_vec(&v).unwrap();
        assert_eq!(w[ops.index(0, 3)], C64::new(1.0, 0.0));
    }
}
