use super::system::{build_system, OperatorSet, SystemParams};
use crate::error::{require_nonneg, Error, Result};
use crate::numerics::{kron, ComplexMatrix, CsrMatrix, LinearOperator, Rk4, C64};

/// Largest RK4 step, and the cap on `step × ‖L‖∞`.
const MAX_STEP: f64 = 0.005;
const STEP_NORM: f64 = 0.1;

/// Density operator; construction enforces Hermiticity and unit trace to
/// 1e-10 and positivity to a small tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(ComplexMatrix);

impl DensityMatrix {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch { expected: m.rows(), found: m.cols() });
        }
        if !m.is_hermitian(1e-10) {
            return Err(Error::InvalidParameter { name: "rho", reason: "not Hermitian".into() });
        }
        let tr = m.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > 1e-10 {
            return Err(Error::InvalidParameter { name: "rho", reason: format!("trace {tr}") });
        }
        if !is_positive_semidefinite(&m, 1e-9) {
            return Err(Error::InvalidParameter { name: "rho", reason: "not positive semidefinite".into() });
        }
        Ok(Self(m))
    }

    /// `|ψ⟩⟨ψ|` for a normalized `ψ`.
    pub fn pure(psi: &[C64]) -> Result<Self> {
        Self::new(ComplexMatrix::outer(psi, psi))
    }

    /// `|0⟩⟨0|`: atom in its ground state, cavity in vacuum.
    pub fn ground(dim: usize) -> Self {
        let mut m = ComplexMatrix::zeros(dim, dim);
        m[(0, 0)] = C64::new(1.0, 0.0);
        Self(m)
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    /// `Tr(A ρ)`
    pub fn expect(&self, op: &ComplexMatrix) -> C64 {
        let d = self.dim();
        (0..d).flat_map(|i| (0..d).map(move |j| (i, j))).map(|(i, j)| op[(i, j)] * self.0[(j, i)]).sum()
    }

    pub fn purity(&self) -> f64 {
        (&self.0 * &self.0).trace().re
    }

    fn from_vec_unchecked(v: Vec<C64>, d: usize) -> Result<Self> {
        let m = ComplexMatrix::from_vec(d, d, v)?;
        // symmetrize away rounding before the checks
        Self::new((&m + &m.adjoint()).scale_real(0.5))
    }

    fn vec(&self) -> Vec<C64> {
        self.0.as_slice().to_vec()
    }
}

/// Cholesky of `m + tol·I`; succeeds iff `m` has no eigenvalue below `−tol`
/// (up to rounding).
pub fn is_positive_semidefinite(m: &ComplexMatrix, tol: f64) -> bool {
    let n = m.rows();
    let mut l = vec![C64::new(0.0, 0.0); n * n];
    for j in 0..n {
        let mut d = m[(j, j)].re + tol;
        for k in 0..j {
            d -= l[j * n + k].norm_sqr();
        }
        if !(d > 0.0) {
            return false;
        }
        let djj = d.sqrt();
        l[j * n + j] = C64::new(djj, 0.0);
        for i in (j + 1)..n {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k].conj();
            }
            l[i * n + j] = s / djj;
        }
    }
    true
}

/// Lindblad generator `L` acting on row-major `vec(ρ)`.
pub fn liouvillian(ops: &OperatorSet) -> ComplexMatrix {
    let d = ops.dim();
    let id = ComplexMatrix::identity(d);
    let h = &ops.hamiltonian;
    let minus_i = C64::new(0.0, -1.0);
    let mut l = (&kron(h, &id) - &kron(&id, &h.transpose())).scale(minus_i);
    for c in [&ops.collapse_cavity, &ops.collapse_atom] {
        let cdc = &c.adjoint() * c;
        let conj = ComplexMatrix::from_fn(d, d, |i, j| c[(i, j)].conj());
        l = &l + &kron(c, &conj);
        l = &l - &kron(&cdc, &id).scale_real(0.5);
        l = &l - &kron(&id, &cdc.transpose()).scale_real(0.5);
    }
    l
}

fn inf_norm(m: &ComplexMatrix) -> f64 {
    (0..m.rows()).map(|i| (0..m.cols()).map(|j| m[(i, j)].norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// Master equation for one parameter set, with its Liouvillian cached.
#[derive(Debug, Clone)]
pub struct MasterEquation {
    ops: OperatorSet,
    dense: ComplexMatrix,
    sparse: CsrMatrix,
    max_step: f64,
}

impl MasterEquation {
    pub fn new(params: &SystemParams) -> Result<Self> {
        let ops = build_system(params)?;
        let dense = liouvillian(&ops);
        let max_step = MAX_STEP.min(STEP_NORM / inf_norm(&dense).max(1e-300));
        Ok(Self { sparse: dense.to_csr(), dense, ops, max_step })
    }

    pub fn operators(&self) -> &OperatorSet {
        &self.ops
    }

    pub fn liouvillian(&self) -> &ComplexMatrix {
        &self.dense
    }

    /// `‖L ρ‖` (largest entry).
    pub fn residual(&self, rho: &DensityMatrix) -> f64 {
        let mut out = vec![C64::new(0.0, 0.0); self.sparse.dim()];
        self.sparse.apply(rho.0.as_slice(), &mut out);
        out.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Evolve `rho` for time `t` (fixed-step RK4).
    pub fn evolve(&self, rho: &DensityMatrix, t: f64) -> Result<DensityMatrix> {
        require_nonneg("t", t)?;
        self.check_dim(rho)?;
        let mut v = rho.vec();
        let mut rk = Rk4::new(v.len());
        self.advance(&mut v, t, &mut rk)?;
        DensityMatrix::from_vec_unchecked(v, rho.dim())
    }

    /// Evolve an arbitrary (not necessarily positive or normalized)
    /// operator `x` under `L`, evaluating `Tr(A x(t))` on the uniform grid
    /// `t_k = k·step`, `k = 0..n`.
    pub fn expectations_along(&self, x: &ComplexMatrix, observables: &[&ComplexMatrix], step: f64, n: usize) -> Result<Vec<Vec<C64>>> {
        let d = self.ops.dim();
        if x.rows() != d || x.cols() != d {
            return Err(Error::DimensionMismatch { expected: d, found: x.rows() });
        }
        let mut v = x.as_slice().to_vec();
        let mut rk = Rk4::new(v.len());
        let mut out = vec![Vec::with_capacity(n); observables.len()];
        for k in 0..n {
            if k > 0 {
                self.advance(&mut v, step, &mut rk)?;
            }
            for (o, a) in out.iter_mut().zip(observables) {
                let tr: C64 = (0..d).flat_map(|i| (0..d).map(move |j| (i, j))).map(|(i, j)| a[(i, j)] * v[j * d + i]).sum();
                o.push(tr);
            }
        }
        Ok(out)
    }

    fn advance(&self, v: &mut [C64], t: f64, rk: &mut Rk4) -> Result<()> {
        if t == 0.0 {
            return Ok(());
        }
        let n = (t / self.max_step).ceil().max(1.0) as usize;
        let h = t / n as f64;
        for _ in 0..n {
            rk.step(&self.sparse, v, h);
        }
        if v.iter().any(|z| !z.is_finite()) {
            return Err(Error::NonFinite("density matrix"));
        }
        Ok(())
    }

    fn check_dim(&self, rho: &DensityMatrix) -> Result<()> {
        if rho.dim() != self.ops.dim() {
            return Err(Error::DimensionMismatch { expected: self.ops.dim(), found: rho.dim() });
        }
        Ok(())
    }

    /// Solve `L ρ = 0` with `Tr ρ = 1` replacing the first equation, then
    /// refine iteratively. Fails unless the residual drops below 1e-10.
    pub fn steady_state(&self) -> Result<DensityMatrix> {
        let p = &self.ops.params;
        if !(p.kappa > 0.0 || p.gamma > 0.0) {
            return Err(Error::InvalidParameter { name: "kappa", reason: "no dissipation, no unique steady state".into() });
        }
        let d = self.ops.dim();
        let mut m = self.dense.clone();
        for j in 0..d * d {
            m[(0, j)] = C64::new(0.0, 0.0);
        }
        for i in 0..d {
            m[(0, i * d + i)] = C64::new(1.0, 0.0);
        }
        let mut b = vec![C64::new(0.0, 0.0); d * d];
        b[0] = C64::new(1.0, 0.0);
        let mut x = m.solve(&b)?;
        for _ in 0..3 {
            let mx = m.mul_vec(&x)?;
            let r: Vec<C64> = b.iter().zip(&mx).map(|(b, y)| b - y).collect();
            let dx = m.solve(&r)?;
            x.iter_mut().zip(&dx).for_each(|(x, d)| *x += d);
        }
        let rho = DensityMatrix::from_vec_unchecked(x, d)?;
        let res = self.residual(&rho);
        if res < 1e-10 {
            Ok(rho)
        } else {
            Err(Error::NoConvergence(res))
        }
    }
}

/// Lindblad evolution of `rho` for time `t` with the operators of `params`.
pub fn evolve_master(rho: &DensityMatrix, params: &SystemParams, t: f64) -> Result<DensityMatrix> {
    MasterEquation::new(params)?.evolve(rho, t)
}

pub fn steady_state(params: &SystemParams) -> Result<DensityMatrix> {
    MasterEquation::new(params)?.steady_state()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{discrete_fourier_transform, integrate_linear_ode};
    use crate::quantum::DriveTarget;

    fn cavity_only(drive: f64) -> SystemParams {
        SystemParams { g: 0.0, drive, drive_target: DriveTarget::Cavity, fock_cutoff: 12, ..Default::default() }
    }

    #[test]
    fn density_matrix_invariants() {
        let mut m = ComplexMatrix::zeros(2, 2);
        m[(0, 0)] = C64::new(0.5, 0.0);
        m[(1, 1)] = C64::new(0.5, 0.0);
        assert!(DensityMatrix::new(m.clone()).is_ok());
        m[(0, 1)] = C64::new(0.6, 0.0);
        m[(1, 0)] = C64::new(0.6, 0.0);
        assert!(DensityMatrix::new(m.clone()).is_err(), "eigenvalue −0.1");
        m[(1, 0)] = C64::new(0.1, 0.0);
        assert!(DensityMatrix::new(m).is_err(), "not Hermitian");
    }

    #[test]
    fn undriven_vacuum_is_stationary() {
        let p = SystemParams { drive: 0.0, ..Default::default() };
        let rho = DensityMatrix::ground(p.dim());
        let out = evolve_master(&rho, &p, 5.0).unwrap();
        assert!((&out.0 - &rho.0).max_abs() < 1e-14);
        let ss = steady_state(&p).unwrap();
        assert!((&ss.0 - &rho.0).max_abs() < 1e-12);
    }

    #[test]
    fn driven_cavity_relaxes_to_coherent_state() {
        // dα/dt = −iε − κα/2 ⇒ α_ss = −2iε/κ
        let p = cavity_only(0.3);
        let me = MasterEquation::new(&p).unwrap();
        let ops = me.operators();
        let alpha = C64::new(0.0, -2.0 * 0.3 / p.kappa);
        for rho in [me.steady_state().unwrap(), me.evolve(&DensityMatrix::ground(p.dim()), 40.0).unwrap()] {
            let a = rho.expect(&ops.field);
            let n = rho.expect(&ops.number()).re;
            assert!((a - alpha).norm() < 1e-8, "{a}");
            assert!((n - alpha.norm_sqr()).abs() < 1e-8, "{n}");
        }
    }

    #[test]
    fn trace_and_positivity_preserved() {
        let p = SystemParams::default();
        let me = MasterEquation::new(&p).unwrap();
        let mut rho = DensityMatrix::ground(p.dim());
        for _ in 0..10 {
            rho = me.evolve(&rho, 0.7).unwrap();
            assert!((rho.0.trace().re - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn rk4_path_matches_generic_integrator() {
        let p = SystemParams { drive: 0.4, ..Default::default() };
        let me = MasterEquation::new(&p).unwrap();
        let rho = DensityMatrix::ground(p.dim());
        let a = me.evolve(&rho, 2.0).unwrap();
        let b = integrate_linear_ode(me.liouvillian(), rho.0.as_slice(), 0.001, 2000).unwrap();
        let diff = a.0.as_slice().iter().zip(&b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        assert!(diff < 1e-9, "{diff}");
    }

    #[test]
    fn steady_state_is_self_consistent() {
        let p = SystemParams::default();
        let me = MasterEquation::new(&p).unwrap();
        let ss = me.steady_state().unwrap();
        assert!(me.residual(&ss) < 1e-10);
        let late = me.evolve(&DensityMatrix::ground(p.dim()), 60.0).unwrap();
        let n = me.operators().number();
        let (a, b) = (ss.expect(&n).re, late.expect(&n).re);
        assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        // truncation: top Fock level essentially empty
        let top: f64 = (0..2).map(|atom| ss.0[(me.operators().index(atom, 7), me.operators().index(atom, 7))].re).sum();
        assert!(top < 1e-8);
    }

    #[test]
    fn transient_oscillates_at_vacuum_rabi_frequency() {
        let p = SystemParams { g: 6.0, ..Default::default() };
        let me = MasterEquation::new(&p).unwrap();
        let (step, n) = (0.02, 1000);
        let ops = me.operators();
        let series = me.expectations_along(DensityMatrix::ground(p.dim()).matrix(), &[&ops.number()], step, n).unwrap();
        let x: Vec<f64> = series[0].iter().map(|z| z.re).collect();
        let mean = x.iter().sum::<f64>() / n as f64;
        let mut padded: Vec<f64> = x.iter().map(|v| v - mean).collect();
        padded.resize(16 * n, 0.0);
        let s = discrete_fourier_transform(&padded, step).unwrap();
        let f = s.frequencies[s.peak_bin().unwrap()];
        let omega = 2.0 * std::f64::consts::PI * f;
        assert!((omega / p.g - 1.0).abs() < 0.05, "peak at ω = {omega}");
    }
}
