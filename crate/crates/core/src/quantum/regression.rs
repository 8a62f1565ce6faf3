use super::master::{DensityMatrix, MasterEquation};
use super::system::SystemParams;
use crate::analyzers::{CorrelationSeries, Normalization};
use crate::error::{Error, Result};
use crate::numerics::{TimeGrid, C64};

/// Below this steady-state photon number the normalization is meaningless.
pub const PHOTON_FLOOR: f64 = 1e-14;

/// Regression-theorem correlations on `τ = k·step ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionCurves {
    pub lags: Vec<f64>,
    pub g2: Vec<f64>,
    pub h: Vec<f64>,
    pub theta: f64,
    pub photon_number: f64,
    /// `⟨a_θ⟩` in the steady state.
    pub quadrature: f64,
}

impl RegressionCurves {
    /// `g²` on the symmetric grid, `g²(−τ) = g²(τ)`.
    pub fn g2_series(&self) -> Result<CorrelationSeries> {
        let n = self.lags.len();
        CorrelationSeries::new(self.lags.clone(), self.g2.clone(), vec![0.0; n], Normalization::G2)?.mirrored()
    }

    /// `h` for `τ ≥ 0` only.
    pub fn h_series(&self) -> Result<CorrelationSeries> {
        let n = self.lags.len();
        CorrelationSeries::new(self.lags.clone(), self.h.clone(), vec![0.0; n], Normalization::H)
    }
}

/// Phase of the steady-state mean field, `arg⟨a⟩_ss`.
pub fn mean_field_phase(params: &SystemParams) -> Result<f64> {
    let me = MasterEquation::new(params)?;
    let ss = me.steady_state()?;
    Ok(ss.expect(&me.operators().field).arg())
}

/// Population of the top Fock level in `rho`; should be negligible for a
/// trustworthy truncation.
pub fn top_level_population(me: &MasterEquation, rho: &DensityMatrix) -> f64 {
    let ops = me.operators();
    let top = ops.params.fock_cutoff - 1;
    (0..2).map(|atom| rho.matrix()[(ops.index(atom, top), ops.index(atom, top))].re).sum()
}

/// Collapse the steady state by one detected photon, `ρc ∝ a ρ_ss a†`, and
/// evolve it: `g²(τ) = ⟨a†a⟩_ρc(τ) / ⟨a†a⟩_ss` and
/// `h(τ) = ⟨a_θ⟩_ρc(τ) / ⟨a_θ⟩_ss` with `a_θ = (a e^{−iθ} + a† e^{iθ})/2`.
/// `theta = None` picks the mean-field phase.
pub fn regression(params: &SystemParams, theta: Option<f64>, tau_grid: &TimeGrid) -> Result<RegressionCurves> {
    if tau_grid.t_start() != 0.0 {
        return Err(Error::InvalidParameter { name: "tau_grid", reason: "must start at τ = 0".into() });
    }
    let me = MasterEquation::new(params)?;
    let ops = me.operators();
    let ss = me.steady_state()?;
    let number = ops.number();
    let n_ss = ss.expect(&number).re;
    if n_ss < PHOTON_FLOOR {
        return Err(Error::UndefinedNormalization("steady-state photon number below floor"));
    }
    let theta = theta.unwrap_or_else(|| ss.expect(&ops.field).arg());
    let quad = ops.quadrature(theta);
    let q_ss = ss.expect(&quad).re;
    let a = &ops.field;
    let collapsed = (&(a * ss.matrix()) * &a.adjoint()).scale_real(1.0 / n_ss);
    let out = me.expectations_along(&collapsed, &[&number, &quad], tau_grid.dt(), tau_grid.len())?;
    let g2: Vec<f64> = out[0].iter().map(|z: &C64| z.re / n_ss).collect();
    let h: Vec<f64> = if q_ss.abs() > 1e-12 * n_ss.sqrt() {
        out[1].iter().map(|z| z.re / q_ss).collect()
    } else {
        vec![f64::NAN; tau_grid.len()]
    };
    Ok(RegressionCurves { lags: tau_grid.times().collect(), g2, h, theta, photon_number: n_ss, quadrature: q_ss })
}

/// `g²(τ)` by the quantum regression theorem, mirrored to `τ < 0`.
pub fn g2_regression(params: &SystemParams, tau_grid: &TimeGrid) -> Result<CorrelationSeries> {
    regression(params, Some(0.0), tau_grid)?.g2_series()
}

/// `h_θ(τ)` for `τ ≥ 0` by the quantum regression theorem.
pub fn h_regression(params: &SystemParams, lo_phase: f64, tau_grid: &TimeGrid) -> Result<CorrelationSeries> {
    let r = regression(params, Some(lo_phase), tau_grid)?;
    if r.h.iter().any(|v| !v.is_finite()) {
        return Err(Error::UndefinedNormalization("steady-state quadrature vanishes at this phase"));
    }
    r.h_series()
}
