use super::{LinearOperator, C64, ZERO};
use crate::error::{require_positive, Error, Result};

/// Advance `dψ/dt = G ψ` by `n_steps` classical RK4 steps of size `dt`.
pub fn integrate_linear_ode<G: LinearOperator + ?Sized>(
    generator: &G,
    state: &[C64],
    dt: f64,
    n_steps: usize,
) -> Result<Vec<C64>> {
    let n = generator.dim();
    if state.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: state.len() });
    }
    require_positive("dt", dt)?;
    let mut y = state.to_vec();
    let mut stepper = Rk4::new(n);
    for _ in 0..n_steps {
        stepper.step(generator, &mut y, dt);
        if y.iter().any(|z| !z.is_finite()) {
            return Err(Error::NonFinite("ODE state"));
        }
    }
    Ok(y)
}

/// Reusable RK4 scratch space for hot loops.
#[derive(Debug, Clone)]
pub(crate) struct Rk4 {
    k1: Vec<C64>,
    k2: Vec<C64>,
    k3: Vec<C64>,
    k4: Vec<C64>,
    tmp: Vec<C64>,
}

impl Rk4 {
    pub(crate) fn new(n: usize) -> Self {
        Self { k1: vec![ZERO; n], k2: vec![ZERO; n], k3: vec![ZERO; n], k4: vec![ZERO; n], tmp: vec![ZERO; n] }
    }

    pub(crate) fn step<G: LinearOperator + ?Sized>(&mut self, g: &G, y: &mut [C64], dt: f64) {
        let h = dt;
        g.apply(y, &mut self.k1);
        for ((t, y), k) in self.tmp.iter_mut().zip(y.iter()).zip(&self.k1) {
            *t = y + k * (0.5 * h);
        }
        g.apply(&self.tmp, &mut self.k2);
        for ((t, y), k) in self.tmp.iter_mut().zip(y.iter()).zip(&self.k2) {
            *t = y + k * (0.5 * h);
        }
        g.apply(&self.tmp, &mut self.k3);
        for ((t, y), k) in self.tmp.iter_mut().zip(y.iter()).zip(&self.k3) {
            *t = y + k * h;
        }
        g.apply(&self.tmp, &mut self.k4);
        for (i, yi) in y.iter_mut().enumerate() {
            *yi += (self.k1[i] + (self.k2[i] + self.k3[i]) * 2.0 + self.k4[i]) * (h / 6.0);
        }
    }
}
