use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::system::{build_system, OperatorSet, SystemParams};
use crate::analyzers::{G2Accumulator, Normalization, TriggeredAverage};
use crate::error::{require_nonneg, require_positive, Error, Result};
use crate::numerics::{ComplexMatrix, CsrMatrix, LinearOperator, RngStream, TimeGrid, C64};
use crate::records::{CountRecord, PhotocurrentRecord};

/// Steps must satisfy `dt · max_rate` below this.
pub const MAX_STEP_RATE: f64 = 0.05;

/// How the cavity output is shared between a photon counter and a homodyne
/// detector, and how the stochastic state is stepped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixedUnraveling {
    /// Fraction of the output sent to the counter.
    pub split_to_counter: f64,
    pub lo_phase: f64,
    pub dt: f64,
    /// Unrecorded evolution from the ground state before the record starts.
    pub settle: f64,
}

impl MixedUnraveling {
    pub fn validate(&self, params: &SystemParams) -> Result<()> {
        if !(self.split_to_counter > 0.0 && self.split_to_counter < 1.0) {
            return Err(Error::InvalidParameter { name: "split_to_counter", reason: format!("{} not in (0, 1)", self.split_to_counter) });
        }
        if !self.lo_phase.is_finite() {
            return Err(Error::NonFinite("lo_phase"));
        }
        require_positive("dt", self.dt)?;
        require_nonneg("settle", self.settle)?;
        let r = self.dt * params.max_rate();
        if r >= MAX_STEP_RATE {
            return Err(Error::StepTooCoarse(r));
        }
        Ok(())
    }
}

/// The simultaneous particle and wave records of one trajectory, plus the
/// conditional expectations that generated them.
///
/// Sample `j` describes the state at `t_j`, after any jump in the step that
/// ends there. `quadrature_current[j]` is the measured increment over
/// `[t_j, t_{j+1})` divided by `dt`; its conditional mean is
/// `expected_current[j] = ⟨c + c†⟩` with `c = √((1−s)κ)·a·e^{−iθ}`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub jump_times: CountRecord,
    pub quadrature_current: PhotocurrentRecord,
    pub expected_current: PhotocurrentRecord,
    /// Conditional counting rate `s·κ·⟨a†a⟩`.
    pub counting_rate: PhotocurrentRecord,
    /// Unobserved atomic emissions.
    pub atom_jumps: usize,
    pub seed: u64,
    pub stream_id: u64,
}

struct Stepper {
    propagator: ComplexMatrix,
    a: CsrMatrix,
    sigma: CsrMatrix,
    /// `e^{−iθ}√((1−s)κ)`
    c_scale: C64,
    count_scale: f64,
    gamma: f64,
    dt: f64,
    buf: [Vec<C64>; 4],
}

impl Stepper {
    fn new(ops: &OperatorSet, u: &MixedUnraveling) -> Self {
        let p = &ops.params;
        let d = ops.dim();
        // G = −iH − ½(κ a†a + γ σ†σ); U = exp(G dt) by scaling and squaring
        let damping = &ops.number().scale_real(0.5 * p.kappa) + &(&ops.sigma.adjoint() * &ops.sigma).scale_real(0.5 * p.gamma);
        let g = &ops.hamiltonian.scale(C64::new(0.0, -1.0)) - &damping;
        let propagator = expm(&g.scale_real(u.dt));
        let zero = vec![C64::new(0.0, 0.0); d];
        Self {
            propagator,
            a: ops.field.to_csr(),
            sigma: ops.sigma.to_csr(),
            c_scale: C64::from_polar(((1.0 - u.split_to_counter) * p.kappa).sqrt(), -u.lo_phase),
            count_scale: u.split_to_counter * p.kappa,
            gamma: p.gamma,
            dt: u.dt,
            buf: [zero.clone(), zero.clone(), zero.clone(), zero],
        }
    }

    /// `⟨c + c†⟩` and `⟨a†a⟩` of the normalized `psi`.
    fn observe(&mut self, psi: &[C64]) -> (f64, f64) {
        let ap = &mut self.buf[0];
        self.a.apply(psi, ap);
        let amp: C64 = psi.iter().zip(ap.iter()).map(|(p, x)| p.conj() * x).sum();
        let n: f64 = ap.iter().map(|z| z.norm_sqr()).sum();
        (2.0 * (self.c_scale * amp).re, n)
    }

    /// One mixed step. Returns the measured increment `dy` and which jump,
    /// if any, happened (1 = counter, 2 = atom).
    fn step(&mut self, psi: &mut [C64], x: f64, stream: &mut RngStream) -> Result<(f64, u8)> {
        let dt = self.dt;
        let dy = x * dt + dt.sqrt() * stream.gaussian();
        let [ap, aap, next, _] = &mut self.buf;
        self.a.apply(psi, ap);
        self.a.apply(ap, aap);
        let c1 = self.c_scale * dy;
        let c2 = self.c_scale * self.c_scale * (0.5 * (dy * dy - dt));
        for (i, o) in next.iter_mut().enumerate() {
            let row = &self.propagator.as_slice()[i * psi.len()..(i + 1) * psi.len()];
            let u: C64 = row.iter().zip(psi.iter()).map(|(m, v)| m * v).sum();
            *o = u + c1 * ap[i] + c2 * aap[i];
        }
        let norm = next.iter().map(|z| z.norm_sqr()).sum::<f64>();
        if !norm.is_finite() || norm < 1e-6 {
            return Err(Error::NormLoss(norm.sqrt()));
        }
        let inv = 1.0 / norm.sqrt();
        for (p, v) in psi.iter_mut().zip(next.iter()) {
            *p = v * inv;
        }
        // jumps, first order in dt
        self.a.apply(psi, ap);
        let pc = self.count_scale * ap.iter().map(|z| z.norm_sqr()).sum::<f64>() * dt;
        let u = stream.uniform();
        if u < pc {
            collapse(psi, ap)?;
            return Ok((dy, 1));
        }
        if self.gamma > 0.0 {
            let sp = &mut self.buf[3];
            self.sigma.apply(psi, sp);
            let pa = self.gamma * sp.iter().map(|z| z.norm_sqr()).sum::<f64>() * dt;
            if u < pc + pa {
                let sp = self.buf[3].clone();
                collapse(psi, &sp)?;
                return Ok((dy, 2));
            }
        }
        Ok((dy, 0))
    }
}

fn collapse(psi: &mut [C64], target: &[C64]) -> Result<()> {
    let n = target.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if !(n > 0.0) {
        return Err(Error::NormLoss(n));
    }
    for (p, t) in psi.iter_mut().zip(target) {
        *p = t / n;
    }
    Ok(())
}

/// Matrix exponential by scaling and squaring of a Taylor series.
pub(crate) fn expm(m: &ComplexMatrix) -> ComplexMatrix {
    let norm = (0..m.rows()).map(|i| (0..m.cols()).map(|j| m[(i, j)].norm()).sum::<f64>()).fold(0.0, f64::max);
    let squarings = if norm > 0.25 { (norm / 0.25).log2().ceil() as u32 } else { 0 };
    let a = m.scale_real(0.5f64.powi(squarings as i32));
    let mut term = ComplexMatrix::identity(m.rows());
    let mut sum = term.clone();
    for k in 1..=20 {
        term = (&term * &a).scale_real(1.0 / k as f64);
        sum = &sum + &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// One trajectory of the mixed counting-plus-homodyne unraveling over
/// `duration`, starting from the ground state after `settle`.
pub fn unravel_mixed(params: &SystemParams, unraveling: &MixedUnraveling, duration: f64, stream: &RngStream) -> Result<TrajectoryRecord> {
    unraveling.validate(params)?;
    let ops = build_system(params)?;
    let mut st = Stepper::new(&ops, unraveling);
    let mut rng = stream.clone();
    let mut psi = vec![C64::new(0.0, 0.0); ops.dim()];
    psi[0] = C64::new(1.0, 0.0);
    let settle_steps = (unraveling.settle / unraveling.dt).round() as usize;
    for _ in 0..settle_steps {
        let (x, _) = st.observe(&psi);
        st.step(&mut psi, x, &mut rng)?;
    }
    let grid = TimeGrid::covering(duration, unraveling.dt)?;
    let n = grid.len();
    let (mut current, mut expected, mut rate) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    let mut jumps = Vec::new();
    let mut atom_jumps = 0;
    for j in 0..n {
        let (x, photons) = st.observe(&psi);
        expected.push(x);
        rate.push(st.count_scale * photons);
        let (dy, jump) = st.step(&mut psi, x, &mut rng)?;
        current.push(dy / unraveling.dt);
        match jump {
            1 => jumps.push(grid.time(j + 1)),
            2 => atom_jumps += 1,
            _ => {}
        }
    }
    let bw = grid.nyquist();
    Ok(TrajectoryRecord {
        jump_times: CountRecord::new(jumps, grid.t_start(), grid.t_end())?,
        quadrature_current: PhotocurrentRecord::new(grid, current, bw)?,
        expected_current: PhotocurrentRecord::new(grid, expected, bw)?,
        counting_rate: PhotocurrentRecord::new(grid, rate, bw)?,
        atom_jumps,
        seed: stream.seed(),
        stream_id: stream.stream_id(),
    })
}

/// Run `n` trajectories on streams `stream.derive(i)`, reducing each with
/// `reduce` as soon as it finishes. Results come back in index order
/// whatever the thread schedule.
pub fn run_trajectories<T, F>(
    params: &SystemParams,
    unraveling: &MixedUnraveling,
    duration: f64,
    n: usize,
    stream: &RngStream,
    reduce: F,
) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, TrajectoryRecord) -> Result<T> + Sync + Send,
{
    unraveling.validate(params)?;
    (0..n)
        .into_par_iter()
        .map(|i| reduce(i, unravel_mixed(params, unraveling, duration, &stream.derive(i as u64))?))
        .collect()
}

/// Click-triggered statistics accumulated over trajectories.
///
/// `g2` and `h` average the conditional expectations (counting rate and
/// current mean) after each click; future measurement noise is independent
/// of the click, so for `τ ≥ 0` these are unbiased and far less noisy than
/// `h_measured` (the raw current) and `g2_histogram` (click pairs). The
/// conditional averages use `bin_width`; the raw estimators use
/// `measured_bin_width`, which is usually much coarser.
#[derive(Debug, Clone)]
pub struct TriggeredStatistics {
    pub g2: TriggeredAverage,
    pub h: TriggeredAverage,
    pub h_measured: TriggeredAverage,
    pub g2_histogram: G2Accumulator,
    pub jumps: u64,
    pub atom_jumps: u64,
    pub time: f64,
}

impl TriggeredStatistics {
    pub fn new(dt: f64, halfwidth: f64, bin_width: f64, measured_bin_width: f64) -> Result<Self> {
        Ok(Self {
            g2: TriggeredAverage::new(dt, halfwidth, bin_width)?,
            h: TriggeredAverage::new(dt, halfwidth, bin_width)?,
            h_measured: TriggeredAverage::new(dt, halfwidth, measured_bin_width)?,
            g2_histogram: G2Accumulator::new(measured_bin_width, halfwidth)?,
            jumps: 0,
            atom_jumps: 0,
            time: 0.0,
        })
    }

    pub fn add(&mut self, r: &TrajectoryRecord) -> Result<()> {
        self.g2.add(&r.jump_times, &r.counting_rate)?;
        self.h.add(&r.jump_times, &r.expected_current)?;
        self.h_measured.add(&r.jump_times, &r.quadrature_current)?;
        self.g2_histogram.add(&r.jump_times);
        self.jumps += r.jump_times.len() as u64;
        self.atom_jumps += r.atom_jumps as u64;
        self.time += r.jump_times.duration();
        Ok(())
    }

    pub fn merge(&mut self, o: &Self) {
        self.g2.merge(&o.g2);
        self.h.merge(&o.h);
        self.h_measured.merge(&o.h_measured);
        self.g2_histogram.merge(&o.g2_histogram);
        self.jumps += o.jumps;
        self.atom_jumps += o.atom_jumps;
        self.time += o.time;
    }

    pub fn jump_rate(&self) -> f64 {
        self.jumps as f64 / self.time
    }

    pub fn g2_series(&self) -> Result<crate::analyzers::CorrelationSeries> {
        self.g2.finish(Normalization::G2)
    }

    pub fn h_series(&self) -> Result<crate::analyzers::CorrelationSeries> {
        self.h.finish(Normalization::H)
    }
}

/// Accumulate [`TriggeredStatistics`] over `n` trajectories.
#[allow(clippy::too_many_arguments)]
pub fn triggered_statistics(
    params: &SystemParams,
    unraveling: &MixedUnraveling,
    duration: f64,
    n: usize,
    halfwidth: f64,
    bin_width: f64,
    measured_bin_width: f64,
    stream: &RngStream,
) -> Result<TriggeredStatistics> {
    let parts = run_trajectories(params, unraveling, duration, n, stream, |_, r| {
        let mut s = TriggeredStatistics::new(unraveling.dt, halfwidth, bin_width, measured_bin_width)?;
        s.add(&r)?;
        Ok(s)
    })?;
    let mut it = parts.into_iter();
    let mut acc = it.next().ok_or(Error::InsufficientEvents(0))?;
    for p in it {
        acc.merge(&p);
    }
    Ok(acc)
}
