//! Fixed-step RK4 integration of the transmon master equation.
//!
//! Frame rotating at the g-e frequency, so level `n` sits at
//! `(alpha/2) n (n-1)`. Jump operators: relaxation down each ladder step
//! and pure dephasing of e and f.

use nalgebra::DMatrix;

use super::{DensityMatrix, PulseParams, C64};
use crate::error::{Error, Result};
use crate::params::SystemParams;

/// Step used for pulse simulations.
pub const DEFAULT_DT: f64 = 1e-11;

/// Minimum number of steps per unit of the fastest rate.
const RESOLUTION: f64 = 20.0;

#[derive(Debug, Clone)]
pub struct MasterEquation {
    levels: usize,
    anharmonicity: f64,
    energies: Vec<f64>,
    lowering: DMatrix<C64>,
    jumps: Vec<DMatrix<C64>>,
    /// `H_0 - (i/2) sum L^dag L`
    h_eff: DMatrix<C64>,
    total_rate: f64,
}

impl MasterEquation {
    /// `levels` between 2 and 4.
    pub fn new(params: &SystemParams, levels: usize) -> Result<Self> {
        params.validate()?;
        if !(2..=4).contains(&levels) {
            return Err(Error::invalid("levels", format!("{levels} not in 2..=4")));
        }
        let alpha = params.anharmonicity;
        let energies: Vec<f64> = (0..levels)
            .map(|n| 0.5 * alpha * (n * n.saturating_sub(1)) as f64)
            .collect();
        let mut lowering = DMatrix::<C64>::zeros(levels, levels);
        for n in 1..levels {
            lowering[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
        }
        let proj = |a: usize, b: usize, rate: f64| {
            let mut m = DMatrix::<C64>::zeros(levels, levels);
            m[(a, b)] = C64::new(rate.sqrt(), 0.0);
            m
        };
        let mut jumps = vec![
            proj(0, 1, 1.0 / params.ancilla_t1_ge),
            proj(1, 1, 2.0 * params.gamma_phi_e()),
        ];
        if levels > 2 {
            jumps.push(proj(1, 2, 1.0 / params.ancilla_t1_ef));
            jumps.push(proj(2, 2, 2.0 * params.gamma_phi_f()));
        }
        if levels > 3 {
            jumps.push(proj(2, 3, 1.0 / params.ancilla_t1_fh));
        }
        let mut h_eff = DMatrix::<C64>::from_diagonal(&nalgebra::DVector::from_iterator(
            levels,
            energies.iter().map(|&e| C64::new(e, 0.0)),
        ));
        let mut total_rate = 0.0;
        for l in &jumps {
            let ll = l.adjoint() * l;
            total_rate += ll.trace().re;
            h_eff -= ll * C64::new(0.0, 0.5);
        }
        Ok(Self {
            levels,
            anharmonicity: alpha,
            energies,
            lowering,
            jumps,
            h_eff,
            total_rate,
        })
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn jump_operators(&self) -> &[DMatrix<C64>] {
        &self.jumps
    }

    /// Upper bound on the generator's frequencies (rad/s).
    pub fn fastest_rate(&self, pulse: Option<&PulseParams>) -> f64 {
        let emax = self.energies.iter().fold(0.0f64, |m, e| m.max(e.abs()));
        let drive = pulse.map_or(0.0, |p| {
            p.carrier(self.anharmonicity).abs()
                + p.amplitude.abs() * ((self.levels - 1) as f64).sqrt()
        });
        emax + drive + self.total_rate
    }

    /// `d rho / dt` at time `t`.
    pub fn rhs(&self, t: f64, rho: &DMatrix<C64>, pulse: Option<&PulseParams>) -> DMatrix<C64> {
        let mut h = self.h_eff.clone();
        if let Some(p) = pulse {
            let omega = p.envelope(t);
            if omega != 0.0 {
                let phase = C64::from_polar(0.5 * omega, -p.carrier(self.anharmonicity) * t);
                let up = self.lowering.adjoint() * phase;
                h += &up + up.adjoint();
            }
        }
        let hr = &h * rho;
        let mut out = (&hr - rho * h.adjoint()) * C64::new(0.0, -1.0);
        for l in &self.jumps {
            out += l * rho * l.adjoint();
        }
        out
    }

    fn check_dt(&self, dt: f64, pulse: Option<&PulseParams>) -> Result<()> {
        let limit = 1.0 / (RESOLUTION * self.fastest_rate(pulse));
        if !(dt > 0.0 && dt <= limit) {
            return Err(Error::invalid(
                "dt",
                format!("{dt:.3e} s does not resolve the fastest rate (need <= {limit:.3e} s)"),
            ));
        }
        Ok(())
    }

    fn step(&self, t: f64, rho: &DMatrix<C64>, dt: f64, pulse: Option<&PulseParams>) -> DMatrix<C64> {
        let h = C64::new(dt, 0.0);
        let half = C64::new(0.5 * dt, 0.0);
        let k1 = self.rhs(t, rho, pulse);
        let k2 = self.rhs(t + 0.5 * dt, &(rho + &k1 * half), pulse);
        let k3 = self.rhs(t + 0.5 * dt, &(rho + &k2 * half), pulse);
        let k4 = self.rhs(t + dt, &(rho + &k3 * h), pulse);
        rho + (k1 + (k2 + k3) * C64::new(2.0, 0.0) + k4) * C64::new(dt / 6.0, 0.0)
    }
}

/// States at every step, the initial one included.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
}

impl Trajectory {
    pub fn last(&self) -> &DensityMatrix {
        self.states.last().expect("trajectory holds the initial state")
    }
}

fn step_count(t_span: f64, dt: f64) -> Result<usize> {
    if !(t_span >= 0.0 && t_span.is_finite()) {
        return Err(Error::invalid("t_span", "must be non-negative"));
    }
    if !(dt > 0.0) {
        return Err(Error::invalid("dt", "must be positive"));
    }
    let n = (t_span / dt).round();
    if (n * dt - t_span).abs() > 1e-9 * t_span.max(dt) {
        return Err(Error::invalid(
            "dt",
            format!("t_span {t_span:.6e} is not a multiple of dt {dt:.6e}"),
        ));
    }
    Ok(n as usize)
}

fn integrate<F>(
    rho0: &DensityMatrix,
    pulse: Option<&PulseParams>,
    params: &SystemParams,
    t_span: f64,
    dt: f64,
    mut visit: F,
) -> Result<DensityMatrix>
where
    F: FnMut(f64, &DensityMatrix),
{
    if let Some(msg) = rho0.violation() {
        return Err(Error::invalid("rho0", msg));
    }
    let me = MasterEquation::new(params, rho0.levels())?;
    if let Some(p) = pulse {
        p.validate()?;
        if p.transition.1 >= me.levels {
            return Err(Error::invalid(
                "transition",
                format!("{:?} outside a {}-level space", p.transition, me.levels),
            ));
        }
    }
    me.check_dt(dt, pulse)?;
    let n = step_count(t_span, dt)?;
    let mut rho = rho0.matrix().clone();
    for k in 0..n {
        let t = k as f64 * dt;
        rho = me.step(t, &rho, dt, pulse);
        let state = DensityMatrix::from_raw(rho);
        if let Some(msg) = state.violation() {
            return Err(Error::Integrator(format!("t = {:.4e} s: {msg}", t + dt)));
        }
        visit(t + dt, &state);
        rho = state.rho;
    }
    Ok(DensityMatrix::from_raw(rho))
}

/// Integrates from `t = 0` to `t_span`. The pulse envelope starts at 0 and
/// is zero after its duration.
pub fn evolve(
    rho0: &DensityMatrix,
    pulse: Option<&PulseParams>,
    params: &SystemParams,
    t_span: f64,
    dt: f64,
) -> Result<Trajectory> {
    let mut times = vec![0.0];
    let mut states = vec![rho0.clone()];
    integrate(rho0, pulse, params, t_span, dt, |t, s| {
        times.push(t);
        states.push(s.clone());
    })?;
    Ok(Trajectory { times, states })
}

/// Like [`evolve`] but keeps only the final state.
pub fn evolve_final(
    rho0: &DensityMatrix,
    pulse: Option<&PulseParams>,
    params: &SystemParams,
    t_span: f64,
    dt: f64,
) -> Result<DensityMatrix> {
    integrate(rho0, pulse, params, t_span, dt, |_, _| {})
}
