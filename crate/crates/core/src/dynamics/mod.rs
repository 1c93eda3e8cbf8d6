//! Driven transmon master equation and the quantities derived from it.

mod lindblad;
mod pulse;
mod qnd_fit;
mod rates;

pub use lindblad::{evolve, evolve_final, MasterEquation, Trajectory, DEFAULT_DT};
pub use pulse::{
    amplitude_scan, optimize_amplitude, rabi_populations, scan_grid, shelving_chain, ShelvingChain,
    SCAN_POINTS,
};
pub use qnd_fit::{fit_qnd, QndFit};
pub use rates::rate_equation;

use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

pub const HERMITICITY_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-8;
pub const POSITIVITY_TOL: f64 = 1e-8;

/// Density matrix of a `K`-level transmon, levels ordered g, e, f, h.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    rho: DMatrix<C64>,
}

impl DensityMatrix {
    pub fn new(rho: DMatrix<C64>) -> Result<Self> {
        let dm = Self { rho };
        match dm.violation() {
            None => Ok(dm),
            Some(msg) => Err(Error::invalid("density matrix", msg)),
        }
    }

    /// `|k><k|` in a `levels`-dimensional space.
    pub fn basis(levels: usize, k: usize) -> Self {
        assert!(k < levels, "level {k} outside {levels}-level space");
        let mut rho = DMatrix::zeros(levels, levels);
        rho[(k, k)] = C64::new(1.0, 0.0);
        Self { rho }
    }

    /// Incoherent mixture with the given populations.
    pub fn diagonal(pops: &[f64]) -> Result<Self> {
        let d: Vec<C64> = pops.iter().map(|&p| C64::new(p, 0.0)).collect();
        Self::new(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(d)))
    }

    pub(crate) fn from_raw(rho: DMatrix<C64>) -> Self {
        Self { rho }
    }

    pub fn levels(&self) -> usize {
        self.rho.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.rho
    }

    pub fn trace(&self) -> f64 {
        self.rho.trace().re
    }

    /// Diagonal divided by the trace.
    pub fn populations(&self) -> Vec<f64> {
        let tr = self.trace();
        (0..self.levels()).map(|k| self.rho[(k, k)].re / tr).collect()
    }

    pub fn population(&self, k: usize) -> f64 {
        self.rho[(k, k)].re / self.trace()
    }

    pub fn coherence(&self, j: usize, k: usize) -> f64 {
        self.rho[(j, k)].norm()
    }

    /// First broken invariant, if any.
    pub fn violation(&self) -> Option<String> {
        let n = self.rho.nrows();
        if n == 0 || n != self.rho.ncols() {
            return Some(format!("shape {}x{}", self.rho.nrows(), self.rho.ncols()));
        }
        if self.rho.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Some("non-finite entry".into());
        }
        let herm = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| (self.rho[(i, j)] - self.rho[(j, i)].conj()).norm())
            .fold(0.0, f64::max);
        if herm > HERMITICITY_TOL {
            return Some(format!("hermiticity error {herm:.3e}"));
        }
        let tr = self.rho.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Some(format!("trace {tr}"));
        }
        let min_eig = self.rho.clone().symmetric_eigenvalues().min();
        if min_eig < -POSITIVITY_TOL {
            return Some(format!("eigenvalue {min_eig:.3e}"));
        }
        None
    }
}

/// Gaussian drive on the `transition.0 -> transition.1` transition.
///
/// `amplitude` is the peak Rabi rate `Omega` in `H = (Omega(t)/2)(b^dag
/// e^{-i phi} + h.c.)`; `detuning` is added to the transition frequency
/// (positive is blue).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseParams {
    pub sigma: f64,
    pub length_in_sigmas: u32,
    pub detuning: f64,
    pub amplitude: f64,
    pub transition: (usize, usize),
}

impl PulseParams {
    /// g-e pulse of the shelving experiment, amplitude unset.
    pub fn ge() -> Self {
        Self {
            sigma: 5e-9,
            length_in_sigmas: 8,
            detuning: 2.0 * std::f64::consts::PI * 3.899e6,
            amplitude: 0.0,
            transition: (0, 1),
        }
    }

    /// e-f shelving pulse, amplitude unset.
    pub fn ef() -> Self {
        Self {
            sigma: 6e-9,
            length_in_sigmas: 6,
            detuning: 2.0 * std::f64::consts::PI * 2.67e6,
            amplitude: 0.0,
            transition: (1, 2),
        }
    }

    pub fn with_amplitude(self, amplitude: f64) -> Self {
        Self { amplitude, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::invalid("sigma", "must be positive"));
        }
        if self.length_in_sigmas == 0 {
            return Err(Error::invalid("length_in_sigmas", "must be positive"));
        }
        if !self.detuning.is_finite() || !self.amplitude.is_finite() {
            return Err(Error::invalid("pulse", "non-finite detuning or amplitude"));
        }
        if self.transition.1 != self.transition.0 + 1 {
            return Err(Error::invalid(
                "transition",
                format!("{:?} is not a single-step transition", self.transition),
            ));
        }
        Ok(())
    }

    pub fn duration(&self) -> f64 {
        self.length_in_sigmas as f64 * self.sigma
    }

    pub fn envelope(&self, t: f64) -> f64 {
        let dur = self.duration();
        // slack so that a step ending on the pulse edge still sees it
        let eps = 1e-9 * dur;
        if !(-eps..=dur + eps).contains(&t) {
            return 0.0;
        }
        let x = (t - 0.5 * dur) / self.sigma;
        self.amplitude * (-0.5 * x * x).exp()
    }

    /// Drive frequency in the frame rotating at the g-e frequency.
    pub fn carrier(&self, anharmonicity: f64) -> f64 {
        anharmonicity * self.transition.0 as f64 + self.detuning
    }

    /// Amplitude whose truncated envelope has area pi on the target
    /// transition, whose matrix element is `sqrt(lower + 1)`.
    pub fn pi_amplitude(&self) -> f64 {
        let n = self.length_in_sigmas as f64;
        let area = self.sigma
            * (2.0 * std::f64::consts::PI).sqrt()
            * erf(n / (2.0 * std::f64::consts::SQRT_2));
        std::f64::consts::PI / (((self.transition.0 + 1) as f64).sqrt() * area)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_state_is_valid() {
        let r = DensityMatrix::basis(3, 2);
        assert!(r.violation().is_none());
        assert_eq!(r.populations(), vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn rejects_bad_matrices() {
        let mut m = DMatrix::<C64>::zeros(2, 2);
        m[(0, 0)] = C64::new(1.2, 0.0);
        m[(1, 1)] = C64::new(-0.2, 0.0);
        assert!(DensityMatrix::new(m.clone()).is_err());
        m[(0, 0)] = C64::new(0.5, 0.0);
        m[(1, 1)] = C64::new(0.5, 0.0);
        m[(0, 1)] = C64::new(0.1, 0.0);
        assert!(DensityMatrix::new(m.clone()).is_err());
        m[(1, 0)] = C64::new(0.1, 0.0);
        assert!(DensityMatrix::new(m).is_ok());
        assert!(DensityMatrix::diagonal(&[0.5, 0.6]).is_err());
    }

    #[test]
    fn pi_amplitude_integrates_to_pi() {
        for p in [PulseParams::ge(), PulseParams::ef()] {
            let p = p.with_amplitude(p.pi_amplitude());
            let n = 20_000;
            let h = p.duration() / n as f64;
            // Simpson
            let mut s = p.envelope(0.0) + p.envelope(p.duration());
            for k in 1..n {
                s += p.envelope(k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
            }
            let area = s * h / 3.0 * ((p.transition.0 + 1) as f64).sqrt();
            assert!((area - std::f64::consts::PI).abs() < 1e-10, "{area}");
        }
    }

    #[test]
    fn envelope_is_truncated() {
        let p = PulseParams::ge().with_amplitude(1.0);
        assert_eq!(p.envelope(-1e-12), 0.0);
        assert_eq!(p.envelope(p.duration() + 1e-12), 0.0);
        assert_eq!(p.envelope(0.5 * p.duration()), 1.0);
    }
}
