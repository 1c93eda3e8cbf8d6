//! Amplitude calibration of Gaussian pulses and the shelving sequence.

use rayon::prelude::*;
use serde::Serialize;

use super::{evolve_final, rate_equation, DensityMatrix, PulseParams};
use crate::error::{Error, Result};
use crate::params::SystemParams;

/// Points of the coarse amplitude scan.
pub const SCAN_POINTS: usize = 41;
const SCAN_SPAN: f64 = 0.10;
const GOLDEN_REL_TOL: f64 = 1e-7;

fn target_population(
    rho0: &DensityMatrix,
    pulse: &PulseParams,
    params: &SystemParams,
    dt: f64,
) -> Result<f64> {
    let out = evolve_final(rho0, Some(pulse), params, pulse.duration(), dt)?;
    Ok(out.population(pulse.transition.1))
}

/// Indices of local maxima; a plateau counts once, at its left edge.
fn local_maxima(values: &[f64]) -> Vec<usize> {
    let last = values.len().saturating_sub(1);
    (0..values.len())
        .filter(|&i| {
            let left = i == 0 || values[i] > values[i - 1];
            let right = i == last || values[i] >= values[i + 1];
            left && right
        })
        .collect()
}

/// Amplitudes of the coarse scan: `SCAN_POINTS` values over +-10% of the
/// pi-area amplitude.
pub fn scan_grid(template: &PulseParams) -> Vec<f64> {
    let a0 = template.pi_amplitude();
    (0..SCAN_POINTS)
        .map(|i| a0 * (1.0 - SCAN_SPAN + 2.0 * SCAN_SPAN * i as f64 / (SCAN_POINTS - 1) as f64))
        .collect()
}

/// `(P_g, P_e, P_f)` at the end of the pulse for each amplitude.
pub fn amplitude_scan(
    template: &PulseParams,
    params: &SystemParams,
    rho0: &DensityMatrix,
    amplitudes: &[f64],
    dt: f64,
) -> Result<Vec<[f64; 3]>> {
    template.validate()?;
    if rho0.levels() != 3 {
        return Err(Error::invalid("rho0", "amplitude scans use three levels"));
    }
    amplitudes
        .par_iter()
        .map(|&a| {
            let pulse = template.with_amplitude(a);
            let out = evolve_final(rho0, Some(&pulse), params, pulse.duration(), dt)?;
            Ok(pops3(&out))
        })
        .collect()
}

/// Amplitude maximizing the population of the upper level of
/// `template.transition`, starting from `rho0`.
///
/// Scans `SCAN_POINTS` amplitudes over +-10% of the pi-area value and
/// refines the best bracket by golden section. A scan with more than one
/// local maximum is rejected.
pub fn optimize_amplitude(
    template: &PulseParams,
    params: &SystemParams,
    rho0: &DensityMatrix,
    dt: f64,
) -> Result<PulseParams> {
    template.validate()?;
    let a0 = template.pi_amplitude();
    let grid = scan_grid(template);
    let values = grid
        .par_iter()
        .map(|&a| target_population(rho0, &template.with_amplitude(a), params, dt))
        .collect::<Result<Vec<f64>>>()?;

    let maxima = local_maxima(&values);
    if maxima.len() != 1 {
        return Err(Error::NonUnimodal(maxima.iter().map(|&i| grid[i]).collect()));
    }
    let last = SCAN_POINTS - 1;
    let best = maxima[0];
    let mut lo = grid[best.saturating_sub(1)];
    let mut hi = grid[(best + 1).min(last)];

    let f = |a: f64| target_population(rho0, &template.with_amplitude(a), params, dt);
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while hi - lo > GOLDEN_REL_TOL * a0 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2)?;
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1)?;
        }
    }
    Ok(template.with_amplitude(0.5 * (lo + hi)))
}

/// Optimized g-e pulse followed by an optimized e-f pulse, then free decay
/// for half the readout acquisition.
#[derive(Debug, Clone, Serialize)]
pub struct ShelvingChain {
    pub ge: PulseParams,
    pub ef: PulseParams,
    /// `(P_g, P_e, P_f)` after the g-e pulse.
    pub after_ge: [f64; 3],
    /// After the e-f pulse.
    pub after_ef: [f64; 3],
    /// Halfway through the readout.
    pub mid_readout: [f64; 3],
}

impl ShelvingChain {
    pub fn p_g(&self) -> f64 {
        self.after_ge[0]
    }

    pub fn p_g_shelved(&self) -> f64 {
        self.after_ef[0]
    }

    pub fn p_g_meas(&self) -> f64 {
        self.mid_readout[0]
    }
}

fn pops3(rho: &DensityMatrix) -> [f64; 3] {
    let p = rho.populations();
    [p[0], p[1], p[2]]
}

pub fn shelving_chain(params: &SystemParams, dt: f64) -> Result<ShelvingChain> {
    let g = DensityMatrix::basis(3, 0);
    let ge = optimize_amplitude(&PulseParams::ge(), params, &g, dt)?;
    let rho_e = evolve_final(&g, Some(&ge), params, ge.duration(), dt)?;
    let ef = optimize_amplitude(&PulseParams::ef(), params, &rho_e, dt)?;
    let rho_f = evolve_final(&rho_e, Some(&ef), params, ef.duration(), dt)?;
    let after_ef = pops3(&rho_f);
    let mid_readout = rate_equation(after_ef, 0.5 * params.readout_acquisition, params)?;
    Ok(ShelvingChain {
        ge,
        ef,
        after_ge: pops3(&rho_e),
        after_ef,
        mid_readout,
    })
}

/// Populations at the start of the readout for a g-e drive of the given
/// amplitude, followed by the chain's e-f pulse when `shelved`.
pub fn rabi_populations(
    params: &SystemParams,
    chain: &ShelvingChain,
    amplitude: f64,
    shelved: bool,
    dt: f64,
) -> Result<[f64; 3]> {
    let ge = chain.ge.with_amplitude(amplitude);
    let mut rho = evolve_final(&DensityMatrix::basis(3, 0), Some(&ge), params, ge.duration(), dt)?;
    if shelved {
        rho = evolve_final(&rho, Some(&chain.ef), params, chain.ef.duration(), dt)?;
    }
    Ok(pops3(&rho))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lossless() -> SystemParams {
        SystemParams {
            ancilla_t1_ge: 1e6,
            ancilla_t1_ef: 1e6,
            ancilla_t1_fh: 1e6,
            ancilla_t2_ge: 2e6,
            ancilla_t2_gf: 2e6,
            ..SystemParams::default()
        }
    }

    #[test]
    fn lossless_ge_pulse_is_nearly_perfect() {
        let p = lossless();
        let g = DensityMatrix::basis(3, 0);
        let pulse = optimize_amplitude(&PulseParams::ge(), &p, &g, 1e-11).unwrap();
        let pe = target_population(&g, &pulse, &p, 1e-11).unwrap();
        assert!(pe > 0.999, "{pe}");
        assert!((pulse.amplitude / pulse.pi_amplitude() - 1.0).abs() < 0.1);
    }

    #[test]
    fn local_maxima_counts_peaks() {
        assert_eq!(local_maxima(&[0.0, 1.0, 2.0, 1.0]), vec![2]);
        assert_eq!(local_maxima(&[3.0, 2.0, 1.0]), vec![0]);
        assert_eq!(local_maxima(&[0.0, 1.0, 1.0, 0.0]), vec![1]);
        assert_eq!(local_maxima(&[0.0, 2.0, 1.0, 3.0, 0.0]), vec![1, 3]);
        assert_eq!(local_maxima(&[1.0, 0.0, 1.0]), vec![0, 2]);
    }
}
