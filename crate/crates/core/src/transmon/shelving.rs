//! Rabi curve read out with and without an e-f shelving pulse.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::protocol::AncillaConfusion;

/// Populations `(P_g, P_e, P_f)` when the readout starts.
pub type StagePopulations = [f64; 3];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RabiPoint {
    pub amplitude: f64,
    pub shelved: bool,
    /// Probability that the readout is assigned `g`.
    pub p_g: f64,
    pub p_not_g: f64,
}

/// Composes pulse-end populations with the readout confusion. `source`
/// returns the populations for a g-e drive amplitude, with the e-f shelving
/// pulse applied after it when `shelved` is set.
pub fn shelving_rabi<F>(
    amplitudes: &[f64],
    shelved: bool,
    source: F,
    confusion: &AncillaConfusion,
) -> Result<Vec<RabiPoint>>
where
    F: Fn(f64, bool) -> Result<StagePopulations>,
{
    amplitudes
        .iter()
        .map(|&a| {
            let pops = source(a, shelved)?;
            if pops.iter().any(|p| !(-1e-9..=1.0 + 1e-9).contains(p)) {
                return Err(Error::invalid("populations", format!("{pops:?} out of range")));
            }
            let p_g: f64 = pops
                .iter()
                .enumerate()
                .map(|(l, p)| p.max(0.0) * confusion.m[l][0])
                .sum();
            Ok(RabiPoint {
                amplitude: a,
                shelved,
                p_g,
                p_not_g: 1.0 - p_g,
            })
        })
        .collect()
}

/// Point with the smallest `P("g")`.
pub fn rabi_minimum(points: &[RabiPoint]) -> Option<RabiPoint> {
    points.iter().copied().min_by(|a, b| a.p_g.total_cmp(&b.p_g))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ideal_rabi() {
        let amps: Vec<f64> = (0..=40).map(|i| i as f64 / 40.0 * std::f64::consts::PI).collect();
        let src = |a: f64, shelved: bool| -> Result<StagePopulations> {
            let pe = (a / 2.0).sin().powi(2);
            Ok(if shelved { [1.0 - pe, 0.0, pe] } else { [1.0 - pe, pe, 0.0] })
        };
        for shelved in [false, true] {
            let pts = shelving_rabi(&amps, shelved, src, &AncillaConfusion::perfect()).unwrap();
            for p in &pts {
                assert!((p.p_not_g - (p.amplitude / 2.0).sin().powi(2)).abs() < 1e-15);
            }
            let m = rabi_minimum(&pts).unwrap();
            assert!(m.p_g.abs() < 1e-15);
            assert!(pts.iter().map(|p| p.p_not_g).fold(f64::INFINITY, f64::min) < 1e-15);
        }
    }
}
