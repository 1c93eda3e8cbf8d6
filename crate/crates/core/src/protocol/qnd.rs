//! Storage lifetime measured with ancilla readouts every `interval`.

use rand::Rng;
use rand_distr::{Distribution, Exp, Geometric};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::par::map_chunks;
use crate::params::SystemParams;
use crate::rng::RandomStream;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QndPoint {
    pub interval: f64,
    /// Maximum-likelihood exponential lifetime (mean loss time).
    pub lifetime: f64,
    pub stderr: f64,
    pub trials: u64,
}

/// Time at which a single photon is lost: intrinsic decay at `1/T1` or
/// demolition by one of the readouts at `interval, 2 interval, ...`.
pub fn loss_time<R: Rng + ?Sized>(params: &SystemParams, interval: f64, rng: &mut R) -> f64 {
    let decay = Exp::new(params.kappa_down()).expect("positive rate").sample(rng);
    if params.demolition_prob == 0.0 {
        return decay;
    }
    let k = Geometric::new(params.demolition_prob).expect("valid probability").sample(rng) + 1;
    decay.min(interval * k as f64)
}

pub fn qnd_experiment(
    params: &SystemParams,
    intervals: &[f64],
    trials: u64,
    stream: &RandomStream,
) -> Result<Vec<QndPoint>> {
    if trials < 2 {
        return Err(Error::invalid("trials", "need at least 2"));
    }
    intervals
        .iter()
        .enumerate()
        .map(|(i, &interval)| {
            if !(interval > 0.0) {
                return Err(Error::invalid("interval", "must be positive"));
            }
            let family = stream.derive(&format!("qnd/{i}"));
            let sums = map_chunks(trials, |range| {
                range
                    .map(|t| loss_time(params, interval, &mut family.at(t).rng()))
                    .sum::<f64>()
            });
            let mean = sums.iter().sum::<f64>() / trials as f64;
            Ok(QndPoint {
                interval,
                lifetime: mean,
                stderr: mean / (trials as f64).sqrt(),
                trials,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_demolition_gives_t1() {
        let mut p = SystemParams::default();
        p.demolition_prob = 0.0;
        let pts = qnd_experiment(&p, &[5e-6, 50e-6], 100_000, &RandomStream::new(5, 0)).unwrap();
        for pt in pts {
            assert!((pt.lifetime - p.storage_t1).abs() < 3.0 * pt.stderr);
        }
    }
}
