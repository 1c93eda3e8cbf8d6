//! One repeated-readout record.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Exp};
use serde::{Deserialize, Serialize};

use super::ancilla::{reset_ancilla, AncillaLevel, AncillaOutcome, STUCK_THRESHOLD};
use super::model::{ErrorModel, ResetModel};
use crate::codes::CodeSpec;
use crate::error::{Error, Result};
use crate::hmm::Outcome;
use crate::params::SystemParams;
use crate::rng::RandomStream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadoutSequence {
    pub trial_id: u64,
    pub true_initial_n: usize,
    pub outcomes: Vec<Outcome>,
    pub raw_ancilla_outcomes: Vec<AncillaOutcome>,
    /// `t_map + reset_iterations[i] * t_readout_reset`.
    pub cycle_durations: Vec<f64>,
    /// Storage evolution preceding each vote (previous reset + mapping);
    /// this is what inference needs.
    pub durations: Vec<f64>,
    pub reset_iterations: Vec<usize>,
    pub stuck_flags: Vec<bool>,
    /// Simulated time from the first mapping window to the end of the last
    /// reset, accumulated independently of `cycle_durations`.
    pub elapsed: f64,
}

impl ReadoutSequence {
    pub fn any_stuck(&self, cycles: usize) -> bool {
        self.stuck_flags.iter().take(cycles).any(|&s| s)
    }
}

/// Samples birth-death jumps for `window` seconds.
pub fn evolve_storage<R: Rng + ?Sized>(
    mut n: usize,
    window: f64,
    kappa_down: f64,
    kappa_up: f64,
    n_max: usize,
    rng: &mut R,
) -> usize {
    let mut left = window;
    loop {
        let down = n as f64 * kappa_down;
        let up = if n < n_max { (n + 1) as f64 * kappa_up } else { 0.0 };
        let total = down + up;
        if total <= 0.0 {
            return n;
        }
        let dt = Exp::new(total).expect("positive rate").sample(rng);
        if dt >= left {
            return n;
        }
        left -= dt;
        if rng.random::<f64>() * total < down {
            n -= 1;
        } else {
            n += 1;
        }
    }
}

/// Each photon is independently lost with probability `p_d` per readout.
pub fn demolish<R: Rng + ?Sized>(n: usize, readouts: usize, p_d: f64, rng: &mut R) -> usize {
    if n == 0 || readouts == 0 || p_d == 0.0 {
        return n;
    }
    let p = -(readouts as f64 * (-p_d).ln_1p()).exp_m1();
    let lost = Binomial::new(n as u64, p).expect("valid probability").sample(rng) as usize;
    n - lost
}

pub(crate) fn streams(stream: &RandomStream) -> (ChaCha8Rng, ChaCha8Rng) {
    (stream.derive("storage").rng(), stream.derive("ancilla").rng())
}

/// Simulates `cycles` rounds of map / read / reset on a storage that starts
/// with `initial_n` photons. The final heralding check contributes
/// `herald_tail` readouts before cycle 1.
pub fn simulate_trial(
    code: &CodeSpec,
    initial_n: usize,
    cycles: usize,
    params: &SystemParams,
    model: &ErrorModel,
    stream: &RandomStream,
    trial_id: u64,
) -> Result<ReadoutSequence> {
    let n_max = params.fock_cutoff;
    if initial_n > n_max {
        return Err(Error::invalid("initial_n", format!("exceeds n_max = {n_max}")));
    }
    let (mut srng, mut arng) = streams(stream);
    let kd = params.kappa_down();
    let ku = params.storage_kappa_up;
    let t_r = params.t_readout_reset;
    let (eps_in, eps_out) = match model.reset {
        ResetModel::Feedforward => model.mapping_errors()?,
        ResetModel::Ideal => (0.0, 0.0),
    };

    let mut seq = ReadoutSequence {
        trial_id,
        true_initial_n: initial_n,
        outcomes: Vec::with_capacity(cycles),
        raw_ancilla_outcomes: Vec::with_capacity(cycles),
        cycle_durations: Vec::with_capacity(cycles),
        durations: Vec::with_capacity(cycles),
        reset_iterations: Vec::with_capacity(cycles),
        stuck_flags: Vec::with_capacity(cycles),
        elapsed: 0.0,
    };

    let mut n = demolish(initial_n, model.herald_tail, params.demolition_prob, &mut srng);
    let mut pending = model.herald_tail as f64 * t_r;
    let mut ancilla = AncillaLevel::G;
    let mut clock = 0.0;

    for _ in 0..cycles {
        let window = pending + params.t_map;
        n = evolve_storage(n, window, kd, ku, n_max, &mut srng);
        seq.durations.push(window);
        clock += params.t_map;
        let in_s = code.in_s(n);

        let (raw, iterations) = match model.reset {
            ResetModel::Ideal => {
                let err = if in_s { model.delta_in } else { model.delta_out };
                let flip = in_s ^ (arng.random::<f64>() < err);
                (if flip { AncillaOutcome::E } else { AncillaOutcome::G }, 1)
            }
            ResetModel::Feedforward => {
                let flip = if in_s {
                    arng.random::<f64>() >= eps_in
                } else {
                    arng.random::<f64>() < eps_out
                };
                if flip {
                    ancilla = match ancilla {
                        AncillaLevel::G => AncillaLevel::E,
                        AncillaLevel::E => AncillaLevel::G,
                        other => other,
                    };
                }
                let reset = reset_ancilla(ancilla, &model.confusion, params, &model.leak, &mut arng)?;
                ancilla = reset.final_level;
                let first = reset.outcomes[0];
                let iterations = reset.iterations;
                (first, iterations)
            }
        };

        seq.outcomes.push(if raw == AncillaOutcome::G { Outcome::NoFlip } else { Outcome::Flip });
        seq.raw_ancilla_outcomes.push(raw);
        seq.reset_iterations.push(iterations);
        seq.stuck_flags.push(iterations >= STUCK_THRESHOLD);
        seq.cycle_durations.push(params.t_map + iterations as f64 * t_r);
        n = demolish(n, iterations, params.demolition_prob, &mut srng);
        pending = iterations as f64 * t_r;
        clock += pending;
    }
    seq.elapsed = clock;
    Ok(seq)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::builtin_code;
    use rand::SeedableRng;

    fn frozen_params() -> SystemParams {
        let mut p = SystemParams::default();
        p.storage_t1 = 1e30;
        p.storage_kappa_up = 0.0;
        p.demolition_prob = 0.0;
        p
    }

    #[test]
    fn noiseless_fock_0_5() {
        let code = builtin_code("fock-0-5").unwrap();
        let p = frozen_params();
        let s = simulate_trial(&code, 5, 9, &p, &ErrorModel::noiseless(), &RandomStream::new(1, 0), 0)
            .unwrap();
        assert!(s.outcomes.iter().all(|&o| o == Outcome::NoFlip));
        let s = simulate_trial(&code, 0, 9, &p, &ErrorModel::noiseless(), &RandomStream::new(1, 0), 0)
            .unwrap();
        assert!(s.outcomes.iter().all(|&o| o == Outcome::Flip));
    }

    #[test]
    fn noiseless_feedforward() {
        let code = builtin_code("fock-0-3").unwrap();
        let mut p = frozen_params();
        p.ancilla_thermal_pop = 0.0;
        p.ancilla_t1_ge = 1e30;
        p.ancilla_t1_ef = 1e30;
        p.ancilla_t1_fh = 1e30;
        p.ancilla_t2_ge = 1e30;
        p.ancilla_t2_gf = 1e30;
        let mut m = ErrorModel::noiseless();
        m.reset = ResetModel::Feedforward;
        let s = simulate_trial(&code, 0, 5, &p, &m, &RandomStream::new(2, 0), 0).unwrap();
        assert!(s.outcomes.iter().all(|&o| o == Outcome::Flip));
        assert!(s.reset_iterations.iter().all(|&r| r == 2));
    }

    #[test]
    fn bookkeeping() {
        let code = builtin_code("fock-0-4").unwrap();
        let p = SystemParams::default();
        let m = ErrorModel::matched(&p).unwrap();
        for t in 0..200 {
            let s = simulate_trial(&code, 4 * (t as usize % 2), 30, &p, &m, &RandomStream::new(3, t), t).unwrap();
            let sum: f64 = s.cycle_durations.iter().sum();
            assert!((sum - s.elapsed).abs() < 1e-9);
            for i in 0..30 {
                let want = p.t_map + s.reset_iterations[i] as f64 * p.t_readout_reset;
                assert_eq!(s.cycle_durations[i], want);
                assert_eq!(s.stuck_flags[i], s.reset_iterations[i] >= 5);
            }
            assert_eq!(s.durations[0], p.t_map + p.t_readout_reset);
        }
    }

    #[test]
    fn initial_n_bound() {
        let code = builtin_code("fock-0-2").unwrap();
        let p = SystemParams::default();
        assert!(simulate_trial(&code, 11, 1, &p, &ErrorModel::noiseless(), &RandomStream::new(0, 0), 0).is_err());
    }

    #[test]
    fn demolition_rate() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let trials = 200_000;
        let lost: usize = (0..trials).map(|_| 5 - demolish(5, 3, 0.01, &mut rng)).sum();
        let p = 1.0 - 0.99f64.powi(3);
        let mean = 5.0 * p * trials as f64;
        let sd = (5.0 * p * (1.0 - p) * trials as f64).sqrt();
        assert!((lost as f64 - mean).abs() < 4.0 * sd);
    }
}
