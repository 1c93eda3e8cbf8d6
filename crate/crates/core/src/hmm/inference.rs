use nalgebra::DVector;

use super::{EmissionMatrix, Outcome, PosteriorBelief, TransitionSource};
use crate::error::{Error, Result};

/// Largest path count accepted by [`brute_force_posterior`].
pub const ENUMERATION_LIMIT: f64 = 1e7;

fn check_inputs(
    readouts: &[Outcome],
    durations: &[f64],
    prior: &PosteriorBelief,
    transitions: &dyn TransitionSource,
    emission: &EmissionMatrix,
) -> Result<()> {
    if readouts.len() != durations.len() {
        return Err(Error::LengthMismatch {
            what: "readouts vs durations",
            left: readouts.len(),
            right: durations.len(),
        });
    }
    let n = prior.n_max();
    if transitions.n_max() != n || emission.n_max() != n {
        return Err(Error::invalid(
            "n_max",
            "prior, transitions and emission disagree on the truncation",
        ));
    }
    Ok(())
}

/// Smoothed marginals at every time step, `marginals[k]` being the belief
/// about the photon number after `k` transitions (`k = 0` is the initial
/// state), plus the log-likelihood of the sequence.
#[derive(Debug, Clone)]
pub struct Smoothed {
    pub marginals: Vec<PosteriorBelief>,
    pub log_likelihood: f64,
}

/// Scaled forward-backward pass. Step `k` first applies the transition for
/// `durations[k]`, then the emission of `readouts[k]`.
pub fn smooth(
    readouts: &[Outcome],
    durations: &[f64],
    prior: &PosteriorBelief,
    transitions: &dyn TransitionSource,
    emission: &EmissionMatrix,
) -> Result<Smoothed> {
    check_inputs(readouts, durations, prior, transitions, emission)?;
    let d = prior.probs.len();
    let steps = readouts.len();
    let mut mats = Vec::with_capacity(steps);
    for &dur in durations {
        mats.push(transitions.transition(dur)?.into_owned());
    }
    let emit = |o: Outcome| DVector::from_iterator(d, (0..d).map(|n| emission.prob(o, n)));
    let emits: Vec<DVector<f64>> = readouts.iter().map(|&o| emit(o)).collect();

    let mut alphas = Vec::with_capacity(steps + 1);
    let mut scales = Vec::with_capacity(steps);
    alphas.push(DVector::from_vec(prior.probs.clone()));
    for k in 0..steps {
        let a = (&mats[k] * &alphas[k]).component_mul(&emits[k]);
        let c = a.sum();
        if !(c > 0.0) {
            return Err(Error::ZeroLikelihood);
        }
        scales.push(c);
        alphas.push(a / c);
    }

    let mut betas = vec![DVector::from_element(d, 1.0); steps + 1];
    for k in (0..steps).rev() {
        let b = mats[k].tr_mul(&betas[k + 1].component_mul(&emits[k]));
        betas[k] = b / scales[k];
    }

    let marginals = alphas
        .iter()
        .zip(&betas)
        .map(|(a, b)| {
            let g = a.component_mul(b);
            let s = g.sum();
            PosteriorBelief {
                probs: g.iter().map(|x| x / s).collect(),
            }
        })
        .collect();
    Ok(Smoothed {
        marginals,
        log_likelihood: scales.iter().map(|c| c.ln()).sum(),
    })
}

/// Posterior over the initial photon number given the whole sequence.
pub fn forward_backward(
    readouts: &[Outcome],
    durations: &[f64],
    prior: &PosteriorBelief,
    transitions: &dyn TransitionSource,
    emission: &EmissionMatrix,
) -> Result<PosteriorBelief> {
    let mut s = smooth(readouts, durations, prior, transitions, emission)?;
    Ok(s.marginals.swap_remove(0))
}

/// Posterior over the initial photon number by summing every hidden path.
pub fn brute_force_posterior(
    readouts: &[Outcome],
    durations: &[f64],
    prior: &PosteriorBelief,
    transitions: &dyn TransitionSource,
    emission: &EmissionMatrix,
) -> Result<PosteriorBelief> {
    check_inputs(readouts, durations, prior, transitions, emission)?;
    let d = prior.probs.len();
    let steps = readouts.len();
    let paths = (d as f64).powi(steps as i32 + 1);
    if paths > ENUMERATION_LIMIT {
        return Err(Error::EnumerationTooLarge {
            paths,
            limit: ENUMERATION_LIMIT,
        });
    }
    if steps == 0 {
        return Ok(prior.clone());
    }
    let mut mats = Vec::with_capacity(steps);
    for &dur in durations {
        mats.push(transitions.transition(dur)?.into_owned());
    }

    let mut post = vec![0.0; d];
    let mut path = vec![0usize; steps + 1];
    loop {
        let mut w = prior.probs[path[0]];
        for k in 0..steps {
            if w == 0.0 {
                break;
            }
            w *= mats[k][(path[k + 1], path[k])] * emission.prob(readouts[k], path[k + 1]);
        }
        post[path[0]] += w;

        // odometer increment, last position fastest
        let mut i = steps;
        loop {
            path[i] += 1;
            if path[i] < d {
                break;
            }
            path[i] = 0;
            if i == 0 {
                let total: f64 = post.iter().sum();
                if !(total > 0.0) {
                    return Err(Error::ZeroLikelihood);
                }
                return Ok(PosteriorBelief {
                    probs: post.iter().map(|p| p / total).collect(),
                });
            }
            i -= 1;
        }
    }
}
