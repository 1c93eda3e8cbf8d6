//! Belief about the photon number after repeated heralding checks,
//! `P_{t+1}(n') = sum_n P_t(n) E_n T(n -> n')`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hmm::TransitionMatrix;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PreparationBelief {
    /// Conditional distribution given that every check passed.
    pub probs: Vec<f64>,
    /// Probability that every check passes.
    pub acceptance_probability: f64,
}

/// Distribution before any check: `1 - initial_error` on the target, the rest
/// on its neighbours in proportion to the one-step loss and gain
/// probabilities out of the target.
pub fn initial_distribution(
    target_n: usize,
    transition: &TransitionMatrix,
    initial_error: f64,
) -> Result<Vec<f64>> {
    let n_max = transition.n_max();
    if target_n > n_max {
        return Err(Error::invalid("target_n", format!("exceeds n_max = {n_max}")));
    }
    if !(0.0..=1.0).contains(&initial_error) {
        return Err(Error::invalid("initial_error", "must lie in [0, 1]"));
    }
    let mut p = vec![0.0; n_max + 1];
    p[target_n] = 1.0 - initial_error;
    let mut neighbours = Vec::new();
    if target_n > 0 {
        neighbours.push((target_n - 1, transition.prob(target_n, target_n - 1)));
    }
    if target_n < n_max {
        neighbours.push((target_n + 1, transition.prob(target_n, target_n + 1)));
    }
    let total: f64 = neighbours.iter().map(|&(_, w)| w).sum();
    for &(n, w) in &neighbours {
        let share = if total > 0.0 { w / total } else { 1.0 / neighbours.len() as f64 };
        p[n] += initial_error * share;
    }
    Ok(p)
}

pub fn herald_preparation(
    target_n: usize,
    num_checks: usize,
    check_pass_prob: &[f64],
    transition: &TransitionMatrix,
    initial_error: f64,
) -> Result<PreparationBelief> {
    let d = transition.n_max() + 1;
    if check_pass_prob.len() != d {
        return Err(Error::LengthMismatch {
            what: "check_pass_prob vs transition size",
            left: check_pass_prob.len(),
            right: d,
        });
    }
    if check_pass_prob.iter().any(|e| !(0.0..=1.0).contains(e)) {
        return Err(Error::invalid("check_pass_prob", "must lie in [0, 1]"));
    }
    let mut p = initial_distribution(target_n, transition, initial_error)?;
    for _ in 0..num_checks {
        let mut next = vec![0.0; d];
        for (n, &pn) in p.iter().enumerate() {
            let w = pn * check_pass_prob[n];
            if w == 0.0 {
                continue;
            }
            for (m, x) in next.iter_mut().enumerate() {
                *x += w * transition.prob(n, m);
            }
        }
        p = next;
    }
    let acceptance_probability: f64 = p.iter().sum();
    if !(acceptance_probability > 0.0) {
        return Err(Error::invalid("check_pass_prob", "checks can never all pass"));
    }
    Ok(PreparationBelief {
        probs: p.iter().map(|x| x / acceptance_probability).collect(),
        acceptance_probability,
    })
}

/// Pass probabilities of a check that flips the ancilla only for `target_n`.
pub fn selective_check(target_n: usize, n_max: usize, delta_in: f64, delta_out: f64) -> Vec<f64> {
    (0..=n_max)
        .map(|n| if n == target_n { 1.0 - delta_in } else { delta_out })
        .collect()
}
