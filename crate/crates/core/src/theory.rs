//! Closed-form infidelity of a Fock code `|0>, |L>` read out by majority
//! vote over `N` rounds.
//!
//! With `m = ceil(N/2)`:
//!
//! ```text
//! 1 - F = L (m kdt)^(L-1) + (m kut)^2 + C(N, m) (d0^m + d1^m)
//! ```
//!
//! Every term is evaluated in log space so large `N` cannot overflow.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InfidelityBreakdown {
    pub relaxation_term: f64,
    pub excitation_term: f64,
    pub vote_error_0: f64,
    pub vote_error_1: f64,
    pub total: f64,
}

/// Per-cycle error parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleErrors {
    /// Photon loss probability per cycle, `kappa_down * tau`.
    pub kdt: f64,
    /// Photon gain probability per cycle, `kappa_up * tau`.
    pub kut: f64,
    pub delta0: f64,
    pub delta1: f64,
}

impl Default for CycleErrors {
    fn default() -> Self {
        Self {
            kdt: 4.8e-3,
            kut: 2.7e-4,
            delta0: 5.2e-2,
            delta1: 1.5e-3,
        }
    }
}

impl CycleErrors {
    fn validate(&self) -> Result<()> {
        for (name, v) in [("kdt", self.kdt), ("kut", self.kut)] {
            if !(0.0..1.0).contains(&v) {
                return Err(Error::invalid(name, format!("must lie in [0, 1), got {v}")));
            }
        }
        for (name, v) in [("delta0", self.delta0), ("delta1", self.delta1)] {
            if !(0.0..0.5).contains(&v) {
                return Err(Error::invalid(name, format!("must lie in [0, 0.5), got {v}")));
            }
        }
        Ok(())
    }
}

/// `ln C(n, k)` as a sum of logs.
pub fn ln_binomial(n: usize, k: usize) -> f64 {
    assert!(k <= n, "C({n}, {k}) undefined");
    let k = k.min(n - k);
    (1..=k)
        .map(|i| ((n - k + i) as f64).ln() - (i as f64).ln())
        .sum()
}

fn exp_or_zero(ln: f64) -> f64 {
    if ln == f64::NEG_INFINITY {
        0.0
    } else {
        ln.exp()
    }
}

/// Even `N` is rejected unless `allow_even` is set: the formula is derived
/// for odd vote counts.
pub fn fock_infidelity(
    l: usize,
    n: usize,
    errors: CycleErrors,
    allow_even: bool,
) -> Result<InfidelityBreakdown> {
    if l < 2 {
        return Err(Error::invalid("L", "code distance must be at least 2"));
    }
    if n < 1 {
        return Err(Error::invalid("N", "need at least one round"));
    }
    if n % 2 == 0 && !allow_even {
        return Err(Error::EvenVoteCount(n));
    }
    errors.validate()?;
    let m = n.div_ceil(2);
    let mf = m as f64;
    let relaxation_term =
        exp_or_zero((l as f64).ln() + (l - 1) as f64 * (mf * errors.kdt).ln());
    let excitation_term = exp_or_zero(2.0 * (mf * errors.kut).ln());
    let lc = ln_binomial(n, m);
    let vote_error_0 = exp_or_zero(lc + mf * errors.delta0.ln());
    let vote_error_1 = exp_or_zero(lc + mf * errors.delta1.ln());
    Ok(InfidelityBreakdown {
        relaxation_term,
        excitation_term,
        vote_error_0,
        vote_error_1,
        total: relaxation_term + excitation_term + vote_error_0 + vote_error_1,
    })
}

/// Breakdown for each `N` in `1..=n_max`, odd only unless `allow_even`.
pub fn theory_curves(
    l: usize,
    n_max: usize,
    errors: CycleErrors,
    allow_even: bool,
) -> Result<Vec<(usize, InfidelityBreakdown)>> {
    if n_max < 1 {
        return Err(Error::invalid("N_max", "must be at least 1"));
    }
    (1..=n_max)
        .filter(|n| allow_even || n % 2 == 1)
        .map(|n| Ok((n, fock_infidelity(l, n, errors, allow_even)?)))
        .collect()
}
