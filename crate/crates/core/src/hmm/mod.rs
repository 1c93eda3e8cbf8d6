//! Hidden Markov model of repeated photon-number-selective readout.
//!
//! Hidden state: storage photon number `n` in `0..=n_max`. Between readouts
//! the photon number evolves under a truncated birth-death process; each
//! readout emits `Flip` or `NoFlip` through an error-prone channel.
//! Matrices are column-stochastic: `T[(to, from)]`.

mod classify;
mod inference;

pub use classify::{classify_mle, majority_vote, PrefixClassifier};
pub use inference::{
    brute_force_posterior, forward_backward, smooth, Smoothed, ENUMERATION_LIMIT,
};

use std::borrow::Cow;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::codes::CodeSpec;
use crate::error::{Error, Result};
use crate::linalg::expm;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    #[serde(rename = "flip")]
    Flip,
    #[serde(rename = "no-flip")]
    NoFlip,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    pub matrix: DMatrix<f64>,
    pub duration: f64,
}

impl TransitionMatrix {
    pub fn n_max(&self) -> usize {
        self.matrix.nrows() - 1
    }

    /// Probability of `from -> to` over one step.
    pub fn prob(&self, from: usize, to: usize) -> f64 {
        self.matrix[(to, from)]
    }
}

/// Generator of the truncated birth-death process. Gain out of `n_max` is
/// dropped, so every column sums to zero.
pub fn generator(n_max: usize, kappa_down: f64, kappa_up: f64) -> DMatrix<f64> {
    let d = n_max + 1;
    let mut g = DMatrix::zeros(d, d);
    for n in 0..d {
        if n > 0 {
            let r = n as f64 * kappa_down;
            g[(n - 1, n)] += r;
            g[(n, n)] -= r;
        }
        if n < n_max {
            let r = (n + 1) as f64 * kappa_up;
            g[(n + 1, n)] += r;
            g[(n, n)] -= r;
        }
    }
    g
}

pub fn build_transition(
    n_max: usize,
    kappa_down: f64,
    kappa_up: f64,
    duration: f64,
) -> Result<TransitionMatrix> {
    if n_max < 1 {
        return Err(Error::invalid("n_max", "must be at least 1"));
    }
    for (name, v) in [("kappa_down", kappa_down), ("kappa_up", kappa_up), ("duration", duration)] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::invalid(name, format!("must be non-negative, got {v}")));
        }
    }
    let mut t = expm(&(generator(n_max, kappa_down, kappa_up) * duration));
    // Clip roundoff negatives and restore exact column sums.
    for mut col in t.column_iter_mut() {
        col.iter_mut().for_each(|x| *x = x.max(0.0));
        let s: f64 = col.sum();
        col /= s;
    }
    Ok(TransitionMatrix { matrix: t, duration })
}

/// Supplies the per-step transition matrix for a cycle of given duration.
pub trait TransitionSource {
    fn n_max(&self) -> usize;
    fn transition(&self, duration: f64) -> Result<Cow<'_, DMatrix<f64>>>;
}

/// Birth-death transitions with fixed rates, built on demand. Durations
/// listed in `cached` are precomputed.
#[derive(Debug, Clone)]
pub struct BirthDeath {
    pub n_max: usize,
    pub kappa_down: f64,
    pub kappa_up: f64,
    cache: Vec<(f64, DMatrix<f64>)>,
}

impl BirthDeath {
    pub fn new(n_max: usize, kappa_down: f64, kappa_up: f64) -> Result<Self> {
        build_transition(n_max, kappa_down, kappa_up, 0.0)?;
        Ok(Self {
            n_max,
            kappa_down,
            kappa_up,
            cache: Vec::new(),
        })
    }

    pub fn with_cached(mut self, durations: &[f64]) -> Result<Self> {
        for &d in durations {
            let t = build_transition(self.n_max, self.kappa_down, self.kappa_up, d)?;
            self.cache.push((d, t.matrix));
        }
        Ok(self)
    }
}

impl TransitionSource for BirthDeath {
    fn n_max(&self) -> usize {
        self.n_max
    }

    fn transition(&self, duration: f64) -> Result<Cow<'_, DMatrix<f64>>> {
        if let Some((_, m)) = self.cache.iter().find(|(d, _)| *d == duration) {
            return Ok(Cow::Borrowed(m));
        }
        Ok(Cow::Owned(
            build_transition(self.n_max, self.kappa_down, self.kappa_up, duration)?.matrix,
        ))
    }
}

/// `P(flip | n)` for each photon number.
#[derive(Debug, Clone, PartialEq)]
pub struct EmissionMatrix {
    p_flip: Vec<f64>,
}

impl EmissionMatrix {
    /// Per-n emission; each entry is `P(flip | n)`.
    pub fn from_flip_probs(p_flip: Vec<f64>) -> Result<Self> {
        if p_flip.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::invalid("emission", "probabilities must lie in [0, 1]"));
        }
        Ok(Self { p_flip })
    }

    pub fn n_max(&self) -> usize {
        self.p_flip.len() - 1
    }

    pub fn prob(&self, outcome: Outcome, n: usize) -> f64 {
        match outcome {
            Outcome::Flip => self.p_flip[n],
            Outcome::NoFlip => 1.0 - self.p_flip[n],
        }
    }
}

pub fn build_emission(
    code: &CodeSpec,
    delta_in: f64,
    delta_out: f64,
    n_max: usize,
) -> Result<EmissionMatrix> {
    for (name, d) in [("delta_in", delta_in), ("delta_out", delta_out)] {
        if !(0.0..0.5).contains(&d) {
            return Err(Error::invalid(name, format!("must lie in [0, 0.5), got {d}")));
        }
    }
    let p_flip = (0..=n_max)
        .map(|n| if code.in_s(n) { 1.0 - delta_in } else { delta_out })
        .collect();
    EmissionMatrix::from_flip_probs(p_flip)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorBelief {
    pub probs: Vec<f64>,
}

impl PosteriorBelief {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.iter().any(|p| !(*p >= 0.0)) {
            return Err(Error::invalid("belief", "probabilities must be non-negative"));
        }
        let s: f64 = probs.iter().sum();
        if (s - 1.0).abs() > 1e-10 {
            return Err(Error::invalid("belief", format!("sums to {s}")));
        }
        Ok(Self { probs })
    }

    pub fn n_max(&self) -> usize {
        self.probs.len() - 1
    }
}
