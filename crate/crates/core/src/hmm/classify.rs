use nalgebra::DVector;

use super::{EmissionMatrix, Outcome, PosteriorBelief, TransitionSource};
use crate::codes::{CodeSpec, LogicalOutcome};
use crate::error::{Error, Result};

/// Larger posterior mass on a codeword support wins; exact ties go to zero.
pub fn classify_mle(posterior: &PosteriorBelief, code: &CodeSpec) -> LogicalOutcome {
    let mut mass = [0.0; 2];
    for (n, &p) in posterior.probs.iter().enumerate() {
        match code.codeword_of(n) {
            Some(LogicalOutcome::Zero) => mass[0] += p,
            Some(LogicalOutcome::One) => mass[1] += p,
            None => {}
        }
    }
    if mass[1] > mass[0] {
        LogicalOutcome::One
    } else {
        LogicalOutcome::Zero
    }
}

/// Flip majority means the zero codeword; ties go to zero.
pub fn majority_vote(readouts: &[Outcome]) -> LogicalOutcome {
    let flips = readouts.iter().filter(|&&o| o == Outcome::Flip).count();
    if 2 * flips >= readouts.len() {
        LogicalOutcome::Zero
    } else {
        LogicalOutcome::One
    }
}

/// MLE labels for every prefix of one sequence in a single pass.
///
/// Runs one forward recursion per initial photon number in the prior's
/// support; the likelihood of each hypothesis after `k` readouts is then
/// available directly, so all prefix posteriors cost the same as one.
#[derive(Debug, Clone)]
pub struct PrefixClassifier {
    hyps: Vec<(usize, f64, LogicalOutcome)>,
    emission: EmissionMatrix,
}

impl PrefixClassifier {
    pub fn new(code: &CodeSpec, prior: &PosteriorBelief, emission: EmissionMatrix) -> Result<Self> {
        if emission.n_max() != prior.n_max() {
            return Err(Error::invalid("n_max", "prior and emission disagree"));
        }
        let hyps = prior
            .probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(n, &p)| {
                let label = code.codeword_of(n).ok_or_else(|| {
                    Error::invalid("prior", format!("mass on n={n} outside the codewords"))
                })?;
                Ok((n, p.ln(), label))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { hyps, emission })
    }

    /// `ln P(zero | prefix) - ln P(one | prefix)` for prefixes of length
    /// `1..=readouts.len()`.
    pub fn log_odds(
        &self,
        readouts: &[Outcome],
        durations: &[f64],
        transitions: &dyn TransitionSource,
    ) -> Result<Vec<f64>> {
        if readouts.len() != durations.len() {
            return Err(Error::LengthMismatch {
                what: "readouts vs durations",
                left: readouts.len(),
                right: durations.len(),
            });
        }
        let d = self.emission.n_max() + 1;
        let mut alphas: Vec<DVector<f64>> = self
            .hyps
            .iter()
            .map(|&(n, _, _)| {
                let mut a = DVector::zeros(d);
                a[n] = 1.0;
                a
            })
            .collect();
        let mut log_lik = vec![0.0; self.hyps.len()];
        let mut tmp = DVector::zeros(d);
        let mut out = Vec::with_capacity(readouts.len());
        for (&o, &dur) in readouts.iter().zip(durations) {
            let t = transitions.transition(dur)?;
            let emit: Vec<f64> = (0..d).map(|n| self.emission.prob(o, n)).collect();
            for (a, ll) in alphas.iter_mut().zip(log_lik.iter_mut()) {
                if *ll == f64::NEG_INFINITY {
                    continue;
                }
                tmp.gemv(1.0, &t, a, 0.0);
                let mut s = 0.0;
                for n in 0..d {
                    tmp[n] *= emit[n];
                    s += tmp[n];
                }
                if s > 0.0 {
                    *ll += s.ln();
                    a.copy_from(&tmp);
                    *a /= s;
                } else {
                    *ll = f64::NEG_INFINITY;
                }
            }
            let mut m = [f64::NEG_INFINITY; 2];
            for (&(_, lp, label), &ll) in self.hyps.iter().zip(&log_lik) {
                let i = (label == LogicalOutcome::One) as usize;
                m[i] = log_add(m[i], lp + ll);
            }
            if m[0] == f64::NEG_INFINITY && m[1] == f64::NEG_INFINITY {
                return Err(Error::ZeroLikelihood);
            }
            out.push(m[0] - m[1]);
        }
        Ok(out)
    }

    pub fn classify_prefixes(
        &self,
        readouts: &[Outcome],
        durations: &[f64],
        transitions: &dyn TransitionSource,
    ) -> Result<Vec<LogicalOutcome>> {
        Ok(self
            .log_odds(readouts, durations, transitions)?
            .into_iter()
            .map(|lo| if lo >= 0.0 { LogicalOutcome::Zero } else { LogicalOutcome::One })
            .collect())
    }
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::builtin_code;
    use crate::hmm::{build_emission, forward_backward, BirthDeath};

    use Outcome::{Flip as F, NoFlip as N};

    #[test]
    fn majority_examples() {
        assert_eq!(majority_vote(&[F, F, N]), LogicalOutcome::Zero);
        assert_eq!(majority_vote(&[N]), LogicalOutcome::One);
        assert_eq!(majority_vote(&[F, F, N, N]), LogicalOutcome::Zero);
    }

    #[test]
    fn mle_examples() {
        let b1 = builtin_code("binomial-1").unwrap();
        let p = PosteriorBelief::new(vec![0.3, 0.0, 0.3, 0.0, 0.3, 0.1]).unwrap();
        assert_eq!(classify_mle(&p, &b1), LogicalOutcome::One);
        let f5 = builtin_code("fock-0-5").unwrap();
        let mut v = vec![0.0; 6];
        v[5] = 1.0;
        assert_eq!(classify_mle(&PosteriorBelief::new(v).unwrap(), &f5), LogicalOutcome::One);
        let tie = PosteriorBelief::new(vec![0.5, 0.0, 0.0, 0.0, 0.0, 0.5]).unwrap();
        assert_eq!(classify_mle(&tie, &f5), LogicalOutcome::Zero);
    }

    #[test]
    fn prefix_matches_forward_backward() {
        let code = builtin_code("binomial-2").unwrap();
        let n_max = 8;
        let e = build_emission(&code, 0.07, 0.02, n_max).unwrap();
        let t = BirthDeath::new(n_max, 2e3, 300.0).unwrap();
        let prior = PosteriorBelief::new(code.prior_vec(n_max).unwrap()).unwrap();
        let pc = PrefixClassifier::new(&code, &prior, e.clone()).unwrap();
        let seq = [F, N, N, F, N, F, F, N, N, N, F, N];
        let durs: Vec<f64> = (0..seq.len()).map(|k| 4e-6 + 1e-6 * (k % 3) as f64).collect();
        let lo = pc.log_odds(&seq, &durs, &t).unwrap();
        for k in 1..=seq.len() {
            let post = forward_backward(&seq[..k], &durs[..k], &prior, &t, &e).unwrap();
            let m0: f64 = [3].iter().map(|&n| post.probs[n]).sum();
            let m1: f64 = [0, 6].iter().map(|&n| post.probs[n]).sum();
            assert!(((m0 / m1).ln() - lo[k - 1]).abs() < 1e-9, "k={k}");
        }
    }
}
