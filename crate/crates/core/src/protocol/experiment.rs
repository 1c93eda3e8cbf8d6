//! Infidelity versus number of rounds for a code.

use serde::{Deserialize, Serialize};

use super::model::ErrorModel;
use super::trial::{simulate_trial, ReadoutSequence};
use crate::codes::{CodeSpec, LogicalOutcome};
use crate::error::{Error, Result};
use crate::hmm::{build_emission, majority_vote, BirthDeath, Outcome, PosteriorBelief, PrefixClassifier};
use crate::par::map_chunks;
use crate::params::SystemParams;
use crate::rng::RandomStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Classifier {
    Majority,
    Mle,
}

impl Classifier {
    pub fn label(self) -> &'static str {
        match self {
            Classifier::Majority => "majority",
            Classifier::Mle => "mle",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Trials per logical state.
    pub trials: u64,
    pub max_cycles: usize,
    pub classifiers: Vec<Classifier>,
    /// Drop trials with a stuck reset among the rounds used.
    pub postselect_stuck: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InfidelityRow {
    pub code: String,
    pub classifier: Classifier,
    #[serde(rename = "N")]
    pub n: usize,
    pub errors_0to1: u64,
    pub errors_1to0: u64,
    /// Trials kept, both logical states together.
    pub trials: u64,
    pub infidelity: f64,
    pub stderr: f64,
    pub trials_0: u64,
    pub trials_1: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentTable {
    pub rows: Vec<InfidelityRow>,
    /// Trials (both logical states) with a stuck reset anywhere in the record.
    pub stuck_trials: u64,
    pub total_trials: u64,
}

impl ExperimentTable {
    pub fn curve(&self, classifier: Classifier) -> Vec<&InfidelityRow> {
        self.rows.iter().filter(|r| r.classifier == classifier).collect()
    }

    /// Row with the smallest infidelity for `classifier`.
    pub fn minimum(&self, classifier: Classifier) -> Option<&InfidelityRow> {
        self.curve(classifier)
            .into_iter()
            .min_by(|a, b| a.infidelity.total_cmp(&b.infidelity))
    }
}

/// Stream of trial `t` of logical state `state`. Independent of the code, so
/// different codes see common random numbers.
pub fn trial_stream(base: &RandomStream, state: LogicalOutcome, t: u64) -> RandomStream {
    base.derive(&format!("trial/{}", state.label())).at(t)
}

/// Photon number of trial `t` out of `trials`, stratified over the Fock
/// components of the codeword by their weights.
pub fn initial_photon(code: &CodeSpec, state: LogicalOutcome, t: u64, trials: u64) -> usize {
    let word = code.codeword(state);
    let u = (t as f64 + 0.5) / trials as f64;
    let mut acc = 0.0;
    for &(n, a) in word {
        acc += a * a;
        if u < acc {
            return n;
        }
    }
    word[word.len() - 1].0
}

/// Inference model matched to the simulator: loss at `1/T1` plus demolition
/// spread over a nominal cycle, transitions cached for common cycle lengths.
pub fn inference_transitions(params: &SystemParams) -> Result<BirthDeath> {
    let common: Vec<f64> = (1..=8)
        .map(|r| params.t_map + r as f64 * params.t_readout_reset)
        .collect();
    BirthDeath::new(params.fock_cutoff, params.effective_kappa_down(), params.storage_kappa_up)?
        .with_cached(&common)
}

#[derive(Debug, Clone)]
struct Tally {
    errors: Vec<u64>,
    kept: Vec<u64>,
    stuck: u64,
}

pub fn run_experiment(
    code: &CodeSpec,
    config: &ExperimentConfig,
    params: &SystemParams,
    model: &ErrorModel,
    stream: &RandomStream,
) -> Result<ExperimentTable> {
    if config.trials < 1 {
        return Err(Error::invalid("trials", "need at least one"));
    }
    if config.max_cycles < 1 {
        return Err(Error::invalid("N_max", "need at least one round"));
    }
    model.validate()?;
    let n_max = params.fock_cutoff;
    let prior = PosteriorBelief::new(code.prior_vec(n_max)?)?;
    let emission = build_emission(code, model.delta_in, model.delta_out, n_max)?;
    let mle = PrefixClassifier::new(code, &prior, emission)?;
    let transitions = inference_transitions(params)?;
    let cycles = config.max_cycles;
    let ncls = config.classifiers.len();

    let run_state = |state: LogicalOutcome| -> Result<Tally> {
        let parts = map_chunks(config.trials, |range| -> Result<Tally> {
            let mut tally = Tally {
                errors: vec![0; ncls * cycles],
                kept: vec![0; cycles],
                stuck: 0,
            };
            for t in range {
                let n0 = initial_photon(code, state, t, config.trials);
                let s = trial_stream(stream, state, t);
                let seq = simulate_trial(code, n0, cycles, params, model, &s, t)?;
                tally_trial(&seq, state, config, &mle, &transitions, &mut tally)?;
            }
            Ok(tally)
        });
        let mut total = Tally {
            errors: vec![0; ncls * cycles],
            kept: vec![0; cycles],
            stuck: 0,
        };
        for p in parts {
            let p = p?;
            total.errors.iter_mut().zip(&p.errors).for_each(|(a, b)| *a += b);
            total.kept.iter_mut().zip(&p.kept).for_each(|(a, b)| *a += b);
            total.stuck += p.stuck;
        }
        Ok(total)
    };
    let zero = run_state(LogicalOutcome::Zero)?;
    let one = run_state(LogicalOutcome::One)?;

    let mut rows = Vec::with_capacity(ncls * cycles);
    for (ci, &classifier) in config.classifiers.iter().enumerate() {
        for k in 0..cycles {
            let (e0, e1) = (zero.errors[ci * cycles + k], one.errors[ci * cycles + k]);
            let (k0, k1) = (zero.kept[k], one.kept[k]);
            let p0 = if k0 > 0 { e0 as f64 / k0 as f64 } else { f64::NAN };
            let p1 = if k1 > 0 { e1 as f64 / k1 as f64 } else { f64::NAN };
            let var = p0 * (1.0 - p0) / k0 as f64 + p1 * (1.0 - p1) / k1 as f64;
            rows.push(InfidelityRow {
                code: code.name.clone(),
                classifier,
                n: k + 1,
                errors_0to1: e0,
                errors_1to0: e1,
                trials: k0 + k1,
                infidelity: p0 + p1,
                stderr: var.sqrt(),
                trials_0: k0,
                trials_1: k1,
            });
        }
    }
    Ok(ExperimentTable {
        rows,
        stuck_trials: zero.stuck + one.stuck,
        total_trials: 2 * config.trials,
    })
}

fn tally_trial(
    seq: &ReadoutSequence,
    state: LogicalOutcome,
    config: &ExperimentConfig,
    mle: &PrefixClassifier,
    transitions: &BirthDeath,
    tally: &mut Tally,
) -> Result<()> {
    let cycles = config.max_cycles;
    if seq.stuck_flags.iter().any(|&s| s) {
        tally.stuck += 1;
    }
    let first_stuck = if config.postselect_stuck {
        seq.stuck_flags.iter().position(|&s| s).unwrap_or(cycles)
    } else {
        cycles
    };
    for k in 0..first_stuck {
        tally.kept[k] += 1;
    }
    if first_stuck == 0 {
        return Ok(());
    }
    for (ci, classifier) in config.classifiers.iter().enumerate() {
        let row = &mut tally.errors[ci * cycles..(ci + 1) * cycles];
        match classifier {
            Classifier::Majority => {
                let mut flips = 0;
                for k in 0..first_stuck {
                    flips += (seq.outcomes[k] == Outcome::Flip) as usize;
                    let label = if 2 * flips >= k + 1 { LogicalOutcome::Zero } else { LogicalOutcome::One };
                    debug_assert_eq!(label, majority_vote(&seq.outcomes[..=k]));
                    row[k] += (label != state) as u64;
                }
            }
            Classifier::Mle => {
                let labels = mle.classify_prefixes(
                    &seq.outcomes[..first_stuck],
                    &seq.durations[..first_stuck],
                    transitions,
                )?;
                for (k, label) in labels.into_iter().enumerate() {
                    row[k] += (label != state) as u64;
                }
            }
        }
    }
    Ok(())
}
