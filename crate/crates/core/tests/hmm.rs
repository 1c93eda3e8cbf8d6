use mlread::hmm::{
    brute_force_posterior, build_emission, build_transition, classify_mle, forward_backward,
    majority_vote, BirthDeath, EmissionMatrix, Outcome, PosteriorBelief,
};
use mlread::{builtin_code, CodeSpec, Error, LogicalOutcome};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use Outcome::{Flip, NoFlip};

fn taylor(g: &DMatrix<f64>, tau: f64, terms: usize) -> DMatrix<f64> {
    let d = g.nrows();
    let mut out = DMatrix::identity(d, d);
    let mut term = DMatrix::identity(d, d);
    for k in 1..=terms {
        term = &term * g * (tau / k as f64);
        out += &term;
    }
    out
}

#[test]
fn two_level_decay_closed_form() {
    let tau = 1e-6;
    let t = build_transition(1, 4.8e-3 / tau, 0.0, tau).unwrap();
    let want = -(-4.8e-3f64).exp_m1();
    assert!((t.prob(1, 0) - want).abs() < 1e-12);
    assert!((want - 4.7885e-3).abs() < 1e-7);
}

#[test]
fn matches_series_oracle() {
    let tau = 4.56e-6;
    let (kd, ku) = (4.8e-3 / tau, 2.7e-4 / tau);
    let t = build_transition(5, kd, ku, tau).unwrap();
    let mut g = DMatrix::<f64>::zeros(6, 6);
    for n in 0..6usize {
        if n > 0 {
            g[(n - 1, n)] += n as f64 * kd;
            g[(n, n)] -= n as f64 * kd;
        }
        if n < 5 {
            g[(n + 1, n)] += (n + 1) as f64 * ku;
            g[(n, n)] -= (n + 1) as f64 * ku;
        }
    }
    let oracle = taylor(&g, tau, 20);
    assert!((t.prob(2, 1) - oracle[(1, 2)]).abs() < 1e-12);
    assert!((&t.matrix - &oracle).abs().max() < 1e-12);
}

#[test]
fn zero_rates_give_identity() {
    let t = build_transition(6, 0.0, 0.0, 1.0).unwrap();
    assert_eq!(t.matrix, DMatrix::identity(7, 7));
}

proptest! {
    #[test]
    fn transitions_are_column_stochastic(
        n_max in 1usize..12,
        kd in 0.0..1e5f64,
        ku in 0.0..1e4f64,
        tau in 0.0..1e-3f64,
    ) {
        let t = build_transition(n_max, kd, ku, tau).unwrap();
        for c in 0..=n_max {
            let col = t.matrix.column(c);
            prop_assert!(col.iter().all(|&p| (0.0..=1.0).contains(&p)));
            prop_assert!((col.sum() - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn emission_examples() {
    let code = builtin_code("fock-0-5").unwrap();
    let e = build_emission(&code, 5.2e-2, 1.5e-3, 10).unwrap();
    assert!((e.prob(Flip, 0) - 0.948).abs() < 1e-15);
    assert!((e.prob(NoFlip, 5) - 0.9985).abs() < 1e-15);
    for n in 0..=10 {
        assert!((e.prob(Flip, n) + e.prob(NoFlip, n) - 1.0).abs() < 1e-12);
    }
    let exact = build_emission(&code, 0.0, 0.0, 10).unwrap();
    for n in 0..=10 {
        let p = exact.prob(Flip, n);
        assert!(p == 0.0 || p == 1.0);
        assert_eq!(p == 1.0, code.in_s(n));
    }
}

fn fock_prior(l: usize, n_max: usize) -> PosteriorBelief {
    let mut p = vec![0.0; n_max + 1];
    p[0] = 0.5;
    p[l] = 0.5;
    PosteriorBelief::new(p).unwrap()
}

#[test]
fn single_perfect_flip() {
    let code = builtin_code("fock-0-5").unwrap();
    let e = build_emission(&code, 0.0, 0.0, 5).unwrap();
    let bd = BirthDeath::new(5, 0.0, 0.0).unwrap();
    let post = forward_backward(&[Flip], &[1e-6], &fock_prior(5, 5), &bd, &e).unwrap();
    assert!((post.probs[0] - 1.0).abs() < 1e-15);
}

#[test]
fn iid_votes_follow_closed_form() {
    let code = builtin_code("fock-0-3").unwrap();
    let delta = 0.07;
    let e = build_emission(&code, delta, delta, 4).unwrap();
    let bd = BirthDeath::new(4, 0.0, 0.0).unwrap();
    let seq = [Flip, NoFlip, Flip, Flip, NoFlip, Flip, Flip];
    let post = forward_backward(&seq, &[1e-6; 7], &fock_prior(3, 4), &bd, &e).unwrap();
    let agree = seq.iter().filter(|&&o| o == Flip).count() as i32;
    let want = ((1.0 - delta) / delta).powi(agree - (seq.len() as i32 - agree));
    assert!((post.probs[0] / post.probs[3] / want - 1.0).abs() < 1e-12);
}

#[test]
fn empty_sequence_returns_prior() {
    let code = builtin_code("fock-0-2").unwrap();
    let e = build_emission(&code, 0.1, 0.1, 3).unwrap();
    let bd = BirthDeath::new(3, 1e3, 1e2).unwrap();
    let prior = fock_prior(2, 3);
    assert_eq!(brute_force_posterior(&[], &[], &prior, &bd, &e).unwrap(), prior);
    assert_eq!(forward_backward(&[], &[], &prior, &bd, &e).unwrap(), prior);
}

#[test]
fn impossible_sequence_is_rejected() {
    let code = builtin_code("fock-0-2").unwrap();
    let e = build_emission(&code, 0.0, 0.0, 2).unwrap();
    let bd = BirthDeath::new(2, 0.0, 0.0).unwrap();
    let mut p = vec![0.0; 3];
    p[0] = 1.0;
    let prior = PosteriorBelief::new(p).unwrap();
    let seq = [Flip, NoFlip];
    assert!(matches!(
        brute_force_posterior(&seq, &[1e-6; 2], &prior, &bd, &e),
        Err(Error::ZeroLikelihood)
    ));
    assert!(matches!(
        forward_backward(&seq, &[1e-6; 2], &prior, &bd, &e),
        Err(Error::ZeroLikelihood)
    ));
}

/// Independent path sum: every hidden trajectory weighted by its
/// probability, accumulated on the initial state.
fn path_sum(
    seq: &[Outcome],
    durs: &[f64],
    prior: &[f64],
    kd: f64,
    ku: f64,
    e: &EmissionMatrix,
) -> Vec<f64> {
    let d = prior.len();
    let ts: Vec<_> = durs
        .iter()
        .map(|&t| build_transition(d - 1, kd, ku, t).unwrap())
        .collect();
    let mut post = vec![0.0; d];
    let mut path = vec![0usize; seq.len() + 1];
    loop {
        let mut w = prior[path[0]];
        for k in 0..seq.len() {
            w *= ts[k].prob(path[k], path[k + 1]) * e.prob(seq[k], path[k + 1]);
        }
        post[path[0]] += w;
        let mut i = 0;
        loop {
            if i == path.len() {
                let z: f64 = post.iter().sum();
                return post.iter().map(|p| p / z).collect();
            }
            path[i] += 1;
            if path[i] < d {
                break;
            }
            path[i] = 0;
            i += 1;
        }
    }
}

fn random_instance(rng: &mut ChaCha8Rng) -> (usize, Vec<Outcome>, Vec<f64>, Vec<f64>, f64, f64, EmissionMatrix) {
    let n_max = rng.random_range(1..=3);
    let len = rng.random_range(0..=5);
    let seq: Vec<Outcome> = (0..len)
        .map(|_| if rng.random_bool(0.5) { Flip } else { NoFlip })
        .collect();
    let durs: Vec<f64> = (0..len).map(|_| rng.random_range(1e-7..1e-5)).collect();
    let mut prior: Vec<f64> = (0..=n_max).map(|_| rng.random_range(0.01..1.0)).collect();
    let z: f64 = prior.iter().sum();
    prior.iter_mut().for_each(|p| *p /= z);
    let kd = rng.random_range(0.0..1e5);
    let ku = rng.random_range(0.0..3e4);
    let flips: Vec<f64> = (0..=n_max).map(|_| rng.random_range(0.01..0.99)).collect();
    (n_max, seq, durs, prior, kd, ku, EmissionMatrix::from_flip_probs(flips).unwrap())
}

#[test]
fn forward_backward_equals_path_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let (n_max, seq, durs, prior, kd, ku, e) = random_instance(&mut rng);
        let bd = BirthDeath::new(n_max, kd, ku).unwrap();
        let belief = PosteriorBelief::new(prior.clone()).unwrap();
        let fb = forward_backward(&seq, &durs, &belief, &bd, &e).unwrap();
        let bf = brute_force_posterior(&seq, &durs, &belief, &bd, &e).unwrap();
        let oracle = path_sum(&seq, &durs, &prior, kd, ku, &e);
        for n in 0..=n_max {
            assert!((fb.probs[n] - bf.probs[n]).abs() < 1e-10);
            assert!((fb.probs[n] - oracle[n]).abs() < 1e-10);
        }
    }
}

#[test]
fn posterior_stays_normalized_to_fifty_votes() {
    let code = builtin_code("binomial-2").unwrap();
    let tau = 4.56e-6;
    let bd = BirthDeath::new(10, 4.8e-3 / tau, 2.7e-4 / tau).unwrap();
    let e = build_emission(&code, 5.2e-2, 1.5e-3, 10).unwrap();
    let prior = PosteriorBelief::new(code.prior_vec(10).unwrap()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for len in [1usize, 10, 25, 50] {
        for _ in 0..20 {
            let seq: Vec<Outcome> = (0..len)
                .map(|_| if rng.random_bool(0.5) { Flip } else { NoFlip })
                .collect();
            let post = forward_backward(&seq, &vec![tau; len], &prior, &bd, &e).unwrap();
            assert!((post.probs.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        }
    }
}

fn exact_error(code: &CodeSpec, n_max: usize, din: f64, dout: f64, len: usize) -> f64 {
    let e = build_emission(code, din, dout, n_max).unwrap();
    let bd = BirthDeath::new(n_max, 0.0, 0.0).unwrap();
    let prior_v = code.prior_vec(n_max).unwrap();
    let prior = PosteriorBelief::new(prior_v.clone()).unwrap();
    let durs = vec![1e-6; len];
    let mut err = 0.0;
    for bits in 0..(1u32 << len) {
        let seq: Vec<Outcome> = (0..len)
            .map(|k| if bits >> k & 1 == 1 { Flip } else { NoFlip })
            .collect();
        let label = classify_mle(&forward_backward(&seq, &durs, &prior, &bd, &e).unwrap(), code);
        for (n, &p) in prior_v.iter().enumerate() {
            if p == 0.0 || code.codeword_of(n) == Some(label) {
                continue;
            }
            let like: f64 = seq.iter().map(|&o| e.prob(o, n)).product();
            err += p * like;
        }
    }
    err
}

#[test]
fn more_votes_never_hurt_without_dynamics() {
    let code = builtin_code("fock-0-4").unwrap();
    let mut prev = f64::INFINITY;
    for len in 1..=10 {
        let err = exact_error(&code, 5, 5.2e-2, 1.5e-3, len);
        assert!(err <= prev + 1e-15, "N={len}: {err} > {prev}");
        prev = err;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn posterior_is_exchangeable(bits in proptest::collection::vec(any::<bool>(), 1..30), seed in any::<u64>()) {
        let code = builtin_code("binomial-1").unwrap();
        let e = build_emission(&code, 0.05, 0.01, 6).unwrap();
        let bd = BirthDeath::new(6, 0.0, 0.0).unwrap();
        let prior = PosteriorBelief::new(code.prior_vec(6).unwrap()).unwrap();
        let seq: Vec<Outcome> = bits.iter().map(|&b| if b { Flip } else { NoFlip }).collect();
        let mut shuffled = seq.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let durs = vec![2e-6; seq.len()];
        let a = forward_backward(&seq, &durs, &prior, &bd, &e).unwrap();
        let b = forward_backward(&shuffled, &durs, &prior, &bd, &e).unwrap();
        for (x, y) in a.probs.iter().zip(&b.probs) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }
}

#[test]
fn classifier_examples() {
    let b1 = builtin_code("binomial-1").unwrap();
    let mut p = vec![0.0; 7];
    p[0] = 0.3;
    p[4] = 0.3;
    p[2] = 0.3;
    p[1] = 0.1;
    let label = classify_mle(&PosteriorBelief::new(p).unwrap(), &b1);
    assert_eq!(b1.codeword(label), &b1.one_codeword[..]);
    assert_eq!(b1.one_codeword.iter().map(|w| w.0).collect::<Vec<_>>(), vec![0, 4]);

    let f5 = builtin_code("fock-0-5").unwrap();
    let mut p = vec![0.0; 6];
    p[5] = 1.0;
    assert_eq!(classify_mle(&PosteriorBelief::new(p).unwrap(), &f5), LogicalOutcome::One);
    let mut p = vec![0.0; 6];
    p[0] = 0.5;
    p[5] = 0.5;
    assert_eq!(classify_mle(&PosteriorBelief::new(p).unwrap(), &f5), LogicalOutcome::Zero);

    assert_eq!(majority_vote(&[Flip, Flip, NoFlip]), LogicalOutcome::Zero);
    assert_eq!(majority_vote(&[NoFlip]), LogicalOutcome::One);
    assert_eq!(majority_vote(&[Flip, Flip, NoFlip, NoFlip]), LogicalOutcome::Zero);
}
