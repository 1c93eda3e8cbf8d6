use std::io::BufRead;

use anyhow::{bail, Context as _};
use mlread::dynamics::{
    amplitude_scan, evolve, fit_qnd, rabi_populations, scan_grid, shelving_chain, DensityMatrix,
};
use mlread::hmm::{build_emission, build_transition, classify_mle, forward_backward, Outcome, PosteriorBelief};
use mlread::protocol::experiment::{inference_transitions, initial_photon, trial_stream};
use mlread::protocol::herald::selective_check;
use mlread::protocol::{
    herald_preparation, qnd_experiment, run_experiment, simulate_trial, AncillaConfusion, Classifier,
    ErrorModel, ExperimentConfig,
};
use mlread::theory::{theory_curves, CycleErrors};
use mlread::transmon::{
    misassignment_curves, rabi_minimum, shelving_rabi, simulate_record, CurveSettings, ResponseTemplates,
};
use mlread::{builtin_code, builtin_codes, LogicalOutcome, RandomStream};
use serde::{Deserialize, Serialize};

use crate::app::{
    ClassifierChoice, ClassifyArgs, Command, Context, CurvesArgs, HmmCommand, ModelChoice, PrepareArgs,
    ProtocolCommand, PulseArgs, QndArgs, RunArgs, ShelveArgs, TheoryArgs, TrajectoryCommand,
};

pub fn dispatch(cmd: &Command, ctx: &mut Context) -> anyhow::Result<()> {
    match cmd {
        Command::Theory(a) => theory(a, ctx),
        Command::Hmm(HmmCommand::Classify(a)) => classify(a, ctx),
        Command::Protocol(ProtocolCommand::Run(a)) => protocol_run(a, ctx),
        Command::Protocol(ProtocolCommand::Qnd(a)) => qnd(a, ctx),
        Command::Trajectory(TrajectoryCommand::Curves(a)) => curves(a, ctx),
        Command::Trajectory(TrajectoryCommand::Shelve(a)) => shelve(a, ctx),
        Command::Pulse(a) => pulse(a, ctx),
        Command::Prepare(a) => prepare(a, ctx),
    }
}

#[derive(Serialize)]
struct TheoryRow {
    #[serde(rename = "N")]
    n: usize,
    relaxation_term: f64,
    excitation_term: f64,
    vote_error_0: f64,
    vote_error_1: f64,
    total: f64,
}

fn theory(a: &TheoryArgs, ctx: &mut Context) -> anyhow::Result<()> {
    let e = CycleErrors {
        kdt: a.kdt,
        kut: a.kut,
        delta0: a.delta0,
        delta1: a.delta1,
    };
    let rows: Vec<TheoryRow> = theory_curves(a.l, a.n_max, e, a.allow_even)?
        .into_iter()
        .map(|(n, b)| TheoryRow {
            n,
            relaxation_term: b.relaxation_term,
            excitation_term: b.excitation_term,
            vote_error_0: b.vote_error_0,
            vote_error_1: b.vote_error_1,
            total: b.total,
        })
        .collect();
    ctx.sink.csv("theory.csv", "theory@1", &rows)
}

/// One line of a sequence file. Extra fields (as written by
/// `protocol run --dump-sequences`) are ignored.
#[derive(Deserialize)]
struct SequenceLine {
    #[serde(default)]
    trial_id: Option<u64>,
    outcomes: Vec<Outcome>,
    #[serde(default)]
    durations: Option<Vec<f64>>,
}

#[derive(Serialize)]
struct PosteriorRow {
    trial_id: u64,
    n_0: usize,
    probability: f64,
}

#[derive(Serialize)]
struct LabelRow {
    trial_id: u64,
    label: &'static str,
    p_zero: f64,
}

fn classify(a: &ClassifyArgs, ctx: &mut Context) -> anyhow::Result<()> {
    let file = std::fs::File::open(&a.input)
        .with_context(|| format!("cannot open {}", a.input.display()))?;
    let code = builtin_code(&a.code)?;
    let n_max = ctx.params.fock_cutoff;
    let prior = PosteriorBelief::new(code.prior_vec(n_max)?)?;
    let emission = build_emission(&code, a.delta_in, a.delta_out, n_max)?;
    let transitions = inference_transitions(&ctx.params)?;
    let mut posteriors = Vec::new();
    let mut labels = Vec::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let seq: SequenceLine = serde_json::from_str(&line)
            .with_context(|| format!("{}:{}: not a sequence record", a.input.display(), i + 1))?;
        let durations = seq
            .durations
            .unwrap_or_else(|| vec![ctx.params.cycle_time(); seq.outcomes.len()]);
        let id = seq.trial_id.unwrap_or(i as u64);
        let post = forward_backward(&seq.outcomes, &durations, &prior, &transitions, &emission)
            .with_context(|| format!("{}:{}", a.input.display(), i + 1))?;
        let p_zero: f64 = code.zero_codeword.iter().map(|&(n, _)| post.probs[n]).sum();
        labels.push(LabelRow {
            trial_id: id,
            label: classify_mle(&post, &code).label(),
            p_zero,
        });
        posteriors.extend(post.probs.iter().enumerate().map(|(n, &p)| PosteriorRow {
            trial_id: id,
            n_0: n,
            probability: p,
        }));
    }
    ctx.sink.csv("posteriors.csv", "posterior@1", &posteriors)?;
    ctx.sink.csv("labels.csv", "label@1", &labels)
}

#[derive(Serialize)]
struct StuckRow {
    code: String,
    stuck_trials: u64,
    total_trials: u64,
}

fn protocol_run(a: &RunArgs, ctx: &mut Context) -> anyhow::Result<()> {
    let codes = if a.code.is_empty() {
        builtin_codes()
    } else {
        a.code.iter().map(|c| builtin_code(c)).collect::<Result<Vec<_>, _>>()?
    };
    let model = match a.model {
        ModelChoice::Matched => ErrorModel::matched(&ctx.params)?,
        ModelChoice::Ideal => ErrorModel::ideal_reset(mlread::protocol::model::DELTA_0, mlread::protocol::model::DELTA_1),
    };
    let classifiers = match a.classifier {
        ClassifierChoice::Majority => vec![Classifier::Majority],
        ClassifierChoice::Mle => vec![Classifier::Mle],
        ClassifierChoice::Both => vec![Classifier::Majority, Classifier::Mle],
    };
    let config = ExperimentConfig {
        trials: ctx.trials_or(100_000),
        max_cycles: a.n_max,
        classifiers,
        postselect_stuck: ctx.postselect_stuck,
    };
    let stream = RandomStream::new(ctx.seed, 0);
    let mut rows = Vec::new();
    let mut stuck = Vec::new();
    let mut dump = Vec::new();
    for code in &codes {
        eprintln!("{}: {} trials per logical state", code.name, config.trials);
        let table = run_experiment(code, &config, &ctx.params, &model, &stream)?;
        stuck.push(StuckRow {
            code: code.name.clone(),
            stuck_trials: table.stuck_trials,
            total_trials: table.total_trials,
        });
        rows.extend(table.rows);
        for state in [LogicalOutcome::Zero, LogicalOutcome::One] {
            for t in 0..a.dump_sequences.min(config.trials) {
                let n0 = initial_photon(code, state, t, config.trials);
                let s = trial_stream(&stream, state, t);
                let seq = simulate_trial(code, n0, a.n_max, &ctx.params, &model, &s, t)?;
                let mut v = serde_json::to_value(&seq)?;
                v["code"] = code.name.clone().into();
                v["logical_state"] = state.label().into();
                dump.extend(serde_json::to_vec(&v)?);
                dump.push(b'\n');
            }
        }
    }
    ctx.sink.csv("infidelity.csv", "infidelity@1", &rows)?;
    ctx.sink.csv("stuck.csv", "stuck@1", &stuck)?;
    if a.dump_sequences > 0 {
        ctx.sink.raw("sequences.jsonl", "readout-sequence@1", &dump)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct QndFitRow {
    tau0: f64,
    p_d: f64,
    tau0_stderr: Option<f64>,
    p_d_stderr: Option<f64>,
}

fn qnd(a: &QndArgs, ctx: &mut Context) -> anyhow::Result<()> {
    let pts = qnd_experiment(
        &ctx.params,
        &a.intervals,
        ctx.trials_or(100_000),
        &RandomStream::new(ctx.seed, 0),
    )?;
    let lifetimes: Vec<f64> = pts.iter().map(|p| p.lifetime).collect();
    ctx.sink.csv("qnd.csv", "qnd@1", &pts)?;
    let fit = fit_qnd(&a.intervals, &lifetimes)?;
    let row = QndFitRow {
        tau0: fit.tau0,
        p_d: fit.p_d,
        tau0_stderr: fit.tau0_stderr,
        p_d_stderr: fit.p_d_stderr,
    };
    ctx.sink.csv("qnd_fit.csv", "qnd-fit@1", &[row])
}

/// Log-spaced multiples of `dt`, duplicates removed.
fn log_grid(t_min: f64, t_max: f64, points: usize, dt: f64) -> anyhow::Result<Vec<f64>> {
    if !(t_min > 0.0 && t_max > t_min && points >= 2) {
        bail!("need 0 < t-min < t-max and at least two points");
    }
    let mut ks: Vec<u64> = (0..points)
        .map(|i| {
            let t = t_min * (t_max / t_min).powf(i as f64 / (points - 1) as f64);
            ((t / dt).round() as u64).max(1)
        })
        .collect();
    ks.dedup();
    Ok(ks.into_iter().map(|k| k as f64 * dt).collect())
}

#[derive(Serialize)]
struct RecordHeader {
    dt: f64,
    t_m: f64,
    level: mlread::transmon::Level,
    records: u64,
    samples_per_record: usize,
    layout: &'static str,
    templates: ResponseTemplates,
}

fn curves(a: &CurvesArgs, ctx: &mut Context) -> anyhow::Result<()> {
    let templates = ResponseTemplates::circle(a.snr, a.t_rise)?;
    let grid = log_grid(a.t_min, a.t_max, a.points, a.dt)?;
    let t_max = *grid.last().expect("non-empty grid");
    let settings = CurveSettings::new(templates, a.dt, grid)?;
    let stream = RandomStream::new(ctx.seed, 0);
    let pts = misassignment_curves(&a.levels, &settings, ctx.trials_or(100_000), &ctx.params, &stream)?;
    ctx.sink.csv("curves.csv", "curves@1", &pts)?;

    if a.dump_records > 0 {
        if ctx.sink.dir().is_none() {
            bail!("--dump-records writes binary files and needs --out");
        }
        for &level in &a.levels {
            let family = stream.derive(&format!("record/{}", level.label()));
            let mut bytes = Vec::new();
            let mut samples = 0;
            for i in 0..a.dump_records {
                let rec = simulate_record(level, &ctx.params, &templates, t_max, a.dt, &mut family.at(i).rng())?;
                samples = rec.samples.len();
                for (x, y) in rec.samples {
                    bytes.extend_from_slice(&x.to_le_bytes());
                    bytes.extend_from_slice(&y.to_le_bytes());
                }
            }
            let header = RecordHeader {
                dt: a.dt,
                t_m: t_max,
                level,
                records: a.dump_records,
                samples_per_record: samples,
                layout: "f64 little-endian (I, Q) pairs, records back to back",
                templates,
            };
            let name = format!("records_{}", level.label());
            ctx.sink.raw(&format!("{name}.bin"), "iq-records@1", &bytes)?;
            let mut json = serde_json::to_vec_pretty(&header)?;
            json.push(b'\n');
            ctx.sink.raw(&format!("{name}.json"), "iq-records-header@1", &json)?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct MinimumRow {
    shelved: bool,
    amplitude: f64,
    p_g: f64,
}

fn shelve(a: &ShelveArgs, ctx: &mut Context) -> anyhow::Result<()> {
    if a.points < 2 {
        bail!("--points must be at least 2");
    }
    let p = &ctx.params;
    let chain = shelving_chain(p, a.dt)?;
    let a0 = chain.ge.amplitude;
    let mut amps: Vec<f64> = (0..a.points)
        .map(|i| 2.0 * a0 * i as f64 / (a.points - 1) as f64)
        .chain((0..=20).map(|i| a0 * (0.95 + 0.005 * i as f64)))
        .collect();
    amps.sort_by(f64::total_cmp);
    amps.dedup();
    let confusion = AncillaConfusion::default_for(p)?;
    let source = |amp: f64, shelved: bool| rabi_populations(p, &chain, amp, shelved, a.dt);
    let mut rows = Vec::new();
    let mut minima = Vec::new();
    for shelved in [false, true] {
        let pts = shelving_rabi(&amps, shelved, source, &confusion)?;
        let m = rabi_minimum(&pts).expect("non-empty scan");
        minima.push(MinimumRow {
            shelved,
            amplitude: m.amplitude,
            p_g: m.p_g,
        });
        rows.extend(pts);
    }
    ctx.sink.csv("shelve.csv", "rabi@1", &rows)?;
    ctx.sink.csv("shelve_minima.csv", "rabi-minimum@1", &minima)
}

#[derive(Serialize)]
struct ScanRow {
    transition: &'static str,
    amplitude: f64,
    #[serde(rename = "P_g")]
    p_g: f64,
    #[serde(rename = "P_e")]
    p_e: f64,
    #[serde(rename = "P_f")]
    p_f: f64,
}

#[derive(Serialize)]
struct StageRow {
    stage: &'static str,
    amplitude: Option<f64>,
    #[serde(rename = "P_g")]
    p_g: f64,
    #[serde(rename = "P_e")]
    p_e: f64,
    #[serde(rename = "P_f")]
    p_f: f64,
}

#[derive(Serialize)]
struct TrajectoryRow {
    t: f64,
    #[serde(rename = "P_g")]
    p_g: f64,
    #[serde(rename = "P_e")]
    p_e: f64,
    #[serde(rename = "P_f")]
    p_f: f64,
    abs_rho_ge: f64,
    abs_rho_ef: f64,
    abs_rho_gf: f64,
}

fn pulse(a: &PulseArgs, ctx: &mut Context) -> anyhow::Result<()> {
    let p = &ctx.params;
    let chain = shelving_chain(p, a.dt)?;
    let g = DensityMatrix::basis(3, 0);
    let ge_traj = evolve(&g, Some(&chain.ge), p, chain.ge.duration(), a.dt)?;
    let rho_e = ge_traj.last().clone();

    let mut scan = Vec::new();
    for (label, template, rho0) in [("ge", &chain.ge, &g), ("ef", &chain.ef, &rho_e)] {
        let amps = scan_grid(template);
        let pops = amplitude_scan(template, p, rho0, &amps, a.dt)?;
        scan.extend(amps.iter().zip(pops).map(|(&amplitude, q)| ScanRow {
            transition: label,
            amplitude,
            p_g: q[0],
            p_e: q[1],
            p_f: q[2],
        }));
    }
    let stage = |stage, amplitude, q: [f64; 3]| StageRow {
        stage,
        amplitude,
        p_g: q[0],
        p_e: q[1],
        p_f: q[2],
    };
    let stages = [
        stage("after_ge", Some(chain.ge.amplitude), chain.after_ge),
        stage("after_ef", Some(chain.ef.amplitude), chain.after_ef),
        stage("mid_readout", None, chain.mid_readout),
    ];
    ctx.sink.csv("pulse_scan.csv", "pulse-scan@1", &scan)?;
    ctx.sink.csv("pulse_chain.csv", "pulse-chain@1", &stages)?;

    if a.trajectory {
        let ef_traj = evolve(&rho_e, Some(&chain.ef), p, chain.ef.duration(), a.dt)?;
        let offset = chain.ge.duration();
        let row = |t: f64, s: &DensityMatrix| {
            let q = s.populations();
            let m = s.matrix();
            TrajectoryRow {
                t,
                p_g: q[0],
                p_e: q[1],
                p_f: q[2],
                abs_rho_ge: m[(0, 1)].norm(),
                abs_rho_ef: m[(1, 2)].norm(),
                abs_rho_gf: m[(0, 2)].norm(),
            }
        };
        let rows: Vec<TrajectoryRow> = ge_traj
            .times
            .iter()
            .zip(&ge_traj.states)
            .map(|(&t, s)| row(t, s))
            .chain(
                ef_traj
                    .times
                    .iter()
                    .zip(&ef_traj.states)
                    .skip(1)
                    .map(|(&t, s)| row(offset + t, s)),
            )
            .collect();
        ctx.sink.csv("pulse_trajectory.csv", "pulse-trajectory@1", &rows)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct BeliefRow {
    checks: usize,
    n: usize,
    probability: f64,
    acceptance_probability: f64,
}

fn prepare(a: &PrepareArgs, ctx: &mut Context) -> anyhow::Result<()> {
    let p = &ctx.params;
    let n_max = p.fock_cutoff;
    let t = build_transition(n_max, p.effective_kappa_down(), p.storage_kappa_up, p.cycle_time())?;
    let e = selective_check(a.target, n_max, a.delta_in, a.delta_out);
    let mut rows = Vec::new();
    for checks in 0..=a.checks {
        let b = herald_preparation(a.target, checks, &e, &t, a.initial_error)?;
        rows.extend(b.probs.iter().enumerate().map(|(n, &probability)| BeliefRow {
            checks,
            n,
            probability,
            acceptance_probability: b.acceptance_probability,
        }));
    }
    ctx.sink.csv("prepare.csv", "preparation@1", &rows)
}
