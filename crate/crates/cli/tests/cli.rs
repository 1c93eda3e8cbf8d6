use std::path::Path;
use std::process::{Command, Output};

use mlread::theory::{fock_infidelity, CycleErrors};
use mlread_cli::RunManifest;

fn mlread(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mlread"))
        .args(args)
        .env_remove("MLREAD_CONFIG")
        .output()
        .expect("binary runs")
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    std::fs::read(dir.join(name)).unwrap()
}

#[test]
fn theory_matches_the_library() {
    let out = mlread(&["theory", "--L", "5", "--N-max", "31"]);
    assert!(out.status.success());
    let mut rdr = csv::Reader::from_reader(out.stdout.as_slice());
    let header = rdr.headers().unwrap().clone();
    assert_eq!(
        header.iter().collect::<Vec<_>>(),
        ["N", "relaxation_term", "excitation_term", "vote_error_0", "vote_error_1", "total"]
    );
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 16);
    for r in rows {
        let n: usize = r[0].parse().unwrap();
        let want = fock_infidelity(5, n, CycleErrors::default(), false).unwrap();
        assert_eq!(r[5].parse::<f64>().unwrap(), want.total);
        assert_eq!(r[1].parse::<f64>().unwrap(), want.relaxation_term);
    }
}

#[test]
fn missing_sequence_file_is_a_user_error() {
    let out = mlread(&["hmm", "classify", "missing.jsonl"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("missing.jsonl") && err.contains("No such file"), "{err}");
}

#[test]
fn bad_inputs_exit_with_one() {
    assert_eq!(mlread(&["theory", "--N-max", "4", "--allow-even", "--L", "1"]).status.code(), Some(1));
    assert_eq!(mlread(&["protocol", "run", "--code", "fock-0-9"]).status.code(), Some(1));
    assert_eq!(mlread(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(mlread(&["--help"]).status.code(), Some(0));

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "storage_T1 = -1.0\n").unwrap();
    let out = mlread(&["--config", cfg.to_str().unwrap(), "prepare"]);
    assert_eq!(out.status.code(), Some(1));
    let out = Command::new(env!("CARGO_BIN_EXE_mlread"))
        .arg("prepare")
        .env("MLREAD_CONFIG", &cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1), "config path from the environment");
}

#[test]
fn protocol_run_is_reproducible_across_thread_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = |dir: &Path, threads: &str| {
        let d = dir.to_str().unwrap().to_string();
        let out = mlread(&[
            "protocol", "run", "--code", "fock-0-3,binomial-1", "--N-max", "9", "--trials", "5000",
            "--seed", "7", "--threads", threads, "--out", &d, "--dump-sequences", "3",
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    };
    args(a.path(), "1");
    args(b.path(), "3");
    for f in ["infidelity.csv", "stuck.csv", "sequences.jsonl"] {
        assert_eq!(read(a.path(), f), read(b.path(), f), "{f}");
    }
    let ma = RunManifest::load(&a.path().join("protocol-run.manifest.json")).unwrap();
    let mb = RunManifest::load(&b.path().join("protocol-run.manifest.json")).unwrap();
    assert_eq!(ma.input_hash, mb.input_hash);
    assert_eq!(ma.outputs, mb.outputs);
}

#[test]
fn manifest_detects_tampering() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    assert!(mlread(&["prepare", "--target", "2", "--out", d]).status.success());
    let path = dir.path().join("prepare.manifest.json");
    let m = RunManifest::load(&path).unwrap();
    assert_eq!(m.inputs.subcommand, "prepare");
    assert_eq!(m.outputs[0].columns, ["checks", "n", "probability", "acceptance_probability"]);
    std::fs::write(dir.path().join("prepare.csv"), "checks\n").unwrap();
    assert!(RunManifest::load(&path).is_err());
}

#[test]
fn dumped_sequences_classify() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let run = mlread(&[
        "protocol", "run", "--code", "fock-0-4", "--N-max", "15", "--trials", "100", "--dump-sequences", "5",
        "--out", d,
    ]);
    assert!(run.status.success());
    let seqs = dir.path().join("sequences.jsonl");
    let out = mlread(&["hmm", "classify", seqs.to_str().unwrap(), "--code", "fock-0-4", "--out", d]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let labels = String::from_utf8(read(dir.path(), "labels.csv")).unwrap();
    let lines: Vec<&str> = labels.lines().collect();
    assert_eq!(lines[0], "trial_id,label,p_zero");
    assert_eq!(lines.len(), 11);
    let posteriors = String::from_utf8(read(dir.path(), "posteriors.csv")).unwrap();
    assert_eq!(posteriors.lines().count(), 1 + 10 * 11);
}
