use mlread::{builtin_code, builtin_codes, Error, LogicalOutcome, RandomStream, SystemParams};
use proptest::prelude::*;
use rand::Rng;

#[test]
fn empty_config_is_the_device() {
    let p = SystemParams::load(None).unwrap();
    assert_eq!(p.storage_t1, 0.99e-3);
    assert_eq!(p.fock_cutoff, 10);
}

#[test]
fn negative_lifetime_rejected() {
    let err = SystemParams::from_toml_str("storage_T1 = -1.0").unwrap_err();
    assert!(matches!(err, Error::InvalidParameter { .. }), "{err}");
}

#[test]
fn partial_override_keeps_the_rest() {
    let p = SystemParams::from_toml_str("ancilla_thermal_pop = 0.0").unwrap();
    let want = SystemParams {
        ancilla_thermal_pop: 0.0,
        ..SystemParams::default()
    };
    assert_eq!(p, want);
}

#[test]
fn unknown_keys_and_bad_t2_rejected() {
    assert!(SystemParams::from_toml_str("storage_t2 = 1.0").is_err());
    assert!(SystemParams::from_toml_str("ancilla_T2_ge = 1.1e-4").is_err());
    assert!(SystemParams::from_toml_str("ancilla_thermal_pop = 1.0").is_err());
}

#[test]
fn missing_file_is_an_io_error() {
    let err = SystemParams::load(Some(std::path::Path::new("/nonexistent/params.toml"))).unwrap_err();
    assert!(matches!(err, Error::Io(_)), "{err}");
}

fn arb_params() -> impl Strategy<Value = SystemParams> {
    (
        1e-4..1e-2f64,
        0.0..0.5f64,
        1e-5..1e-4f64,
        0.0..0.05f64,
        1e-7..1e-5f64,
        0.0..1e-3f64,
        1usize..20,
        1e-3..1.0f64,
    )
        .prop_map(|(t1, nth, t1ge, nta, tmap, pd, cutoff, t2frac)| SystemParams {
            storage_t1: t1,
            storage_thermal_pop: nth,
            ancilla_t1_ge: t1ge,
            ancilla_t2_ge: 2.0 * t1ge * t2frac,
            ancilla_thermal_pop: nta,
            t_map: tmap,
            demolition_prob: pd,
            fock_cutoff: cutoff,
            ..SystemParams::default()
        })
}

proptest! {
    #[test]
    fn load_is_idempotent(p in arb_params()) {
        let once = SystemParams::from_toml_str(&p.to_toml_string()).unwrap();
        prop_assert_eq!(&once, &p);
        let twice = SystemParams::from_toml_str(&once.to_toml_string()).unwrap();
        prop_assert_eq!(twice, once);
    }

    #[test]
    fn streams_reproduce(seed in any::<u64>(), idx in any::<u64>()) {
        let a: Vec<u64> = (0..8).map({ let mut r = RandomStream::new(seed, idx).rng(); move |_| r.random() }).collect();
        let b: Vec<u64> = (0..8).map({ let mut r = RandomStream::new(seed, idx).rng(); move |_| r.random() }).collect();
        prop_assert_eq!(&a, &b);
        let c: Vec<u64> = (0..8).map({ let mut r = RandomStream::new(seed, idx ^ 1).rng(); move |_| r.random() }).collect();
        prop_assert_ne!(a, c);
    }
}

#[test]
fn builtin_codes_satisfy_invariants() {
    for code in builtin_codes() {
        code.validate().unwrap();
        let sq = |w: &[(usize, f64)]| w.iter().map(|(_, a)| a * a).sum::<f64>();
        assert!((sq(&code.zero_codeword) - 1.0).abs() < 1e-12, "{}", code.name);
        assert!((sq(&code.one_codeword) - 1.0).abs() < 1e-12, "{}", code.name);
        let gap = code
            .zero_codeword
            .iter()
            .flat_map(|(a, _)| code.one_codeword.iter().map(move |(b, _)| a.abs_diff(*b)))
            .min()
            .unwrap();
        assert_eq!(code.distance, gap, "{}", code.name);
        assert!(gap > 0);
        let total: f64 = code.prior.iter().map(|(_, p)| p).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }
}

#[test]
fn builtin_examples() {
    let f5 = builtin_code("fock-0-5").unwrap();
    assert_eq!(f5.flip_set, vec![0, 1]);
    assert_eq!(f5.distance, 5);

    let b1 = builtin_code("binomial-1").unwrap();
    let prior = b1.prior_vec(10).unwrap();
    assert!((prior[0] - 0.25).abs() < 1e-15);
    assert!((prior[4] - 0.25).abs() < 1e-15);
    assert!((prior[2] - 0.5).abs() < 1e-15);

    let f2 = builtin_code("fock-0-2").unwrap();
    assert_eq!(f2.zero_codeword, vec![(0, 1.0)]);
    assert_eq!(f2.one_codeword, vec![(2, 1.0)]);
    assert_eq!(f2.distance, 2);
    assert_eq!(f2.codeword_of(2), Some(LogicalOutcome::One));

    assert!(builtin_code("fock-0-9").is_err());
}
