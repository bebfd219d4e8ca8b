//! Estimator checks against independent references: a naive triple-loop
//! plug-in sum, closed-form values for synthetic processes, and invariants.

use proptest::prelude::*;
use teflow::synth::{binary_entropy, generate, ProcessKind, ProcessSpec};
use teflow::te::{
    count_transitions, effective_transfer_entropy, estimate, shuffle_surrogate_te,
    symbolize_values, transfer_entropy, SymbolSeries, TeConfig,
};

/// Naive plug-in TE for k = l = 1, base 2, by rescanning the series for
/// every cell. Shares nothing with the library's counting code.
fn brute_force_te(target: &[u32], source: &[u32], alphabet: u32) -> f64 {
    let n = target.len();
    let transitions = (n - 1) as f64;
    let mut te = 0.0;
    for next in 0..alphabet {
        for own in 0..alphabet {
            for other in 0..alphabet {
                let joint = (1..n)
                    .filter(|&t| {
                        target[t] == next && target[t - 1] == own && source[t - 1] == other
                    })
                    .count() as f64;
                if joint == 0.0 {
                    continue;
                }
                let context = (1..n)
                    .filter(|&t| target[t - 1] == own && source[t - 1] == other)
                    .count() as f64;
                let next_own = (1..n)
                    .filter(|&t| target[t] == next && target[t - 1] == own)
                    .count() as f64;
                let own_count = (1..n).filter(|&t| target[t - 1] == own).count() as f64;
                te += joint / transitions * ((joint / context) / (next_own / own_count)).log2();
            }
        }
    }
    te
}

fn sym(v: &[u32], m: usize) -> SymbolSeries {
    SymbolSeries::from_symbols(v.to_vec(), m).unwrap()
}

fn plug_in(target: &[u32], source: &[u32], m: usize) -> f64 {
    let counts = count_transitions(&sym(target, m), &sym(source, m), 1, 1).unwrap();
    transfer_entropy(&counts, 2.0).unwrap()
}

fn copy_pair(n: usize, noise: f64, delay: usize, seed: u64) -> (SymbolSeries, SymbolSeries) {
    let pair = generate(&ProcessSpec::new(
        ProcessKind::Copy { delay, noise },
        n,
        seed,
    ))
    .unwrap();
    let (x, y) = pair.symbols().unwrap();
    (sym(&x, 2), sym(&y, 2))
}

fn iid_pair(n: usize, seed: u64) -> (SymbolSeries, SymbolSeries) {
    let pair = generate(&ProcessSpec::new(ProcessKind::IidBinary, n, seed)).unwrap();
    let (x, y) = pair.symbols().unwrap();
    (sym(&x, 2), sym(&y, 2))
}

#[test]
fn golden_micro_example() {
    let x = [0, 1, 1, 0, 1, 0, 0, 1];
    let y = [0, 0, 1, 1, 0, 1, 0, 0];
    let hand = 4.0 / 7.0 + 3f64.log2() / 7.0 + 2.0 / 7.0 * 1.5f64.log2();
    let oracle = brute_force_te(&y, &x, 2);
    assert!((oracle - hand).abs() < 1e-12);
    assert!((hand - 0.9650).abs() < 1e-4);
    assert!((plug_in(&y, &x, 2) - hand).abs() < 1e-12);
}

#[test]
fn natural_log_base_scales() {
    let x = [0, 1, 1, 0, 1, 0, 0, 1];
    let y = [0, 0, 1, 1, 0, 1, 0, 0];
    let counts = count_transitions(&sym(&y, 2), &sym(&x, 2), 1, 1).unwrap();
    let bits = transfer_entropy(&counts, 2.0).unwrap();
    let nats = transfer_entropy(&counts, std::f64::consts::E).unwrap();
    assert!((nats - bits * std::f64::consts::LN_2).abs() < 1e-12);
}

#[test]
fn exhaustive_binary_equivalence_up_to_length_eight() {
    for n in 2..=8usize {
        for code in 0u32..(1 << (2 * n)) {
            let x: Vec<u32> = (0..n).map(|i| (code >> i) & 1).collect();
            let y: Vec<u32> = (0..n).map(|i| (code >> (n + i)) & 1).collect();
            let diff = (plug_in(&y, &x, 2) - brute_force_te(&y, &x, 2)).abs();
            assert!(diff < 1e-12, "x={x:?} y={y:?}");
        }
    }
}

proptest! {
    #[test]
    fn matches_brute_force_on_short_ternary_series(
        (m, x, y) in (2usize..=3).prop_flat_map(|m| {
            (2usize..=12).prop_flat_map(move |n| (
                Just(m),
                proptest::collection::vec(0..m as u32, n),
                proptest::collection::vec(0..m as u32, n),
            ))
        })
    ) {
        let got = plug_in(&y, &x, m);
        prop_assert!((got - brute_force_te(&y, &x, m as u32)).abs() < 1e-12);
        prop_assert!(got >= 0.0);
    }

    #[test]
    fn non_negative_for_any_histories(
        x in proptest::collection::vec(0u32..3, 8..60),
        seed in any::<u64>(),
        k in 1usize..4,
        l in 1usize..4,
    ) {
        let mut y = x.clone();
        y.rotate_left((seed % x.len() as u64) as usize);
        let c = count_transitions(&sym(&y, 3), &sym(&x, 3), k, l).unwrap();
        prop_assert_eq!(c.n_effective() as usize, x.len() - k.max(l));
        prop_assert!(transfer_entropy(&c, 2.0).unwrap() >= 0.0);
    }

    #[test]
    fn constant_source_carries_nothing(
        y in proptest::collection::vec(0u32..3, 5..50),
        k in 1usize..3,
        l in 1usize..3,
    ) {
        let source = SymbolSeries::from_symbols(vec![0; y.len()], 1).unwrap();
        let c = count_transitions(&sym(&y, 3), &source, k, l).unwrap();
        prop_assert_eq!(transfer_entropy(&c, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn monotone_transform_leaves_symbols_unchanged(
        raw in proptest::collection::vec(-1000i32..1000, 20..200),
    ) {
        let values: Vec<f64> = raw.iter().map(|&v| f64::from(v) / 10.0).collect();
        let cuts = [0.05, 0.5, 0.95];
        let base = symbolize_values(&values, &cuts).unwrap();
        for f in [|v: f64| (v / 10.0).exp(), |v: f64| v * v * v + 3.0 * v, |v: f64| 2.5 * v - 7.0] {
            let mapped: Vec<f64> = values.iter().map(|&v| f(v)).collect();
            let other = symbolize_values(&mapped, &cuts).unwrap();
            prop_assert_eq!(other.symbols(), base.symbols());
        }
    }
}

#[test]
fn independent_pair_has_small_plug_in_te() {
    let (x, y) = iid_pair(10_000, 11);
    let te = plug_in(y.symbols(), x.symbols(), 2);
    assert!(te <= 0.002, "{te}");
}

#[test]
fn copy_process_te_near_one_bit() {
    let (x, y) = copy_pair(10_000, 0.0, 1, 5);
    let te = plug_in(y.symbols(), x.symbols(), 2);
    assert!((0.97..=1.0).contains(&te), "{te}");
}

#[test]
fn noisy_copy_tracks_binary_entropy() {
    let (x, y) = copy_pair(10_000, 0.11, 1, 8);
    let te = plug_in(y.symbols(), x.symbols(), 2);
    assert!((te - (1.0 - binary_entropy(0.11))).abs() < 0.03, "{te}");
}

#[test]
fn shuffling_destroys_copy_coupling() {
    let (x, y) = copy_pair(10_000, 0.0, 1, 5);
    let surrogates = shuffle_surrogate_te(&y, &x, &TeConfig::default()).unwrap();
    assert_eq!(surrogates.len(), 100);
    let mean = surrogates.iter().sum::<f64>() / 100.0;
    assert!(mean <= 0.01, "{mean}");

    let est = effective_transfer_entropy(&y, &x, &TeConfig::default()).unwrap();
    assert!((est.ete - 1.0).abs() <= 0.03, "{}", est.ete);
    assert_eq!(est.ete, est.te - est.surrogate_mean);
}

#[test]
fn surrogates_estimate_the_bias_of_independent_pairs() {
    for seed in 0..5 {
        let (x, y) = iid_pair(5_000, 100 + seed);
        let est = effective_transfer_entropy(&y, &x, &TeConfig::default().with_seed(seed)).unwrap();
        assert!(
            (est.te - est.surrogate_mean).abs() <= 0.003,
            "seed {seed}: {est:?}"
        );
        assert!(est.ete.abs() <= 0.01);
    }
}

#[test]
fn copy_process_bootstrap_separates_null() {
    let (x, y) = copy_pair(10_000, 0.0, 1, 5);
    let est = estimate("x → y", &y, &x, &TeConfig::default()).unwrap();
    assert_eq!(est.p_value, Some(0.0));
    assert!(est.std_err.unwrap() > 0.0);
}

#[test]
fn independent_pairs_rarely_rejected() {
    let mut accepted = 0;
    for seed in 0..20u64 {
        let (x, y) = iid_pair(2_000, 500 + seed);
        let est = estimate("x → y", &y, &x, &TeConfig::default().with_seed(seed)).unwrap();
        if est.p_value.unwrap() > 0.05 {
            accepted += 1;
        }
    }
    assert!(accepted >= 18, "{accepted}/20");
}

#[test]
fn thread_count_does_not_change_results() {
    let (x, y) = copy_pair(3_000, 0.2, 1, 77);
    let config = TeConfig::default().with_shuffles(64).with_bootstrap(64);
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| estimate("x → y", &y, &x, &config).unwrap())
    };
    let single = run(1);
    let many = run(8);
    assert_eq!(single, many);
    assert_eq!(single.te.to_bits(), many.te.to_bits());
    assert_eq!(
        single.surrogate_mean.to_bits(),
        many.surrogate_mean.to_bits()
    );
}
