use std::collections::BTreeSet;

use mrtrim_core::analyzer::{self, Counts};
use mrtrim_core::checker::{self, Tolerance, Verdict, VerdictStatus};
use mrtrim_core::corpus;
use mrtrim_core::mr::{MrId, MrParams, MrSpec, Relation};
use mrtrim_core::runner;
use mrtrim_core::tdgen::{self, FuzzConfig};
use proptest::prelude::*;

fn relation() -> impl Strategy<Value = Relation> {
    prop_oneof![Just(Relation::Equal), Just(Relation::Geq), Just(Relation::Leq)]
}

fn output() -> impl Strategy<Value = f64> {
    prop_oneof![-1e6..1e6f64, (-5i32..5).prop_map(f64::from)]
}

fn status() -> impl Strategy<Value = VerdictStatus> {
    prop_oneof![
        Just(VerdictStatus::NonViolation),
        Just(VerdictStatus::Violation),
        Just(VerdictStatus::Invalid)
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn checker_trichotomy(s in output(), f in output(), rel in relation()) {
        let t = Tolerance::default();
        let r = checker::compare(s, f, rel, t);
        prop_assert!(r.status != VerdictStatus::Invalid);
        let slack = t.get() * 1f64.max(s.abs()).max(f.abs());
        let (less, equal, greater) = (f < s - slack, (f - s).abs() <= slack, f > s + slack);
        prop_assert_eq!(u8::from(less) + u8::from(equal) + u8::from(greater), 1);
        let expected = match rel {
            Relation::Equal => equal,
            Relation::Geq => !less,
            Relation::Leq => !greater,
        };
        prop_assert_eq!(r.status == VerdictStatus::NonViolation, expected);
    }

    #[test]
    fn checker_antisymmetry(s in output(), f in output()) {
        let t = Tolerance::default();
        let geq = checker::compare(s, f, Relation::Geq, t);
        let leq = checker::compare(f, s, Relation::Leq, t);
        prop_assert_eq!(geq.status, leq.status);
        let eq_a = checker::compare(s, f, Relation::Equal, t);
        let eq_b = checker::compare(f, s, Relation::Equal, t);
        prop_assert_eq!(eq_a.status, eq_b.status);
        let both = geq.status == VerdictStatus::NonViolation
            && checker::compare(s, f, Relation::Leq, t).status == VerdictStatus::NonViolation;
        prop_assert_eq!(both, eq_a.status == VerdictStatus::NonViolation);
    }
}

fn verdicts(statuses: &[(u8, u8, VerdictStatus)]) -> Vec<Verdict> {
    statuses
        .iter()
        .enumerate()
        .map(|(i, &(m, r, status))| Verdict {
            exec_id: i as u64,
            method: format!("m{m}"),
            mr: MrId::ALL[r as usize],
            status,
            detail: String::new(),
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn analyzer_count_sum(rows in prop::collection::vec((0u8..3, 0u8..6, status()), 1..200)) {
        let v = verdicts(&rows);
        let reports = analyzer::aggregate(&v);
        let total: u64 = reports.iter().map(|r| r.n_trials).sum();
        prop_assert_eq!(total, v.len() as u64);
        for r in &reports {
            prop_assert_eq!(r.counts().total(), r.n_trials);
            let pct = r.pct_nonviolation + r.pct_violation + r.pct_invalid;
            prop_assert!((pct - 100.0).abs() <= 1e-3);
        }
    }

    #[test]
    fn analyzer_merge_additivity(
        a in prop::collection::vec((0u8..2, 0u8..2, status()), 0..100),
        b in prop::collection::vec((0u8..2, 0u8..2, status()), 0..100),
    ) {
        let ta = analyzer::tally(&verdicts(&a));
        let tb = analyzer::tally(&verdicts(&b));
        let joined: Vec<_> = a.iter().chain(&b).copied().collect();
        let tj = analyzer::tally(&verdicts(&joined));
        let keys: BTreeSet<_> = ta.keys().chain(tb.keys()).cloned().collect();
        prop_assert_eq!(keys.len(), tj.len());
        for k in keys {
            let zero = Counts::default();
            let merged = ta.get(&k).unwrap_or(&zero).merge(tb.get(&k).unwrap_or(&zero));
            prop_assert_eq!(Some(&merged), tj.get(&k));
        }
    }

    #[test]
    fn analyzer_order_free(rows in prop::collection::vec((0u8..3, 0u8..6, status()), 1..100), seed in any::<u64>()) {
        let v = verdicts(&rows);
        let mut shuffled = v.clone();
        let n = shuffled.len();
        let mut x = seed;
        for i in (1..n).rev() {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            shuffled.swap(i, (x >> 33) as usize % (i + 1));
        }
        prop_assert_eq!(analyzer::aggregate(&v), analyzer::aggregate(&shuffled));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn runner_cardinality(n_methods in 1usize..5, n_mrs in 1usize..7, count in 1u64..40, seed in any::<u64>()) {
        let methods: Vec<String> = corpus::list_methods()
            .iter()
            .take(n_methods)
            .map(|m| m.name.to_string())
            .collect();
        let specs = MrSpec::catalog(MrParams::default()).unwrap()[..n_mrs].to_vec();
        let cfg = FuzzConfig { budget: tdgen::Budget::Count(count), seed, ..FuzzConfig::rq2(seed) };
        let data = tdgen::generate(&cfg).unwrap();
        let records = runner::run_mt(&methods, &specs, &data, &cfg.range(), seed).unwrap();
        prop_assert_eq!(records.len(), n_methods * n_mrs * count as usize);
        let ids: BTreeSet<u64> = records.iter().map(|r| r.exec_id).collect();
        prop_assert_eq!(ids.len(), records.len());
        prop_assert_eq!(ids.iter().next_back().copied(), Some(records.len() as u64 - 1));
    }
}

#[test]
fn runner_independent_of_pool_size() {
    let cfg = FuzzConfig {
        budget: tdgen::Budget::Count(200),
        ..FuzzConfig::rq2(11)
    };
    let data = tdgen::generate(&cfg).unwrap();
    let methods: Vec<String> = corpus::list_methods().iter().map(|m| m.name.to_string()).collect();
    let specs = MrSpec::catalog(MrParams::default()).unwrap();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| runner::run_mt(&methods, &specs, &data, &cfg.range(), 11).unwrap())
    };
    assert_eq!(run(1), run(8));
}

fn lists() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec((-15i32..=15).prop_map(f64::from), 0..20)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn invariant_methods_ignore_order(input in lists(), seed in any::<u64>()) {
        let mut perm = input.clone();
        let mut x = seed;
        for i in (1..perm.len()).rev() {
            x ^= x << 13;
            x ^= x >> 7;
            x ^= x << 17;
            perm.swap(i, x as usize % (i + 1));
        }
        for d in corpus::list_methods().iter().filter(|d| d.permutation_invariant) {
            let a = corpus::evaluate(d.name, &input).unwrap();
            let b = corpus::evaluate(d.name, &perm).unwrap();
            match (a.value(), b.value()) {
                (Some(a), Some(b)) => prop_assert!(
                    (a - b).abs() <= 1e-12 * 1f64.max(a.abs()),
                    "{} {:?}: {} vs {}", d.name, input, a, b
                ),
                _ => prop_assert_eq!(a.failure_kind(), b.failure_kind(), "{}", d.name),
            }
        }
    }

    #[test]
    fn sum_of_concatenation(a in lists(), b in lists()) {
        let sum = |v: &[f64]| corpus::evaluate("add_values", v).unwrap().value().unwrap();
        let joined: Vec<f64> = a.iter().chain(&b).copied().collect();
        prop_assert_eq!(sum(&joined), sum(&a) + sum(&b));
    }

    #[test]
    fn mean_lies_within_bounds(input in lists()) {
        prop_assume!(!input.is_empty());
        let lo = input.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = input.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for name in ["average", "median", "midrange", "trimmedMean10", "weightedMeanEqualWeights"] {
            let m = corpus::evaluate(name, &input).unwrap().value().unwrap();
            prop_assert!(lo - 1e-9 <= m && m <= hi + 1e-9, "{name}: {m} not in [{lo}, {hi}]");
        }
    }
}
