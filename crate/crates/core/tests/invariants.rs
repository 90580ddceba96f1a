//! Property tests for the structural invariants: normalization, method
//! agreement, pipeline equivalence, minimization soundness and waiting-time
//! stability under truncation.

use std::collections::BTreeMap;

use proptest::prelude::*;

use paa_core::daa::{
    aho_corasick, apply_scheme, generalized_from_string, minimize, nfa_from_generalized,
    subset_construction, CountScheme, PatternSpec,
};
use paa_core::dist::Value;
use paa_core::oracle::{enumerate_exact, naive_count, sample_text};
use paa_core::patstats::occurrence_distribution;
use paa_core::textmodel::{all_strings, iid_model, markov_model};
use paa_core::Method;

fn pattern_set() -> impl Strategy<Value = Vec<String>> {
    // 1..=3 patterns over {a, b}, each 1..=4 characters, total length <= 12.
    prop::collection::vec("[ab]{1,4}", 1..=3).prop_filter("total length <= 12", |patterns| {
        patterns.iter().map(String::len).sum::<usize>() <= 12
    })
}

fn probability() -> impl Strategy<Value = f64> {
    (0.05f64..=0.95).prop_map(|p| (p * 1e6).round() / 1e6)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn occurrence_distribution_is_normalized(
        patterns in pattern_set(),
        p in probability(),
        n in 0usize..=10,
    ) {
        let model = iid_model(&[('a', p), ('b', 1.0 - p)]).unwrap();
        let spec = PatternSpec::Strings(patterns);
        let dist = occurrence_distribution(&spec, &model, n, 6, CountScheme::Overlapping, Method::Basic)
            .unwrap();
        prop_assert!((dist.total() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn basic_and_doubling_agree(
        patterns in pattern_set(),
        p in probability(),
        n in 1usize..=24,
    ) {
        let model = iid_model(&[('a', p), ('b', 1.0 - p)]).unwrap();
        let spec = PatternSpec::Strings(patterns);
        let basic = occurrence_distribution(&spec, &model, n, 5, CountScheme::Overlapping, Method::Basic)
            .unwrap();
        let doubling =
            occurrence_distribution(&spec, &model, n, 5, CountScheme::Overlapping, Method::Doubling)
                .unwrap();
        prop_assert!(basic.max_abs_diff(&doubling) < 1e-10);
    }

    #[test]
    fn pipeline_equivalence_on_all_short_strings(patterns in pattern_set()) {
        let alphabet = ['a', 'b'];
        let ac = aho_corasick(&patterns, &alphabet).unwrap();
        let gen: Vec<_> = patterns.iter().map(|s| generalized_from_string(s)).collect();
        let piped = minimize(
            &subset_construction(&nfa_from_generalized(&gen, &alphabet).unwrap()).unwrap(),
        );
        for len in 0..=8 {
            for s in all_strings(&alphabet, len) {
                prop_assert_eq!(ac.count(&s).unwrap(), piped.count(&s).unwrap());
            }
        }
    }

    #[test]
    fn minimization_preserves_counts_on_random_strings(
        patterns in pattern_set(),
        seed in any::<u64>(),
    ) {
        let alphabet = ['a', 'b'];
        let cdfa = aho_corasick(&patterns, &alphabet).unwrap();
        let non = apply_scheme(&cdfa, CountScheme::NonOverlapping).unwrap();
        let model = iid_model(&[('a', 0.5), ('b', 0.5)]).unwrap();
        for (automaton, name) in [(&cdfa, "raw"), (&non, "nonoverlapping")] {
            let small = minimize(automaton);
            prop_assert!(small.n_states() <= automaton.n_states());
            for i in 0..40u64 {
                let text = sample_text(&model, 64, seed.wrapping_add(i));
                prop_assert_eq!(
                    automaton.count(&text).unwrap(),
                    small.count(&text).unwrap(),
                    "{} automaton differs on {}", name, text
                );
            }
        }
    }

    #[test]
    fn waiting_times_are_stable_under_larger_tmax(
        patterns in pattern_set(),
        p in probability(),
    ) {
        let model = iid_model(&[('a', p), ('b', 1.0 - p)]).unwrap();
        let spec = PatternSpec::Strings(patterns);
        let short = paa_core::patstats::pattern_waiting_time(
            &spec, &model, 12, paa_core::patstats::WaitingMode::First).unwrap();
        let long = paa_core::patstats::pattern_waiting_time(
            &spec, &model, 30, paa_core::patstats::WaitingMode::First).unwrap();
        for t in 0..=12i64 {
            prop_assert_eq!(short.p_int(t), long.p_int(t));
        }
        prop_assert!((short.total() - 1.0).abs() < 1e-9);
        prop_assert!((long.total() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn markov_models_normalize_and_have_unique_successors(
        p_after_empty in probability(),
        p_after_a in probability(),
        p_after_b in probability(),
    ) {
        let mut cond = BTreeMap::new();
        cond.insert(String::new(), BTreeMap::from([('a', p_after_empty), ('b', 1.0 - p_after_empty)]));
        cond.insert("a".into(), BTreeMap::from([('a', p_after_a), ('b', 1.0 - p_after_a)]));
        cond.insert("b".into(), BTreeMap::from([('a', p_after_b), ('b', 1.0 - p_after_b)]));
        let model = markov_model(&['a', 'b'], 1, &cond).unwrap();
        prop_assert!(model.has_deterministic_successors());
        for n in 0..=6 {
            let total: f64 = all_strings(&['a', 'b'], n)
                .iter()
                .map(|s| model.sequence_probability(s).unwrap())
                .sum();
            prop_assert!((total - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn counts_match_brute_force_on_random_instances(
        patterns in pattern_set(),
        p in probability(),
        scheme_pick in 0usize..3,
        n in 0usize..=8,
    ) {
        let scheme = [
            CountScheme::Overlapping,
            CountScheme::NonOverlapping,
            CountScheme::MatchPosition,
        ][scheme_pick];
        let model = iid_model(&[('a', p), ('b', 1.0 - p)]).unwrap();
        let spec = PatternSpec::Strings(patterns);
        let exact = occurrence_distribution(&spec, &model, n, 8, scheme, Method::Basic).unwrap();
        let brute = enumerate_exact(
            |s| Ok(Value::Int(naive_count(&spec, s, scheme)?.min(8) as i64)),
            &model,
            n,
        )
        .unwrap();
        prop_assert!(exact.max_abs_diff(&brute) < 1e-12);
    }
}
