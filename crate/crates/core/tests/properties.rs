use proptest::prelude::*;

use lowerset::bounds::{surrogate_class_error, tail_norm};
use lowerset::construct::{build_lambda, build_lambda_n, delta_sequence};
use lowerset::multiindex::{is_lower, LowerSet, MultiIndex};
use lowerset::surrogate::{class_norm, extremal_instance, monte_carlo_error, surrogate_error, SurrogateFunction};
use lowerset::weights::{TailRule, WeightSequence};

fn sequence() -> impl Strategy<Value = WeightSequence> {
    prop_oneof![
        (0.6f64..3.0).prop_map(|s| WeightSequence::poly(s).unwrap()),
        (0.5f64..3.0).prop_map(|s| WeightSequence::dyadic(s).unwrap()),
        (prop::collection::vec(1.05f64..6.0, 1..6), 1.0f64..2.5).prop_map(|(mut prefix, s)| {
            prefix.sort_by(|a, b| a.partial_cmp(b).unwrap());
            // the poly tail must not undercut the prefix
            let last = *prefix.last().unwrap();
            let start = (prefix.len() + 2) as f64;
            let s = s.max(last.ln() / start.ln());
            WeightSequence::custom(prefix, TailRule::Poly { s }).unwrap()
        }),
    ]
}

fn dense_index() -> impl Strategy<Value = Vec<u32>> {
    prop::collection::vec(0u32..4, 0..6)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn optimal_sets_are_lower_and_nested(seq in sequence(), n in 1usize..200, extra in 0usize..50) {
        let (a, _) = build_lambda_n(&seq, n).unwrap();
        let (b, _) = build_lambda_n(&seq, n + extra).unwrap();
        prop_assert_eq!(a.len(), n);
        prop_assert!(is_lower(a.members()));
        prop_assert!(a.is_subset(&b));
    }

    #[test]
    fn threshold_sets_grow_as_eps_shrinks(seq in sequence(), e1 in 0.05f64..1.0, f in 0.2f64..1.0) {
        let e2 = e1 * f;
        let big = build_lambda(&seq, e2).unwrap();
        let small = build_lambda(&seq, e1).unwrap();
        prop_assert!(small.is_subset(&big));
        prop_assert!(is_lower(big.members()));
        // every member clears the threshold and every reduced-margin index misses it
        for nu in big.members() {
            prop_assert!(seq.weight(nu).unwrap().inverse() >= e2 * (1.0 - 1e-9));
        }
        let d = delta_sequence(&seq, big.len() + 1).unwrap();
        prop_assert!(d.get(big.len() + 1).unwrap() < e2 * (1.0 + 1e-9));
    }

    #[test]
    fn dyadic_sets_do_not_depend_on_s(m in 0u32..7, s1 in 0.3f64..4.0, s2 in 0.3f64..4.0) {
        let a = build_lambda(&WeightSequence::dyadic(s1).unwrap(), (-s1 * f64::from(m)).exp2()).unwrap();
        let b = build_lambda(&WeightSequence::dyadic(s2).unwrap(), (-s2 * f64::from(m)).exp2()).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn delta_is_non_increasing(seq in sequence(), n in 2usize..400) {
        let d = delta_sequence(&seq, n).unwrap();
        prop_assert_eq!(d.get(1), Some(1.0));
        prop_assert!(d.values().windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn tail_norms_are_non_increasing(s in 1.2f64..3.0, q in 1.0f64..3.0, n in 0usize..40) {
        let seq = WeightSequence::dyadic(s).unwrap();
        let a = tail_norm(&seq, n, q).unwrap().value;
        let b = tail_norm(&seq, n + 1, q).unwrap().value;
        prop_assert!(b.lower() <= a.upper());
        let inf = tail_norm(&seq, n, f64::INFINITY).unwrap().value;
        prop_assert!(inf.value <= a.upper());
    }

    #[test]
    fn class_error_drops_one_term_per_index(m in 1u32..6, p in 1.5f64..4.0, k in 0usize..2) {
        // delta_{n+1,q}^q = delta_{n,q}^q - delta_{n+1}^q, with delta_{n+1} = 2^{-2m}
        // anywhere inside level m (every level has at least two members)
        let seq = WeightSequence::dyadic(2.0).unwrap();
        let lo = lowerset::partitions::exact_lambda_count(m - 1).to_string().parse::<usize>().unwrap() + k;
        let q = p / (p - 1.0);
        let a = surrogate_class_error(&seq, lo, p).unwrap().value;
        let b = surrogate_class_error(&seq, lo + 1, p).unwrap().value;
        let dropped = (-2.0 * f64::from(m)).exp2().powf(q);
        let slack = 1e-12 * a.upper().powf(q);
        prop_assert!(b.lower().powf(q) <= a.upper().powf(q) - dropped + slack);
        prop_assert!(b.upper().powf(q) >= a.lower().powf(q) - dropped - slack);
    }

    #[test]
    fn extremal_functions_stay_in_class(s in 1.2f64..3.0, p in 1.1f64..6.0, n in 1usize..30) {
        let seq = WeightSequence::dyadic(s).unwrap();
        let inst = extremal_instance(&seq, p, n, 300).unwrap();
        let norm = class_norm(&inst.function, &seq, p).unwrap();
        prop_assert!(norm <= 1.0 + 1e-12);
        prop_assert!(inst.surrogate_error <= inst.class_error.value.upper() * (1.0 + 1e-12));
        prop_assert!(inst.within_remainder());
    }

    #[test]
    fn monte_carlo_never_exceeds_surrogate_error(
        coeffs in prop::collection::vec((dense_index(), 0.0f64..2.0), 1..12),
        keep in 0usize..6,
        seed in any::<u64>(),
    ) {
        let mut uniq = std::collections::BTreeMap::new();
        for (d, c) in coeffs {
            uniq.insert(MultiIndex::from_dense(&d), c);
        }
        let u = SurrogateFunction::new(uniq).unwrap();
        let seq = WeightSequence::poly(2.0).unwrap();
        let (lambda, _) = build_lambda_n(&seq, keep.max(1)).unwrap();
        let rep = monte_carlo_error(&u, &lambda, 200, seed).unwrap();
        prop_assert!(rep.dominated());
        prop_assert_eq!(rep.surrogate_error, surrogate_error(&u, &lambda));
        let empty = monte_carlo_error(&u, &LowerSet::empty(), 50, seed).unwrap();
        prop_assert!((empty.surrogate_error - u.surrogate_norm()).abs() < 1e-12);
    }

    #[test]
    fn multiindex_dense_round_trip(d in dense_index()) {
        let nu = MultiIndex::from_dense(&d);
        let back = nu.to_dense(d.len());
        prop_assert_eq!(back, d.clone());
        prop_assert_eq!(nu.total_degree(), d.iter().map(|&v| u64::from(v)).sum::<u64>());
        let text: MultiIndex = nu.to_string().parse().unwrap();
        prop_assert_eq!(text, nu);
    }

    #[test]
    fn lower_set_text_round_trip(seq in sequence(), n in 1usize..60) {
        let (set, _) = build_lambda_n(&seq, n).unwrap();
        prop_assert_eq!(LowerSet::from_text(&set.to_text()).unwrap(), set);
    }
}
