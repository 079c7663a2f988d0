mod common;

use std::collections::HashSet;

use common::*;
use packing_bb::bb::{self, NodeRule, VariableRule};
use packing_bb::instance::PackingInstance;
use packing_bb::lp::{self, LpSolution};
use packing_bb::oracle::{self, OracleCaps, OracleError};
use proptest::prelude::*;

/// Good set from vertex enumeration; points within `margin` of the threshold
/// are returned separately.
fn reference_good_set(
    inst: &PackingInstance,
    margin: f64,
) -> (HashSet<Vec<u8>>, HashSet<Vec<u8>>, f64) {
    let n = inst.n();
    let lp = brute_lp(inst, &vec![0.0; n], &vec![1.0; n], inst.b(), false)
        .unwrap()
        .0;
    let ip_gap = lp - brute_ip(inst);
    let mut good = HashSet::new();
    let mut borderline = HashSet::new();
    for x in cube(n) {
        let slice = brute_lp(
            inst,
            &vec![0.0; n],
            &vec![1.0; n],
            &inst.occupation01(&x),
            true,
        )
        .expect("x lies in its slice")
        .0;
        let pareto = slice - inst.objective01(&x);
        if (pareto - ip_gap).abs() <= margin {
            borderline.insert(x);
        } else if pareto < ip_gap {
            good.insert(x);
        }
    }
    (good, borderline, ip_gap)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn census_matches_vertex_enumeration(inst in generated(2, 1, 7)) {
        let census = oracle::good_set(&inst).unwrap();
        let (good, borderline, ip_gap) = reference_good_set(&inst, 1e-8);
        prop_assert!((census.ip_gap - ip_gap).abs() <= 1e-9);
        let got: HashSet<Vec<u8>> = census.good_points.iter().cloned().collect();
        for x in &good {
            prop_assert!(got.contains(x), "missing {x:?}");
        }
        for x in &got {
            prop_assert!(good.contains(x) || borderline.contains(x), "extra {x:?}");
        }
        prop_assert_eq!(census.good_count as usize, got.len());
    }

    #[test]
    fn ip_optimum_is_good_and_gaps_are_nonnegative(inst in generated(3, 1, 10)) {
        let (value, x) = oracle::ip_opt(&inst).unwrap();
        prop_assert!((value - brute_ip(&inst)).abs() <= 1e-12);
        let census = oracle::good_set(&inst).unwrap();
        prop_assert!(census.good_set().contains(x.as_slice()));
        prop_assert!(census.min_pareto_gap >= -1e-9);
        let gaps = oracle::all_pareto_gaps(&inst, 20).unwrap();
        for (code, g) in gaps.iter().enumerate() {
            let p = oracle::point_from_code(code as u64, inst.n());
            prop_assert!((oracle::pareto_gap(&inst, &p).unwrap() - g).abs() <= 1e-12);
        }
        let expected = 2 * census.good_count * oracle::binomial_sum(inst.n() as u64, inst.m() as u64) + 1;
        prop_assert_eq!(census.theorem_bound, expected);
    }

    #[test]
    fn tree_size_respects_good_set_bound(inst in generated(2, 1, 12), seed in any::<u64>()) {
        let census = oracle::good_set(&inst).unwrap();
        for rule in [
            VariableRule::First,
            VariableRule::MostFractional,
            VariableRule::Random { seed },
        ] {
            let result = bb::solve(&inst, &rule, NodeRule::BestBound).unwrap();
            let report = census.clone().with_observed(result.node_count);
            prop_assert_eq!(report.bound_satisfied, Some(true));
            let association = oracle::branch_association(&census, &result);
            prop_assert!(association.holds(), "{rule}: {association:?}");
        }
    }

    /// `f(x) = <c,x> - LP_=(Ax)` is convex on the cube.
    #[test]
    fn slice_gap_is_convex(
        inst in generated(2, 2, 8),
        x1 in proptest::collection::vec(0.0f64..=1.0, 8),
        x2 in proptest::collection::vec(0.0f64..=1.0, 8),
        theta in 0.01f64..0.99,
    ) {
        let n = inst.n();
        let f = |x: &[f64]| match lp::solve_eq_lp(&inst, &inst.occupation(x)).unwrap() {
            LpSolution::Optimal(v) => inst.objective(x) - v.value,
            LpSolution::Infeasible => panic!("x lies in its slice"),
        };
        let (x1, x2) = (&x1[..n], &x2[..n]);
        let mid: Vec<f64> = x1.iter().zip(x2).map(|(a, b)| theta * a + (1.0 - theta) * b).collect();
        prop_assert!(f(&mid) <= theta * f(x1) + (1.0 - theta) * f(x2) + 1e-7);
    }
}

#[test]
fn points_follow_lexicographic_order() {
    let pts: Vec<Vec<u8>> = (0..4).map(|c| oracle::point_from_code(c, 2)).collect();
    assert_eq!(pts, vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
}

#[test]
fn caps_are_enforced() {
    let inst = PackingInstance::generate(1, 26, &[0.3], 1).unwrap();
    assert!(matches!(
        oracle::ip_opt(&inst),
        Err(OracleError::TooLarge { n: 26, cap: 25, .. })
    ));
    let caps = OracleCaps {
        census_max_n: 10,
        ..OracleCaps::default()
    };
    let inst = PackingInstance::generate(1, 11, &[0.3], 1).unwrap();
    assert!(matches!(
        oracle::good_set_capped(&inst, caps),
        Err(OracleError::TooLarge { .. })
    ));
}
