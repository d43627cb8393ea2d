mod common;

use std::collections::HashSet;

use asjq::algo::{
    run, run_observed, run_single_aggregate, single_aggregate_eligible, Algorithm, Mode, Observer,
    Phase, RunConfig,
};
use asjq::datagen::{Distribution, JoinShape};
use asjq::io::{parse_query, print_query};
use asjq::join::{aggregate_pair, compute_join, JoinPlan};
use asjq::model::{
    derive_join_preference, joined_dominates, prune_dominates, weak_local_dominates, AggregateFn,
    JoinOp, Preference, Relation, Side, SourceTuple,
};
use asjq::oracle::{brute_force_asjq, brute_force_skyline};
use asjq::skyline::{peel_layers, prune_skyline, weak_local_partition};
use common::{build, keys, Shape};
use proptest::prelude::*;

fn func() -> impl Strategy<Value = AggregateFn> {
    prop_oneof![
        Just(AggregateFn::Sum),
        Just(AggregateFn::Avg),
        Just(AggregateFn::Min),
        Just(AggregateFn::Max)
    ]
}

fn dist() -> impl Strategy<Value = Distribution> {
    prop_oneof![
        Just(Distribution::Correlated),
        Just(Distribution::Independent),
        Just(Distribution::AntiCorrelated)
    ]
}

fn joins() -> impl Strategy<Value = JoinShape> {
    prop_oneof![Just(JoinShape::Equi), Just(JoinShape::EquiOrdered), Just(JoinShape::Ordered)]
}

fn op() -> impl Strategy<Value = JoinOp> {
    prop_oneof![Just(JoinOp::Lt), Just(JoinOp::Le), Just(JoinOp::Gt), Just(JoinOp::Ge)]
}

prop_compose! {
    fn shape(max_n: usize)(
        na in 0..max_n,
        nb in 0..max_n,
        locals in 0usize..4,
        aggs in 1usize..3,
        categories in 1u32..5,
        dist in dist(),
        joins in joins(),
        time_op in op(),
        funcs in prop::collection::vec(func(), 1..3),
        flips in any::<u64>(),
        levels in prop::option::of(2u32..5),
        duplicates in 0usize..3,
    ) -> Shape {
        Shape { na, nb, locals, aggs, categories, dist, joins, time_op, funcs, flips, levels, duplicates }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dominance_axioms(s in shape(14), seed in any::<u64>()) {
        let s = Shape { levels: Some(3), ..s };
        let (q, a, b) = build(&s, seed);
        let t = a.tuples();
        for x in t {
            prop_assert!(!prune_dominates(&q, Side::Left, x, x).unwrap());
            for y in t {
                for z in t {
                    if prune_dominates(&q, Side::Left, x, y).unwrap()
                        && prune_dominates(&q, Side::Left, y, z).unwrap()
                    {
                        prop_assert!(prune_dominates(&q, Side::Left, x, z).unwrap());
                    }
                    if weak_local_dominates(&a.schema, x, y).unwrap()
                        && weak_local_dominates(&a.schema, y, z).unwrap()
                        && x.id != z.id
                    {
                        prop_assert!(weak_local_dominates(&a.schema, x, z).unwrap());
                    }
                }
            }
        }
        let joined: Vec<_> = a
            .tuples()
            .iter()
            .flat_map(|u| b.tuples().iter().map(move |v| (u, v)))
            .take(60)
            .map(|(u, v)| aggregate_pair(&q, u, v))
            .collect();
        for x in &joined {
            prop_assert!(!joined_dominates(&q, x, x).unwrap());
            for y in &joined {
                for z in &joined {
                    if joined_dominates(&q, x, y).unwrap() && joined_dominates(&q, y, z).unwrap() {
                        prop_assert!(joined_dominates(&q, x, z).unwrap());
                    }
                }
            }
        }
    }

    #[test]
    fn prune_dominators_keep_partners_and_dominate_after_join(s in shape(16), seed in any::<u64>()) {
        let s = Shape { levels: Some(4), ..s };
        let (q, a, b) = build(&s, seed);
        for (side, this, other) in [(Side::Left, &a, &b), (Side::Right, &b, &a)] {
            for u in this.tuples() {
                for u2 in this.tuples() {
                    if !prune_dominates(&q, side, u, u2).unwrap() {
                        continue;
                    }
                    for v in other.tuples() {
                        let (ok2, ok) = match side {
                            Side::Left => (q.joins(&u2.values, &v.values), q.joins(&u.values, &v.values)),
                            Side::Right => (q.joins(&v.values, &u2.values), q.joins(&v.values, &u.values)),
                        };
                        if !ok2 {
                            continue;
                        }
                        prop_assert!(ok, "join partner lost");
                        let (t, t2) = match side {
                            Side::Left => (aggregate_pair(&q, u, v), aggregate_pair(&q, u2, v)),
                            Side::Right => (aggregate_pair(&q, v, u), aggregate_pair(&q, v, u2)),
                        };
                        prop_assert!(joined_dominates(&q, &t, &t2).unwrap());
                    }
                }
            }
        }
    }

    #[test]
    fn prune_skyline_matches_definition(s in shape(60), seed in any::<u64>()) {
        let (q, a, _) = build(&s, seed);
        let part = prune_skyline(&q, Side::Left, &a).unwrap();
        let brute = brute_force_skyline(a.tuples(), |x, y| prune_dominates(&q, Side::Left, x, y).unwrap());
        prop_assert_eq!(&part.skyline, &brute);
        for &r in &part.rest {
            prop_assert!(part
                .skyline
                .iter()
                .any(|&w| prune_dominates(&q, Side::Left, &a.tuples()[w], &a.tuples()[r]).unwrap()));
        }
    }

    #[test]
    fn prune_skyline_ignores_row_order(s in shape(60), seed in any::<u64>(), shift in 1u64..50) {
        let (q, a, _) = build(&s, seed);
        let n = a.len() as u64;
        // Relabel ids so the stored order is rotated.
        let relabel = |id: u64| (id + shift) % n.max(1);
        let rotated = Relation::new(
            a.schema.clone(),
            a.tuples().iter().map(|t| SourceTuple::new(relabel(t.id), t.values.clone())).collect(),
        )
        .unwrap();
        let p1 = prune_skyline(&q, Side::Left, &a).unwrap();
        let p2 = prune_skyline(&q, Side::Left, &rotated).unwrap();
        let mut mapped: Vec<u64> = a.ids(&p1.skyline).into_iter().map(relabel).collect();
        mapped.sort_unstable();
        prop_assert_eq!(mapped, rotated.ids(&p2.skyline));
    }

    #[test]
    fn layers_are_antichains_above_everything_later(s in shape(80), seed in any::<u64>(), delta in 0usize..6) {
        let (q, a, _) = build(&s, seed);
        let a0 = prune_skyline(&q, Side::Left, &a).unwrap().skyline;
        let d = peel_layers(&a, &a0, delta);
        let mut all: Vec<usize> = d.layers.iter().flatten().chain(&d.residual).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(&all, &a0);
        for (i, layer) in d.layers.iter().enumerate() {
            let later: Vec<usize> = d.layers[i..].iter().flatten().chain(&d.residual).copied().collect();
            for &x in layer {
                for &y in &later {
                    prop_assert!(!weak_local_dominates(&a.schema, &a.tuples()[y], &a.tuples()[x]).unwrap());
                }
            }
        }
        let last = weak_local_partition(&a, &d.residual);
        let stuck = last.skyline.is_empty() || last.rest.is_empty();
        prop_assert!(d.residual.len() <= delta || stuck);
    }

    #[test]
    fn peeling_without_ties_repeats_partitioning(s in shape(80), seed in any::<u64>()) {
        let s = Shape { levels: None, duplicates: 0, locals: s.locals.max(1), ..s };
        let (q, a, _) = build(&s, seed);
        let a0 = prune_skyline(&q, Side::Left, &a).unwrap().skyline;
        let d = peel_layers(&a, &a0, 0);
        let mut rest = a0.clone();
        for layer in &d.layers {
            let p = weak_local_partition(&a, &rest);
            prop_assert_eq!(&p.skyline, layer);
            rest = p.rest;
        }
        prop_assert_eq!(rest, d.residual);
    }

    #[test]
    fn hash_and_nested_loop_joins_agree(s in shape(60), seed in any::<u64>()) {
        let (q, a, b) = build(&s, seed);
        let la: Vec<usize> = (0..a.len()).collect();
        let lb: Vec<usize> = (0..b.len()).collect();
        let h: Vec<_> = compute_join(&q, &JoinPlan::new(&q), &a, &la, &b, &lb).unwrap().collect();
        let n: Vec<_> = compute_join(&q, &JoinPlan::nested_loop(&q), &a, &la, &b, &lb).unwrap().collect();
        let mut sorted = h.clone();
        sorted.sort_unstable();
        prop_assert_eq!(&h, &sorted);
        prop_assert_eq!(h, n);
    }

    #[test]
    fn aggregates_are_monotone(f in func(), x in -50i32..50, y in -50i32..50, dx in 0i32..10, dy in 0i32..10) {
        let (x, y, dx, dy) = (x as f64, y as f64, dx as f64, dy as f64);
        prop_assert!(f.apply(x, y) <= f.apply(x + dx, y + dy));
        if f.is_strict() && dx > 0.0 {
            prop_assert!(f.apply(x, y) < f.apply(x + dx, y));
        }
    }

    #[test]
    fn verified_algorithms_match_the_oracle(s in shape(40), seed in any::<u64>(), delta in 0usize..8) {
        let (q, a, b) = build(&s, seed);
        let oracle = brute_force_asjq(&q, &a, &b).unwrap();
        for algo in [Algorithm::Naive, Algorithm::Msc, Algorithm::Dominator, Algorithm::Iterative, Algorithm::Auto] {
            let out = run(&q, &a, &b, &RunConfig::new(algo, Mode::Verified).with_delta(delta)).unwrap();
            prop_assert_eq!(&out.tuples, &oracle, "{}", algo);
            prop_assert_eq!(out.report.guaranteed + out.report.verified, out.report.cardinality);
        }
        if single_aggregate_eligible(&q, &a, &b, Mode::Verified).unwrap().is_ok() {
            prop_assert_eq!(run_single_aggregate(&q, &a, &b, Mode::Verified).unwrap().tuples, oracle);
        }
    }

    #[test]
    fn paper_mode_keeps_skyline_components(s in shape(40), seed in any::<u64>()) {
        let (q, a, b) = build(&s, seed);
        let a0: HashSet<u64> = a.ids(&prune_skyline(&q, Side::Left, &a).unwrap().skyline).into_iter().collect();
        let b0: HashSet<u64> = b.ids(&prune_skyline(&q, Side::Right, &b).unwrap().skyline).into_iter().collect();
        for algo in [Algorithm::Msc, Algorithm::Dominator, Algorithm::Iterative] {
            let out = run(&q, &a, &b, &RunConfig::new(algo, Mode::PaperFaithful).with_delta(2)).unwrap();
            for (l, r) in keys(&out.tuples) {
                prop_assert!(a0.contains(&l) && b0.contains(&r));
            }
        }
    }

    #[test]
    fn printed_queries_parse_back(s in shape(2), seed in any::<u64>(), ops in prop::collection::vec(prop_oneof![Just(JoinOp::Eq), op()], 2)) {
        let (q, _, _) = build(&s, seed);
        let mut spec = q.spec().clone();
        spec.left.source = Some("left side.csv".into());
        spec.right.source = Some("dir/\"b\".csv".into());
        for (j, &o) in spec.joins.iter_mut().zip(&ops) {
            j.op = o;
        }
        let text = print_query(&spec);
        prop_assert_eq!(parse_query(&text).unwrap(), spec);
    }

    #[test]
    fn oracle_is_permutation_invariant(s in shape(30), seed in any::<u64>(), shift in 1u64..40) {
        let (q, a, b) = build(&s, seed);
        let n = b.len() as u64;
        let relabel = |id: u64| (id + shift) % n.max(1);
        let rotated = Relation::new(
            b.schema.clone(),
            b.tuples().iter().map(|t| SourceTuple::new(relabel(t.id), t.values.clone())).collect(),
        )
        .unwrap();
        let mut base: Vec<_> = brute_force_asjq(&q, &a, &b).unwrap().into_iter().map(|t| (t.left, relabel(t.right))).collect();
        base.sort_unstable();
        prop_assert_eq!(base, keys(&brute_force_asjq(&q, &a, &rotated).unwrap()));
    }
}

#[test]
fn derived_preferences_cover_all_operators() {
    for op in JoinOp::ALL {
        for side in [Side::Left, Side::Right] {
            let p = derive_join_preference(op, side);
            assert_eq!(p == Preference::Equal, op == JoinOp::Eq);
            // Flipping the operator swaps the sides.
            let other = if side == Side::Left { Side::Right } else { Side::Left };
            assert_eq!(derive_join_preference(op.flipped(), other), p);
        }
    }
}

#[derive(Default)]
struct EventLog {
    events: Vec<(Phase, bool)>,
}

impl Observer for EventLog {
    fn on_emit(&mut self, phase: Phase, _t: &asjq::JoinedTuple) {
        self.events.push((phase, true));
    }

    fn on_compare(&mut self, phase: Phase, count: u64) {
        if count > 0 {
            self.events.push((phase, false));
        }
    }
}

#[test]
fn guaranteed_tuples_precede_verification() {
    let shape = Shape {
        na: 150,
        nb: 150,
        locals: 2,
        aggs: 2,
        categories: 3,
        dist: Distribution::AntiCorrelated,
        joins: JoinShape::Equi,
        time_op: JoinOp::Lt,
        funcs: vec![AggregateFn::Sum],
        flips: 0,
        levels: None,
        duplicates: 0,
    };
    let (q, a, b) = build(&shape, 5);
    for algo in [Algorithm::Msc, Algorithm::Dominator, Algorithm::Iterative] {
        let mut log = EventLog::default();
        let out = run_observed(&q, &a, &b, &RunConfig::new(algo, Mode::Verified), &mut log).unwrap();
        let first_cmp = log.events.iter().position(|e| !e.1).unwrap();
        let last_guaranteed = log.events.iter().rposition(|e| e.0 == Phase::Guaranteed).unwrap();
        assert!(last_guaranteed < first_cmp, "{algo}");
        assert!(out.report.guaranteed > 0 && out.report.phase2_comparisons > 0);
    }
}
