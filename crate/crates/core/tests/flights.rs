//! The connecting-flights example, end to end.

mod common;

use asjq::algo::{
    dominator_check_set, guaranteed_set, run, run_msc, run_naive, run_single_aggregate,
    skyline_with_seed, Algorithm, Mode, RunConfig,
};
use asjq::join::{aggregate_pair, compute_join, join_all, JoinPlan};
use asjq::model::{
    joined_dominates, prune_dominates, validate_query, weak_local_dominates, JoinRegime, Relation,
    Side,
};
use asjq::skyline::{find_weak_local_dominators, peel_layers, prune_skyline, weak_local_partition};
use asjq::AsjqError;
use common::{flights, keys};

const EXPECTED: [(u64, u64, f64, f64); 4] =
    [(11, 21, 324.0, 260.0), (11, 23, 322.0, 295.0), (12, 24, 326.0, 210.0), (14, 24, 300.0, 205.0)];

fn tuple(rel: &Relation, id: u64) -> &asjq::SourceTuple {
    &rel.tuples()[rel.position(id).unwrap()]
}

fn ids(rel: &Relation, positions: &[usize]) -> Vec<u64> {
    rel.ids(positions)
}

#[test]
fn times_load_as_minutes() {
    let (_, a, b) = flights();
    let arr = a.schema.column_index("arr").unwrap();
    assert_eq!(tuple(&a, 11).values[arr], 520.0);
    let dur = b.schema.column_index("duration").unwrap();
    assert_eq!(tuple(&b, 24).values[dur], 90.0);
}

#[test]
fn dominance_examples() {
    let (q, a, b) = flights();
    assert!(prune_dominates(&q, Side::Left, tuple(&a, 11), tuple(&a, 17)).unwrap());
    assert!(!prune_dominates(&q, Side::Right, tuple(&b, 24), tuple(&b, 26)).unwrap());
    assert!(!prune_dominates(&q, Side::Left, tuple(&a, 11), tuple(&a, 11)).unwrap());

    assert!(weak_local_dominates(&a.schema, tuple(&a, 11), tuple(&a, 13)).unwrap());
    assert!(!weak_local_dominates(&a.schema, tuple(&a, 12), tuple(&a, 11)).unwrap());

    let pair = |l, r| aggregate_pair(&q, tuple(&a, l), tuple(&b, r));
    assert!(joined_dominates(&q, &pair(11, 21), &pair(13, 23)).unwrap());
    assert!(!joined_dominates(&q, &pair(11, 21), &pair(14, 24)).unwrap());
    assert!(!joined_dominates(&q, &pair(11, 21), &pair(11, 21)).unwrap());
}

#[test]
fn regimes() {
    let (q, _, _) = flights();
    assert_eq!(q.join_regime(), JoinRegime::Mixed);
    let mut spec = q.spec().clone();
    spec.joins.truncate(1);
    for s in [&mut spec.left, &mut spec.right] {
        s.columns.remove(1);
    }
    assert_eq!(validate_query(spec).unwrap().join_regime(), JoinRegime::Equi);
}

#[test]
fn source_partitions() {
    let (q, a, b) = flights();
    let a0 = prune_skyline(&q, Side::Left, &a).unwrap();
    let b0 = prune_skyline(&q, Side::Right, &b).unwrap();
    assert_eq!(ids(&a, &a0.rest), vec![17]);
    assert_eq!(ids(&b, &b0.rest), vec![26, 27]);

    let a1 = weak_local_partition(&a, &a0.skyline);
    assert_eq!(ids(&a, &a1.skyline), vec![11, 12]);
    assert_eq!(ids(&a, &a1.rest), vec![13, 14, 15, 16]);
    let b1 = weak_local_partition(&b, &b0.skyline);
    assert_eq!(ids(&b, &b1.skyline), vec![21, 22]);
    assert_eq!(ids(&b, &b1.rest), vec![23, 24, 25]);

    let (_, map) = find_weak_local_dominators(&a, &a0.skyline);
    assert_eq!(ids(&a, map.get(a.position(13).unwrap())), vec![11, 12]);
    let (_, map) = find_weak_local_dominators(&b, &b0.skyline);
    assert_eq!(ids(&b, map.get(b.position(23).unwrap())), vec![21, 22]);

    let layers = peel_layers(&a, &a0.skyline, 0);
    let named: Vec<_> = layers.layers.iter().map(|l| ids(&a, l)).collect();
    assert_eq!(named, vec![vec![11, 12], vec![13, 14], vec![16]]);
    assert_eq!(ids(&a, &layers.residual), vec![15]);

    let layers = peel_layers(&b, &b0.skyline, 2);
    let named: Vec<_> = layers.layers.iter().map(|l| ids(&b, l)).collect();
    assert_eq!(named, vec![vec![21, 22], vec![23]]);
    assert_eq!(ids(&b, &layers.residual), vec![24, 25]);

    let layers = peel_layers(&a, &a0.skyline, a0.skyline.len());
    assert!(layers.layers.is_empty());
    assert_eq!(layers.residual, a0.skyline);
}

#[test]
fn join_examples() {
    let (q, a, b) = flights();
    assert_eq!(join_all(&q, &a, &b).unwrap().count(), 11);
    let pos = |rel: &Relation, ids: &[u64]| -> Vec<usize> {
        ids.iter().map(|&i| rel.position(i).unwrap()).collect()
    };
    let pairs: Vec<_> = compute_join(
        &q,
        &JoinPlan::new(&q),
        &a,
        &pos(&a, &[13, 14, 15, 16]),
        &b,
        &pos(&b, &[23, 24, 25]),
    )
    .unwrap()
    .map(|(l, r)| (a.id(l), b.id(r)))
    .collect();
    assert_eq!(pairs, vec![(13, 23), (14, 24), (15, 23)]);

    let t = aggregate_pair(&q, tuple(&a, 11), tuple(&b, 21));
    assert_eq!(t.values, vec![5.0, 4.0, 5.0, 4.0, 324.0, 260.0]);
    let t = aggregate_pair(&q, tuple(&a, 14), tuple(&b, 24));
    assert_eq!(&t.values[4..], &[300.0, 205.0]);
}

#[test]
fn every_algorithm_returns_the_published_result() {
    let (q, a, b) = flights();
    for mode in [Mode::Verified, Mode::PaperFaithful] {
        for algo in [Algorithm::Naive, Algorithm::Msc, Algorithm::Dominator, Algorithm::Iterative, Algorithm::Auto] {
            for delta in [0, 2, 100] {
                let cfg = RunConfig::new(algo, mode).with_delta(delta);
                let out = run(&q, &a, &b, &cfg).unwrap();
                let got: Vec<_> = out
                    .tuples
                    .iter()
                    .map(|t| (t.left, t.right, t.values[4], t.values[5]))
                    .collect();
                assert_eq!(got, EXPECTED, "{algo} {mode} delta {delta}");
                assert_eq!(out.report.cardinality, 4);
                assert_eq!(out.report.guaranteed + out.report.verified, 4);
            }
        }
    }
}

#[test]
fn published_counts() {
    let (q, a, b) = flights();
    assert_eq!(run_naive(&q, &a, &b).unwrap().report.join_pairs, 11);
    let msc = run_msc(&q, &a, &b, Mode::PaperFaithful).unwrap();
    assert_eq!(msc.report.phase2_candidates, 3);
    assert_eq!(msc.report.guaranteed, 3);
    assert_eq!(msc.report.join_pairs, 6);

    let paper = dominator_check_set(&q, &a, &b, (13, 23), Mode::PaperFaithful).unwrap();
    assert_eq!(paper, vec![(11, 21)]);
    let verified = dominator_check_set(&q, &a, &b, (13, 23), Mode::Verified).unwrap();
    assert_eq!(verified, vec![(11, 21), (11, 23)]);
    assert_eq!(
        dominator_check_set(&q, &a, &b, (15, 23), Mode::PaperFaithful).unwrap(),
        vec![(11, 21)]
    );
    assert!(matches!(
        dominator_check_set(&q, &a, &b, (17, 23), Mode::Verified),
        Err(AsjqError::Precondition(_))
    ));
}

#[test]
fn guaranteed_sets_by_mode() {
    let (q, a, b) = flights();
    assert_eq!(keys(&guaranteed_set(&q, &a, &b, Mode::Verified).unwrap()), vec![(11, 21)]);
    assert_eq!(
        keys(&guaranteed_set(&q, &a, &b, Mode::PaperFaithful).unwrap()),
        vec![(11, 21), (11, 23), (12, 24)]
    );
}

#[test]
fn seeded_skyline_of_the_candidates() {
    let (q, a, b) = flights();
    let pair = |l, r| aggregate_pair(&q, tuple(&a, l), tuple(&b, r));
    let pool: Vec<_> = [(11, 21), (11, 23), (12, 24), (13, 23), (14, 24), (15, 23)]
        .iter()
        .map(|&(l, r)| pair(l, r))
        .collect();
    let cands = [pair(13, 23), pair(15, 23), pair(14, 24)];
    assert_eq!(keys(&skyline_with_seed(&q, &cands, &pool).unwrap()), vec![(14, 24)]);
    assert_eq!(keys(&skyline_with_seed(&q, &pool[..1], &pool[..1]).unwrap()), vec![(11, 21)]);
    assert!(skyline_with_seed(&q, &[pair(13, 26)], &pool).is_err());
}

#[test]
fn single_aggregate_rejects_the_flights_query() {
    let (q, a, b) = flights();
    for mode in [Mode::Verified, Mode::PaperFaithful] {
        assert!(matches!(run_single_aggregate(&q, &a, &b, mode), Err(AsjqError::Precondition(_))));
    }
}

#[test]
fn results_file() {
    let (q, a, b) = flights();
    let out = run(&q, &a, &b, &RunConfig::new(Algorithm::Iterative, Mode::Verified)).unwrap();
    let mut buf = Vec::new();
    asjq::io::write_results(&mut buf, &q, &out.tuples).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "left_id,right_id,A.amn,A.rtg,B.amn,B.rtg,cost,duration"
    );
    assert_eq!(lines.next().unwrap(), "11,21,5,4,5,4,324,260");
    assert_eq!(text.lines().count(), 5);
    assert_eq!(asjq::io::read_results(buf.as_slice()).unwrap(), out.tuples);

    let mut empty = Vec::new();
    asjq::io::write_results(&mut empty, &q, &[]).unwrap();
    assert_eq!(String::from_utf8(empty).unwrap().lines().count(), 1);
}
