#![allow(dead_code)]

use std::path::PathBuf;

use asjq::datagen::{generate_pair, generate_relation, synthetic_query_with, GenParams, JoinShape};
use asjq::io::{load_relation, parse_query};
use asjq::model::{validate_query, AggregateFn, Relation, SourceTuple, ValidatedQuery};

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/flights")
}

pub fn flights() -> (ValidatedQuery, Relation, Relation) {
    let dir = fixture_dir();
    let text = std::fs::read_to_string(dir.join("flights.asjq")).unwrap();
    let spec = parse_query(&text).unwrap();
    let left = load_relation(dir.join(spec.left.source.as_ref().unwrap()), &spec.left).unwrap();
    let right = load_relation(dir.join(spec.right.source.as_ref().unwrap()), &spec.right).unwrap();
    (validate_query(spec).unwrap(), left, right)
}

/// Generated instance: both sides share shape, seeds differ.
pub fn instance(
    params: GenParams,
    joins: JoinShape,
    funcs: &[AggregateFn],
) -> (ValidatedQuery, Relation, Relation) {
    let (left, right) = generate_pair(&params.with_joins(joins)).unwrap();
    let q = validate_query(synthetic_query_with(&left.schema, &right.schema, funcs)).unwrap();
    (q, left, right)
}

/// Copies of the first `k` rows appended under fresh ids.
pub fn with_duplicates(rel: &Relation, k: usize) -> Relation {
    let mut tuples = rel.tuples().to_vec();
    let next = tuples.iter().map(|t| t.id).max().map_or(0, |m| m + 1);
    for (i, t) in rel.tuples().iter().take(k).enumerate() {
        tuples.push(SourceTuple::new(next + i as u64, t.values.clone()));
    }
    Relation::new(rel.schema.clone(), tuples).unwrap()
}

pub fn keys(tuples: &[asjq::JoinedTuple]) -> Vec<(u64, u64)> {
    tuples.iter().map(|t| (t.left, t.right)).collect()
}

/// Knobs for a small random instance.
#[derive(Clone, Debug)]
pub struct Shape {
    pub na: usize,
    pub nb: usize,
    pub locals: usize,
    pub aggs: usize,
    pub categories: u32,
    pub dist: asjq::datagen::Distribution,
    pub joins: JoinShape,
    /// Operator of the `t` condition, when present.
    pub time_op: asjq::JoinOp,
    pub funcs: Vec<AggregateFn>,
    /// Bit `i` flips column `i` of both schemas from MIN to MAX.
    pub flips: u64,
    /// Snap skyline values to this many levels to force ties.
    pub levels: Option<u32>,
    pub duplicates: usize,
}

pub fn build(shape: &Shape, seed: u64) -> (ValidatedQuery, Relation, Relation) {
    use asjq::model::{ColumnRole, Preference};

    let params = GenParams::new(
        shape.na,
        shape.locals,
        shape.aggs,
        shape.categories,
        shape.dist,
        seed,
    )
    .with_joins(shape.joins);
    let gen = |p: &GenParams, name: &str| -> Relation {
        let rel = generate_relation(p, name).unwrap();
        let mut schema = rel.schema.clone();
        for (i, col) in schema.columns.iter_mut().enumerate() {
            if shape.flips >> (i % 64) & 1 == 1 {
                match &mut col.role {
                    ColumnRole::Local { pref } | ColumnRole::Aggregate { pref, .. } => {
                        *pref = Preference::Max
                    }
                    ColumnRole::Join { .. } => {}
                }
            }
        }
        let tuples = rel
            .tuples()
            .iter()
            .map(|t| {
                let values = t
                    .values
                    .iter()
                    .zip(&schema.columns)
                    .map(|(&v, c)| match (shape.levels, c.name.as_str()) {
                        (_, "key") => v,
                        (Some(k), _) => (v * k as f64).floor(),
                        (None, _) => v,
                    })
                    .collect();
                SourceTuple::new(t.id, values)
            })
            .collect();
        with_duplicates(&Relation::new(schema, tuples).unwrap(), shape.duplicates)
    };
    let left = gen(&params, "A");
    let right = gen(
        &GenParams { n: shape.nb, ..params.with_seed(seed.wrapping_mul(31).wrapping_add(17)) },
        "B",
    );
    let mut spec = synthetic_query_with(&left.schema, &right.schema, &shape.funcs);
    for j in &mut spec.joins {
        if j.op != asjq::JoinOp::Eq {
            j.op = shape.time_op;
        }
    }
    (validate_query(spec).unwrap(), left, right)
}
