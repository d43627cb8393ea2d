//! Seeded synthetic relations in the three classic skyline distributions.
//!
//! Every row draws from its own ChaCha stream (`stream = row index`), so a row
//! depends only on the seed and its position and can be generated in any
//! order.
//!
//! Columns, in order: `key` (equality join, uniform integer in `[0, C)`) and/or
//! `t` (ordered join, uniform in `[0, 1)`), then locals `l1..lL`, then
//! aggregate columns `g1..gG`. All skyline columns prefer MIN and lie in
//! `[0, 1)`:
//!
//! * independent: i.i.d. uniform;
//! * correlated: one uniform base per row plus `N(0, 0.05)` noise per value;
//! * anti-correlated: a uniform point of the simplex scaled so the values sum
//!   to `d/2` (`d = L + G`), plus `N(0, 0.05)` noise per value.
//!
//! Noisy values are clamped into `[0, 1)`.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Exp1, Normal};

use crate::error::{AsjqError, Result};
use crate::model::{
    AggregateFn, AggregateSpec, Column, ColumnRole, JoinCondition, JoinOp, Preference, QuerySpec,
    Relation, RelationSchema, SourceTuple,
};

/// Standard deviation of the per-value noise.
pub const NOISE_SIGMA: f64 = 0.05;

/// Largest `f64` below one.
const BELOW_ONE: f64 = 1.0 - f64::EPSILON / 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Distribution {
    Correlated,
    Independent,
    AntiCorrelated,
}

impl Distribution {
    pub const ALL: [Distribution; 3] =
        [Distribution::Correlated, Distribution::Independent, Distribution::AntiCorrelated];
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Distribution::Correlated => "correlated",
            Distribution::Independent => "independent",
            Distribution::AntiCorrelated => "anticorrelated",
        })
    }
}

impl FromStr for Distribution {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "correlated" | "corr" => Ok(Distribution::Correlated),
            "independent" | "indep" => Ok(Distribution::Independent),
            "anticorrelated" | "anti" => Ok(Distribution::AntiCorrelated),
            _ => Err(format!("unknown distribution `{s}`")),
        }
    }
}

/// Which join columns a generated relation carries.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum JoinShape {
    /// `key` only.
    #[default]
    Equi,
    /// `key` and `t`.
    EquiOrdered,
    /// `t` only.
    Ordered,
}

impl JoinShape {
    fn has_key(self) -> bool {
        self != JoinShape::Ordered
    }

    fn has_time(self) -> bool {
        self != JoinShape::Equi
    }
}

impl fmt::Display for JoinShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            JoinShape::Equi => "eq",
            JoinShape::EquiOrdered => "eq-lt",
            JoinShape::Ordered => "lt",
        })
    }
}

impl FromStr for JoinShape {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "eq" => Ok(JoinShape::Equi),
            "eq-lt" | "eq+lt" => Ok(JoinShape::EquiOrdered),
            "lt" => Ok(JoinShape::Ordered),
            _ => Err(format!("unknown join shape `{s}` (expected eq, eq-lt or lt)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GenParams {
    /// Row count `N`.
    pub n: usize,
    /// Local attribute count `L`.
    pub locals: usize,
    /// Aggregate attribute count `G`.
    pub aggs: usize,
    /// Join key categories `C`.
    pub categories: u32,
    pub dist: Distribution,
    pub seed: u64,
    pub joins: JoinShape,
}

impl GenParams {
    pub fn new(
        n: usize,
        locals: usize,
        aggs: usize,
        categories: u32,
        dist: Distribution,
        seed: u64,
    ) -> Self {
        Self { n, locals, aggs, categories, dist, seed, joins: JoinShape::Equi }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_joins(mut self, joins: JoinShape) -> Self {
        self.joins = joins;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.locals + self.aggs == 0 {
            return Err(AsjqError::InvalidParams("L + G must be at least 1".into()));
        }
        if self.categories == 0 {
            return Err(AsjqError::InvalidParams("C must be at least 1".into()));
        }
        Ok(())
    }
}

/// Schema of a generated relation.
pub fn synthetic_schema(params: &GenParams, name: &str) -> RelationSchema {
    let mut cols = Vec::new();
    let mut slot = 0;
    if params.joins.has_key() {
        cols.push(Column::join("key", slot));
        slot += 1;
    }
    if params.joins.has_time() {
        cols.push(Column::join("t", slot));
    }
    cols.extend((1..=params.locals).map(|i| Column::local(format!("l{i}"), Preference::Min)));
    cols.extend(
        (1..=params.aggs).map(|i| Column::aggregate(format!("g{i}"), i - 1, Preference::Min)),
    );
    RelationSchema::new(name, cols)
}

/// Generates one relation; row ids are `0..N`.
pub fn generate_relation(params: &GenParams, name: &str) -> Result<Relation> {
    params.validate()?;
    let schema = synthetic_schema(params, name);
    let d = params.locals + params.aggs;
    let noise = Normal::new(0.0, NOISE_SIGMA).expect("valid sigma");
    let clamp = |v: f64| v.clamp(0.0, BELOW_ONE);
    let mut tuples = Vec::with_capacity(params.n);
    let mut buf = vec![0.0; d];
    for row in 0..params.n {
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        rng.set_stream(row as u64);
        let mut values = Vec::with_capacity(schema.columns.len());
        if params.joins.has_key() {
            values.push(rng.random_range(0..params.categories) as f64);
        }
        if params.joins.has_time() {
            values.push(rng.random::<f64>());
        }
        match params.dist {
            Distribution::Independent => buf.iter_mut().for_each(|v| *v = rng.random()),
            Distribution::Correlated => {
                let base: f64 = rng.random();
                for v in buf.iter_mut() {
                    *v = clamp(base + noise.sample(&mut rng));
                }
            }
            Distribution::AntiCorrelated => {
                for v in buf.iter_mut() {
                    *v = Exp1.sample(&mut rng);
                }
                let total: f64 = buf.iter().sum();
                let scale = d as f64 / 2.0 / total;
                for v in buf.iter_mut() {
                    *v = clamp(*v * scale + noise.sample(&mut rng));
                }
            }
        }
        values.extend_from_slice(&buf);
        tuples.push(SourceTuple::new(row as u64, values));
    }
    Relation::new(schema, tuples)
}

/// Seed offset of the right-hand relation of a generated pair.
const RIGHT_SEED: u64 = 0x9e37_79b9_7f4a_7c15;

/// Relations `A` and `B` of one instance. `B` uses a seed derived from
/// `params.seed`, so the two sides are independent draws.
pub fn generate_pair(params: &GenParams) -> Result<(Relation, Relation)> {
    let left = generate_relation(params, "A")?;
    let right = generate_relation(&params.with_seed(params.seed ^ RIGHT_SEED), "B")?;
    Ok((left, right))
}

/// A query over two generated schemas: `key` joins by equality, `t` by
/// `left.t < right.t`, and aggregate slot `i` uses `funcs[i % funcs.len()]`
/// (SUM when `funcs` is empty) with the preference of its columns.
pub fn synthetic_query_with(
    left: &RelationSchema,
    right: &RelationSchema,
    funcs: &[AggregateFn],
) -> QuerySpec {
    let mut joins = Vec::new();
    let mut aggregates = Vec::new();
    for col in &left.columns {
        match col.role {
            ColumnRole::Join { slot } => {
                let op = if col.name == "t" { JoinOp::Lt } else { JoinOp::Eq };
                joins.push(JoinCondition { slot, op });
            }
            ColumnRole::Aggregate { slot, pref } => aggregates.push(AggregateSpec {
                name: col.name.clone(),
                slot,
                func: if funcs.is_empty() { AggregateFn::Sum } else { funcs[slot % funcs.len()] },
                pref,
            }),
            ColumnRole::Local { .. } => {}
        }
    }
    QuerySpec { left: left.clone(), right: right.clone(), joins, aggregates }
}

/// [`synthetic_query_with`] using SUM everywhere, or AVG when `avg` is set.
pub fn synthetic_query(left: &RelationSchema, right: &RelationSchema, avg: bool) -> QuerySpec {
    let f = if avg { AggregateFn::Avg } else { AggregateFn::Sum };
    synthetic_query_with(left, right, &[f])
}
