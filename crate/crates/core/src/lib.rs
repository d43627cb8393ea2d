//! Aggregate skyline join queries over two relations.
//!
//! A query joins two relations and returns the skyline of the joined pairs,
//! where the skyline vector holds the local attributes of both sides plus
//! attributes aggregated across the pair. The crate provides the naive
//! evaluation, three pruning-based algorithms (MSC, dominator-based and
//! iterative), a single-aggregate fast path, a brute-force oracle, a synthetic
//! data generator, and CSV/DSL input and output.
//!
//! ```
//! use asjq::algo::{run, Algorithm, Mode, RunConfig};
//! use asjq::datagen::{generate_relation, synthetic_query, Distribution, GenParams};
//! use asjq::model::validate_query;
//!
//! let params = GenParams::new(200, 2, 1, 5, Distribution::Independent, 7);
//! let left = generate_relation(&params, "A").unwrap();
//! let right = generate_relation(&params.with_seed(8), "B").unwrap();
//! let q = validate_query(synthetic_query(&left.schema, &right.schema, false)).unwrap();
//! let out = run(&q, &left, &right, &RunConfig::new(Algorithm::Iterative, Mode::Verified)).unwrap();
//! let oracle = asjq::oracle::brute_force_asjq(&q, &left, &right).unwrap();
//! assert_eq!(out.tuples, oracle);
//! ```

pub mod algo;
pub mod datagen;
pub mod error;
pub mod io;
pub mod join;
pub mod model;
pub mod oracle;
pub mod skyline;

pub use error::{AsjqError, Result};
pub use model::{
    validate_query, AggregateFn, AggregateSpec, Column, ColumnRole, JoinCondition, JoinOp,
    JoinedTuple, Preference, QuerySpec, Relation, RelationSchema, RowId, Side, SourceTuple,
    ValidatedQuery,
};
