//! Brute-force reference evaluation.
//!
//! Nothing here goes through the skyline or join engines: the cross product is
//! enumerated directly from the query description, join predicates and
//! aggregates are re-derived from the column roles, and dominance is checked
//! pairwise. Keep it that way, since differential tests lean on the
//! independence.

use crate::error::Result;
use crate::model::{
    AggregateFn, ColumnRole, JoinOp, JoinedTuple, Preference, Relation, RelationSchema, Side,
    ValidatedQuery,
};

/// Indices of the items no other item dominates, in input order.
pub fn brute_force_skyline<T>(items: &[T], dominates: impl Fn(&T, &T) -> bool) -> Vec<usize> {
    (0..items.len())
        .filter(|&i| !(0..items.len()).any(|j| j != i && dominates(&items[j], &items[i])))
        .collect()
}

struct Roles {
    joins: Vec<usize>,
    aggs: Vec<usize>,
    locals: Vec<(usize, Preference)>,
}

fn roles(schema: &RelationSchema, j: usize, n: usize) -> Roles {
    let mut joins = vec![usize::MAX; j];
    let mut aggs = vec![usize::MAX; n];
    let mut locals = Vec::new();
    for (i, col) in schema.columns.iter().enumerate() {
        match col.role {
            ColumnRole::Join { slot } => joins[slot] = i,
            ColumnRole::Aggregate { slot, .. } => aggs[slot] = i,
            ColumnRole::Local { pref } => locals.push((i, pref)),
        }
    }
    Roles { joins, aggs, locals }
}

fn satisfied(op: JoinOp, a: f64, b: f64) -> bool {
    match op {
        JoinOp::Eq => a == b,
        JoinOp::Lt => a < b,
        JoinOp::Le => a <= b,
        JoinOp::Gt => a > b,
        JoinOp::Ge => a >= b,
    }
}

fn combine(f: AggregateFn, a: f64, b: f64) -> f64 {
    match f {
        AggregateFn::Sum => a + b,
        AggregateFn::Avg => (a + b) / 2.0,
        AggregateFn::Min => {
            if a <= b {
                a
            } else {
                b
            }
        }
        AggregateFn::Max => {
            if a >= b {
                a
            } else {
                b
            }
        }
    }
}

/// True when `x` beats or ties `y` under `pref`, and whether it beats it.
fn better(pref: Preference, x: f64, y: f64) -> (bool, bool) {
    match pref {
        Preference::Min => (x <= y, x < y),
        Preference::Max => (x >= y, x > y),
        Preference::Equal => (x == y, false),
    }
}

/// The complete result of the query by exhaustive enumeration, sorted by
/// (left id, right id).
pub fn brute_force_asjq(
    q: &ValidatedQuery,
    left: &Relation,
    right: &Relation,
) -> Result<Vec<JoinedTuple>> {
    q.check_relation(Side::Left, left)?;
    q.check_relation(Side::Right, right)?;
    let spec = q.spec();
    let (j, n) = (spec.joins.len(), spec.aggregates.len());
    let (lr, rr) = (roles(&spec.left, j, n), roles(&spec.right, j, n));

    let mut prefs: Vec<Preference> = lr.locals.iter().map(|&(_, p)| p).collect();
    prefs.extend(rr.locals.iter().map(|&(_, p)| p));
    let mut slots = spec.aggregates.clone();
    slots.sort_by_key(|a| a.slot);
    prefs.extend(slots.iter().map(|a| a.pref));

    let mut joined = Vec::new();
    for u in left.tuples() {
        for v in right.tuples() {
            let valid = spec
                .joins
                .iter()
                .all(|c| satisfied(c.op, u.values[lr.joins[c.slot]], v.values[rr.joins[c.slot]]));
            if !valid {
                continue;
            }
            let mut values: Vec<f64> = lr.locals.iter().map(|&(c, _)| u.values[c]).collect();
            values.extend(rr.locals.iter().map(|&(c, _)| v.values[c]));
            values.extend(
                slots
                    .iter()
                    .map(|a| combine(a.func, u.values[lr.aggs[a.slot]], v.values[rr.aggs[a.slot]])),
            );
            joined.push(JoinedTuple { left: u.id, right: v.id, values });
        }
    }

    let keep = brute_force_skyline(&joined, |s, t| {
        let mut strict = false;
        for (k, &p) in prefs.iter().enumerate() {
            let (ok, beats) = better(p, s.values[k], t.values[k]);
            if !ok {
                return false;
            }
            strict |= beats;
        }
        strict
    });
    let mut out: Vec<JoinedTuple> = keep.into_iter().map(|i| joined[i].clone()).collect();
    out.sort_by_key(|t| (t.left, t.right));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn antichain_and_chain() {
        let anti = [(1, 3), (2, 2), (3, 1)];
        let dom = |a: &(i32, i32), b: &(i32, i32)| a.0 >= b.0 && a.1 >= b.1 && a != b;
        assert_eq!(brute_force_skyline(&anti, dom), vec![0, 1, 2]);
        let chain = [(1, 1), (3, 3), (2, 2)];
        assert_eq!(brute_force_skyline(&chain, dom), vec![1]);
        let empty: [(i32, i32); 0] = [];
        assert!(brute_force_skyline(&empty, dom).is_empty());
    }
}
