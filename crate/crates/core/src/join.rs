//! Join evaluation and aggregation of joined pairs.

use std::collections::HashMap;

use crate::error::Result;
use crate::model::{JoinOp, JoinedTuple, Relation, Side, SourceTuple, ValidatedQuery};
use crate::skyline::key_bits;

/// Physical plan for the join conditions of a query.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JoinPlan {
    /// Slots joined by equality; used as the hash key.
    pub equality_slots: Vec<usize>,
    /// Slots checked as predicates after probing.
    pub filter_slots: Vec<usize>,
}

impl JoinPlan {
    /// Hash join on every equality slot, nested loop when there are none.
    pub fn new(q: &ValidatedQuery) -> Self {
        let (equality_slots, filter_slots) =
            (0..q.join_ops().len()).partition(|&s| q.join_ops()[s] == JoinOp::Eq);
        Self { equality_slots, filter_slots }
    }

    /// Evaluates every condition as a predicate over the full cross product.
    pub fn nested_loop(q: &ValidatedQuery) -> Self {
        Self { equality_slots: Vec::new(), filter_slots: (0..q.join_ops().len()).collect() }
    }

    pub fn is_hash(&self) -> bool {
        !self.equality_slots.is_empty()
    }
}

/// Streaming iterator over join-valid `(left position, right position)`
/// pairs in ascending order.
pub struct JoinPairs<'a> {
    left: &'a Relation,
    right: &'a Relation,
    left_eq: Vec<usize>,
    filters: Vec<(usize, usize, JoinOp)>,
    lids: Vec<usize>,
    buckets: Vec<Vec<usize>>,
    index: HashMap<Vec<u64>, usize>,
    key: Vec<u64>,
    li: usize,
    bucket: Option<usize>,
    pos: usize,
}

impl JoinPairs<'_> {
    fn probe(&mut self, l: usize) -> Option<usize> {
        if self.left_eq.is_empty() {
            return Some(0);
        }
        let t = &self.left.tuples()[l];
        self.key.clear();
        self.key.extend(self.left_eq.iter().map(|&c| key_bits(t.values[c])));
        self.index.get(self.key.as_slice()).copied()
    }

    #[inline]
    fn passes(&self, l: usize, r: usize) -> bool {
        let (u, v) = (&self.left.tuples()[l].values, &self.right.tuples()[r].values);
        self.filters.iter().all(|&(lc, rc, op)| op.holds(u[lc], v[rc]))
    }
}

impl Iterator for JoinPairs<'_> {
    type Item = (usize, usize);

    fn next(&mut self) -> Option<(usize, usize)> {
        loop {
            if let Some(b) = self.bucket {
                while self.pos < self.buckets[b].len() {
                    let r = self.buckets[b][self.pos];
                    self.pos += 1;
                    let l = self.lids[self.li];
                    if self.passes(l, r) {
                        return Some((l, r));
                    }
                }
                self.bucket = None;
                self.li += 1;
            }
            if self.li >= self.lids.len() {
                return None;
            }
            let l = self.lids[self.li];
            match self.probe(l) {
                Some(b) => {
                    self.bucket = Some(b);
                    self.pos = 0;
                }
                None => self.li += 1,
            }
        }
    }
}

/// Pairs of `lids × rids` (positions) that satisfy every join condition.
pub fn compute_join<'a>(
    q: &ValidatedQuery,
    plan: &JoinPlan,
    left: &'a Relation,
    lids: &[usize],
    right: &'a Relation,
    rids: &[usize],
) -> Result<JoinPairs<'a>> {
    q.check_relation(Side::Left, left)?;
    q.check_relation(Side::Right, right)?;
    let (ll, rl) = (q.layout(Side::Left), q.layout(Side::Right));
    let left_eq: Vec<usize> = plan.equality_slots.iter().map(|&s| ll.join_cols[s]).collect();
    let right_eq: Vec<usize> = plan.equality_slots.iter().map(|&s| rl.join_cols[s]).collect();
    let filters = plan
        .filter_slots
        .iter()
        .map(|&s| (ll.join_cols[s], rl.join_cols[s], q.join_ops()[s]))
        .collect();

    let mut rids = rids.to_vec();
    rids.sort_unstable();
    let mut lids = lids.to_vec();
    lids.sort_unstable();

    let mut buckets: Vec<Vec<usize>> = Vec::new();
    let mut index = HashMap::new();
    if right_eq.is_empty() {
        buckets.push(rids);
    } else {
        for r in rids {
            let t = &right.tuples()[r];
            let key: Vec<u64> = right_eq.iter().map(|&c| key_bits(t.values[c])).collect();
            let b = *index.entry(key).or_insert_with(|| {
                buckets.push(Vec::new());
                buckets.len() - 1
            });
            buckets[b].push(r);
        }
    }
    Ok(JoinPairs {
        left,
        right,
        left_eq,
        filters,
        lids,
        buckets,
        index,
        key: Vec::new(),
        li: 0,
        bucket: None,
        pos: 0,
    })
}

/// All join-valid pairs of two whole relations, as positions.
pub fn join_all<'a>(
    q: &ValidatedQuery,
    left: &'a Relation,
    right: &'a Relation,
) -> Result<JoinPairs<'a>> {
    let lids: Vec<usize> = (0..left.len()).collect();
    let rids: Vec<usize> = (0..right.len()).collect();
    compute_join(q, &JoinPlan::new(q), left, &lids, right, &rids)
}

/// Writes the skyline vector of `u ⋈ v` into `out`: left locals, right
/// locals, then one aggregated value per slot.
pub(crate) fn fill_vector(q: &ValidatedQuery, u: &[f64], v: &[f64], out: &mut Vec<f64>) {
    let (ll, rl) = (q.layout(Side::Left), q.layout(Side::Right));
    out.clear();
    out.extend(ll.local_cols.iter().map(|&c| u[c]));
    out.extend(rl.local_cols.iter().map(|&c| v[c]));
    for (slot, f) in q.aggregate_fns().iter().enumerate() {
        out.push(f.apply(u[ll.agg_cols[slot]], v[rl.agg_cols[slot]]));
    }
}

/// Builds the joined tuple of `u` (left) and `v` (right). Join validity is
/// the caller's responsibility.
pub fn aggregate_pair(q: &ValidatedQuery, u: &SourceTuple, v: &SourceTuple) -> JoinedTuple {
    let mut values = Vec::with_capacity(q.vector_len());
    fill_vector(q, &u.values, &v.values, &mut values);
    JoinedTuple { left: u.id, right: v.id, values }
}
