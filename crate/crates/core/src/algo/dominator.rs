use std::collections::HashMap;

use super::probe::dominates;
use super::{oriented, Algorithm, AsjqOutput, Mode, NoopObserver, Observer, Phase, Prepared};
use crate::error::{AsjqError, Result};
use crate::model::{Relation, RowId, Side, ValidatedQuery};
use crate::skyline::{find_weak_local_dominators, key_bits, DominatorMap};

/// Like MSC, but each candidate `u' ⋈ v'` is checked only against valid
/// pairs built from the weak-local dominators of `u'` and of `v'`.
///
/// Verified mode adds each component itself to its dominator list and
/// compares full skyline vectors. Paper-faithful mode uses the dominator
/// lists alone and compares only the aggregated values.
pub fn run_dominator(
    q: &ValidatedQuery,
    left: &Relation,
    right: &Relation,
    mode: Mode,
) -> Result<AsjqOutput> {
    dominator_impl(q, left, right, mode, &mut NoopObserver)
}

struct Closures<'c> {
    maps: [DominatorMap; 2],
    /// Dense id of the equality-join key, per position, per side.
    keys: [Vec<u32>; 2],
    mode: Mode,
    cache: [HashMap<usize, Vec<(u32, usize)>>; 2],
    ctx: &'c Prepared<'c>,
}

impl<'c> Closures<'c> {
    fn new(ctx: &'c Prepared<'c>, maps: [DominatorMap; 2]) -> Self {
        let q = ctx.q;
        let eq_slots: Vec<usize> = (0..q.join_ops().len())
            .filter(|&s| q.join_ops()[s] == crate::model::JoinOp::Eq)
            .collect();
        let mut dense: HashMap<Vec<u64>, u32> = HashMap::new();
        let mut keys = [Vec::new(), Vec::new()];
        for (k, (side, rel)) in [(Side::Left, ctx.left), (Side::Right, ctx.right)].iter().enumerate() {
            let cols: Vec<usize> = eq_slots.iter().map(|&s| q.layout(*side).join_cols[s]).collect();
            keys[k] = rel
                .tuples()
                .iter()
                .map(|t| {
                    let key: Vec<u64> = cols.iter().map(|&c| key_bits(t.values[c])).collect();
                    let next = dense.len() as u32;
                    *dense.entry(key).or_insert(next)
                })
                .collect();
        }
        Self { maps, keys, mode: ctx.mode, cache: [HashMap::new(), HashMap::new()], ctx }
    }

    /// Dominator closure of `pos`, sorted by (key id, position).
    fn closure(&mut self, side: usize, pos: usize) -> &[(u32, usize)] {
        let (maps, keys, mode) = (&self.maps, &self.keys, self.mode);
        self.cache[side].entry(pos).or_insert_with(|| {
            let mut c: Vec<(u32, usize)> =
                maps[side].get(pos).iter().map(|&p| (keys[side][p], p)).collect();
            if mode == Mode::Verified {
                c.push((keys[side][pos], pos));
            }
            c.sort_unstable();
            c
        })
    }

    /// Valid pairs of the check set of `(lc, rc)`, in enumeration order,
    /// excluding the candidate itself.
    fn check_pairs(&mut self, lc: usize, rc: usize) -> Vec<(usize, usize)> {
        let us = self.closure(0, lc).to_vec();
        let vs = self.closure(1, rc).to_vec();
        let (q, left, right) = (self.ctx.q, self.ctx.left, self.ctx.right);
        let mut out = Vec::new();
        for &(key, u) in &us {
            let lo = vs.partition_point(|&(k, _)| k < key);
            let hi = vs.partition_point(|&(k, _)| k <= key);
            for &(_, v) in &vs[lo..hi] {
                if (u, v) != (lc, rc) && q.joins(&left.tuples()[u].values, &right.tuples()[v].values)
                {
                    out.push((u, v));
                }
            }
        }
        out
    }
}

fn prepare<'a>(
    q: &'a ValidatedQuery,
    left: &'a Relation,
    right: &'a Relation,
    mode: Mode,
) -> Result<(Prepared<'a>, [DominatorMap; 2])> {
    let mut maps = Vec::new();
    let ctx = Prepared::with_split(q, left, right, mode, |rel, a0| {
        let (part, map) = find_weak_local_dominators(rel, a0);
        maps.push(map);
        part
    })?;
    let right_map = maps.pop().unwrap_or_default();
    let left_map = maps.pop().unwrap_or_default();
    Ok((ctx, [left_map, right_map]))
}

pub(super) fn dominator_impl<O: Observer>(
    q: &ValidatedQuery,
    left: &Relation,
    right: &Relation,
    mode: Mode,
    obs: &mut O,
) -> Result<AsjqOutput> {
    let (ctx, maps) = prepare(q, left, right, mode)?;
    let report = ctx.report(Algorithm::Dominator, None);
    let (guaranteed, candidates) = ctx.emit_guaranteed(obs);
    let mut closures = Closures::new(&ctx, maps);
    let n_aggs = q.aggregate_fns().len();
    let agg_from = ctx.dims - n_aggs;

    let mut verified = Vec::new();
    let mut tests = 0u64;
    let mut buf = Vec::with_capacity(ctx.dims);
    for &i in &candidates {
        let (lc, rc) = ctx.pool[i];
        let cand = ctx.row(i);
        let mut dominated = false;
        let mut n = 0u64;
        for (u, v) in closures.check_pairs(lc, rc) {
            oriented(q, &ctx.prefs, left, right, u, v, &mut buf);
            n += 1;
            dominated = match mode {
                Mode::Verified => dominates(&buf, cand),
                Mode::PaperFaithful => dominates(&buf[agg_from..], &cand[agg_from..]),
            };
            if dominated {
                break;
            }
        }
        tests += n;
        obs.on_compare(Phase::Verification, n);
        if !dominated {
            let t = ctx.joined(lc, rc);
            obs.on_emit(Phase::Verification, &t);
            verified.push(t);
        }
    }
    Ok(ctx.finish(report, guaranteed, verified, candidates.len(), tests))
}

/// The valid pairs a candidate is compared against by the dominator-based
/// algorithm, in row ids. Both components must be prune-skyline members.
pub fn dominator_check_set(
    q: &ValidatedQuery,
    left: &Relation,
    right: &Relation,
    candidate: (RowId, RowId),
    mode: Mode,
) -> Result<Vec<(RowId, RowId)>> {
    let (ctx, maps) = prepare(q, left, right, mode)?;
    let missing = || {
        AsjqError::Precondition(format!(
            "({}, {}) is not a pair of prune-skyline tuples",
            candidate.0, candidate.1
        ))
    };
    let lc = left.position(candidate.0).ok_or_else(missing)?;
    let rc = right.position(candidate.1).ok_or_else(missing)?;
    if ctx.a0.skyline.binary_search(&lc).is_err() || ctx.b0.skyline.binary_search(&rc).is_err() {
        return Err(missing());
    }
    let mut closures = Closures::new(&ctx, maps);
    let mut pairs: Vec<_> = closures
        .check_pairs(lc, rc)
        .into_iter()
        .map(|(u, v)| (left.id(u), right.id(v)))
        .collect();
    pairs.sort_unstable();
    Ok(pairs)
}
