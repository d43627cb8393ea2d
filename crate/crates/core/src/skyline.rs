//! Skylines over a single source relation.
//!
//! All sets are expressed as positions into the relation. Relations keep their
//! tuples in ascending row-id order, so sorted positions are also sorted ids.

use std::collections::{BTreeMap, HashMap};

use crate::error::Result;
use crate::model::{Preference, Relation, Side, ValidatedQuery};

/// A split of a position set into its skyline and the remainder.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Partition {
    pub skyline: Vec<usize>,
    pub rest: Vec<usize>,
}

impl Partition {
    fn sorted(mut skyline: Vec<usize>, mut rest: Vec<usize>) -> Self {
        skyline.sort_unstable();
        rest.sort_unstable();
        Self { skyline, rest }
    }
}

/// For each position of a rest set, the positions that weak-locally dominate it.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DominatorMap {
    map: BTreeMap<usize, Vec<usize>>,
}

impl DominatorMap {
    /// Dominators of `pos`; empty when `pos` is not a key.
    pub fn get(&self, pos: usize) -> &[usize] {
        self.map.get(&pos).map_or(&[], Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &[usize])> {
        self.map.iter().map(|(&k, v)| (k, v.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// Weak-local layers of a prune skyline plus the set left unpeeled.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LayerDecomposition {
    pub layers: Vec<Vec<usize>>,
    pub residual: Vec<usize>,
    pub delta: usize,
}

/// Row-major matrix of values oriented so that smaller is better.
struct Oriented {
    vals: Vec<f64>,
    dims: usize,
}

impl Oriented {
    fn row(&self, i: usize) -> &[f64] {
        &self.vals[i * self.dims..(i + 1) * self.dims]
    }

    /// Sum over dimensions of each row's dense rank. A row that is
    /// better-or-equal everywhere never gets a larger score, and a row that is
    /// additionally strictly better somewhere gets a strictly smaller one.
    fn rank_sums(&self, rows: usize) -> Vec<u64> {
        let mut score = vec![0u64; rows];
        let mut order: Vec<usize> = (0..rows).collect();
        for d in 0..self.dims {
            let at = |i: usize| self.vals[i * self.dims + d];
            order.sort_unstable_by(|&a, &b| at(a).total_cmp(&at(b)));
            let mut rank = 0u64;
            for w in 0..order.len() {
                if w > 0 && at(order[w]) != at(order[w - 1]) {
                    rank += 1;
                }
                score[order[w]] += rank;
            }
        }
        score
    }
}

#[inline]
fn all_le(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y)
}

/// Prune-dominance keys of one side: equality join values, then oriented
/// dimensions of which the first `strict` may supply strictness.
struct PruneKeys {
    eq: Vec<u64>,
    eq_dims: usize,
    dims: Oriented,
    strict: usize,
}

impl PruneKeys {
    fn build(q: &ValidatedQuery, side: Side, rel: &Relation) -> Self {
        let layout = q.layout(side);
        let mut eq_cols = Vec::new();
        let mut strict_cols = Vec::new();
        let mut weak_cols = Vec::new();
        for (&c, &p) in layout.local_cols.iter().zip(&layout.local_prefs) {
            strict_cols.push((c, p));
        }
        for (slot, &c) in layout.agg_cols.iter().enumerate() {
            let p = q.aggregate_prefs()[slot];
            if q.aggregate_fns()[slot].is_strict() {
                strict_cols.push((c, p));
            } else {
                weak_cols.push((c, p));
            }
        }
        for (&c, &p) in layout.join_cols.iter().zip(&layout.join_prefs) {
            if p == Preference::Equal {
                eq_cols.push(c);
            } else {
                weak_cols.push((c, p));
            }
        }
        let strict = strict_cols.len();
        let cols: Vec<_> = strict_cols.into_iter().chain(weak_cols).collect();
        let mut eq = Vec::with_capacity(rel.len() * eq_cols.len());
        let mut vals = Vec::with_capacity(rel.len() * cols.len());
        for t in rel.tuples() {
            eq.extend(eq_cols.iter().map(|&c| key_bits(t.values[c])));
            vals.extend(cols.iter().map(|&(c, p)| p.orient(t.values[c])));
        }
        Self { eq, eq_dims: eq_cols.len(), dims: Oriented { vals, dims: cols.len() }, strict }
    }

    fn eq_key(&self, i: usize) -> &[u64] {
        &self.eq[i * self.eq_dims..(i + 1) * self.eq_dims]
    }

    #[inline]
    fn dominates(&self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.dims.row(a), self.dims.row(b));
        all_le(ra, rb) && ra[..self.strict].iter().zip(&rb[..self.strict]).any(|(x, y)| x < y)
    }
}

/// Bit pattern used to hash an equality value; `-0.0` and `0.0` share a key.
#[inline]
pub(crate) fn key_bits(v: f64) -> u64 {
    if v == 0.0 {
        0
    } else {
        v.to_bits()
    }
}

/// Splits a relation into its prune skyline (A0) and the remainder (A'0).
///
/// Tuples are grouped by their equality join values, since prune dominance
/// never crosses such groups. Each group is filtered sort-first: a rank-sum
/// presort puts every dominator strictly before the tuples it dominates, so a
/// single pass against the growing window is exact.
pub fn prune_skyline(q: &ValidatedQuery, side: Side, rel: &Relation) -> Result<Partition> {
    Ok(prune_skyline_counted(q, side, rel)?.0)
}

/// [`prune_skyline`] that also returns the number of dominance tests.
pub fn prune_skyline_counted(
    q: &ValidatedQuery,
    side: Side,
    rel: &Relation,
) -> Result<(Partition, u64)> {
    q.check_relation(side, rel)?;
    let keys = PruneKeys::build(q, side, rel);
    let score = keys.dims.rank_sums(rel.len());

    let mut groups: HashMap<&[u64], Vec<usize>> = HashMap::new();
    for i in 0..rel.len() {
        groups.entry(keys.eq_key(i)).or_default().push(i);
    }
    let mut skyline = Vec::new();
    let mut rest = Vec::new();
    let mut comparisons = 0u64;
    let mut window = Vec::new();
    for (_, mut members) in groups {
        members.sort_unstable_by_key(|&i| (score[i], i));
        window.clear();
        for i in members {
            let mut dominated = false;
            for &w in &window {
                comparisons += 1;
                if keys.dominates(w, i) {
                    dominated = true;
                    break;
                }
            }
            if dominated {
                rest.push(i);
            } else {
                window.push(i);
            }
        }
        skyline.extend_from_slice(&window);
    }
    Ok((Partition::sorted(skyline, rest), comparisons))
}

/// Oriented local values of the given positions, row `k` for `ids[k]`.
fn local_keys(rel: &Relation, ids: &[usize]) -> Oriented {
    let locals: Vec<_> = rel.schema.local_columns().collect();
    let mut vals = Vec::with_capacity(ids.len() * locals.len());
    for &i in ids {
        let t = &rel.tuples()[i];
        vals.extend(locals.iter().map(|&(c, p)| p.orient(t.values[c])));
    }
    Oriented { vals, dims: locals.len() }
}

/// Scans, for each row, every other row whose rank-sum does not exceed its
/// own: only those can weak-locally dominate it. `visit(row, dominator)`
/// returns `false` to stop scanning the current row.
fn scan_weak_dominators(keys: &Oriented, rows: usize, mut visit: impl FnMut(usize, usize) -> bool) {
    let score = keys.rank_sums(rows);
    let mut order: Vec<usize> = (0..rows).collect();
    order.sort_unstable_by_key(|&i| (score[i], i));
    for &i in &order {
        for &j in &order {
            if score[j] > score[i] {
                break;
            }
            if j != i && all_le(keys.row(j), keys.row(i)) && !visit(i, j) {
                break;
            }
        }
    }
}

/// Splits `ids` into the tuples no other member weak-locally dominates and
/// the rest. Members with identical locals dominate each other, so a group
/// of exact ties lands entirely in the rest.
pub fn weak_local_partition(rel: &Relation, ids: &[usize]) -> Partition {
    let keys = local_keys(rel, ids);
    let mut dominated = vec![false; ids.len()];
    scan_weak_dominators(&keys, ids.len(), |i, _| {
        dominated[i] = true;
        false
    });
    let (rest, skyline): (Vec<_>, Vec<_>) =
        ids.iter().zip(&dominated).partition(|(_, &d)| d);
    Partition::sorted(
        skyline.into_iter().map(|(&i, _)| i).collect(),
        rest.into_iter().map(|(&i, _)| i).collect(),
    )
}

/// Weak-local partition of A0 together with, for every member of the rest,
/// all members of A0 that weak-locally dominate it.
pub fn find_weak_local_dominators(rel: &Relation, a0: &[usize]) -> (Partition, DominatorMap) {
    let keys = local_keys(rel, a0);
    let mut found: Vec<Vec<usize>> = vec![Vec::new(); a0.len()];
    scan_weak_dominators(&keys, a0.len(), |i, j| {
        found[i].push(a0[j]);
        true
    });
    let mut skyline = Vec::new();
    let mut map = BTreeMap::new();
    for (k, mut doms) in found.into_iter().enumerate() {
        if doms.is_empty() {
            skyline.push(a0[k]);
        } else {
            doms.sort_unstable();
            map.insert(a0[k], doms);
        }
    }
    let rest = map.keys().copied().collect();
    (Partition::sorted(skyline, rest), DominatorMap { map })
}

/// Peels weak-local skyline layers off `a0` until at most `delta` tuples
/// remain.
///
/// Peeling also stops when the remaining set has no undominated member (a
/// group of exact ties) or when it is an antichain, which would otherwise be
/// peeled as one final layer leaving nothing behind; in both cases the whole
/// remaining set becomes the residual.
pub fn peel_layers(rel: &Relation, a0: &[usize], delta: usize) -> LayerDecomposition {
    let mut rest: Vec<usize> = a0.to_vec();
    rest.sort_unstable();
    let mut layers = Vec::new();
    while rest.len() > delta {
        let part = weak_local_partition(rel, &rest);
        if part.skyline.is_empty() || part.rest.is_empty() {
            break;
        }
        layers.push(part.skyline);
        rest = part.rest;
    }
    LayerDecomposition { layers, residual: rest, delta }
}
