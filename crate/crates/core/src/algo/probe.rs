//! Dominator search over a candidate pool.
//!
//! Phase-2 verification asks, for one candidate, whether any pool member in a
//! set of target blocks dominates it. The pool is held in a k-d tree whose
//! nodes carry the component-wise minimum of their points and the smallest
//! block coordinates below them, so subtrees that cannot hold an eligible
//! dominator are skipped. Only dominance tests against eligible points are
//! counted as comparisons.

use std::collections::HashSet;

use crate::error::{AsjqError, Result};
use crate::model::{JoinedTuple, RowId, ValidatedQuery};

const LEAF: usize = 8;

/// Blocks a candidate is compared against, as a downward-closed staircase:
/// block `(a, b)` is a target iff `b <= max_b[a]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct Targets {
    max_b: Vec<i64>,
    /// `suffix[a] = max(max_b[a..])`, for subtree pruning.
    suffix: Vec<i64>,
}

impl Targets {
    pub(crate) fn new(max_b: Vec<i64>) -> Self {
        let mut suffix = max_b.clone();
        for a in (0..suffix.len().saturating_sub(1)).rev() {
            suffix[a] = suffix[a].max(suffix[a + 1]);
        }
        Self { max_b, suffix }
    }

    /// Every block of a single-level pool.
    pub(crate) fn everything() -> Self {
        Self::new(vec![i64::MAX])
    }

    #[inline]
    fn eligible(&self, a: u32, b: u32) -> bool {
        self.max_b.get(a as usize).is_some_and(|&m| b as i64 <= m)
    }

    #[inline]
    fn reachable(&self, min_a: u32, min_b: u32) -> bool {
        self.suffix.get(min_a as usize).is_some_and(|&m| min_b as i64 <= m)
    }
}

struct Node {
    lo: usize,
    hi: usize,
    children: Option<(usize, usize)>,
    min_a: u32,
    min_b: u32,
}

pub(crate) struct PoolIndex {
    dims: usize,
    /// Point coordinates in tree order.
    vals: Vec<f64>,
    /// Pool index of each point in tree order.
    ids: Vec<u32>,
    level_a: Vec<u32>,
    level_b: Vec<u32>,
    nodes: Vec<Node>,
    /// Row-major per-node minimum corner.
    mins: Vec<f64>,
}

impl PoolIndex {
    /// `vals` holds one oriented (smaller is better) row per pool point.
    pub(crate) fn build(dims: usize, vals: &[f64], level_a: &[u32], level_b: &[u32]) -> Self {
        let n = level_a.len();
        let mut perm: Vec<u32> = (0..n as u32).collect();
        let mut idx = PoolIndex {
            dims,
            vals: Vec::new(),
            ids: Vec::new(),
            level_a: Vec::new(),
            level_b: Vec::new(),
            nodes: Vec::new(),
            mins: Vec::new(),
        };
        if n > 0 {
            idx.build_node(&mut perm, 0, vals, level_a, level_b);
        }
        idx.vals.reserve(n * dims);
        for &p in &perm {
            let p = p as usize;
            idx.vals.extend_from_slice(&vals[p * dims..(p + 1) * dims]);
            idx.level_a.push(level_a[p]);
            idx.level_b.push(level_b[p]);
        }
        idx.ids = perm;
        idx
    }

    fn build_node(
        &mut self,
        perm: &mut [u32],
        offset: usize,
        vals: &[f64],
        level_a: &[u32],
        level_b: &[u32],
    ) -> usize {
        let d = self.dims;
        let at = |p: u32, k: usize| vals[p as usize * d + k];
        let mut min = vec![f64::INFINITY; d];
        let mut max = vec![f64::NEG_INFINITY; d];
        let (mut min_a, mut min_b) = (u32::MAX, u32::MAX);
        for &p in perm.iter() {
            for k in 0..d {
                min[k] = min[k].min(at(p, k));
                max[k] = max[k].max(at(p, k));
            }
            min_a = min_a.min(level_a[p as usize]);
            min_b = min_b.min(level_b[p as usize]);
        }
        let id = self.nodes.len();
        self.nodes.push(Node { lo: offset, hi: offset + perm.len(), children: None, min_a, min_b });
        self.mins.extend_from_slice(&min);

        let split = (0..d)
            .map(|k| (k, max[k] - min[k]))
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .filter(|&(_, spread)| spread > 0.0);
        if perm.len() <= LEAF || split.is_none() {
            return id;
        }
        let k = split.unwrap().0;
        let mid = perm.len() / 2;
        perm.select_nth_unstable_by(mid, |&x, &y| at(x, k).total_cmp(&at(y, k)));
        let (lo, hi) = perm.split_at_mut(mid);
        let l = self.build_node(lo, offset, vals, level_a, level_b);
        let r = self.build_node(hi, offset + mid, vals, level_a, level_b);
        self.nodes[id].children = Some((l, r));
        id
    }

    /// Whether an eligible point other than `skip` dominates `cand`.
    /// Returns the answer and the number of dominance tests performed.
    pub(crate) fn dominated(&self, cand: &[f64], skip: u32, targets: &Targets) -> (bool, u64) {
        let d = self.dims;
        let mut tests = 0u64;
        if self.nodes.is_empty() {
            return (false, 0);
        }
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id];
            if !targets.reachable(node.min_a, node.min_b) {
                continue;
            }
            let min = &self.mins[id * d..(id + 1) * d];
            if min.iter().zip(cand).any(|(m, c)| m > c) {
                continue;
            }
            match node.children {
                Some((l, r)) => {
                    stack.push(r);
                    stack.push(l);
                }
                None => {
                    for i in node.lo..node.hi {
                        if self.ids[i] == skip || !targets.eligible(self.level_a[i], self.level_b[i])
                        {
                            continue;
                        }
                        tests += 1;
                        let row = &self.vals[i * d..(i + 1) * d];
                        if dominates(row, cand) {
                            return (true, tests);
                        }
                    }
                }
            }
        }
        (false, tests)
    }
}

/// Oriented dominance: better-or-equal everywhere, strictly better somewhere.
#[inline]
pub(crate) fn dominates(a: &[f64], b: &[f64]) -> bool {
    let mut strict = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        strict |= x < y;
    }
    strict
}

/// Returns the candidates that no member of `pool` dominates. A candidate is
/// never compared with itself, but it is compared with the other candidates,
/// which must therefore be part of the pool.
pub fn skyline_with_seed(
    q: &ValidatedQuery,
    candidates: &[JoinedTuple],
    pool: &[JoinedTuple],
) -> Result<Vec<JoinedTuple>> {
    let prefs = q.vector_prefs();
    let dims = prefs.len();
    let mut vals = Vec::with_capacity(pool.len() * dims);
    let mut keys = HashSet::new();
    for t in pool.iter().chain(candidates) {
        if t.values.len() != dims {
            return Err(AsjqError::SchemaMismatch(format!(
                "pair ({}, {}) has {} values, expected {dims}",
                t.left,
                t.right,
                t.values.len()
            )));
        }
    }
    for t in pool {
        keys.insert(t.key());
        vals.extend(prefs.iter().zip(&t.values).map(|(p, &v)| p.orient(v)));
    }
    if let Some(t) = candidates.iter().find(|t| !keys.contains(&t.key())) {
        return Err(AsjqError::Precondition(format!(
            "candidate ({}, {}) is not part of the pool",
            t.left, t.right
        )));
    }
    let zeros = vec![0u32; pool.len()];
    let index = PoolIndex::build(dims, &vals, &zeros, &zeros);
    let position: std::collections::HashMap<(RowId, RowId), u32> =
        pool.iter().enumerate().map(|(i, t)| (t.key(), i as u32)).collect();
    let all = Targets::everything();
    let mut cand = Vec::with_capacity(dims);
    Ok(candidates
        .iter()
        .filter(|t| {
            cand.clear();
            cand.extend(prefs.iter().zip(&t.values).map(|(p, &v)| p.orient(v)));
            !index.dominated(&cand, position[&t.key()], &all).0
        })
        .cloned()
        .collect())
}
