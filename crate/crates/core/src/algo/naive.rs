use std::cmp::Ordering;
use std::time::Instant;

use super::{oriented, Algorithm, AsjqOutput, Mode, Observer, Phase, RunReport};
use crate::error::Result;
use crate::join::{aggregate_pair, join_all};
use crate::model::{Relation, ValidatedQuery};

/// `Less` if `a` dominates `b`, `Greater` if `b` dominates `a`.
#[inline]
fn compare(a: &[f64], b: &[f64]) -> Option<Ordering> {
    let (mut a_better, mut b_better) = (false, false);
    for (x, y) in a.iter().zip(b) {
        a_better |= x < y;
        b_better |= y < x;
        if a_better && b_better {
            return None;
        }
    }
    match (a_better, b_better) {
        (true, false) => Some(Ordering::Less),
        (false, true) => Some(Ordering::Greater),
        _ => None,
    }
}

/// Joins everything, aggregates every pair and keeps the skyline.
///
/// Pairs are streamed through a block-nested-loop window, so only the
/// current skyline is held in memory.
pub fn run_naive(q: &ValidatedQuery, left: &Relation, right: &Relation) -> Result<AsjqOutput> {
    naive_impl(q, left, right, Mode::Verified, &mut super::NoopObserver)
}

pub(super) fn naive_impl<O: Observer>(
    q: &ValidatedQuery,
    left: &Relation,
    right: &Relation,
    mode: Mode,
    obs: &mut O,
) -> Result<AsjqOutput> {
    let started = Instant::now();
    let prefs = q.vector_prefs();
    let dims = prefs.len();
    let mut window_vals: Vec<f64> = Vec::new();
    let mut window_keys: Vec<(usize, usize)> = Vec::new();
    let mut buf = Vec::with_capacity(dims);
    let mut pairs = 0u64;
    let mut comparisons = 0u64;

    for (l, r) in join_all(q, left, right)? {
        pairs += 1;
        oriented(q, &prefs, left, right, l, r, &mut buf);
        let mut dominated = false;
        let mut w = 0;
        while w < window_keys.len() {
            comparisons += 1;
            match compare(&window_vals[w * dims..(w + 1) * dims], &buf) {
                Some(Ordering::Less) => {
                    dominated = true;
                    break;
                }
                Some(Ordering::Greater) => {
                    let last = window_keys.len() - 1;
                    window_keys.swap(w, last);
                    window_keys.pop();
                    if w != last {
                        let (head, tail) = window_vals.split_at_mut(last * dims);
                        head[w * dims..(w + 1) * dims].copy_from_slice(&tail[..dims]);
                    }
                    window_vals.truncate(last * dims);
                }
                _ => w += 1,
            }
        }
        if !dominated {
            window_keys.push((l, r));
            window_vals.extend_from_slice(&buf);
        }
    }

    obs.on_compare(Phase::Verification, comparisons);
    window_keys.sort_unstable();
    let tuples: Vec<_> = window_keys
        .iter()
        .map(|&(l, r)| aggregate_pair(q, &left.tuples()[l], &right.tuples()[r]))
        .collect();
    for t in &tuples {
        obs.on_emit(Phase::Verification, t);
    }
    let report = RunReport {
        algorithm: Algorithm::Naive.name().to_string(),
        mode,
        delta: None,
        left_size: left.len(),
        right_size: right.len(),
        join_pairs: pairs,
        verified: tuples.len(),
        phase2_candidates: pairs as usize,
        comparisons,
        phase2_comparisons: comparisons,
        cardinality: tuples.len(),
        wall_time_ms: started.elapsed().as_secs_f64() * 1e3,
        ..RunReport::default()
    };
    Ok(AsjqOutput { tuples, report })
}
