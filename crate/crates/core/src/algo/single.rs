use std::collections::HashSet;

use super::{Algorithm, AsjqOutput, Mode, NoopObserver, Observer, Phase, Prepared};
use crate::error::{AsjqError, Result};
use crate::model::{GuaranteeRegime, Relation, Side, ValidatedQuery};
use crate::skyline::{key_bits, prune_skyline};

/// Checks whether the single-aggregate fast path applies.
///
/// The outer `Result` carries evaluation errors; the inner one says whether
/// the path is eligible and, if not, why. The query needs one strictly
/// monotone aggregate and equality joins only. Verified mode additionally
/// requires every prune-skyline tuple of a side to share one join key: two
/// skyline tuples with different keys are never compared while pruning, so
/// the pair built from one key group can dominate a pair of another.
pub fn single_aggregate_eligible(
    q: &ValidatedQuery,
    left: &Relation,
    right: &Relation,
    mode: Mode,
) -> Result<std::result::Result<(), String>> {
    if q.aggregate_fns().len() != 1 {
        return Ok(Err(format!(
            "the query has {} aggregates, the fast path needs exactly one",
            q.aggregate_fns().len()
        )));
    }
    if q.guarantee_regime() != GuaranteeRegime::EquiStrict {
        return Ok(Err(
            "the fast path needs equality-only joins and a SUM or AVG aggregate".to_string()
        ));
    }
    if mode == Mode::Verified {
        for (side, rel) in [(Side::Left, left), (Side::Right, right)] {
            let part = prune_skyline(q, side, rel)?;
            let cols = &q.layout(side).join_cols;
            let keys: HashSet<Vec<u64>> = part
                .skyline
                .iter()
                .map(|&i| cols.iter().map(|&c| key_bits(rel.tuples()[i].values[c])).collect())
                .collect();
            if keys.len() > 1 {
                return Ok(Err(format!(
                    "the {side} prune skyline spans {} join keys; pairs from different keys \
                     can dominate each other",
                    keys.len()
                )));
            }
        }
    }
    Ok(Ok(()))
}

/// Returns every valid pair of A0 ⋈ B0 without any joined-dominance test.
/// Fails with a precondition error when the fast path does not apply; use a
/// general algorithm then.
pub fn run_single_aggregate(
    q: &ValidatedQuery,
    left: &Relation,
    right: &Relation,
    mode: Mode,
) -> Result<AsjqOutput> {
    single_impl(q, left, right, mode, &mut NoopObserver)
}

pub(super) fn single_impl<O: Observer>(
    q: &ValidatedQuery,
    left: &Relation,
    right: &Relation,
    mode: Mode,
    obs: &mut O,
) -> Result<AsjqOutput> {
    if let Err(reason) = single_aggregate_eligible(q, left, right, mode)? {
        return Err(AsjqError::Precondition(format!(
            "{reason}; use a general algorithm instead"
        )));
    }
    let ctx = Prepared::new(q, left, right, mode)?;
    let report = ctx.report(Algorithm::SingleAggregate, None);
    let tuples: Vec<_> = ctx.pool.iter().map(|&(l, r)| ctx.joined(l, r)).collect();
    for t in &tuples {
        obs.on_emit(Phase::Guaranteed, t);
    }
    Ok(ctx.finish(report, tuples, Vec::new(), 0, 0))
}
