use super::probe::{PoolIndex, Targets};
use super::{Algorithm, AsjqOutput, Mode, NoopObserver, Observer, Phase, Prepared};
use crate::error::Result;
use crate::model::{Relation, ValidatedQuery};

/// Emits the guaranteed pairs, then checks every other valid pair of
/// A0 ⋈ B0 against the whole pool. Candidates are compared with each other
/// too, since two non-guaranteed pairs can dominate one another.
pub fn run_msc(
    q: &ValidatedQuery,
    left: &Relation,
    right: &Relation,
    mode: Mode,
) -> Result<AsjqOutput> {
    msc_impl(q, left, right, mode, &mut NoopObserver)
}

pub(super) fn msc_impl<O: Observer>(
    q: &ValidatedQuery,
    left: &Relation,
    right: &Relation,
    mode: Mode,
    obs: &mut O,
) -> Result<AsjqOutput> {
    let ctx = Prepared::new(q, left, right, mode)?;
    let report = ctx.report(Algorithm::Msc, None);
    let (guaranteed, candidates) = ctx.emit_guaranteed(obs);

    let levels = vec![0u32; ctx.pool.len()];
    let index = PoolIndex::build(ctx.dims, &ctx.vals, &levels, &levels);
    let all = Targets::everything();
    let mut verified = Vec::new();
    let mut tests = 0u64;
    for &i in &candidates {
        let (dominated, n) = index.dominated(ctx.row(i), i as u32, &all);
        tests += n;
        obs.on_compare(Phase::Verification, n);
        if !dominated {
            let (l, r) = ctx.pool[i];
            let t = ctx.joined(l, r);
            obs.on_emit(Phase::Verification, &t);
            verified.push(t);
        }
    }
    Ok(ctx.finish(report, guaranteed, verified, candidates.len(), tests))
}
