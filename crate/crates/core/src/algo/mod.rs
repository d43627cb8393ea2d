//! ASJQ evaluation strategies.
//!
//! Every pruning-based algorithm runs the same first phase: prune skylines A0
//! and B0 of both relations, their weak-local split into A1/A'1 and B1/B'1,
//! and emission of the pairs that are guaranteed to be in the result. The
//! second phase verifies the remaining valid pairs of A0 ⋈ B0, and that is
//! where MSC, the dominator-based and the iterative algorithms differ.

mod dominator;
mod iterative;
mod msc;
mod naive;
mod probe;
mod single;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::join::{compute_join, fill_vector, JoinPlan};
use crate::model::{
    GuaranteeRegime, JoinedTuple, Preference, Relation, Side, ValidatedQuery,
};
use crate::skyline::{prune_skyline_counted, Partition};

pub use dominator::{dominator_check_set, run_dominator};
pub use iterative::{run_iterative, target_sets, BlockLevel};
pub use msc::run_msc;
pub use naive::run_naive;
pub use probe::skyline_with_seed;
pub use single::{run_single_aggregate, single_aggregate_eligible};

/// Default peeling threshold of the iterative algorithm.
pub const DEFAULT_DELTA: usize = 100;

/// How far an algorithm trusts the inclusion shortcuts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Shortcuts only where they are provably sound; output equals the oracle.
    #[default]
    Verified,
    /// Shortcuts, check sets and target sets exactly as originally published.
    PaperFaithful,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Verified => "verified",
            Mode::PaperFaithful => "paper",
        })
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "verified" => Ok(Mode::Verified),
            "paper" | "paper_faithful" => Ok(Mode::PaperFaithful),
            other => Err(format!("unknown mode `{other}` (expected verified or paper)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Naive,
    Msc,
    Dominator,
    Iterative,
    SingleAggregate,
    /// Single-aggregate fast path when eligible, iterative otherwise.
    Auto,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Naive => "naive",
            Algorithm::Msc => "msc",
            Algorithm::Dominator => "dominator",
            Algorithm::Iterative => "iterative",
            Algorithm::SingleAggregate => "single",
            Algorithm::Auto => "auto",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "naive" => Ok(Algorithm::Naive),
            "msc" => Ok(Algorithm::Msc),
            "dominator" => Ok(Algorithm::Dominator),
            "iterative" => Ok(Algorithm::Iterative),
            "single" | "single_aggregate" => Ok(Algorithm::SingleAggregate),
            "auto" => Ok(Algorithm::Auto),
            other => Err(format!("unknown algorithm `{other}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Guaranteed,
    Verification,
}

/// Hooks into the emission stream and comparison counter of a run.
pub trait Observer {
    fn on_emit(&mut self, _phase: Phase, _tuple: &JoinedTuple) {}
    /// `count` joined-dominance tests were just performed.
    fn on_compare(&mut self, _phase: Phase, _count: u64) {}
}

/// Observer that ignores everything.
pub struct NoopObserver;

impl Observer for NoopObserver {}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunConfig {
    pub algorithm: Algorithm,
    pub mode: Mode,
    pub delta: usize,
}

impl RunConfig {
    pub fn new(algorithm: Algorithm, mode: Mode) -> Self {
        Self { algorithm, mode, delta: DEFAULT_DELTA }
    }

    pub fn with_delta(mut self, delta: usize) -> Self {
        self.delta = delta;
        self
    }
}

/// Counters of one algorithm execution.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub algorithm: String,
    pub mode: Mode,
    pub delta: Option<usize>,
    pub left_size: usize,
    pub right_size: usize,
    /// |A0| and |B0|; zero for the naive algorithm.
    pub left_skyline: usize,
    pub right_skyline: usize,
    /// Join-valid pairs that were built.
    pub join_pairs: u64,
    /// Tuples emitted without verification.
    pub guaranteed: usize,
    /// Tuples emitted after verification.
    pub verified: usize,
    pub phase2_candidates: usize,
    /// Joined-dominance tests, all phases.
    pub comparisons: u64,
    /// Joined-dominance tests of the verification phase.
    pub phase2_comparisons: u64,
    /// Prune-dominance tests on the source relations.
    pub source_comparisons: u64,
    pub cardinality: usize,
    pub wall_time_ms: f64,
}

/// Result set in ascending (left id, right id) order plus its report.
#[derive(Clone, Debug)]
pub struct AsjqOutput {
    pub tuples: Vec<JoinedTuple>,
    pub report: RunReport,
}

/// Runs the configured algorithm.
pub fn run(
    q: &ValidatedQuery,
    left: &Relation,
    right: &Relation,
    config: &RunConfig,
) -> Result<AsjqOutput> {
    run_observed(q, left, right, config, &mut NoopObserver)
}

/// [`run`] with an observer attached.
pub fn run_observed<O: Observer>(
    q: &ValidatedQuery,
    left: &Relation,
    right: &Relation,
    config: &RunConfig,
    obs: &mut O,
) -> Result<AsjqOutput> {
    match config.algorithm {
        Algorithm::Naive => naive::naive_impl(q, left, right, config.mode, obs),
        Algorithm::Msc => msc::msc_impl(q, left, right, config.mode, obs),
        Algorithm::Dominator => dominator::dominator_impl(q, left, right, config.mode, obs),
        Algorithm::Iterative => {
            iterative::iterative_impl(q, left, right, config.delta, config.mode, obs)
        }
        Algorithm::SingleAggregate => single::single_impl(q, left, right, config.mode, obs),
        Algorithm::Auto => {
            if single_aggregate_eligible(q, left, right, config.mode)?.is_ok() {
                single::single_impl(q, left, right, config.mode, obs)
            } else {
                iterative::iterative_impl(q, left, right, config.delta, config.mode, obs)
            }
        }
    }
}

/// Pairs that phase 1 emits without verification.
///
/// Valid pairs of A1 ⋈ B1 are always included. The mixed sets A1 ⋈ B'1 and
/// A'1 ⋈ B1 are included in paper-faithful mode, and in verified mode only
/// when joins are equalities and aggregates strictly monotone.
pub fn guaranteed_set(
    q: &ValidatedQuery,
    left: &Relation,
    right: &Relation,
    mode: Mode,
) -> Result<Vec<JoinedTuple>> {
    let ctx = Prepared::new(q, left, right, mode)?;
    Ok(ctx
        .pool
        .iter()
        .filter(|&&(l, r)| ctx.is_guaranteed(l, r))
        .map(|&(l, r)| ctx.joined(l, r))
        .collect())
}

/// Shared first phase of the pruning-based algorithms.
pub(crate) struct Prepared<'a> {
    pub q: &'a ValidatedQuery,
    pub left: &'a Relation,
    pub right: &'a Relation,
    pub mode: Mode,
    pub a0: Partition,
    pub b0: Partition,
    /// Weak-local split of A0 and B0.
    pub a1: Partition,
    pub b1: Partition,
    pub in_a1: Vec<bool>,
    pub in_b1: Vec<bool>,
    /// Valid pairs of A0 ⋈ B0 in canonical order, as positions.
    pub pool: Vec<(usize, usize)>,
    /// Oriented skyline vectors of the pool, row-major.
    pub vals: Vec<f64>,
    pub dims: usize,
    pub prefs: Vec<Preference>,
    pub source_comparisons: u64,
    pub started: Instant,
}

impl<'a> Prepared<'a> {
    pub fn new(
        q: &'a ValidatedQuery,
        left: &'a Relation,
        right: &'a Relation,
        mode: Mode,
    ) -> Result<Self> {
        Self::with_split(q, left, right, mode, |rel, a0| {
            crate::skyline::weak_local_partition(rel, a0)
        })
    }

    pub fn with_split(
        q: &'a ValidatedQuery,
        left: &'a Relation,
        right: &'a Relation,
        mode: Mode,
        mut split: impl FnMut(&Relation, &[usize]) -> Partition,
    ) -> Result<Self> {
        let started = Instant::now();
        let (a0, ca) = prune_skyline_counted(q, Side::Left, left)?;
        let (b0, cb) = prune_skyline_counted(q, Side::Right, right)?;
        let a1 = split(left, &a0.skyline);
        let b1 = split(right, &b0.skyline);
        let mut in_a1 = vec![false; left.len()];
        a1.skyline.iter().for_each(|&i| in_a1[i] = true);
        let mut in_b1 = vec![false; right.len()];
        b1.skyline.iter().for_each(|&i| in_b1[i] = true);

        let plan = JoinPlan::new(q);
        let pool: Vec<_> =
            compute_join(q, &plan, left, &a0.skyline, right, &b0.skyline)?.collect();
        let prefs = q.vector_prefs();
        let dims = prefs.len();
        let mut vals = Vec::with_capacity(pool.len() * dims);
        let mut buf = Vec::with_capacity(dims);
        for &(l, r) in &pool {
            oriented(q, &prefs, left, right, l, r, &mut buf);
            vals.extend_from_slice(&buf);
        }
        Ok(Self {
            q,
            left,
            right,
            mode,
            a0,
            b0,
            a1,
            b1,
            in_a1,
            in_b1,
            pool,
            vals,
            dims,
            prefs,
            source_comparisons: ca + cb,
            started,
        })
    }

    pub fn is_guaranteed(&self, l: usize, r: usize) -> bool {
        let (a, b) = (self.in_a1[l], self.in_b1[r]);
        let mixed = self.mode == Mode::PaperFaithful
            || self.q.guarantee_regime() == GuaranteeRegime::EquiStrict;
        (a && b) || (mixed && (a || b))
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.vals[i * self.dims..(i + 1) * self.dims]
    }

    pub fn joined(&self, l: usize, r: usize) -> JoinedTuple {
        crate::join::aggregate_pair(self.q, &self.left.tuples()[l], &self.right.tuples()[r])
    }

    /// Emits the guaranteed pairs and returns them with the indices of the
    /// remaining pool members.
    pub fn emit_guaranteed<O: Observer>(&self, obs: &mut O) -> (Vec<JoinedTuple>, Vec<usize>) {
        let mut out = Vec::new();
        let mut rest = Vec::new();
        for (i, &(l, r)) in self.pool.iter().enumerate() {
            if self.is_guaranteed(l, r) {
                let t = self.joined(l, r);
                obs.on_emit(Phase::Guaranteed, &t);
                out.push(t);
            } else {
                rest.push(i);
            }
        }
        (out, rest)
    }

    pub fn report(&self, algorithm: Algorithm, delta: Option<usize>) -> RunReport {
        RunReport {
            algorithm: algorithm.name().to_string(),
            mode: self.mode,
            delta,
            left_size: self.left.len(),
            right_size: self.right.len(),
            left_skyline: self.a0.skyline.len(),
            right_skyline: self.b0.skyline.len(),
            join_pairs: self.pool.len() as u64,
            source_comparisons: self.source_comparisons,
            ..RunReport::default()
        }
    }

    /// Fills in the outcome counters and sorts the result canonically.
    pub fn finish(
        &self,
        mut report: RunReport,
        guaranteed: Vec<JoinedTuple>,
        verified: Vec<JoinedTuple>,
        candidates: usize,
        phase2_comparisons: u64,
    ) -> AsjqOutput {
        report.guaranteed = guaranteed.len();
        report.verified = verified.len();
        report.phase2_candidates = candidates;
        report.phase2_comparisons = phase2_comparisons;
        report.comparisons = phase2_comparisons;
        let mut tuples = guaranteed;
        tuples.extend(verified);
        tuples.sort_by_key(JoinedTuple::key);
        report.cardinality = tuples.len();
        report.wall_time_ms = self.started.elapsed().as_secs_f64() * 1e3;
        AsjqOutput { tuples, report }
    }
}

/// Oriented skyline vector of the pair at positions `(l, r)`.
#[inline]
pub(crate) fn oriented(
    q: &ValidatedQuery,
    prefs: &[Preference],
    left: &Relation,
    right: &Relation,
    l: usize,
    r: usize,
    buf: &mut Vec<f64>,
) {
    fill_vector(q, &left.tuples()[l].values, &right.tuples()[r].values, buf);
    for (v, p) in buf.iter_mut().zip(prefs) {
        *v = p.orient(*v);
    }
}
