//! Attribute roles, queries, tuples and the three dominance relations.
//!
//! Every column of a relation plays exactly one role:
//!
//! * **local** columns carry a MIN/MAX preference and are compared within
//!   their own relation;
//! * **aggregate** columns are combined slot-wise with the matching column of
//!   the other relation by a monotone function, and the combined value carries
//!   the preference;
//! * **join** columns only take part in the join predicate. For pruning they
//!   are turned into a derived preference (see [`derive_join_preference`]) so
//!   that a dominating tuple joins with everything the dominated one joins with.
//!
//! Three dominance relations are built on top of those roles:
//! [`prune_dominates`] (locals + aggregates + derived join preferences),
//! [`weak_local_dominates`] (locals only, ties admitted) and
//! [`joined_dominates`] (ordinary skyline dominance on joined tuples).

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{AsjqError, Result, ValidationIssue};

/// Identifier of a source row. Unique within its relation.
pub type RowId = u64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Preference {
    Min,
    Max,
    /// Only produced for join attributes by [`derive_join_preference`].
    Equal,
}

impl Preference {
    /// Compares `a` against `b`; `Less` means `a` is preferred.
    ///
    /// Returns `None` when an EQUAL preference sees two distinct values.
    #[inline]
    pub fn compare(self, a: f64, b: f64) -> Option<Ordering> {
        match self {
            Preference::Min => a.partial_cmp(&b),
            Preference::Max => b.partial_cmp(&a),
            Preference::Equal => (a == b).then_some(Ordering::Equal),
        }
    }

    /// Maps a value onto an axis where smaller is always better.
    #[inline]
    pub fn orient(self, v: f64) -> f64 {
        match self {
            Preference::Max => -v,
            _ => v,
        }
    }
}

impl fmt::Display for Preference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Preference::Min => "MIN",
            Preference::Max => "MAX",
            Preference::Equal => "EQUAL",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum JoinOp {
    Eq,
    Lt,
    Le,
    Gt,
    Ge,
}

impl JoinOp {
    pub const ALL: [JoinOp; 5] = [JoinOp::Eq, JoinOp::Lt, JoinOp::Le, JoinOp::Gt, JoinOp::Ge];

    /// Evaluates `left op right`.
    #[inline]
    pub fn holds(self, left: f64, right: f64) -> bool {
        match self {
            JoinOp::Eq => left == right,
            JoinOp::Lt => left < right,
            JoinOp::Le => left <= right,
            JoinOp::Gt => left > right,
            JoinOp::Ge => left >= right,
        }
    }

    /// The operator obtained by swapping the operands.
    pub fn flipped(self) -> JoinOp {
        match self {
            JoinOp::Eq => JoinOp::Eq,
            JoinOp::Lt => JoinOp::Gt,
            JoinOp::Le => JoinOp::Ge,
            JoinOp::Gt => JoinOp::Lt,
            JoinOp::Ge => JoinOp::Le,
        }
    }

    pub fn keyword(self) -> &'static str {
        match self {
            JoinOp::Eq => "EQ",
            JoinOp::Lt => "LT",
            JoinOp::Le => "LE",
            JoinOp::Gt => "GT",
            JoinOp::Ge => "GE",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Left => "left",
            Side::Right => "right",
        })
    }
}

/// Converts one join condition into the preference a dominating tuple on
/// `side` must satisfy on its join column.
///
/// For `A.a < B.b`, a left tuple with a smaller-or-equal `a` joins with every
/// right tuple the other one joins with, so the left side prefers MIN and the
/// right side MAX.
pub fn derive_join_preference(op: JoinOp, side: Side) -> Preference {
    match (op, side) {
        (JoinOp::Eq, _) => Preference::Equal,
        (JoinOp::Lt | JoinOp::Le, Side::Left) => Preference::Min,
        (JoinOp::Lt | JoinOp::Le, Side::Right) => Preference::Max,
        (JoinOp::Gt | JoinOp::Ge, Side::Left) => Preference::Max,
        (JoinOp::Gt | JoinOp::Ge, Side::Right) => Preference::Min,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AggregateFn {
    Sum,
    Avg,
    Min,
    Max,
}

impl AggregateFn {
    #[inline]
    pub fn apply(self, a: f64, b: f64) -> f64 {
        match self {
            AggregateFn::Sum => a + b,
            // Halving the sum keeps AVG exactly as monotone as SUM.
            AggregateFn::Avg => 0.5 * (a + b),
            AggregateFn::Min => a.min(b),
            AggregateFn::Max => a.max(b),
        }
    }

    /// Strict functions turn a strictly better input into a strictly better
    /// output when the other input is fixed. MIN and MAX are only weakly
    /// monotone.
    pub fn is_strict(self) -> bool {
        matches!(self, AggregateFn::Sum | AggregateFn::Avg)
    }

    pub fn keyword(self) -> &'static str {
        match self {
            AggregateFn::Sum => "SUM",
            AggregateFn::Avg => "AVG",
            AggregateFn::Min => "MIN",
            AggregateFn::Max => "MAX",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ColumnRole {
    Join { slot: usize },
    Local { pref: Preference },
    Aggregate { slot: usize, pref: Preference },
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Column {
    pub name: String,
    pub role: ColumnRole,
}

impl Column {
    pub fn join(name: impl Into<String>, slot: usize) -> Self {
        Self { name: name.into(), role: ColumnRole::Join { slot } }
    }

    pub fn local(name: impl Into<String>, pref: Preference) -> Self {
        Self { name: name.into(), role: ColumnRole::Local { pref } }
    }

    pub fn aggregate(name: impl Into<String>, slot: usize, pref: Preference) -> Self {
        Self { name: name.into(), role: ColumnRole::Aggregate { slot, pref } }
    }
}

/// The role-tagged columns of one relation, in storage order.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RelationSchema {
    pub name: String,
    /// Where the relation is loaded from, when it came from a query file.
    pub source: Option<String>,
    pub columns: Vec<Column>,
}

impl RelationSchema {
    pub fn new(name: impl Into<String>, columns: Vec<Column>) -> Self {
        Self { name: name.into(), source: None, columns }
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn local_count(&self) -> usize {
        self.columns
            .iter()
            .filter(|c| matches!(c.role, ColumnRole::Local { .. }))
            .count()
    }

    pub(crate) fn local_columns(&self) -> impl Iterator<Item = (usize, Preference)> + '_ {
        self.columns.iter().enumerate().filter_map(|(i, c)| match c.role {
            ColumnRole::Local { pref } => Some((i, pref)),
            _ => None,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct JoinCondition {
    pub slot: usize,
    pub op: JoinOp,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AggregateSpec {
    pub name: String,
    pub slot: usize,
    pub func: AggregateFn,
    pub pref: Preference,
}

/// A complete aggregate skyline join query over two relations.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QuerySpec {
    pub left: RelationSchema,
    pub right: RelationSchema,
    pub joins: Vec<JoinCondition>,
    pub aggregates: Vec<AggregateSpec>,
}

impl QuerySpec {
    pub fn schema(&self, side: Side) -> &RelationSchema {
        match side {
            Side::Left => &self.left,
            Side::Right => &self.right,
        }
    }
}

/// Whether every join condition is an equality.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum JoinRegime {
    Equi,
    Mixed,
}

/// Which guaranteed-inclusion shortcuts are provably sound for a query.
///
/// `EquiStrict` requires equality-only joins and strictly monotone
/// aggregates; everything else is `Restricted`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GuaranteeRegime {
    EquiStrict,
    Restricted,
}

/// Column positions of one side, grouped by role.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SideLayout {
    /// Join column per slot.
    pub join_cols: Vec<usize>,
    /// Derived preference per join slot.
    pub join_prefs: Vec<Preference>,
    pub local_cols: Vec<usize>,
    pub local_prefs: Vec<Preference>,
    /// Aggregate column per slot.
    pub agg_cols: Vec<usize>,
}

/// A query that passed [`validate_query`], with its role layout resolved.
#[derive(Clone, Debug)]
pub struct ValidatedQuery {
    spec: QuerySpec,
    left: SideLayout,
    right: SideLayout,
    join_ops: Vec<JoinOp>,
    agg_fns: Vec<AggregateFn>,
    agg_prefs: Vec<Preference>,
    join_regime: JoinRegime,
    guarantee: GuaranteeRegime,
}

impl ValidatedQuery {
    pub fn spec(&self) -> &QuerySpec {
        &self.spec
    }

    pub fn layout(&self, side: Side) -> &SideLayout {
        match side {
            Side::Left => &self.left,
            Side::Right => &self.right,
        }
    }

    /// Join operator per slot, oriented as `left op right`.
    pub fn join_ops(&self) -> &[JoinOp] {
        &self.join_ops
    }

    pub fn aggregate_fns(&self) -> &[AggregateFn] {
        &self.agg_fns
    }

    pub fn aggregate_prefs(&self) -> &[Preference] {
        &self.agg_prefs
    }

    pub fn join_regime(&self) -> JoinRegime {
        self.join_regime
    }

    pub fn guarantee_regime(&self) -> GuaranteeRegime {
        self.guarantee
    }

    pub fn has_weak_aggregates(&self) -> bool {
        self.agg_fns.iter().any(|f| !f.is_strict())
    }

    /// Length of a joined skyline vector: `m1 + m2 + n`.
    pub fn vector_len(&self) -> usize {
        self.left.local_cols.len() + self.right.local_cols.len() + self.agg_fns.len()
    }

    /// Preference of every position of the joined skyline vector.
    pub fn vector_prefs(&self) -> Vec<Preference> {
        self.left
            .local_prefs
            .iter()
            .chain(&self.right.local_prefs)
            .chain(&self.agg_prefs)
            .copied()
            .collect()
    }

    /// Whether `u` (left) and `v` (right) satisfy every join condition.
    pub fn joins(&self, u: &[f64], v: &[f64]) -> bool {
        self.join_ops
            .iter()
            .zip(self.left.join_cols.iter().zip(&self.right.join_cols))
            .all(|(op, (&lc, &rc))| op.holds(u[lc], v[rc]))
    }

    /// Checks that a relation was built for this query's schema on `side`.
    pub fn check_relation(&self, side: Side, relation: &Relation) -> Result<()> {
        let expected = self.spec.schema(side);
        if relation.schema.columns != expected.columns {
            return Err(AsjqError::SchemaMismatch(format!(
                "relation `{}` does not match the {side} schema `{}` of the query",
                relation.schema.name, expected.name
            )));
        }
        Ok(())
    }
}

/// Checks the structural invariants of a query and classifies its regime.
pub fn validate_query(spec: QuerySpec) -> Result<ValidatedQuery> {
    let mut issues = Vec::new();
    if spec.aggregates.is_empty() {
        issues.push(ValidationIssue::NoAggregates);
    }
    for agg in &spec.aggregates {
        if agg.pref == Preference::Equal {
            issues.push(ValidationIssue::EqualAggregatePreference { name: agg.name.clone() });
        }
    }
    let j = spec.joins.len();
    let n = spec.aggregates.len();
    check_slots(&mut issues, Side::Right, "join condition", spec.joins.iter().map(|c| c.slot), j);
    check_slots(&mut issues, Side::Right, "aggregate", spec.aggregates.iter().map(|a| a.slot), n);

    let ops = slot_ordered(spec.joins.iter().map(|c| (c.slot, c.op)), j);
    let aggs = slot_ordered(spec.aggregates.iter().map(|a| (a.slot, (a.func, a.pref))), n);

    let left = layout_side(&mut issues, Side::Left, &spec.left, &ops, &aggs);
    let right = layout_side(&mut issues, Side::Right, &spec.right, &ops, &aggs);
    if let (Some(l), Some(r)) = (&left, &right) {
        if l.join_cols.len() != r.join_cols.len() {
            issues.push(ValidationIssue::SlotCountMismatch {
                what: "join",
                left: l.join_cols.len(),
                right: r.join_cols.len(),
            });
        }
        if l.agg_cols.len() != r.agg_cols.len() {
            issues.push(ValidationIssue::SlotCountMismatch {
                what: "aggregate",
                left: l.agg_cols.len(),
                right: r.agg_cols.len(),
            });
        }
    }
    if !issues.is_empty() {
        return Err(AsjqError::InvalidQuery(issues));
    }

    let join_ops: Vec<JoinOp> = ops.into_iter().map(Option::unwrap).collect();
    let (agg_fns, agg_prefs): (Vec<_>, Vec<_>) = aggs.into_iter().map(Option::unwrap).unzip();
    let join_regime = if join_ops.iter().all(|&op| op == JoinOp::Eq) {
        JoinRegime::Equi
    } else {
        JoinRegime::Mixed
    };
    let guarantee = if join_regime == JoinRegime::Equi && agg_fns.iter().all(|f| f.is_strict()) {
        GuaranteeRegime::EquiStrict
    } else {
        GuaranteeRegime::Restricted
    };
    Ok(ValidatedQuery {
        spec,
        left: left.unwrap(),
        right: right.unwrap(),
        join_ops,
        agg_fns,
        agg_prefs,
        join_regime,
        guarantee,
    })
}

fn check_slots(
    issues: &mut Vec<ValidationIssue>,
    side: Side,
    what: &'static str,
    slots: impl Iterator<Item = usize>,
    count: usize,
) {
    let mut seen = BTreeSet::new();
    for slot in slots {
        if slot >= count {
            issues.push(ValidationIssue::DanglingSlot { side, what, slot });
        } else if !seen.insert(slot) {
            issues.push(ValidationIssue::DuplicateSlot { side, what, slot });
        }
    }
}

fn slot_ordered<T: Copy>(items: impl Iterator<Item = (usize, T)>, count: usize) -> Vec<Option<T>> {
    let mut out = vec![None; count];
    for (slot, item) in items {
        if slot < count {
            out[slot] = Some(item);
        }
    }
    out
}

fn layout_side(
    issues: &mut Vec<ValidationIssue>,
    side: Side,
    schema: &RelationSchema,
    ops: &[Option<JoinOp>],
    aggs: &[Option<(AggregateFn, Preference)>],
) -> Option<SideLayout> {
    let before = issues.len();
    let mut names = HashSet::new();
    let mut join_cols = vec![None; ops.len()];
    let mut agg_cols = vec![None; aggs.len()];
    let mut local_cols = Vec::new();
    let mut local_prefs = Vec::new();
    for (i, col) in schema.columns.iter().enumerate() {
        if !names.insert(col.name.as_str()) {
            issues.push(ValidationIssue::DuplicateColumn { side, column: col.name.clone() });
        }
        match col.role {
            ColumnRole::Join { slot } => {
                place(issues, side, "join", &mut join_cols, slot, i);
            }
            ColumnRole::Local { pref } => {
                if pref == Preference::Equal {
                    issues.push(ValidationIssue::EqualPreferenceOnNonJoin {
                        side,
                        column: col.name.clone(),
                    });
                }
                local_cols.push(i);
                local_prefs.push(pref);
            }
            ColumnRole::Aggregate { slot, pref } => {
                if pref == Preference::Equal {
                    issues.push(ValidationIssue::EqualPreferenceOnNonJoin {
                        side,
                        column: col.name.clone(),
                    });
                } else if let Some(Some((_, agg_pref))) = aggs.get(slot) {
                    if *agg_pref != pref {
                        issues.push(ValidationIssue::AggregatePreferenceMismatch {
                            side,
                            column: col.name.clone(),
                        });
                    }
                }
                place(issues, side, "aggregate", &mut agg_cols, slot, i);
            }
        }
    }
    for (slot, col) in join_cols.iter().enumerate() {
        if col.is_none() {
            issues.push(ValidationIssue::DanglingSlot { side, what: "join", slot });
        }
    }
    for (slot, col) in agg_cols.iter().enumerate() {
        if col.is_none() {
            issues.push(ValidationIssue::DanglingSlot { side, what: "aggregate", slot });
        }
    }
    if issues.len() != before || ops.iter().any(Option::is_none) {
        return None;
    }
    Some(SideLayout {
        join_prefs: ops.iter().map(|op| derive_join_preference(op.unwrap(), side)).collect(),
        join_cols: join_cols.into_iter().map(Option::unwrap).collect(),
        local_cols,
        local_prefs,
        agg_cols: agg_cols.into_iter().map(Option::unwrap).collect(),
    })
}

fn place(
    issues: &mut Vec<ValidationIssue>,
    side: Side,
    what: &'static str,
    cols: &mut [Option<usize>],
    slot: usize,
    col: usize,
) {
    match cols.get_mut(slot) {
        None => issues.push(ValidationIssue::DanglingSlot { side, what, slot }),
        Some(Some(_)) => issues.push(ValidationIssue::DuplicateSlot { side, what, slot }),
        Some(entry) => *entry = Some(col),
    }
}

/// One row of a base relation. `values` follows the schema's column order.
#[derive(Clone, Debug, PartialEq)]
pub struct SourceTuple {
    pub id: RowId,
    pub values: Vec<f64>,
}

impl SourceTuple {
    pub fn new(id: RowId, values: Vec<f64>) -> Self {
        Self { id, values }
    }
}

/// An immutable base relation. Tuples are kept in ascending id order, so a
/// tuple's position doubles as its canonical rank.
#[derive(Clone, Debug)]
pub struct Relation {
    pub schema: RelationSchema,
    tuples: Vec<SourceTuple>,
}

impl Relation {
    pub fn new(schema: RelationSchema, mut tuples: Vec<SourceTuple>) -> Result<Self> {
        let width = schema.columns.len();
        for t in &tuples {
            if t.values.len() != width {
                return Err(AsjqError::InvalidRelation(format!(
                    "row {} of `{}` has {} values, schema has {width} columns",
                    t.id,
                    schema.name,
                    t.values.len()
                )));
            }
            if let Some(v) = t.values.iter().find(|v| !v.is_finite()) {
                return Err(AsjqError::InvalidRelation(format!(
                    "row {} of `{}` holds non-finite value {v}",
                    t.id, schema.name
                )));
            }
        }
        tuples.sort_by_key(|t| t.id);
        if let Some(w) = tuples.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(AsjqError::InvalidRelation(format!(
                "duplicate row id {} in `{}`",
                w[0].id, schema.name
            )));
        }
        Ok(Self { schema, tuples })
    }

    pub fn tuples(&self) -> &[SourceTuple] {
        &self.tuples
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    /// Row id of the tuple at `idx`.
    pub fn id(&self, idx: usize) -> RowId {
        self.tuples[idx].id
    }

    /// Position of the tuple with row id `id`.
    pub fn position(&self, id: RowId) -> Option<usize> {
        self.tuples.binary_search_by_key(&id, |t| t.id).ok()
    }

    /// Row ids of the tuples at `positions`.
    pub fn ids(&self, positions: &[usize]) -> Vec<RowId> {
        positions.iter().map(|&i| self.id(i)).collect()
    }
}

/// A join-valid pair with its skyline vector: left locals, right locals,
/// then one aggregated value per aggregate slot.
#[derive(Clone, Debug, PartialEq)]
pub struct JoinedTuple {
    pub left: RowId,
    pub right: RowId,
    pub values: Vec<f64>,
}

impl JoinedTuple {
    pub fn key(&self) -> (RowId, RowId) {
        (self.left, self.right)
    }
}

fn check_width(q: &ValidatedQuery, side: Side, t: &SourceTuple) -> Result<()> {
    let width = q.spec().schema(side).columns.len();
    if t.values.len() != width {
        return Err(AsjqError::SchemaMismatch(format!(
            "tuple {} has {} values, {side} schema has {width} columns",
            t.id,
            t.values.len()
        )));
    }
    Ok(())
}

/// Join-aware dominance used to discard source tuples before the join.
///
/// `u` must be preferred-or-equal to `u2` on every local and aggregate column,
/// satisfy the derived preference of every join column, and be strictly better
/// on a local column or on an aggregate column whose function is strict.
/// Join columns never supply strictness, and neither do MIN/MAX aggregate
/// columns: `min(3, 1) == min(5, 1)`, so such an advantage can vanish after
/// aggregation.
pub fn prune_dominates(
    q: &ValidatedQuery,
    side: Side,
    u: &SourceTuple,
    u2: &SourceTuple,
) -> Result<bool> {
    check_width(q, side, u)?;
    check_width(q, side, u2)?;
    let layout = q.layout(side);
    let mut strict = false;
    for (&c, &pref) in layout.local_cols.iter().zip(&layout.local_prefs) {
        match pref.compare(u.values[c], u2.values[c]) {
            Some(Ordering::Less) => strict = true,
            Some(Ordering::Equal) => {}
            _ => return Ok(false),
        }
    }
    for (slot, &c) in layout.agg_cols.iter().enumerate() {
        match q.agg_prefs[slot].compare(u.values[c], u2.values[c]) {
            Some(Ordering::Less) => strict |= q.agg_fns[slot].is_strict(),
            Some(Ordering::Equal) => {}
            _ => return Ok(false),
        }
    }
    for (&c, &pref) in layout.join_cols.iter().zip(&layout.join_prefs) {
        match pref.compare(u.values[c], u2.values[c]) {
            Some(Ordering::Less | Ordering::Equal) => {}
            _ => return Ok(false),
        }
    }
    Ok(strict)
}

/// Locals-only dominance that also counts exact ties.
///
/// True when `u` and `u2` are distinct rows and `u` is preferred-or-equal on
/// every local column. Two rows with identical locals dominate each other.
pub fn weak_local_dominates(
    schema: &RelationSchema,
    u: &SourceTuple,
    u2: &SourceTuple,
) -> Result<bool> {
    let width = schema.columns.len();
    if u.values.len() != width || u2.values.len() != width {
        return Err(AsjqError::SchemaMismatch(format!(
            "tuples {} and {} do not match the {width} columns of `{}`",
            u.id, u2.id, schema.name
        )));
    }
    if u.id == u2.id {
        return Ok(false);
    }
    Ok(schema.local_columns().all(|(c, pref)| {
        matches!(pref.compare(u.values[c], u2.values[c]), Some(Ordering::Less | Ordering::Equal))
    }))
}

/// Ordinary skyline dominance over the joined skyline vector.
pub fn joined_dominates(q: &ValidatedQuery, r: &JoinedTuple, r2: &JoinedTuple) -> Result<bool> {
    let len = q.vector_len();
    if r.values.len() != len || r2.values.len() != len {
        return Err(AsjqError::SchemaMismatch(format!(
            "joined vectors of length {} and {} against expected {len}",
            r.values.len(),
            r2.values.len()
        )));
    }
    let mut strict = false;
    for (pref, (&a, &b)) in q.vector_prefs().into_iter().zip(r.values.iter().zip(&r2.values)) {
        match pref.compare(a, b) {
            Some(Ordering::Less) => strict = true,
            Some(Ordering::Equal) => {}
            _ => return Ok(false),
        }
    }
    Ok(strict)
}
