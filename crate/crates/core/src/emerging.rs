//! Emerging Skycubes: merging two materialized Skycubes into one relation
//! padded with ALL, abridging it, and finding the cube cells whose measures
//! reverse trend between the two sides.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::materialize::MaterializedSkycube;
use crate::relation::{Relation, RowId};
use crate::schema::{CriterionSet, Schema};

/// Relative tolerance when comparing averages for invariance.
const INVARIANCE_TOLERANCE: f64 = 1e-9;

/// Criteria whose average per dimension tuple is the same in both relations,
/// over every dimension tuple present in both. With no shared dimension
/// tuple nothing is invariant.
pub fn detect_invariant_measures(r1: &Relation, r2: &Relation) -> Result<CriterionSet> {
    if !r1.schema().is_unicompatible(r2.schema()) {
        return Err(Error::domain("relations do not share dimensions and criteria"));
    }
    let d = r1.schema().criterion_count();
    let (a1, a2) = (dims_means(r1), dims_means(r2));
    let mut matched = false;
    let mut set = r1.schema().all_criteria();
    for (key, m1) in &a1 {
        let Some(m2) = a2.get(key) else { continue };
        matched = true;
        for c in 0..d {
            let scale = m1[c].abs().max(m2[c].abs()).max(1.0);
            if (m1[c] - m2[c]).abs() > INVARIANCE_TOLERANCE * scale {
                set = set.without(c);
            }
        }
    }
    Ok(if matched { set } else { CriterionSet::EMPTY })
}

fn dims_means(r: &Relation) -> HashMap<&[String], Vec<f64>> {
    let d = r.schema().criterion_count();
    let mut sums: HashMap<&[String], (Vec<f64>, usize)> = HashMap::new();
    for pos in 0..r.len() {
        let e = sums.entry(r.dims_at(pos)).or_insert_with(|| (vec![0.0; d], 0));
        for (s, v) in e.0.iter_mut().zip(r.values_at(pos)) {
            *s += v;
        }
        e.1 += 1;
    }
    sums.into_iter()
        .map(|(k, (s, n))| (k, s.into_iter().map(|v| v / n as f64).collect()))
        .collect()
}

/// A value slot of the merged relation; `None` is ALL.
pub type Slot = Option<f64>;

#[derive(Debug, Clone, PartialEq)]
pub struct MergedRow {
    pub id: RowId,
    pub origin: CriterionSet,
    pub dims: Vec<String>,
    /// One slot per shared (invariant) criterion.
    pub shared: Vec<Slot>,
    /// One slot per varying criterion, for each side.
    pub side1: Vec<Slot>,
    pub side2: Vec<Slot>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MergedRelation {
    pub schema: Arc<Schema>,
    /// Criterion indices of the shared columns (empty once abridged).
    pub shared: Vec<usize>,
    /// Criterion indices of the varying measures.
    pub varying: Vec<usize>,
    pub rows: Vec<MergedRow>,
}

impl MergedRelation {
    /// Header: dimensions, shared criteria, side-1 labels, side-2 labels.
    pub fn columns(&self) -> Vec<String> {
        let s = &self.schema;
        let mut cols: Vec<String> = s.dimensions().to_vec();
        cols.extend(self.shared.iter().map(|&c| s.criteria()[c].name.clone()));
        cols.extend(self.varying.iter().map(|&c| s.side_labels(c).0));
        cols.extend(self.varying.iter().map(|&c| s.side_labels(c).1));
        cols
    }

    pub fn varying_set(&self) -> CriterionSet {
        CriterionSet::from_indices(self.varying.iter().copied())
    }

    /// Checks the structural invariants of a merged relation.
    pub fn validate(&self) -> Result<()> {
        let k = self.schema.dimensions().len();
        let mut keys = BTreeSet::new();
        for row in &self.rows {
            if row.dims.len() != k
                || row.shared.len() != self.shared.len()
                || row.side1.len() != self.varying.len()
                || row.side2.len() != self.varying.len()
            {
                return Err(Error::domain(format!("merged row {} has the wrong arity", row.id)));
            }
            let slots = self
                .shared
                .iter()
                .zip(&row.shared)
                .chain(self.varying.iter().zip(&row.side1))
                .chain(self.varying.iter().zip(&row.side2));
            let mut any = false;
            for (&c, slot) in slots {
                if slot.is_some() {
                    any = true;
                    if !row.origin.contains(c) {
                        return Err(Error::domain(format!(
                            "merged row {} holds a value outside its origin subspace",
                            row.id
                        )));
                    }
                }
            }
            if !any {
                return Err(Error::domain(format!("merged row {} has only ALL measures", row.id)));
            }
            if !keys.insert((row.origin, row.dims.clone())) {
                return Err(Error::domain(format!(
                    "merged row {} repeats an origin subspace and dimension tuple",
                    row.id
                )));
            }
        }
        Ok(())
    }
}

/// Merges the member tuples of two materializations into one relation keyed
/// by (origin subspace, dimension tuple). `r1` and `r2` must contain at least
/// the stored rows of `m1` and `m2`.
pub fn merge_materializations(
    m1: &MaterializedSkycube,
    m2: &MaterializedSkycube,
    r1: &Relation,
    r2: &Relation,
) -> Result<MergedRelation> {
    let invariant = detect_invariant_measures(r1, r2)?;
    let schema = r1.schema_arc().clone();
    let d = schema.criterion_count();
    let shared: Vec<usize> = invariant.iter().collect();
    let varying: Vec<usize> = (0..d).filter(|&c| !invariant.contains(c)).collect();

    struct Pending {
        row: MergedRow,
        first_id: RowId,
        filled: [bool; 2],
    }
    let mut pending: HashMap<(CriterionSet, Vec<String>), Pending> = HashMap::new();
    for (side, (m, r)) in [(m1, r1), (m2, r2)].into_iter().enumerate() {
        for concept in m.concepts.values() {
            let s = concept.subspace;
            for id in concept.classes.iter().flatten() {
                let pos = r.position(*id)?;
                let dims = r.dims_at(pos).to_vec();
                let entry = pending.entry((s, dims.clone())).or_insert_with(|| Pending {
                    row: MergedRow {
                        id: RowId(0),
                        origin: s,
                        dims,
                        shared: vec![None; shared.len()],
                        side1: vec![None; varying.len()],
                        side2: vec![None; varying.len()],
                    },
                    first_id: *id,
                    filled: [false; 2],
                });
                if std::mem::replace(&mut entry.filled[side], true) {
                    return Err(Error::domain(format!(
                        "side {} holds two members with the same dimension tuple in one skycuboid",
                        side + 1
                    )));
                }
                entry.first_id = entry.first_id.min(*id);
                for (slot, &c) in entry.row.shared.iter_mut().zip(&shared) {
                    if s.contains(c) {
                        slot.get_or_insert(r.value(pos, c));
                    }
                }
                let target = if side == 0 { &mut entry.row.side1 } else { &mut entry.row.side2 };
                for (slot, &c) in target.iter_mut().zip(&varying) {
                    if s.contains(c) {
                        *slot = Some(r.value(pos, c));
                    }
                }
            }
        }
    }
    let mut rows: Vec<Pending> = pending.into_values().collect();
    rows.retain(|p| {
        p.row
            .shared
            .iter()
            .chain(&p.row.side1)
            .chain(&p.row.side2)
            .any(Option::is_some)
    });
    rows.sort_by(|a, b| {
        a.row
            .origin
            .presentation_cmp(&b.row.origin)
            .then(a.first_id.cmp(&b.first_id))
            .then_with(|| a.row.dims.cmp(&b.row.dims))
    });
    let rows = rows
        .into_iter()
        .enumerate()
        .map(|(i, p)| MergedRow {
            id: RowId(i as u32 + 1),
            ..p.row
        })
        .collect();
    Ok(MergedRelation {
        schema,
        shared,
        varying,
        rows,
    })
}

/// Drops the shared columns and every row whose origin subspace misses a
/// varying criterion. RowIds are renumbered from 1.
pub fn abridge(mr: &MergedRelation) -> MergedRelation {
    let need = mr.varying_set();
    let rows = mr
        .rows
        .iter()
        .filter(|r| need.is_subset(r.origin))
        .enumerate()
        .map(|(i, r)| MergedRow {
            id: RowId(i as u32 + 1),
            shared: Vec::new(),
            ..r.clone()
        })
        .collect();
    MergedRelation {
        schema: mr.schema.clone(),
        shared: Vec::new(),
        varying: mr.varying.clone(),
        rows,
    }
}

/// A cube cell: one value or ALL (`None`) per dimension. Ordered with ALL
/// before any value.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell(pub Vec<Option<String>>);

impl Cell {
    pub fn apex(k: usize) -> Self {
        Cell(vec![None; k])
    }

    /// Parses comma-separated values with `ALL` as the wildcard.
    pub fn parse(text: &str) -> Self {
        Cell(
            text.split(',')
                .map(|v| match v.trim() {
                    "ALL" => None,
                    other => Some(other.to_string()),
                })
                .collect(),
        )
    }

    /// True when `self` is at least as specific as `general` everywhere.
    pub fn specializes(&self, general: &Cell) -> bool {
        self.0
            .iter()
            .zip(&general.0)
            .all(|(s, g)| g.is_none() || g == s)
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", v.as_deref().unwrap_or("ALL"))?;
        }
        Ok(())
    }
}

pub fn covers(cell: &Cell, row: &MergedRow) -> bool {
    cell.0
        .iter()
        .zip(&row.dims)
        .all(|(c, v)| c.as_ref().is_none_or(|c| c == v))
}

fn covered<'a>(mr: &'a MergedRelation, cell: &'a Cell) -> impl Iterator<Item = &'a MergedRow> + 'a {
    mr.rows.iter().filter(move |r| covers(cell, r))
}

/// Which side of the merged relation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    First,
    Second,
}

/// Mean of one side's measure over the covered rows, ALL counting as 0.
/// `measure` indexes [`MergedRelation::varying`].
pub fn aggregate(mr: &MergedRelation, cell: &Cell, measure: usize, side: Side) -> Result<f64> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for row in covered(mr, cell) {
        let slots = match side {
            Side::First => &row.side1,
            Side::Second => &row.side2,
        };
        sum += slots[measure].unwrap_or(0.0);
        n += 1;
    }
    if n == 0 {
        return Err(Error::domain(format!("cell ({cell}) covers no row")));
    }
    Ok(sum / n as f64)
}

/// Direction of an emergence between side 1 and side 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Trend {
    /// High on side 1, low on side 2.
    Decline,
    /// Low on side 1, high on side 2.
    Rise,
}

impl Trend {
    pub fn as_str(self) -> &'static str {
        match self {
            Trend::Decline => "decline",
            Trend::Rise => "rise",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rate {
    Zero,
    Finite(f64),
    Infinite,
}

impl Rate {
    pub fn is_infinite(self) -> bool {
        matches!(self, Rate::Infinite)
    }

    pub fn value(self) -> f64 {
        match self {
            Rate::Zero => 0.0,
            Rate::Finite(v) => v,
            Rate::Infinite => f64::INFINITY,
        }
    }
}

impl fmt::Display for Rate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rate::Infinite => write!(f, "inf"),
            other => write!(f, "{}", other.value()),
        }
    }
}

/// Emergence rate oriented along `trend`: a1/a2 for a decline, a2/a1 for a
/// rise.
pub fn emergence_rate(a1: f64, a2: f64, trend: Trend) -> Result<Rate> {
    if a1 < 0.0 || a2 < 0.0 || a1.is_nan() || a2.is_nan() {
        return Err(Error::domain("aggregates must be non-negative"));
    }
    let (num, den) = match trend {
        Trend::Decline => (a1, a2),
        Trend::Rise => (a2, a1),
    };
    Ok(if num == 0.0 && den == 0.0 {
        Rate::Zero
    } else if den == 0.0 {
        Rate::Infinite
    } else {
        Rate::Finite(num / den)
    })
}

/// Per-measure emergence test with thresholds `(t1, t2)`; a one-sided zero
/// aggregate emerges toward the zero side whatever the thresholds.
pub fn is_measured_emerging(a1: f64, a2: f64, t1: f64, t2: f64) -> Option<Trend> {
    match (a1 == 0.0, a2 == 0.0) {
        (true, true) => None,
        (false, true) => Some(Trend::Decline),
        (true, false) => Some(Trend::Rise),
        (false, false) if a1 >= t1 && a2 < t2 => Some(Trend::Decline),
        (false, false) if a1 < t1 && a2 >= t2 => Some(Trend::Rise),
        _ => None,
    }
}

/// `(MinThreshold1, MinThreshold2)` per measure, keyed by criterion name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ThresholdSpec {
    pub thresholds: BTreeMap<String, (f64, f64)>,
}

impl ThresholdSpec {
    pub fn new(thresholds: impl IntoIterator<Item = (String, (f64, f64))>) -> Result<Self> {
        let thresholds: BTreeMap<_, _> = thresholds.into_iter().collect();
        for (name, &(t1, t2)) in &thresholds {
            if !(t1.is_finite() && t2.is_finite() && t1 >= 0.0 && t2 >= 0.0) {
                return Err(Error::config(format!(
                    "thresholds of `{name}` must be finite and non-negative"
                )));
            }
        }
        Ok(ThresholdSpec { thresholds })
    }

    /// Parses repeated `Name=value` pairs for each side.
    pub fn from_pairs(t1: &[String], t2: &[String]) -> Result<Self> {
        let parse = |items: &[String]| -> Result<BTreeMap<String, f64>> {
            items
                .iter()
                .map(|item| {
                    let (name, value) = item.split_once('=').ok_or_else(|| {
                        Error::Usage(format!("threshold `{item}` is not of the form Name=value"))
                    })?;
                    let value = value.trim().parse::<f64>().map_err(|_| {
                        Error::Usage(format!("threshold `{item}` has a non-numeric value"))
                    })?;
                    Ok((name.trim().to_string(), value))
                })
                .collect()
        };
        let (first, second) = (parse(t1)?, parse(t2)?);
        if first.keys().ne(second.keys()) {
            return Err(Error::config("--t1 and --t2 must name the same measures"));
        }
        Self::new(first.into_iter().map(|(k, v)| {
            let v2 = second[&k];
            (k, (v, v2))
        }))
    }

    fn get(&self, schema: &Schema, criterion: usize) -> Result<(f64, f64)> {
        let name = &schema.criteria()[criterion].name;
        self.thresholds
            .get(name)
            .copied()
            .ok_or_else(|| Error::config(format!("no threshold given for measure `{name}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasureOutcome {
    /// Criterion index in the schema.
    pub criterion: usize,
    pub a1: f64,
    pub a2: f64,
    pub rate: Rate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmergingCell {
    pub cell: Cell,
    pub trend: Trend,
    pub measures: Vec<MeasureOutcome>,
}

impl EmergingCell {
    /// Cells with an infinite rate on some measure form the infinite block.
    pub fn is_infinite(&self) -> bool {
        self.measures.iter().any(|m| m.rate.is_infinite())
    }
}

/// Every cell generalizing at least one row.
fn candidate_cells<'a>(rows: impl Iterator<Item = &'a MergedRow>, k: usize) -> BTreeSet<Cell> {
    let mut cells = BTreeSet::new();
    for row in rows {
        for mask in 0u64..(1u64 << k) {
            cells.insert(Cell(
                row.dims
                    .iter()
                    .enumerate()
                    .map(|(i, v)| (mask >> i & 1 == 1).then(|| v.clone()))
                    .collect(),
            ));
        }
    }
    cells
}

fn varying_position(mr: &MergedRelation, criterion: usize) -> Result<usize> {
    mr.varying.iter().position(|&c| c == criterion).ok_or_else(|| {
        Error::config(format!(
            "`{}` is not a varying measure of the merged relation",
            mr.schema.criteria()[criterion].name
        ))
    })
}

fn evaluate(
    mr: &MergedRelation,
    cell: &Cell,
    measures: &[(usize, (f64, f64))],
) -> Result<Option<EmergingCell>> {
    let mut trend = None;
    let mut outcomes = Vec::with_capacity(measures.len());
    for &(criterion, (t1, t2)) in measures {
        let m = varying_position(mr, criterion)?;
        let a1 = aggregate(mr, cell, m, Side::First)?;
        let a2 = aggregate(mr, cell, m, Side::Second)?;
        let Some(t) = is_measured_emerging(a1, a2, t1, t2) else {
            return Ok(None);
        };
        if *trend.get_or_insert(t) != t {
            return Ok(None);
        }
        outcomes.push(MeasureOutcome {
            criterion,
            a1,
            a2,
            rate: emergence_rate(a1, a2, t)?,
        });
    }
    Ok(trend.map(|trend| EmergingCell {
        cell: cell.clone(),
        trend,
        measures: outcomes,
    }))
}

fn emerging_over(
    mr: &MergedRelation,
    thresholds: &ThresholdSpec,
    measures: &[usize],
) -> Result<Vec<EmergingCell>> {
    let with_t = measures
        .iter()
        .map(|&c| Ok((c, thresholds.get(&mr.schema, c)?)))
        .collect::<Result<Vec<_>>>()?;
    let cells: Vec<Cell> = candidate_cells(mr.rows.iter(), mr.schema.dimensions().len())
        .into_iter()
        .collect();
    let found = cells
        .par_iter()
        .map(|c| evaluate(mr, c, &with_t))
        .collect::<Result<Vec<_>>>()?;
    Ok(found.into_iter().flatten().collect())
}

/// Cells of the cube over `mr` that emerge on every varying measure in one
/// direction, sorted by cell.
pub fn emerging_skycube(mr: &MergedRelation, thresholds: &ThresholdSpec) -> Result<Vec<EmergingCell>> {
    emerging_over(mr, thresholds, &mr.varying)
}

/// Emerging cells computed separately inside each origin-subspace block of
/// `mr`, on the chosen measures only. Blocks come in presentation order.
pub fn emerging_by_block(
    mr: &MergedRelation,
    thresholds: &ThresholdSpec,
    measures: &[usize],
) -> Result<Vec<(CriterionSet, Vec<EmergingCell>)>> {
    let mut blocks: Vec<CriterionSet> = mr.rows.iter().map(|r| r.origin).collect();
    blocks.sort_by(CriterionSet::presentation_cmp);
    blocks.dedup();
    blocks
        .into_iter()
        .map(|b| {
            let part = MergedRelation {
                rows: mr.rows.iter().filter(|r| r.origin == b).cloned().collect(),
                ..mr.clone()
            };
            Ok((b, emerging_over(&part, thresholds, measures)?))
        })
        .collect()
}

/// The most general cells: those specializing no other cell of the set.
pub fn l_border(cells: &[EmergingCell]) -> Vec<EmergingCell> {
    cells
        .iter()
        .filter(|c| {
            !cells
                .iter()
                .any(|g| g.cell != c.cell && c.cell.specializes(&g.cell))
        })
        .cloned()
        .collect()
}

/// The most specific cell covering the same rows as `cell`.
pub fn cube_closure(mr: &MergedRelation, cell: &Cell) -> Result<Cell> {
    let mut rows = covered(mr, cell);
    let first = rows
        .next()
        .ok_or_else(|| Error::domain(format!("cell ({cell}) covers no row")))?;
    let mut out: Vec<Option<String>> = first.dims.iter().cloned().map(Some).collect();
    for row in rows {
        for (slot, v) in out.iter_mut().zip(&row.dims) {
            if slot.as_ref().is_some_and(|s| s != v) {
                *slot = None;
            }
        }
    }
    Ok(Cell(out))
}

/// Closures of `cells`, deduplicated, with aggregates recomputed.
pub fn closed_emerging(mr: &MergedRelation, cells: &[EmergingCell]) -> Result<Vec<EmergingCell>> {
    let mut out: BTreeMap<Cell, EmergingCell> = BTreeMap::new();
    for c in cells {
        let closed = cube_closure(mr, &c.cell)?;
        if out.contains_key(&closed) {
            continue;
        }
        let measures = c
            .measures
            .iter()
            .map(|m| {
                let pos = varying_position(mr, m.criterion)?;
                let a1 = aggregate(mr, &closed, pos, Side::First)?;
                let a2 = aggregate(mr, &closed, pos, Side::Second)?;
                Ok(MeasureOutcome {
                    criterion: m.criterion,
                    a1,
                    a2,
                    rate: emergence_rate(a1, a2, c.trend)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        out.insert(
            closed.clone(),
            EmergingCell {
                cell: closed,
                trend: c.trend,
                measures,
            },
        );
    }
    Ok(out.into_values().collect())
}

/// Closed cells together with the L border.
pub fn closed_emerging_l(mr: &MergedRelation, cells: &[EmergingCell]) -> Result<Vec<EmergingCell>> {
    let mut out: BTreeMap<Cell, EmergingCell> = closed_emerging(mr, cells)?
        .into_iter()
        .map(|c| (c.cell.clone(), c))
        .collect();
    for c in l_border(cells) {
        out.entry(c.cell.clone()).or_insert(c);
    }
    Ok(out.into_values().collect())
}

/// Orders emerging cells finite block first, then by cell.
pub fn block_cmp(a: &EmergingCell, b: &EmergingCell) -> Ordering {
    a.is_infinite()
        .cmp(&b.is_infinite())
        .then_with(|| a.cell.cmp(&b.cell))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relation::Row;

    fn schema() -> Arc<Schema> {
        Arc::new(Schema::from_flags(&["X".into(), "Y".into()], &["M".into()], None, &[]).unwrap())
    }

    fn merged(rows: &[(&str, &str, Slot, Slot)]) -> MergedRelation {
        MergedRelation {
            schema: schema(),
            shared: vec![],
            varying: vec![0],
            rows: rows
                .iter()
                .enumerate()
                .map(|(i, (x, y, a, b))| MergedRow {
                    id: RowId(i as u32 + 1),
                    origin: CriterionSet::single(0),
                    dims: vec![x.to_string(), y.to_string()],
                    shared: vec![],
                    side1: vec![*a],
                    side2: vec![*b],
                })
                .collect(),
        }
    }

    #[test]
    fn rates_and_overrides() {
        assert_eq!(emergence_rate(0.0, 0.0, Trend::Rise).unwrap(), Rate::Zero);
        assert_eq!(emergence_rate(0.0, 5.0, Trend::Rise).unwrap(), Rate::Infinite);
        assert_eq!(emergence_rate(45.0, 15.0, Trend::Decline).unwrap(), Rate::Finite(3.0));
        assert!(emergence_rate(-1.0, 1.0, Trend::Rise).is_err());
        assert_eq!(is_measured_emerging(50.0, 30.0, 45.0, 45.0), Some(Trend::Decline));
        assert_eq!(is_measured_emerging(0.0, 20.0, 35.0, 35.0), Some(Trend::Rise));
        assert_eq!(is_measured_emerging(0.0, 0.0, 0.0, 0.0), None);
        assert_eq!(is_measured_emerging(40.0, 45.0, 45.0, 45.0), Some(Trend::Rise));
        assert_eq!(is_measured_emerging(50.0, 50.0, 45.0, 45.0), None);
    }

    #[test]
    fn aggregate_counts_all_as_zero() {
        let mr = merged(&[("a", "p", Some(40.0), None), ("a", "q", Some(50.0), Some(30.0))]);
        let cell = Cell::parse("a,ALL");
        assert_eq!(aggregate(&mr, &cell, 0, Side::First).unwrap(), 45.0);
        assert_eq!(aggregate(&mr, &cell, 0, Side::Second).unwrap(), 15.0);
        assert!(aggregate(&mr, &Cell::parse("b,ALL"), 0, Side::First).is_err());
    }

    #[test]
    fn closure_keeps_the_cover() {
        let mr = merged(&[("a", "p", Some(1.0), None), ("a", "q", Some(2.0), None), ("b", "q", None, Some(1.0))]);
        assert_eq!(cube_closure(&mr, &Cell::parse("ALL,p")).unwrap(), Cell::parse("a,p"));
        assert_eq!(cube_closure(&mr, &Cell::parse("a,ALL")).unwrap(), Cell::parse("a,ALL"));
        assert_eq!(cube_closure(&mr, &Cell::parse("b,q")).unwrap(), Cell::parse("b,q"));
        assert!(cube_closure(&mr, &Cell::parse("c,ALL")).is_err());
    }

    #[test]
    fn border_keeps_the_most_general() {
        let mk = |t: &str| EmergingCell {
            cell: Cell::parse(t),
            trend: Trend::Rise,
            measures: vec![],
        };
        let cells = vec![mk("ALL,p"), mk("a,p")];
        assert_eq!(l_border(&cells), vec![mk("ALL,p")]);
        assert_eq!(l_border(&cells[1..]), vec![mk("a,p")]);
    }

    #[test]
    fn thresholds_need_both_sides() {
        let t = ThresholdSpec::from_pairs(&["M=3".into()], &["M=4".into()]).unwrap();
        assert_eq!(t.thresholds["M"], (3.0, 4.0));
        assert!(ThresholdSpec::from_pairs(&["M=3".into()], &[]).is_err());
        assert!(ThresholdSpec::from_pairs(&["M=x".into()], &["M=1".into()]).is_err());
        assert!(ThresholdSpec::from_pairs(&["M=-1".into()], &["M=1".into()]).is_err());
        let mr = merged(&[("a", "p", Some(1.0), None)]);
        assert!(matches!(emerging_skycube(&mr, &ThresholdSpec::default()), Err(Error::Config(_))));
    }

    #[test]
    fn invariants_need_a_shared_dimension_tuple() {
        let s = schema();
        let row = |x: &str, v: f64| Row {
            id: RowId(1),
            dims: vec![x.into(), "p".into()],
            values: vec![v],
            split: None,
        };
        let r1 = Relation::new(s.clone(), vec![row("a", 1.0)]).unwrap();
        let r2 = Relation::new(s.clone(), vec![row("b", 1.0)]).unwrap();
        assert_eq!(detect_invariant_measures(&r1, &r2).unwrap(), CriterionSet::EMPTY);
        assert_eq!(detect_invariant_measures(&r1, &r1).unwrap(), CriterionSet::single(0));
        let r3 = Relation::new(s, vec![row("a", 2.0)]).unwrap();
        assert_eq!(detect_invariant_measures(&r1, &r3).unwrap(), CriterionSet::EMPTY);
    }
}
