//! Agree sets, the Galois connection between criterion sets and row
//! partitions, its closure operators, and the Agree concept lattice.

use std::collections::{BTreeSet, HashMap};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::partition::Partition;
use crate::relation::{Relation, RowId};
use crate::schema::CriterionSet;
use crate::skyline::SkycubeLimits;

/// Labels rows by their projection on `set`: `labels[pos]` is the class of
/// the row at `pos`, classes numbered by first occurrence.
pub(crate) fn class_labels(r: &Relation, set: CriterionSet) -> (Vec<u32>, usize) {
    let mut labels = vec![0u32; r.len()];
    let mut count = usize::from(!r.is_empty());
    for c in set.iter() {
        (labels, count) = refine_labels(r, &labels, c);
    }
    (labels, count)
}

/// Product of the labelling with the partition on one criterion.
fn refine_labels(r: &Relation, labels: &[u32], c: usize) -> (Vec<u32>, usize) {
    let mut seen: HashMap<(u32, u64), u32> = HashMap::with_capacity(labels.len());
    let out = labels
        .iter()
        .enumerate()
        .map(|(pos, &l)| {
            let next = seen.len() as u32;
            *seen.entry((l, r.value(pos, c).to_bits())).or_insert(next)
        })
        .collect();
    (out, seen.len())
}

/// `g(C)`: the partition of row ids by equal projection on `set`.
pub fn g_map(r: &Relation, set: CriterionSet) -> Partition {
    let (labels, count) = class_labels(r, set);
    Partition::from_labels(r.ids(), &labels, count)
}

/// `Agr(T)`: criteria on which every row of `rows` takes one value.
pub fn agr(r: &Relation, rows: &[RowId]) -> Result<CriterionSet> {
    let (&first, rest) = rows
        .split_first()
        .ok_or_else(|| Error::domain("agree set of an empty row set"))?;
    let p0 = r.position(first)?;
    let mut set = r.schema().all_criteria();
    for &id in rest {
        let p = r.position(id)?;
        for c in set.iter() {
            if r.value(p, c) != r.value(p0, c) {
                set = set.without(c);
            }
        }
    }
    Ok(set)
}

/// `Agree(r)`: agree sets of every pair of distinct rows.
pub fn agree_sets(r: &Relation) -> Result<BTreeSet<CriterionSet>> {
    if r.len() < 2 {
        return Err(Error::domain("agree sets need at least two rows"));
    }
    let all = r.schema().all_criteria();
    let mut out = BTreeSet::new();
    for a in 0..r.len() {
        for b in a + 1..r.len() {
            out.insert(CriterionSet::from_indices(
                all.iter().filter(|&c| r.value(a, c) == r.value(b, c)),
            ));
        }
    }
    Ok(out)
}

/// Closes a family of criterion sets under pairwise intersection and adds
/// `top`.
pub fn intersection_closure(
    family: impl IntoIterator<Item = CriterionSet>,
    top: CriterionSet,
) -> BTreeSet<CriterionSet> {
    let mut closed: BTreeSet<CriterionSet> = family.into_iter().collect();
    closed.insert(top);
    loop {
        let snapshot: Vec<CriterionSet> = closed.iter().copied().collect();
        let before = closed.len();
        for (i, &a) in snapshot.iter().enumerate() {
            for &b in &snapshot[i + 1..] {
                closed.insert(a.intersection(b));
            }
        }
        if closed.len() == before {
            return closed;
        }
    }
}

fn check_ground(r: &Relation, p: &Partition) -> Result<()> {
    let ground = p.ground_set();
    if ground.len() != r.len() || !r.ids().iter().all(|id| ground.contains(id)) {
        return Err(Error::domain("partition does not cover exactly the relation's row ids"));
    }
    Ok(())
}

/// `f(π)`: criteria constant inside every class of `p`.
pub fn f_map(r: &Relation, p: &Partition) -> Result<CriterionSet> {
    check_ground(r, p)?;
    p.classes()
        .iter()
        .try_fold(r.schema().all_criteria(), |acc, class| {
            Ok(acc.intersection(agr(r, class)?))
        })
}

/// `h(C) = f(g(C))`.
pub fn closure_h(r: &Relation, set: CriterionSet) -> CriterionSet {
    f_map(r, &g_map(r, set)).expect("g produces a partition of the relation")
}

/// `h'(π) = g(f(π))`.
pub fn closure_hprime(r: &Relation, p: &Partition) -> Result<Partition> {
    Ok(g_map(r, f_map(r, p)?))
}

/// Disagree condition: no two distinct rows share their projection on `set`.
pub fn dac(r: &Relation, set: CriterionSet) -> bool {
    class_labels(r, set).1 == r.len()
}

/// Number of classes of `g(C)` for every `C` (indexed by bit mask).
pub(crate) fn subset_class_counts(r: &Relation, d: usize) -> Vec<u32> {
    let mut counts = vec![0u32; 1usize << d];
    let n = r.len();
    let root = vec![0u32; n];
    let root_count = usize::from(n > 0);
    counts[0] = root_count as u32;
    let branches: Vec<Vec<(usize, u32)>> = (0..d)
        .into_par_iter()
        .map(|c| {
            let mut local = Vec::new();
            let (labels, count) = refine_labels(r, &root, c);
            visit(r, d, &labels, count, 1 << c, c + 1, &mut local);
            local
        })
        .collect();
    for (mask, count) in branches.into_iter().flatten() {
        counts[mask] = count;
    }
    counts
}

fn visit(
    r: &Relation,
    d: usize,
    labels: &[u32],
    count: usize,
    mask: usize,
    next: usize,
    out: &mut Vec<(usize, u32)>,
) {
    out.push((mask, count as u32));
    if count == r.len() {
        // Already all singletons; every superset keeps this count.
        for extra in 0..(1usize << (d - next)) {
            if extra != 0 {
                out.push((mask | (extra << next), count as u32));
            }
        }
        return;
    }
    for c in next..d {
        let (child, child_count) = refine_labels(r, labels, c);
        visit(r, d, &child, child_count, mask | (1 << c), c + 1, out);
    }
}

/// Intensions of all Agree concepts (the closed criterion sets), sorted by
/// bit mask. `C` is closed iff adding any other criterion splits a class.
pub fn closed_intensions(r: &Relation, limits: SkycubeLimits) -> Result<Vec<CriterionSet>> {
    let d = r.schema().criterion_count();
    if d > limits.max_criteria {
        return Err(Error::Resource(format!(
            "{d} criteria exceed the lattice enumeration cap of {}",
            limits.max_criteria
        )));
    }
    let counts = subset_class_counts(r, d);
    Ok(CriterionSet::all_subsets(d)
        .filter(|s| {
            (0..d)
                .filter(|&c| !s.contains(c))
                .all(|c| counts[s.with(c).bits() as usize] != counts[s.bits() as usize])
        })
        .collect())
}

/// Hasse cover pairs `(child, parent)` of a family ordered by inclusion.
pub fn hasse_edges(family: &[CriterionSet]) -> Vec<(CriterionSet, CriterionSet)> {
    let mut edges = Vec::new();
    for &lo in family {
        for &hi in family {
            if lo != hi
                && lo.is_subset(hi)
                && !family
                    .iter()
                    .any(|&mid| mid != lo && mid != hi && lo.is_subset(mid) && mid.is_subset(hi))
            {
                edges.push((lo, hi));
            }
        }
    }
    edges.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
    edges
}

/// A fixed point `(C, π)` of the Galois connection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgreeConcept {
    pub intension: CriterionSet,
    pub extension: Partition,
}

impl AgreeConcept {
    /// Builds the concept of `intension`, failing unless it is closed.
    pub fn new(r: &Relation, intension: CriterionSet) -> Result<Self> {
        let extension = g_map(r, intension);
        if f_map(r, &extension)? != intension {
            return Err(Error::domain(format!(
                "{} is not a closed criterion set",
                r.schema().format_set(intension)
            )));
        }
        Ok(AgreeConcept {
            intension,
            extension,
        })
    }

    /// Builds `(intension, extension)` after checking both Galois equalities.
    pub fn from_pair(r: &Relation, intension: CriterionSet, extension: Partition) -> Result<Self> {
        if g_map(r, intension) != extension || f_map(r, &extension)? != intension {
            return Err(Error::domain("pair is not a fixed point of the Galois connection"));
        }
        Ok(AgreeConcept {
            intension,
            extension,
        })
    }
}

/// The Agree concept lattice with its Hasse diagram.
#[derive(Debug, Clone)]
pub struct AgreeLattice {
    /// Sorted by intension bit mask.
    pub concepts: Vec<AgreeConcept>,
    /// Cover pairs `(child, parent)` with `child ⊂ parent`.
    pub edges: Vec<(CriterionSet, CriterionSet)>,
}

impl AgreeLattice {
    pub fn get(&self, intension: CriterionSet) -> Option<&AgreeConcept> {
        self.concepts.iter().find(|c| c.intension == intension)
    }
}

pub fn build_agree_lattice(r: &Relation, limits: SkycubeLimits) -> Result<AgreeLattice> {
    if r.is_empty() {
        return Err(Error::domain("the Agree concept lattice needs at least one row"));
    }
    let closed = closed_intensions(r, limits)?;
    let concepts = closed
        .par_iter()
        .map(|&c| AgreeConcept {
            intension: c,
            extension: g_map(r, c),
        })
        .collect();
    Ok(AgreeLattice {
        edges: hasse_edges(&closed),
        concepts,
    })
}

/// Infimum: intensions intersect, extensions sum then close under `h'`.
pub fn meet(r: &Relation, a: &AgreeConcept, b: &AgreeConcept) -> Result<AgreeConcept> {
    let extension = closure_hprime(r, &a.extension.sum(&b.extension)?)?;
    AgreeConcept::from_pair(r, a.intension.intersection(b.intension), extension)
}

/// Supremum: intensions unite then close under `h`, extensions multiply.
pub fn join(r: &Relation, a: &AgreeConcept, b: &AgreeConcept) -> Result<AgreeConcept> {
    let extension = a.extension.product(&b.extension)?;
    AgreeConcept::from_pair(r, closure_h(r, a.intension.union(b.intension)), extension)
}
