//! Skyline concepts: the Π-S operator, the materialized Skycube built from the
//! Agree concept lattice, and query evaluation over it.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::{class_labels, closed_intensions, g_map, hasse_edges};
use crate::partition::Partition;
use crate::relation::{Relation, RowId};
use crate::schema::CriterionSet;
use crate::skyline::{sfs_positions, SkycubeLimits, Skycuboid};

/// Keeps the classes whose representative (smallest RowId) is in the Skyline
/// of the representatives on `subspace`. Classes are returned canonical.
fn pi_s_classes(r: &Relation, subspace: CriterionSet, classes: &[Vec<RowId>]) -> Result<Vec<Vec<RowId>>> {
    let reps = classes
        .iter()
        .map(|c| r.position(c[0]))
        .collect::<Result<Vec<_>>>()?;
    let mut kept = sfs_positions(r, subspace, &reps);
    kept.sort_unstable();
    let by_pos: HashMap<usize, usize> = reps.iter().enumerate().map(|(k, &p)| (p, k)).collect();
    let mut out: Vec<Vec<RowId>> = kept.iter().map(|p| classes[by_pos[p]].clone()).collect();
    out.sort_unstable_by_key(|c| c[0]);
    Ok(out)
}

/// `Π-S_C(π)`, defined only when `p` is `g(C)`.
pub fn pi_s(r: &Relation, subspace: CriterionSet, p: &Partition) -> Result<Vec<Vec<RowId>>> {
    if g_map(r, subspace) != *p {
        return Err(Error::domain("Π-S needs the partition induced by its own subspace"));
    }
    pi_s_classes(r, subspace, p.classes())
}

/// `(C, Π-S_C(g(C)))` for a closed `C`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkylineConcept {
    pub subspace: CriterionSet,
    /// Canonical: sorted inside, ordered by smallest member.
    pub classes: Vec<Vec<RowId>>,
}

impl SkylineConcept {
    pub fn members(&self) -> Vec<RowId> {
        let mut m: Vec<RowId> = self.classes.iter().flatten().copied().collect();
        m.sort_unstable();
        m
    }

    pub fn tuple_count(&self) -> usize {
        self.classes.iter().map(Vec::len).sum()
    }
}

/// The Skyline concepts of a relation plus the index of closed subspaces.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterializedSkycube {
    pub criterion_count: usize,
    /// Every closed subspace of the relation, sorted by bit mask.
    pub closed: Vec<CriterionSet>,
    /// One concept per closed subspace; the one at `∅` stores no class.
    pub concepts: BTreeMap<CriterionSet, SkylineConcept>,
}

impl MaterializedSkycube {
    /// `h(C)`: the smallest closed subspace containing `C`.
    pub fn closure(&self, subspace: CriterionSet) -> CriterionSet {
        self.closed
            .iter()
            .filter(|c| subspace.is_subset(**c))
            .fold(CriterionSet::full(self.criterion_count), |acc, &c| acc.intersection(c))
    }

    pub fn concept(&self, subspace: CriterionSet) -> Option<&SkylineConcept> {
        self.concepts.get(&subspace)
    }

    /// Tuples stored over all concepts, counted with multiplicity.
    pub fn stored_tuple_count(&self) -> usize {
        self.concepts.values().map(SkylineConcept::tuple_count).sum()
    }

    /// Cover pairs `(child, parent)` of the closed subspaces.
    pub fn edges(&self) -> Vec<(CriterionSet, CriterionSet)> {
        hasse_edges(&self.closed)
    }

    /// Every RowId stored in some concept, ascending.
    pub fn stored_rows(&self) -> Vec<RowId> {
        let mut ids: Vec<RowId> = self
            .concepts
            .values()
            .flat_map(|c| c.classes.iter().flatten().copied())
            .collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }
}

/// Builds one Skyline concept per closed subspace of `r`.
pub fn build_skyline_lattice(r: &Relation, limits: SkycubeLimits) -> Result<MaterializedSkycube> {
    let closed = closed_intensions(r, limits)?;
    let concepts = closed
        .par_iter()
        .map(|&c| {
            let (labels, count) = class_labels(r, c);
            let p = Partition::from_labels(r.ids(), &labels, count);
            let classes = pi_s_classes(r, c, p.classes())?;
            Ok((c, SkylineConcept { subspace: c, classes }))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .collect();
    Ok(MaterializedSkycube {
        criterion_count: r.schema().criterion_count(),
        closed,
        concepts,
    })
}

/// `S_C(r)` answered from the materialization.
///
/// A stored subspace returns its classes directly. Otherwise the Skyline on
/// `C` is computed over the members of the concept at `h(C)`, and each winner
/// is expanded to every member sharing its projection on `C`.
///
/// `r` must hold at least the stored rows (the full relation or the member
/// rows kept in a materialization document).
pub fn query_skyline(m: &MaterializedSkycube, r: &Relation, subspace: CriterionSet) -> Result<Skycuboid> {
    if subspace.bits() >> m.criterion_count != 0 {
        return Err(Error::Usage(format!(
            "subspace {subspace} names criteria beyond the {} configured",
            m.criterion_count
        )));
    }
    if subspace.is_empty() {
        return Ok(Skycuboid::new(subspace, Vec::new()));
    }
    if let Some(concept) = m.concept(subspace) {
        return Ok(Skycuboid::new(subspace, concept.members()));
    }
    let closure = m.closure(subspace);
    let concept = m
        .concept(closure)
        .ok_or_else(|| Error::domain("materialization lacks the concept of a closed subspace"))?;
    let candidates = concept
        .classes
        .iter()
        .flatten()
        .map(|&id| r.position(id))
        .collect::<Result<Vec<_>>>()?;
    let winners = sfs_positions(r, subspace, &candidates);
    let projection = |p: usize| -> Vec<u64> { subspace.iter().map(|c| r.value(p, c).to_bits()).collect() };
    let mut groups: HashMap<Vec<u64>, Vec<RowId>> = HashMap::new();
    for &p in &candidates {
        groups.entry(projection(p)).or_default().push(r.ids()[p]);
    }
    let mut members = Vec::new();
    for p in winners {
        if let Some(group) = groups.remove(&projection(p)) {
            members.extend(group);
        }
    }
    Ok(Skycuboid::new(subspace, members))
}
