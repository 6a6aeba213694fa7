//! Dominance, Skylines (brute force and Sort-Filter-Skyline) and full
//! Skycube materialization.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::relation::{Relation, RowId};
use crate::schema::CriterionSet;

/// The Skyline of one subspace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Skycuboid {
    pub subspace: CriterionSet,
    /// Sorted ascending.
    pub members: Vec<RowId>,
}

impl Skycuboid {
    pub fn new(subspace: CriterionSet, mut members: Vec<RowId>) -> Self {
        members.sort_unstable();
        members.dedup();
        Skycuboid { subspace, members }
    }
}

/// Skycuboids of every subspace, the empty one included.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Skycube {
    pub cuboids: BTreeMap<CriterionSet, Skycuboid>,
}

impl Skycube {
    pub fn get(&self, subspace: CriterionSet) -> Option<&Skycuboid> {
        self.cuboids.get(&subspace)
    }

    /// Sum of member counts over all skycuboids.
    pub fn stored_tuple_count(&self) -> usize {
        self.cuboids.values().map(|c| c.members.len()).sum()
    }
}

/// Limits guarding exponential enumeration.
#[derive(Debug, Clone, Copy)]
pub struct SkycubeLimits {
    pub max_criteria: usize,
}

impl Default for SkycubeLimits {
    fn default() -> Self {
        SkycubeLimits { max_criteria: 16 }
    }
}

/// Direction-adjusted key: lower is better on every criterion.
#[inline]
pub(crate) fn key(r: &Relation, pos: usize, c: usize) -> f64 {
    r.schema().criteria()[c].direction.sign() * r.value(pos, c)
}

#[inline]
fn dominates_at(r: &Relation, a: usize, b: usize, set: CriterionSet) -> bool {
    let mut strict = false;
    for c in set.iter() {
        let (ka, kb) = (key(r, a, c), key(r, b, c));
        if ka > kb {
            return false;
        }
        strict |= ka < kb;
    }
    strict
}

#[inline]
fn dominates_keys(a: &[f64], b: &[f64]) -> bool {
    let mut strict = false;
    for (ka, kb) in a.iter().zip(b) {
        if ka > kb {
            return false;
        }
        strict |= ka < kb;
    }
    strict
}

/// True iff `a` is at least as preferred as `b` on every criterion of
/// `subspace` and strictly more preferred on one.
pub fn dominates(r: &Relation, a: RowId, b: RowId, subspace: CriterionSet) -> Result<bool> {
    if subspace.is_empty() {
        return Err(Error::domain("dominance is undefined on the empty subspace"));
    }
    let (pa, pb) = (r.position(a)?, r.position(b)?);
    Ok(dominates_at(r, pa, pb, subspace))
}

/// The Skyline by its definition: rows no other row dominates. Quadratic;
/// kept as the reference every faster path is checked against.
pub fn skyline_bruteforce(r: &Relation, subspace: CriterionSet) -> Skycuboid {
    if subspace.is_empty() {
        return Skycuboid::new(subspace, Vec::new());
    }
    let members = (0..r.len())
        .filter(|&t| !(0..r.len()).any(|u| dominates_at(r, u, t, subspace)))
        .map(|t| r.ids()[t])
        .collect();
    Skycuboid::new(subspace, members)
}

/// Sum of direction-adjusted values of `t` over `subspace`.
pub fn sfs_score(r: &Relation, t: RowId, subspace: CriterionSet) -> Result<f64> {
    let pos = r.position(t)?;
    Ok(subspace.iter().map(|c| key(r, pos, c)).sum())
}

/// Sort-Filter-Skyline over all rows of `r`.
pub fn skyline_sfs(r: &Relation, subspace: CriterionSet) -> Skycuboid {
    let all: Vec<usize> = (0..r.len()).collect();
    let members = sfs_positions(r, subspace, &all)
        .into_iter()
        .map(|p| r.ids()[p])
        .collect();
    Skycuboid::new(subspace, members)
}

/// Sort-Filter-Skyline restricted to the rows at `candidates`; returns the
/// positions of the skyline rows.
///
/// Rows are sorted by score, then lexicographically by key, then by RowId;
/// a dominator always sorts before the rows it dominates, so a row is kept
/// iff nothing already kept dominates it.
pub(crate) fn sfs_positions(r: &Relation, subspace: CriterionSet, candidates: &[usize]) -> Vec<usize> {
    if subspace.is_empty() || candidates.is_empty() {
        return Vec::new();
    }
    let cols: Vec<usize> = subspace.iter().collect();
    let m = cols.len();
    let mut keys = Vec::with_capacity(candidates.len() * m);
    for &p in candidates {
        keys.extend(cols.iter().map(|&c| key(r, p, c)));
    }
    let scores: Vec<f64> = keys.chunks_exact(m).map(|k| k.iter().sum()).collect();
    let ids = r.ids();
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| {
        scores[a]
            .total_cmp(&scores[b])
            .then_with(|| lex_cmp(&keys[a * m..(a + 1) * m], &keys[b * m..(b + 1) * m]))
            .then_with(|| ids[candidates[a]].cmp(&ids[candidates[b]]))
    });

    let mut window: Vec<usize> = Vec::new();
    for i in order {
        let ki = &keys[i * m..(i + 1) * m];
        if !window
            .iter()
            .any(|&w| dominates_keys(&keys[w * m..(w + 1) * m], ki))
        {
            window.push(i);
        }
    }
    window.into_iter().map(|i| candidates[i]).collect()
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// Skylines of every subspace; the empty subspace maps to the empty set.
pub fn full_skycube(r: &Relation, limits: SkycubeLimits) -> Result<Skycube> {
    let d = r.schema().criterion_count();
    if d > limits.max_criteria {
        return Err(Error::Resource(format!(
            "{d} criteria exceed the Skycube enumeration cap of {}",
            limits.max_criteria
        )));
    }
    let subsets: Vec<CriterionSet> = CriterionSet::all_subsets(d).collect();
    let cuboids = subsets
        .par_iter()
        .map(|&s| (s, skyline_sfs(r, s)))
        .collect::<Vec<_>>()
        .into_iter()
        .collect();
    Ok(Skycube { cuboids })
}
