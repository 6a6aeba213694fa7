//! Partitions of row identifiers: refinement order, product and sum.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use crate::error::{Error, Result};
use crate::relation::RowId;

/// A set of disjoint, non-empty classes of row identifiers.
///
/// Always canonical: members ascending inside a class, classes ordered by
/// their smallest member.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Partition {
    classes: Vec<Vec<RowId>>,
}

impl Partition {
    /// Validates and canonicalizes `classes`.
    pub fn new(classes: Vec<Vec<RowId>>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for class in &classes {
            if class.is_empty() {
                return Err(Error::domain("partition classes must be non-empty"));
            }
            for &id in class {
                if !seen.insert(id) {
                    return Err(Error::domain(format!("row {id} belongs to two classes")));
                }
            }
        }
        Ok(Self::canonical(classes))
    }

    pub(crate) fn canonical(mut classes: Vec<Vec<RowId>>) -> Self {
        for class in &mut classes {
            class.sort_unstable();
        }
        classes.sort_unstable_by_key(|c| c[0]);
        Partition { classes }
    }

    /// Groups `ids[i]` by `labels[i]`.
    pub(crate) fn from_labels(ids: &[RowId], labels: &[u32], class_count: usize) -> Self {
        let mut classes = vec![Vec::new(); class_count];
        for (&id, &l) in ids.iter().zip(labels) {
            classes[l as usize].push(id);
        }
        classes.retain(|c| !c.is_empty());
        Self::canonical(classes)
    }

    /// The partition with one class per identifier.
    pub fn singletons(ids: impl IntoIterator<Item = RowId>) -> Self {
        Self::canonical(ids.into_iter().map(|i| vec![i]).collect())
    }

    pub fn classes(&self) -> &[Vec<RowId>] {
        &self.classes
    }

    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    pub fn ground_set(&self) -> BTreeSet<RowId> {
        self.classes.iter().flatten().copied().collect()
    }

    pub fn element_count(&self) -> usize {
        self.classes.iter().map(Vec::len).sum()
    }

    fn class_of(&self) -> HashMap<RowId, usize> {
        self.classes
            .iter()
            .enumerate()
            .flat_map(|(k, c)| c.iter().map(move |&id| (id, k)))
            .collect()
    }

    fn check_same_ground(&self, other: &Partition) -> Result<()> {
        if self.ground_set() != other.ground_set() {
            return Err(Error::domain("partitions are over different ground sets"));
        }
        Ok(())
    }

    /// `self ⊑ other`: every class of `self` lies inside a class of `other`.
    pub fn refines(&self, other: &Partition) -> Result<bool> {
        self.check_same_ground(other)?;
        let owner = other.class_of();
        Ok(self
            .classes
            .iter()
            .all(|c| c.iter().all(|id| owner[id] == owner[&c[0]])))
    }

    /// Product `self • other`: all non-empty pairwise intersections.
    pub fn product(&self, other: &Partition) -> Result<Partition> {
        self.check_same_ground(other)?;
        let owner = other.class_of();
        let mut out = Vec::new();
        for class in &self.classes {
            let mut groups: HashMap<usize, Vec<RowId>> = HashMap::new();
            for id in class {
                groups.entry(owner[id]).or_default().push(*id);
            }
            out.extend(groups.into_values());
        }
        Ok(Self::canonical(out))
    }

    /// Sum `self + other`: the finest partition both refine, i.e. the
    /// connected components of the overlap graph of the two class families.
    pub fn sum(&self, other: &Partition) -> Result<Partition> {
        self.check_same_ground(other)?;
        let index: HashMap<RowId, usize> = self
            .ground_set()
            .into_iter()
            .enumerate()
            .map(|(k, id)| (id, k))
            .collect();
        let mut uf = UnionFind::new(index.len());
        for class in self.classes.iter().chain(&other.classes) {
            for id in &class[1..] {
                uf.union(index[&class[0]], index[id]);
            }
        }
        let mut groups: HashMap<usize, Vec<RowId>> = HashMap::new();
        for (&id, &k) in &index {
            groups.entry(uf.find(k)).or_default().push(id);
        }
        Ok(Self::canonical(groups.into_values().collect()))
    }
}

impl fmt::Display for Partition {
    /// Classes separated by `|`, members by `,`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, class) in self.classes.iter().enumerate() {
            if k > 0 {
                write!(f, "|")?;
            }
            for (j, id) in class.iter().enumerate() {
                if j > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{id}")?;
            }
        }
        write!(f, "}}")
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}
