//! Relation schemas and criterion subspaces.
//!
//! A schema names the categorical dimensions, the preference-directed
//! criteria, the optional decision property used to split a relation in two
//! classes, and the measure pairs used when two Skycubes are merged.

use std::collections::HashSet;
use std::fmt;

use serde::Deserialize;

use crate::error::{Error, Result};

/// Hard ceiling on the number of criteria, fixed by the width of [`CriterionSet`].
pub const MAX_CRITERIA: usize = 32;

/// Text used for the empty criterion set.
pub const EMPTY_SET_TEXT: &str = "∅";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Minimize,
    Maximize,
}

impl Direction {
    /// Multiplier turning a raw value into a lower-is-better key.
    #[inline]
    pub fn sign(self) -> f64 {
        match self {
            Direction::Minimize => 1.0,
            Direction::Maximize => -1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Minimize => "min",
            Direction::Maximize => "max",
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        match text.trim().to_ascii_lowercase().as_str() {
            "min" | "minimize" | "minimise" => Ok(Direction::Minimize),
            "max" | "maximize" | "maximise" => Ok(Direction::Maximize),
            other => Err(Error::config(format!("unknown preference direction `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Criterion {
    pub name: String,
    /// One-character initial used in the textual form of criterion sets.
    pub symbol: char,
    pub direction: Direction,
}

/// A criterion observed in both relations, with the column labels used for
/// each side in a merged relation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeasurePair {
    pub name: String,
    pub side1: String,
    pub side2: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitProperty {
    pub column: String,
    pub first: String,
    pub second: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schema {
    dimensions: Vec<String>,
    criteria: Vec<Criterion>,
    measure_pairs: Vec<MeasurePair>,
    split: Option<SplitProperty>,
}

impl Schema {
    pub fn new(
        dimensions: Vec<String>,
        criteria: Vec<Criterion>,
        measure_pairs: Vec<MeasurePair>,
        split: Option<SplitProperty>,
    ) -> Result<Self> {
        let schema = Schema {
            dimensions,
            criteria,
            measure_pairs,
            split,
        };
        schema.validate()?;
        Ok(schema)
    }

    fn validate(&self) -> Result<()> {
        if self.criteria.is_empty() {
            return Err(Error::config("schema declares no criteria"));
        }
        if self.criteria.len() > MAX_CRITERIA {
            return Err(Error::config(format!(
                "schema declares {} criteria, at most {MAX_CRITERIA} are supported",
                self.criteria.len()
            )));
        }
        let mut names = HashSet::new();
        let attributes = self
            .dimensions
            .iter()
            .chain(self.criteria.iter().map(|c| &c.name))
            .chain(self.split.iter().map(|s| &s.column));
        for name in attributes {
            if name.is_empty() {
                return Err(Error::config("attribute names must not be empty"));
            }
            if !names.insert(name.as_str()) {
                return Err(Error::config(format!("attribute `{name}` is declared twice")));
            }
        }
        let mut symbols = HashSet::new();
        for c in &self.criteria {
            if c.symbol.is_whitespace() || c.symbol.to_string() == EMPTY_SET_TEXT {
                return Err(Error::config(format!("criterion `{}` has an invalid symbol", c.name)));
            }
            if !symbols.insert(c.symbol) {
                return Err(Error::config(format!(
                    "symbol `{}` is used by two criteria; set `symbol` explicitly",
                    c.symbol
                )));
            }
        }
        let mut paired = HashSet::new();
        for m in &self.measure_pairs {
            if self.criterion_index(&m.name).is_none() {
                return Err(Error::config(format!(
                    "measure pair `{}` does not name a declared criterion",
                    m.name
                )));
            }
            if !paired.insert(m.name.as_str()) {
                return Err(Error::config(format!("measure `{}` is paired twice", m.name)));
            }
        }
        Ok(())
    }

    /// Parses the declarative TOML form of a schema.
    pub fn from_toml(text: &str) -> Result<Self> {
        let raw: RawSchema =
            toml::from_str(text).map_err(|e| Error::config(format!("invalid schema file: {e}")))?;
        raw.into_schema()
    }

    /// Builds a schema from command-line style specifications.
    ///
    /// `criteria` entries are `name[:direction[:symbol]]`, `split` is
    /// `column:first:second` and `measures` entries are `name:side1:side2`.
    pub fn from_flags(
        dimensions: &[String],
        criteria: &[String],
        split: Option<&str>,
        measures: &[String],
    ) -> Result<Self> {
        let criteria = criteria
            .iter()
            .map(|spec| {
                let mut parts = spec.split(':');
                let name = parts.next().unwrap_or_default().trim().to_string();
                let direction = parts.next().map(Direction::parse).transpose()?;
                let symbol = parts.next().map(str::to_string);
                RawCriterion {
                    name,
                    symbol,
                    direction: direction.map(|d| d.as_str().to_string()),
                }
                .into_criterion()
            })
            .collect::<Result<Vec<_>>>()?;
        let split = split
            .map(|spec| {
                let parts: Vec<&str> = spec.split(':').collect();
                match parts.as_slice() {
                    [column, first, second] => Ok(SplitProperty {
                        column: column.trim().to_string(),
                        first: first.trim().to_string(),
                        second: second.trim().to_string(),
                    }),
                    _ => Err(Error::config(format!(
                        "split property `{spec}` must be column:first:second"
                    ))),
                }
            })
            .transpose()?;
        let measures = measures
            .iter()
            .map(|spec| {
                let parts: Vec<&str> = spec.split(':').collect();
                match parts.as_slice() {
                    [name, side1, side2] => Ok(MeasurePair {
                        name: name.trim().to_string(),
                        side1: side1.trim().to_string(),
                        side2: side2.trim().to_string(),
                    }),
                    _ => Err(Error::config(format!(
                        "measure pair `{spec}` must be name:side1:side2"
                    ))),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Schema::new(
            dimensions.iter().map(|d| d.trim().to_string()).collect(),
            criteria,
            measures,
            split,
        )
    }

    pub fn dimensions(&self) -> &[String] {
        &self.dimensions
    }

    pub fn criteria(&self) -> &[Criterion] {
        &self.criteria
    }

    pub fn criterion_count(&self) -> usize {
        self.criteria.len()
    }

    pub fn measure_pairs(&self) -> &[MeasurePair] {
        &self.measure_pairs
    }

    pub fn split(&self) -> Option<&SplitProperty> {
        self.split.as_ref()
    }

    pub fn criterion_index(&self, name: &str) -> Option<usize> {
        self.criteria.iter().position(|c| c.name == name)
    }

    /// Side labels for criterion `index`, falling back to `<symbol>1`/`<symbol>2`.
    pub fn side_labels(&self, index: usize) -> (String, String) {
        let c = &self.criteria[index];
        match self.measure_pairs.iter().find(|m| m.name == c.name) {
            Some(m) => (m.side1.clone(), m.side2.clone()),
            None => (format!("{}1", c.symbol), format!("{}2", c.symbol)),
        }
    }

    /// The set of every declared criterion.
    pub fn all_criteria(&self) -> CriterionSet {
        CriterionSet::full(self.criteria.len())
    }

    /// Two relations are unicompatible when they share dimensions and criteria.
    pub fn is_unicompatible(&self, other: &Schema) -> bool {
        self.dimensions == other.dimensions && self.criteria == other.criteria
    }

    /// Canonical textual form: symbols concatenated in schema order.
    pub fn format_set(&self, set: CriterionSet) -> String {
        if set.is_empty() {
            return EMPTY_SET_TEXT.to_string();
        }
        set.iter().map(|i| self.criteria[i].symbol).collect()
    }

    /// Parses a set written as concatenated symbols, in any order.
    pub fn parse_set(&self, text: &str) -> Result<CriterionSet> {
        let text = text.trim();
        if text.is_empty() || text == EMPTY_SET_TEXT {
            return Ok(CriterionSet::EMPTY);
        }
        let mut set = CriterionSet::EMPTY;
        for ch in text.chars() {
            let index = self
                .criteria
                .iter()
                .position(|c| c.symbol == ch)
                .ok_or_else(|| Error::Usage(format!("`{ch}` is not a criterion symbol")))?;
            set = set.with(index);
        }
        Ok(set)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSchema {
    #[serde(default)]
    dimensions: Vec<String>,
    criteria: Vec<RawCriterion>,
    #[serde(default)]
    measures: Vec<RawMeasure>,
    split: Option<RawSplit>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCriterion {
    name: String,
    symbol: Option<String>,
    direction: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMeasure {
    name: String,
    side1: String,
    side2: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSplit {
    column: String,
    first: String,
    second: String,
}

impl RawCriterion {
    fn into_criterion(self) -> Result<Criterion> {
        let symbol = match self.symbol {
            Some(s) => {
                let mut chars = s.chars();
                match (chars.next(), chars.next()) {
                    (Some(c), None) => c,
                    _ => {
                        return Err(Error::config(format!(
                            "symbol of `{}` must be a single character",
                            self.name
                        )))
                    }
                }
            }
            None => self
                .name
                .chars()
                .next()
                .map(|c| c.to_ascii_uppercase())
                .ok_or_else(|| Error::config("criterion with an empty name"))?,
        };
        let direction = match self.direction {
            Some(d) => Direction::parse(&d)?,
            None => Direction::Minimize,
        };
        Ok(Criterion {
            name: self.name,
            symbol,
            direction,
        })
    }
}

impl RawSchema {
    fn into_schema(self) -> Result<Schema> {
        let criteria = self
            .criteria
            .into_iter()
            .map(RawCriterion::into_criterion)
            .collect::<Result<Vec<_>>>()?;
        Schema::new(
            self.dimensions,
            criteria,
            self.measures
                .into_iter()
                .map(|m| MeasurePair {
                    name: m.name,
                    side1: m.side1,
                    side2: m.side2,
                })
                .collect(),
            self.split.map(|s| SplitProperty {
                column: s.column,
                first: s.first,
                second: s.second,
            }),
        )
    }
}

/// A subset of the schema criteria, encoded as a bit mask in schema order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct CriterionSet(u32);

impl CriterionSet {
    pub const EMPTY: CriterionSet = CriterionSet(0);

    pub fn from_bits(bits: u32) -> Self {
        CriterionSet(bits)
    }

    /// The first `count` criteria.
    pub fn full(count: usize) -> Self {
        debug_assert!(count <= MAX_CRITERIA);
        if count >= 32 {
            CriterionSet(u32::MAX)
        } else {
            CriterionSet((1u32 << count) - 1)
        }
    }

    pub fn single(index: usize) -> Self {
        CriterionSet(1 << index)
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(indices: I) -> Self {
        indices.into_iter().fold(Self::EMPTY, |s, i| s.with(i))
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn contains(self, index: usize) -> bool {
        self.0 & (1 << index) != 0
    }

    #[must_use]
    pub fn with(self, index: usize) -> Self {
        CriterionSet(self.0 | (1 << index))
    }

    #[must_use]
    pub fn without(self, index: usize) -> Self {
        CriterionSet(self.0 & !(1 << index))
    }

    #[must_use]
    pub fn union(self, other: Self) -> Self {
        CriterionSet(self.0 | other.0)
    }

    #[must_use]
    pub fn intersection(self, other: Self) -> Self {
        CriterionSet(self.0 & other.0)
    }

    pub fn is_subset(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    /// Criterion indices in ascending schema order.
    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let i = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(i)
            }
        })
    }

    /// Every subset of the first `count` criteria, empty set first.
    pub fn all_subsets(count: usize) -> impl Iterator<Item = CriterionSet> {
        let limit: u64 = 1u64 << count;
        (0..limit).map(|b| CriterionSet(b as u32))
    }

    /// Presentation order used in documents: larger sets first, then
    /// lexicographic on the ascending index lists.
    pub fn presentation_cmp(&self, other: &Self) -> std::cmp::Ordering {
        other
            .len()
            .cmp(&self.len())
            .then_with(|| self.iter().cmp(other.iter()))
    }
}

impl fmt::Display for CriterionSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}
