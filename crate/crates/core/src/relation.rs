//! Preference-annotated relations: ingestion, projection and the two-class
//! split on a decision property.

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::schema::{Criterion, CriterionSet, Direction, Schema};

/// Stable natural-number identifier of a tuple.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RowId(pub u32);

impl fmt::Display for RowId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One tuple handed to [`Relation::new`].
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub id: RowId,
    pub dims: Vec<String>,
    pub values: Vec<f64>,
    /// Value of the split property, when the schema declares one.
    pub split: Option<String>,
}

/// An immutable relation over a [`Schema`].
///
/// Rows keep the order they were supplied in; [`RowId`]s are unique but need
/// not be contiguous (a stored materialization only keeps skyline members).
#[derive(Debug, Clone)]
pub struct Relation {
    schema: Arc<Schema>,
    ids: Vec<RowId>,
    dims: Vec<String>,
    values: Vec<f64>,
    split: Vec<String>,
    index: HashMap<RowId, usize>,
}

impl PartialEq for Relation {
    fn eq(&self, other: &Self) -> bool {
        self.schema == other.schema
            && self.ids == other.ids
            && self.dims == other.dims
            && self.values == other.values
            && self.split == other.split
    }
}

impl Relation {
    pub fn new(schema: Arc<Schema>, rows: Vec<Row>) -> Result<Self> {
        let k = schema.dimensions().len();
        let d = schema.criterion_count();
        let with_split = schema.split().is_some();
        let mut rel = Relation {
            ids: Vec::with_capacity(rows.len()),
            dims: Vec::with_capacity(rows.len() * k),
            values: Vec::with_capacity(rows.len() * d),
            split: Vec::new(),
            index: HashMap::with_capacity(rows.len()),
            schema,
        };
        for row in rows {
            if row.dims.len() != k || row.values.len() != d {
                return Err(Error::domain(format!(
                    "row {} has {} dimension and {} criterion values, schema expects {k} and {d}",
                    row.id,
                    row.dims.len(),
                    row.values.len()
                )));
            }
            if let Some(bad) = row.values.iter().position(|v| !v.is_finite()) {
                return Err(Error::Ingest {
                    row: row.id.0 as usize,
                    column: rel.schema.criteria()[bad].name.clone(),
                    message: "criterion values must be finite".into(),
                });
            }
            if rel.index.insert(row.id, rel.ids.len()).is_some() {
                return Err(Error::domain(format!("row id {} appears twice", row.id)));
            }
            rel.ids.push(row.id);
            rel.dims.extend(row.dims);
            // -0.0 and 0.0 must agree everywhere equality is tested.
            rel.values.extend(row.values.iter().map(|v| v + 0.0));
            if with_split {
                rel.split.push(row.split.unwrap_or_default());
            }
        }
        Ok(rel)
    }

    /// A dimensionless relation over criteria `c0, c1, ...` (symbols `A, B,
    /// ...`) with RowIds `1..n`.
    pub fn from_values(rows: &[Vec<f64>], directions: &[Direction]) -> Result<Self> {
        if directions.len() > 26 {
            return Err(Error::domain("at most 26 generated criteria"));
        }
        let criteria = directions
            .iter()
            .enumerate()
            .map(|(i, &direction)| Criterion {
                name: format!("c{i}"),
                symbol: (b'A' + i as u8) as char,
                direction,
            })
            .collect();
        let schema = Arc::new(Schema::new(vec![], criteria, vec![], None)?);
        let rows = rows
            .iter()
            .enumerate()
            .map(|(i, v)| Row {
                id: RowId(i as u32 + 1),
                dims: vec![],
                values: v.clone(),
                split: None,
            })
            .collect();
        Relation::new(schema, rows)
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn schema_arc(&self) -> &Arc<Schema> {
        &self.schema
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[RowId] {
        &self.ids
    }

    /// Position of `id` in row order.
    pub fn position(&self, id: RowId) -> Result<usize> {
        self.index.get(&id).copied().ok_or(Error::Lookup(id))
    }

    pub fn contains(&self, id: RowId) -> bool {
        self.index.contains_key(&id)
    }

    #[inline]
    pub fn value(&self, pos: usize, criterion: usize) -> f64 {
        self.values[pos * self.schema.criterion_count() + criterion]
    }

    /// Raw criterion values of the row at `pos`.
    pub fn values_at(&self, pos: usize) -> &[f64] {
        let d = self.schema.criterion_count();
        &self.values[pos * d..(pos + 1) * d]
    }

    pub fn dims_at(&self, pos: usize) -> &[String] {
        let k = self.schema.dimensions().len();
        &self.dims[pos * k..(pos + 1) * k]
    }

    pub fn split_at(&self, pos: usize) -> Option<&str> {
        self.split.get(pos).map(String::as_str)
    }

    pub fn row(&self, pos: usize) -> Row {
        Row {
            id: self.ids[pos],
            dims: self.dims_at(pos).to_vec(),
            values: self.values_at(pos).to_vec(),
            split: self.split_at(pos).map(str::to_string),
        }
    }

    pub fn rows(&self) -> impl Iterator<Item = Row> + '_ {
        (0..self.len()).map(|p| self.row(p))
    }

    /// `t[C]`: values of `id` on `set`, in schema criterion order.
    pub fn project(&self, id: RowId, set: CriterionSet) -> Result<Vec<f64>> {
        let pos = self.position(id)?;
        Ok(self.project_at(pos, set))
    }

    pub fn project_at(&self, pos: usize, set: CriterionSet) -> Vec<f64> {
        set.iter().map(|c| self.value(pos, c)).collect()
    }

    /// True when the two rows share their projection on `set`.
    #[inline]
    pub fn agree_at(&self, a: usize, b: usize, set: CriterionSet) -> bool {
        set.iter().all(|c| self.value(a, c) == self.value(b, c))
    }

    /// A relation holding the rows at the given positions, ids preserved.
    pub fn subset(&self, positions: &[usize]) -> Relation {
        let rows = positions.iter().map(|&p| self.row(p)).collect();
        Relation::new(self.schema.clone(), rows).expect("rows of a valid relation")
    }

    /// Writes the relation as comma-separated text with a `RowId` column.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["RowId".to_string()];
        header.extend(self.schema.dimensions().iter().cloned());
        if let Some(s) = self.schema.split() {
            header.push(s.column.clone());
        }
        header.extend(self.schema.criteria().iter().map(|c| c.name.clone()));
        w.write_record(&header).map_err(csv_io)?;
        for pos in 0..self.len() {
            let mut rec = vec![self.ids[pos].to_string()];
            rec.extend(self.dims_at(pos).iter().cloned());
            if let Some(s) = self.split_at(pos) {
                rec.push(s.to_string());
            }
            rec.extend(self.values_at(pos).iter().map(|v| v.to_string()));
            w.write_record(&rec).map_err(csv_io)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_io(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::format(0, format!("{other:?}")),
    }
}

/// Reads a comma-separated table with a header row naming every configured
/// column. Extra columns are ignored; RowIds are assigned `1..n` in file order.
pub fn load_relation<R: Read>(source: R, schema: Arc<Schema>) -> Result<Relation> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(source);
    let header = reader
        .headers()
        .map_err(|e| Error::config(format!("unreadable header row: {e}")))?
        .clone();
    let column = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::config(format!("column `{name}` is missing from the header")))
    };
    let dim_cols = schema
        .dimensions()
        .iter()
        .map(|d| column(d))
        .collect::<Result<Vec<_>>>()?;
    let crit_cols = schema
        .criteria()
        .iter()
        .map(|c| column(&c.name))
        .collect::<Result<Vec<_>>>()?;
    let split_col = schema.split().map(|s| column(&s.column)).transpose()?;

    let mut rows = Vec::new();
    for (n, record) in reader.records().enumerate() {
        let line = n + 1;
        let record = record.map_err(|e| Error::Ingest {
            row: line,
            column: String::new(),
            message: e.to_string(),
        })?;
        let dims = dim_cols.iter().map(|&i| record[i].to_string()).collect();
        let values = crit_cols
            .iter()
            .zip(schema.criteria())
            .map(|(&i, c)| {
                let cell = &record[i];
                match cell.parse::<f64>() {
                    Ok(v) if v.is_finite() => Ok(v),
                    _ => Err(Error::Ingest {
                        row: line,
                        column: c.name.clone(),
                        message: format!("`{cell}` is not a finite number"),
                    }),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let id = u32::try_from(line)
            .map(RowId)
            .map_err(|_| Error::Resource("more than u32::MAX rows".into()))?;
        rows.push(Row {
            id,
            dims,
            values,
            split: split_col.map(|i| record[i].to_string()),
        });
    }
    Relation::new(schema, rows)
}

pub fn load_relation_path(path: &Path, schema: Arc<Schema>) -> Result<Relation> {
    load_relation(File::open(path)?, schema)
}

/// The two classes of a relation split on its decision property.
#[derive(Debug, Clone)]
pub struct Split {
    pub first: Relation,
    pub second: Relation,
    /// Rows whose property value matched neither class.
    pub dropped: usize,
}

/// Splits `r` on the schema's decision property. Each side is renumbered
/// `1..n` in original order.
pub fn split_by_property(r: &Relation) -> Result<Split> {
    let prop = r
        .schema()
        .split()
        .ok_or_else(|| Error::Usage("the schema declares no split property".into()))?;
    let mut first = Vec::new();
    let mut second = Vec::new();
    let mut dropped = 0;
    for pos in 0..r.len() {
        let mut row = r.row(pos);
        let value = row.split.as_deref().unwrap_or_default();
        let side = if value == prop.first {
            &mut first
        } else if value == prop.second {
            &mut second
        } else {
            dropped += 1;
            continue;
        };
        row.id = RowId(side.len() as u32 + 1);
        side.push(row);
    }
    Ok(Split {
        first: Relation::new(r.schema_arc().clone(), first)?,
        second: Relation::new(r.schema_arc().clone(), second)?,
        dropped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema() -> Arc<Schema> {
        Arc::new(
            Schema::from_flags(
                &["Tier".into()],
                &["Rarity".into(), "Duration".into()],
                Some("Rank:N:E"),
                &[],
            )
            .unwrap(),
        )
    }

    #[test]
    fn loads_in_file_order() {
        let text = "Tier,Rank,Rarity,Duration,Extra\nUU,N,5,25,x\nOU,E,4,65,y\n";
        let r = load_relation(text.as_bytes(), schema()).unwrap();
        assert_eq!(r.ids(), &[RowId(1), RowId(2)]);
        assert_eq!(r.dims_at(1), ["OU"]);
        assert_eq!(r.project(RowId(2), CriterionSet::full(2)).unwrap(), vec![4.0, 65.0]);
    }

    #[test]
    fn empty_body_gives_empty_relation() {
        let r = load_relation("Tier,Rank,Rarity,Duration\n".as_bytes(), schema()).unwrap();
        assert!(r.is_empty());
    }

    #[test]
    fn missing_column_is_a_configuration_error() {
        let err = load_relation("Tier,Rarity,Duration\n".as_bytes(), schema()).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn bad_number_names_row_and_column() {
        let text = "Tier,Rank,Rarity,Duration\nUU,N,5,25\nOU,N,4,long\n";
        match load_relation(text.as_bytes(), schema()).unwrap_err() {
            Error::Ingest { row, column, .. } => {
                assert_eq!(row, 2);
                assert_eq!(column, "Duration");
            }
            other => panic!("unexpected {other:?}"),
        }
        let text = "Tier,Rank,Rarity,Duration\nUU,N,5,inf\n";
        assert!(matches!(
            load_relation(text.as_bytes(), schema()),
            Err(Error::Ingest { .. })
        ));
    }

    #[test]
    fn split_renumbers_and_counts_drops() {
        let text = "Tier,Rank,Rarity,Duration\nA,N,1,1\nB,E,2,2\nC,X,3,3\nD,N,4,4\n";
        let r = load_relation(text.as_bytes(), schema()).unwrap();
        let s = split_by_property(&r).unwrap();
        assert_eq!(s.first.ids(), &[RowId(1), RowId(2)]);
        assert_eq!(s.first.dims_at(1), ["D"]);
        assert_eq!(s.second.len(), 1);
        assert_eq!(s.dropped, 1);
    }

    #[test]
    fn split_without_property_is_usage_error() {
        let schema = Arc::new(Schema::from_flags(&[], &["A".into()], None, &[]).unwrap());
        let r = Relation::new(schema, vec![]).unwrap();
        assert!(matches!(split_by_property(&r), Err(Error::Usage(_))));
    }

    #[test]
    fn unknown_row_is_lookup_error() {
        let r = load_relation("Tier,Rank,Rarity,Duration\n".as_bytes(), schema()).unwrap();
        assert!(matches!(r.project(RowId(3), CriterionSet::EMPTY), Err(Error::Lookup(_))));
    }

    #[test]
    fn csv_round_trip() {
        let text = "Tier,Rank,Rarity,Duration\nUU,N,5,25.5\nOU,E,-4,65\n";
        let r = load_relation(text.as_bytes(), schema()).unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let back = load_relation(buf.as_slice(), schema()).unwrap();
        assert_eq!(r, back);
    }
}
