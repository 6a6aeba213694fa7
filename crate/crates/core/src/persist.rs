//! Line-oriented, tab-separated documents for materializations, Skycubes,
//! merged relations and emerging cells. Every document starts with a
//! `<kind>\tv1` header line.

use std::fmt::Write as _;
use std::sync::Arc;

use crate::emerging::{EmergingCell, MergedRelation, MergedRow, Slot};
use crate::error::{Error, Result};
use crate::materialize::{MaterializedSkycube, SkylineConcept};
use crate::relation::{Relation, Row, RowId};
use crate::schema::{Criterion, CriterionSet, Direction, MeasurePair, Schema, SplitProperty};
use crate::skyline::Skycube;

pub const MATERIALIZATION_HEADER: &str = "skycube-materialization";
pub const MERGED_HEADER: &str = "skycube-merged";
pub const SKYCUBE_HEADER: &str = "skycube-full";
pub const EMERGING_HEADER: &str = "skycube-emerging";
const VERSION: &str = "v1";
const ALL: &str = "ALL";

fn check_field(text: &str) -> Result<&str> {
    if text.contains(['\t', '\n', '\r']) {
        return Err(Error::domain(format!("value `{}` contains a tab or line break", text.escape_debug())));
    }
    Ok(text)
}

fn line(out: &mut String, fields: &[&str]) -> Result<()> {
    for (i, f) in fields.iter().enumerate() {
        if i > 0 {
            out.push('\t');
        }
        out.push_str(check_field(f)?);
    }
    out.push('\n');
    Ok(())
}

fn write_schema(out: &mut String, s: &Schema) -> Result<()> {
    for d in s.dimensions() {
        line(out, &["dimension", d])?;
    }
    for c in s.criteria() {
        line(out, &["criterion", &c.symbol.to_string(), &c.name, c.direction.as_str()])?;
    }
    for m in s.measure_pairs() {
        line(out, &["measure", &m.name, &m.side1, &m.side2])?;
    }
    if let Some(sp) = s.split() {
        line(out, &["split", &sp.column, &sp.first, &sp.second])?;
    }
    Ok(())
}

fn class_text(class: &[RowId]) -> String {
    class.iter().map(RowId::to_string).collect::<Vec<_>>().join(",")
}

/// Serializes a materialization together with the rows it stores.
pub fn write_materialization(m: &MaterializedSkycube, r: &Relation) -> Result<String> {
    materialization_document(m, r, r.len())
}

fn materialization_document(m: &MaterializedSkycube, r: &Relation, source_rows: usize) -> Result<String> {
    let s = r.schema();
    let mut out = String::new();
    line(&mut out, &[MATERIALIZATION_HEADER, VERSION])?;
    write_schema(&mut out, s)?;
    line(&mut out, &["rows", &source_rows.to_string()])?;
    for id in m.stored_rows() {
        let pos = r.position(id)?;
        let mut fields = vec!["row".to_string(), id.to_string()];
        fields.extend(r.values_at(pos).iter().map(f64::to_string));
        fields.extend(r.dims_at(pos).iter().cloned());
        line(&mut out, &fields.iter().map(String::as_str).collect::<Vec<_>>())?;
    }
    for &c in &m.closed {
        line(&mut out, &["closed", &s.format_set(c)])?;
    }
    for (c, concept) in &m.concepts {
        let mut fields = vec!["concept".to_string(), s.format_set(*c)];
        fields.extend(concept.classes.iter().map(|cl| class_text(cl)));
        line(&mut out, &fields.iter().map(String::as_str).collect::<Vec<_>>())?;
    }
    for (child, parent) in m.edges() {
        line(&mut out, &["edge", &s.format_set(child), &s.format_set(parent)])?;
    }
    Ok(out)
}

/// A materialization read back from its document.
#[derive(Debug, Clone)]
pub struct StoredMaterialization {
    /// The stored member rows only.
    pub relation: Relation,
    pub skycube: MaterializedSkycube,
    /// Row count of the relation the materialization was built from.
    pub source_rows: usize,
}

impl StoredMaterialization {
    pub fn to_document(&self) -> Result<String> {
        materialization_document(&self.skycube, &self.relation, self.source_rows)
    }
}

struct Lines<'a> {
    iter: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Lines {
            iter: text.lines().enumerate(),
            line: 0,
        }
    }

    fn next_fields(&mut self) -> Option<Vec<&'a str>> {
        for (n, l) in self.iter.by_ref() {
            self.line = n + 1;
            if !l.trim().is_empty() {
                return Some(l.split('\t').collect());
            }
        }
        None
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::format(self.line, msg)
    }

    fn header(&mut self, kind: &str) -> Result<()> {
        match self.next_fields() {
            Some(f) if f == [kind, VERSION] => Ok(()),
            _ => Err(Error::format(self.line.max(1), format!("expected `{kind}\\t{VERSION}` header"))),
        }
    }
}

#[derive(Default)]
struct SchemaParts {
    dims: Vec<String>,
    criteria: Vec<Criterion>,
    measures: Vec<MeasurePair>,
    split: Option<SplitProperty>,
}

impl SchemaParts {
    /// Consumes a schema line; false when the line is of another kind.
    fn accept(&mut self, lines: &Lines, f: &[&str]) -> Result<bool> {
        match f {
            ["dimension", name] => self.dims.push(name.to_string()),
            ["criterion", sym, name, dir] => {
                let mut chars = sym.chars();
                let symbol = match (chars.next(), chars.next()) {
                    (Some(c), None) => c,
                    _ => return Err(lines.err("criterion symbol must be one character")),
                };
                let direction = Direction::parse(dir).map_err(|e| lines.err(e.to_string()))?;
                self.criteria.push(Criterion {
                    name: name.to_string(),
                    symbol,
                    direction,
                });
            }
            ["measure", name, s1, s2] => self.measures.push(MeasurePair {
                name: name.to_string(),
                side1: s1.to_string(),
                side2: s2.to_string(),
            }),
            ["split", column, first, second] => {
                self.split = Some(SplitProperty {
                    column: column.to_string(),
                    first: first.to_string(),
                    second: second.to_string(),
                })
            }
            _ => return Ok(false),
        }
        Ok(true)
    }

    fn build(self, lines: &Lines) -> Result<Arc<Schema>> {
        Schema::new(self.dims, self.criteria, self.measures, self.split)
            .map(Arc::new)
            .map_err(|e| lines.err(e.to_string()))
    }
}

fn parse_number(lines: &Lines, text: &str) -> Result<f64> {
    match text.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(lines.err(format!("`{text}` is not a finite number"))),
    }
}

fn parse_id(lines: &Lines, text: &str) -> Result<RowId> {
    text.parse::<u32>()
        .map(RowId)
        .map_err(|_| lines.err(format!("`{text}` is not a row id")))
}

pub fn parse_materialization(text: &str) -> Result<StoredMaterialization> {
    let mut lines = Lines::new(text);
    lines.header(MATERIALIZATION_HEADER)?;
    let mut parts = SchemaParts::default();
    let mut raw_rows: Vec<(usize, Vec<&str>)> = Vec::new();
    let mut closed_text = Vec::new();
    let mut concept_text = Vec::new();
    let mut edge_text = Vec::new();
    let mut source_rows = None;
    while let Some(f) = lines.next_fields() {
        if parts.accept(&lines, &f)? {
            continue;
        }
        match f[0] {
            "rows" if f.len() == 2 => {
                source_rows = Some(
                    f[1].parse::<usize>()
                        .map_err(|_| lines.err("row count is not a number"))?,
                )
            }
            "row" => raw_rows.push((lines.line, f[1..].to_vec())),
            "closed" if f.len() == 2 => closed_text.push((lines.line, f[1])),
            "concept" if f.len() >= 2 => concept_text.push((lines.line, f[1..].to_vec())),
            "edge" if f.len() == 3 => edge_text.push((lines.line, f[1], f[2])),
            other => return Err(lines.err(format!("unexpected `{other}` line"))),
        }
    }
    let end = lines.line;
    let schema = parts.build(&lines)?;
    let d = schema.criterion_count();
    let k = schema.dimensions().len();
    let at = |line: usize, msg: String| Error::format(line, msg);
    let set_at = |line: usize, t: &str| schema.parse_set(t).map_err(|e| at(line, e.to_string()));

    let mut rows = Vec::with_capacity(raw_rows.len());
    for (ln, f) in raw_rows {
        lines.line = ln;
        if f.len() != 1 + d + k {
            return Err(at(ln, format!("row line needs {} fields", 2 + d + k)));
        }
        rows.push(Row {
            id: parse_id(&lines, f[0])?,
            values: f[1..=d].iter().map(|v| parse_number(&lines, v)).collect::<Result<_>>()?,
            dims: f[1 + d..].iter().map(|s| s.to_string()).collect(),
            split: schema.split().map(|_| String::new()),
        });
    }
    let relation = Relation::new(schema.clone(), rows).map_err(|e| at(end, e.to_string()))?;

    let mut closed = closed_text
        .iter()
        .map(|&(ln, t)| set_at(ln, t))
        .collect::<Result<Vec<_>>>()?;
    closed.sort();
    closed.dedup();
    let mut concepts = std::collections::BTreeMap::new();
    for (ln, f) in concept_text {
        lines.line = ln;
        let subspace = set_at(ln, f[0])?;
        let classes = f[1..]
            .iter()
            .map(|c| c.split(',').map(|id| parse_id(&lines, id)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let classes = crate::partition::Partition::new(classes)
            .map_err(|e| at(ln, e.to_string()))?
            .classes()
            .to_vec();
        for class in &classes {
            let positions = class
                .iter()
                .map(|&id| {
                    relation
                        .position(id)
                        .map_err(|_| at(ln, format!("concept refers to row {id}, which is not stored")))
                })
                .collect::<Result<Vec<_>>>()?;
            if positions.iter().any(|&p| !relation.agree_at(positions[0], p, subspace)) {
                return Err(at(ln, "a class mixes rows with different projections".into()));
            }
        }
        if !closed.contains(&subspace) || (subspace.is_empty() && !classes.is_empty()) {
            return Err(at(ln, "concept subspace is not a listed closed subspace".into()));
        }
        if concepts
            .insert(subspace, SkylineConcept { subspace, classes })
            .is_some()
        {
            return Err(at(ln, "concept listed twice".into()));
        }
    }
    let skycube = MaterializedSkycube {
        criterion_count: d,
        closed,
        concepts,
    };
    if !skycube.closed.contains(&CriterionSet::full(d)) {
        return Err(at(end, "the full criterion set must be closed".into()));
    }
    if let Some(missing) = skycube
        .closed
        .iter()
        .find(|c| !skycube.concepts.contains_key(c))
    {
        return Err(at(end, format!("no concept for closed subspace {}", schema.format_set(*missing))));
    }
    let mut edges = Vec::new();
    for (ln, a, b) in edge_text {
        edges.push((set_at(ln, a)?, set_at(ln, b)?));
    }
    edges.sort();
    if edges != skycube.edges() {
        return Err(at(end, "edge lines do not match the closed subspaces".into()));
    }
    let source_rows = source_rows.ok_or_else(|| at(end, "missing `rows` line".into()))?;
    Ok(StoredMaterialization {
        relation,
        skycube,
        source_rows,
    })
}

/// One `skycuboid` line per subspace, in presentation order.
pub fn write_skycube(cube: &Skycube, schema: &Schema) -> Result<String> {
    let mut out = String::new();
    line(&mut out, &[SKYCUBE_HEADER, VERSION])?;
    let mut subspaces: Vec<CriterionSet> = cube.cuboids.keys().copied().collect();
    subspaces.sort_by(CriterionSet::presentation_cmp);
    for s in subspaces {
        let members = class_text(&cube.cuboids[&s].members);
        line(&mut out, &["skycuboid", &schema.format_set(s), &members])?;
    }
    Ok(out)
}

fn slot_text(slot: &Slot) -> String {
    slot.map_or_else(|| ALL.to_string(), |v| v.to_string())
}

pub fn write_merged(mr: &MergedRelation) -> Result<String> {
    let s = &mr.schema;
    let mut out = String::new();
    line(&mut out, &[MERGED_HEADER, VERSION])?;
    write_schema(&mut out, s)?;
    for &c in &mr.shared {
        line(&mut out, &["shared", &s.criteria()[c].name])?;
    }
    for &c in &mr.varying {
        line(&mut out, &["varying", &s.criteria()[c].name])?;
    }
    let mut cols = vec!["columns".to_string(), "RowId".into(), "Origin".into()];
    cols.extend(mr.columns());
    line(&mut out, &cols.iter().map(String::as_str).collect::<Vec<_>>())?;
    for r in &mr.rows {
        let mut fields = vec!["row".to_string(), r.id.to_string(), s.format_set(r.origin)];
        fields.extend(r.dims.iter().cloned());
        fields.extend(r.shared.iter().chain(&r.side1).chain(&r.side2).map(slot_text));
        line(&mut out, &fields.iter().map(String::as_str).collect::<Vec<_>>())?;
    }
    Ok(out)
}

pub fn parse_merged(text: &str) -> Result<MergedRelation> {
    let mut lines = Lines::new(text);
    lines.header(MERGED_HEADER)?;
    let mut parts = SchemaParts::default();
    let mut shared_names = Vec::new();
    let mut varying_names = Vec::new();
    let mut raw_rows = Vec::new();
    let mut columns = None;
    while let Some(f) = lines.next_fields() {
        if parts.accept(&lines, &f)? {
            continue;
        }
        match f[0] {
            "shared" if f.len() == 2 => shared_names.push((lines.line, f[1])),
            "varying" if f.len() == 2 => varying_names.push((lines.line, f[1])),
            "columns" => columns = Some((lines.line, f[1..].to_vec())),
            "row" => raw_rows.push((lines.line, f[1..].to_vec())),
            other => return Err(lines.err(format!("unexpected `{other}` line"))),
        }
    }
    let end = lines.line;
    let schema = parts.build(&lines)?;
    let index = |(ln, name): (usize, &str)| {
        schema
            .criterion_index(name)
            .ok_or_else(|| Error::format(ln, format!("`{name}` is not a criterion")))
    };
    let shared = shared_names.into_iter().map(index).collect::<Result<Vec<_>>>()?;
    let varying = varying_names.into_iter().map(index).collect::<Result<Vec<_>>>()?;
    let mut mr = MergedRelation {
        schema: schema.clone(),
        shared,
        varying,
        rows: Vec::new(),
    };
    let expected = mr.columns();
    match columns {
        Some((ln, cols)) if cols.len() != expected.len() + 2 || cols[2..] != expected => {
            return Err(Error::format(ln, "columns line does not match the declared schema"))
        }
        None => return Err(Error::format(end, "missing `columns` line")),
        _ => {}
    }
    let k = schema.dimensions().len();
    let (ns, nv) = (mr.shared.len(), mr.varying.len());
    for (ln, f) in raw_rows {
        lines.line = ln;
        if f.len() != 2 + k + ns + 2 * nv {
            return Err(lines.err(format!("row line needs {} fields", 3 + k + ns + 2 * nv)));
        }
        let slots = f[2 + k..]
            .iter()
            .map(|v| if *v == ALL { Ok(None) } else { parse_number(&lines, v).map(Some) })
            .collect::<Result<Vec<_>>>()?;
        mr.rows.push(MergedRow {
            id: parse_id(&lines, f[0])?,
            origin: schema.parse_set(f[1]).map_err(|e| lines.err(e.to_string()))?,
            dims: f[2..2 + k].iter().map(|s| s.to_string()).collect(),
            shared: slots[..ns].to_vec(),
            side1: slots[ns..ns + nv].to_vec(),
            side2: slots[ns + nv..].to_vec(),
        });
    }
    mr.validate().map_err(|e| Error::format(end, e.to_string()))?;
    Ok(mr)
}

/// Writes titled sections of emerging cells, finite block first.
pub fn write_emerging(schema: &Schema, sections: &[(&str, Vec<EmergingCell>)]) -> Result<String> {
    let mut out = String::new();
    line(&mut out, &[EMERGING_HEADER, VERSION])?;
    for (title, cells) in sections {
        let mut cells = cells.clone();
        cells.sort_by(crate::emerging::block_cmp);
        line(&mut out, &["section", title])?;
        for c in &cells {
            let block = if c.is_infinite() { "infinite" } else { "finite" };
            let mut fields = vec!["cell".to_string(), block.into(), c.trend.as_str().into()];
            fields.extend(c.cell.0.iter().map(|v| v.clone().unwrap_or_else(|| ALL.into())));
            for m in &c.measures {
                fields.push(schema.criteria()[m.criterion].name.clone());
                fields.push(m.a1.to_string());
                fields.push(m.a2.to_string());
                fields.push(m.rate.to_string());
            }
            line(&mut out, &fields.iter().map(String::as_str).collect::<Vec<_>>())?;
        }
    }
    Ok(out)
}

/// Human-readable rendering of one Skycuboid answer with member values.
pub fn write_query_answer(r: &Relation, subspace: CriterionSet, members: &[RowId]) -> Result<String> {
    let s = r.schema();
    let mut out = String::new();
    let _ = writeln!(out, "subspace\t{}", s.format_set(subspace));
    for &id in members {
        let pos = r.position(id)?;
        let mut fields = vec!["member".to_string(), id.to_string()];
        fields.extend(subspace.iter().map(|c| r.value(pos, c).to_string()));
        fields.extend(r.dims_at(pos).iter().cloned());
        line(&mut out, &fields.iter().map(String::as_str).collect::<Vec<_>>())?;
    }
    Ok(out)
}
