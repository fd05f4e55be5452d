//! Schemas, V-instances and the data-side distance.
//!
//! A V-instance cell is either a constant or a per-attribute variable. Two
//! cells are equal only when they are the same constant text or the very same
//! variable; a variable never equals a constant. The derived `Eq`/`Hash` on
//! [`CellValue`] implement exactly that relation, so projections can be hashed
//! directly.

use std::collections::{HashMap, HashSet};
use std::io::{Read, Write};
use std::sync::Arc;

use serde::Serialize;

use crate::attrs::{AttrId, AttrSet, MAX_ATTRIBUTES};
use crate::error::{Error, Result};
use crate::fd::FdSet;

/// Index of a tuple in its instance (file order, starting at 0).
pub type TupleId = usize;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Schema {
    names: Vec<String>,
}

impl Schema {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Result<Self> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.len() > MAX_ATTRIBUTES {
            return Err(Error::TooManyAttributes(names.len()));
        }
        let mut seen = HashSet::new();
        for n in &names {
            if !seen.insert(n.as_str()) {
                return Err(Error::DuplicateAttribute(n.clone()));
            }
        }
        Ok(Schema { names })
    }

    pub fn width(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, attr: AttrId) -> &str {
        &self.names[attr]
    }

    pub fn attr(&self, name: &str) -> Result<AttrId> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownAttribute(name.to_string()))
    }

    pub fn all(&self) -> AttrSet {
        AttrSet::full(self.width())
    }

    /// Attribute names of `set` in schema order.
    pub fn set_names(&self, set: AttrSet) -> Vec<String> {
        set.iter().map(|a| self.names[a].clone()).collect()
    }

    /// Renders a set as concatenated names, e.g. `BCD`, or `{}` when empty.
    pub fn format_set(&self, set: AttrSet) -> String {
        if set.is_empty() {
            return "{}".to_string();
        }
        let names = self.set_names(set);
        if names.iter().all(|n| n.chars().count() == 1) {
            names.concat()
        } else {
            names.join(",")
        }
    }

    pub fn render(&self, cell: &CellValue) -> String {
        match cell {
            CellValue::Constant(s) => s.to_string(),
            CellValue::Variable { attr, index } => format!("?{}:{}", self.names[*attr], index),
        }
    }

    /// Parses the `?<attr>:<index>` variable form; anything else is a constant.
    pub fn parse_cell(&self, column: AttrId, text: &str) -> Result<CellValue> {
        let Some(rest) = text.strip_prefix('?') else {
            return Ok(CellValue::constant(text));
        };
        let (name, index) = rest
            .rsplit_once(':')
            .ok_or_else(|| Error::BadVariable(text.to_string()))?;
        let index: u32 = index
            .parse()
            .map_err(|_| Error::BadVariable(text.to_string()))?;
        if name != self.names[column] {
            return Err(Error::BadVariable(text.to_string()));
        }
        Ok(CellValue::Variable {
            attr: column,
            index,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum CellValue {
    Constant(Arc<str>),
    Variable { attr: AttrId, index: u32 },
}

impl CellValue {
    pub fn constant(text: &str) -> Self {
        CellValue::Constant(Arc::from(text))
    }

    pub fn is_variable(&self) -> bool {
        matches!(self, CellValue::Variable { .. })
    }
}

/// V-instance equality: same constant text, or the identical variable.
pub fn cells_equal(u: &CellValue, v: &CellValue) -> bool {
    u == v
}

pub type Tuple = Vec<CellValue>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VInstance {
    schema: Schema,
    tuples: Vec<Tuple>,
}

impl VInstance {
    pub fn new(schema: Schema, tuples: Vec<Tuple>) -> Result<Self> {
        let width = schema.width();
        for (i, t) in tuples.iter().enumerate() {
            if t.len() != width {
                return Err(Error::RaggedRow {
                    line: i as u64 + 1,
                    expected: width,
                    found: t.len(),
                });
            }
            for (a, cell) in t.iter().enumerate() {
                if let CellValue::Variable { attr, .. } = cell {
                    if *attr != a {
                        return Err(Error::BadVariable(schema.render(cell)));
                    }
                }
            }
        }
        Ok(VInstance { schema, tuples })
    }

    /// Builds an all-constant instance from string rows.
    pub fn from_rows<S: AsRef<str>>(names: &[&str], rows: &[Vec<S>]) -> Result<Self> {
        let schema = Schema::new(names.iter().copied())?;
        let tuples = rows
            .iter()
            .map(|r| r.iter().map(|s| CellValue::constant(s.as_ref())).collect())
            .collect();
        VInstance::new(schema, tuples)
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn width(&self) -> usize {
        self.schema.width()
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn tuples(&self) -> &[Tuple] {
        &self.tuples
    }

    pub fn tuple(&self, id: TupleId) -> &Tuple {
        &self.tuples[id]
    }

    pub fn cell(&self, id: TupleId, attr: AttrId) -> &CellValue {
        &self.tuples[id][attr]
    }

    pub fn set_cell(&mut self, id: TupleId, attr: AttrId, value: CellValue) {
        self.tuples[id][attr] = value;
    }

    pub fn replace_tuple(&mut self, id: TupleId, tuple: Tuple) {
        debug_assert_eq!(tuple.len(), self.width());
        self.tuples[id] = tuple;
    }

    /// Smallest variable index per attribute that is not used anywhere in the
    /// instance.
    pub fn next_variable_indices(&self) -> Vec<u32> {
        let mut next = vec![1u32; self.width()];
        for t in &self.tuples {
            for cell in t {
                if let CellValue::Variable { attr, index } = cell {
                    next[*attr] = next[*attr].max(index + 1);
                }
            }
        }
        next
    }

    pub fn project(&self, id: TupleId, attrs: AttrSet) -> Vec<&CellValue> {
        attrs.iter().map(|a| &self.tuples[id][a]).collect()
    }

    /// Attributes on which two tuples differ.
    pub fn difference_set(&self, a: TupleId, b: TupleId) -> AttrSet {
        let (ta, tb) = (&self.tuples[a], &self.tuples[b]);
        (0..self.width()).filter(|&i| ta[i] != tb[i]).collect()
    }

    pub fn write_csv<W: Write>(&self, out: W, delimiter: u8) -> Result<()> {
        let mut w = csv::WriterBuilder::new().delimiter(delimiter).from_writer(out);
        w.write_record(self.schema.names())?;
        for t in &self.tuples {
            w.write_record(t.iter().map(|c| self.schema.render(c)))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf, b',').expect("writing to memory");
        String::from_utf8(buf).expect("csv output is utf-8")
    }
}

#[derive(Clone, Copy, Debug)]
pub struct CsvOptions {
    pub has_header: bool,
    pub delimiter: u8,
    /// Read `?<attr>:<index>` fields back as variables. Off for raw input.
    pub parse_variables: bool,
}

impl Default for CsvOptions {
    fn default() -> Self {
        CsvOptions {
            has_header: true,
            delimiter: b',',
            parse_variables: false,
        }
    }
}

/// Reads a delimited file into a V-instance of constants.
///
/// Without a header, attributes are named `c0, c1, ...`.
pub fn load_csv<R: Read>(source: R, options: CsvOptions) -> Result<VInstance> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .delimiter(options.delimiter)
        .from_reader(source);
    let mut records = reader.records();

    let first = match records.next() {
        Some(r) => r?,
        None => return Err(Error::EmptyInput),
    };
    let width = first.len();
    let (schema, mut pending) = if options.has_header {
        (Schema::new(first.iter())?, None)
    } else {
        (Schema::new((0..width).map(|i| format!("c{i}")))?, Some(first))
    };

    let mut tuples = Vec::new();
    loop {
        let record = match pending.take() {
            Some(r) => r,
            None => match records.next() {
                Some(r) => r?,
                None => break,
            },
        };
        if record.len() != width {
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            return Err(Error::RaggedRow {
                line,
                expected: width,
                found: record.len(),
            });
        }
        let tuple = record
            .iter()
            .enumerate()
            .map(|(a, field)| {
                if options.parse_variables {
                    schema.parse_cell(a, field)
                } else {
                    Ok(CellValue::constant(field))
                }
            })
            .collect::<Result<Tuple>>()?;
        tuples.push(tuple);
    }
    VInstance::new(schema, tuples)
}

/// A single FD violation: the tuple pair (ascending) and the FD index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Violation {
    pub first: TupleId,
    pub second: TupleId,
    pub fd: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Satisfaction {
    pub satisfied: bool,
    pub violations: Vec<Violation>,
}

/// Checks every FD of `fds` against `instance` under V-instance equality.
pub fn check_satisfies(instance: &VInstance, fds: &FdSet) -> Result<Satisfaction> {
    fds.validate_for(instance.schema())?;
    let violations = violations(instance, fds);
    Ok(Satisfaction {
        satisfied: violations.is_empty(),
        violations,
    })
}

/// All violating (pair, FD) triples, sorted.
///
/// Tuples are partitioned on each FD's LHS projection, sub-partitioned on the
/// RHS value, and every cross-sub-partition pair is emitted.
pub(crate) fn violations(instance: &VInstance, fds: &FdSet) -> Vec<Violation> {
    let mut out = Vec::new();
    for (index, fd) in fds.iter().enumerate() {
        let mut groups: HashMap<Vec<&CellValue>, Vec<TupleId>> = HashMap::new();
        for id in 0..instance.len() {
            groups.entry(instance.project(id, fd.lhs)).or_default().push(id);
        }
        for members in groups.values() {
            if members.len() < 2 {
                continue;
            }
            let mut by_rhs: HashMap<&CellValue, usize> = HashMap::new();
            let mut class = Vec::with_capacity(members.len());
            for &id in members {
                let next = by_rhs.len();
                class.push(*by_rhs.entry(instance.cell(id, fd.rhs)).or_insert(next));
            }
            if by_rhs.len() < 2 {
                continue;
            }
            for i in 0..members.len() {
                for j in i + 1..members.len() {
                    if class[i] != class[j] {
                        let (a, b) = (members[i].min(members[j]), members[i].max(members[j]));
                        out.push(Violation {
                            first: a,
                            second: b,
                            fd: index,
                        });
                    }
                }
            }
        }
    }
    out.sort_unstable();
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CellEdit {
    pub tuple: TupleId,
    pub attribute: String,
    pub old: String,
    pub new: String,
}

/// Cells whose values differ between two aligned instances.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CellDelta {
    pub entries: Vec<(TupleId, AttrId, CellValue, CellValue)>,
}

impl CellDelta {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn edits(&self, schema: &Schema) -> Vec<CellEdit> {
        self.entries
            .iter()
            .map(|(t, a, old, new)| CellEdit {
                tuple: *t,
                attribute: schema.name(*a).to_string(),
                old: schema.render(old),
                new: schema.render(new),
            })
            .collect()
    }
}

pub fn ensure_aligned(a: &VInstance, b: &VInstance) -> Result<()> {
    if a.schema() != b.schema() {
        return Err(Error::Misaligned("schemas differ".into()));
    }
    if a.len() != b.len() {
        return Err(Error::Misaligned(format!(
            "tuple counts differ ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    Ok(())
}

/// Data distance: the set and number of differing cells.
pub fn dist_d(before: &VInstance, after: &VInstance) -> Result<CellDelta> {
    ensure_aligned(before, after)?;
    let mut entries = Vec::new();
    for (id, (t, u)) in before.tuples().iter().zip(after.tuples()).enumerate() {
        for (a, (x, y)) in t.iter().zip(u).enumerate() {
            if !cells_equal(x, y) {
                entries.push((id, a, x.clone(), y.clone()));
            }
        }
    }
    Ok(CellDelta { entries })
}

/// Number of distinct projections of `instance` on `attrs`.
pub fn distinct_count(instance: &VInstance, attrs: AttrSet) -> Result<usize> {
    if attrs.is_empty() {
        return Err(Error::EmptyAttrSet);
    }
    if let Some(max) = attrs.max() {
        if max >= instance.width() {
            return Err(Error::AttributeOutOfRange(max));
        }
    }
    let distinct: HashSet<Vec<&CellValue>> =
        (0..instance.len()).map(|id| instance.project(id, attrs)).collect();
    Ok(distinct.len())
}
