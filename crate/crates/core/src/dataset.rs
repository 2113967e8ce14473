//! Mixed-type tabular data: loading, validation, per-column indices and the
//! threshold-based mapping from continuous values to interval codes.
//!
//! A [`Dataset`] is immutable once built. Every continuous column carries its
//! sorted row order, the distinct values it takes, the row-to-distinct-value
//! rank and the cached candidate thresholds (midpoints between adjacent
//! distinct values). Everything the scoring and search code needs about a
//! column is precomputed here.

use std::collections::{BTreeSet, HashMap};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Columns whose entries are all non-negative integers with at most this many
/// distinct values are inferred as discrete.
pub const MAX_INFERRED_ARITY: usize = 15;

#[derive(Clone, Debug, PartialEq)]
pub enum VariableKind {
    Continuous { bounds: Option<(f64, f64)> },
    Discrete { arity: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct VariableMeta {
    pub name: String,
    pub kind: VariableKind,
    pub column_index: usize,
}

impl VariableMeta {
    pub fn continuous(name: impl Into<String>, column_index: usize) -> Self {
        VariableMeta {
            name: name.into(),
            kind: VariableKind::Continuous { bounds: None },
            column_index,
        }
    }

    pub fn bounded(name: impl Into<String>, column_index: usize, lower: f64, upper: f64) -> Self {
        VariableMeta {
            name: name.into(),
            kind: VariableKind::Continuous {
                bounds: Some((lower, upper)),
            },
            column_index,
        }
    }

    pub fn discrete(name: impl Into<String>, column_index: usize, arity: usize) -> Self {
        VariableMeta {
            name: name.into(),
            kind: VariableKind::Discrete { arity },
            column_index,
        }
    }

    pub fn is_continuous(&self) -> bool {
        matches!(self.kind, VariableKind::Continuous { .. })
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            VariableKind::Discrete { arity } if arity < 2 => Err(Error::Schema(format!(
                "discrete variable `{}` needs arity >= 2, got {arity}",
                self.name
            ))),
            VariableKind::Continuous {
                bounds: Some((lo, hi)),
            } if !(lo < hi) || !lo.is_finite() || !hi.is_finite() => Err(Error::Schema(format!(
                "variable `{}` has invalid bounds [{lo}, {hi}]",
                self.name
            ))),
            _ => Ok(()),
        }
    }
}

/// One entry of the JSON schema sidecar.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchemaEntry {
    pub name: String,
    pub kind: SchemaKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arity: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<[f64; 2]>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemaKind {
    Continuous,
    Discrete,
}

impl SchemaEntry {
    fn to_kind(&self) -> Result<VariableKind> {
        match self.kind {
            SchemaKind::Continuous => {
                if self.arity.is_some() {
                    return Err(Error::Schema(format!(
                        "continuous variable `{}` cannot declare an arity",
                        self.name
                    )));
                }
                Ok(VariableKind::Continuous {
                    bounds: self.bounds.map(|[lo, hi]| (lo, hi)),
                })
            }
            SchemaKind::Discrete => match self.arity {
                Some(arity) => Ok(VariableKind::Discrete { arity }),
                None => Err(Error::Schema(format!(
                    "discrete variable `{}` needs an arity",
                    self.name
                ))),
            },
        }
    }

    pub fn from_meta(meta: &VariableMeta) -> Self {
        match meta.kind {
            VariableKind::Continuous { bounds } => SchemaEntry {
                name: meta.name.clone(),
                kind: SchemaKind::Continuous,
                arity: None,
                bounds: bounds.map(|(lo, hi)| [lo, hi]),
            },
            VariableKind::Discrete { arity } => SchemaEntry {
                name: meta.name.clone(),
                kind: SchemaKind::Discrete,
                arity: Some(arity),
                bounds: None,
            },
        }
    }
}

pub fn parse_schema_json(text: &str) -> Result<Vec<SchemaEntry>> {
    Ok(serde_json::from_str(text)?)
}

/// How column types are decided when loading CSV.
#[derive(Clone, Debug)]
pub enum Schema {
    /// Types taken from the sidecar, matched to CSV columns by name.
    Explicit(Vec<SchemaEntry>),
    Infer,
}

#[derive(Clone, Debug)]
pub struct ContinuousColumn {
    values: Vec<f64>,
    order: Vec<usize>,
    distinct: Vec<f64>,
    distinct_counts: Vec<usize>,
    rank: Vec<usize>,
    candidates: Vec<f64>,
    lower: f64,
    upper: f64,
}

impl ContinuousColumn {
    fn build(values: Vec<f64>, bounds: Option<(f64, f64)>) -> Self {
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));

        let mut distinct: Vec<f64> = Vec::new();
        let mut distinct_counts = Vec::new();
        let mut rank = vec![0; values.len()];
        for &row in &order {
            let v = values[row];
            if distinct.last() != Some(&v) {
                distinct.push(v);
                distinct_counts.push(0);
            }
            *distinct_counts.last_mut().unwrap() += 1;
            rank[row] = distinct.len() - 1;
        }
        let candidates = midpoints(&distinct);
        let (lower, upper) =
            bounds.unwrap_or_else(|| (distinct[0], distinct[distinct.len() - 1]));
        ContinuousColumn {
            values,
            order,
            distinct,
            distinct_counts,
            rank,
            candidates,
            lower,
            upper,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Row indices sorted by value (ties by row index).
    pub fn sorted_rows(&self) -> &[usize] {
        &self.order
    }

    pub fn distinct_values(&self) -> &[f64] {
        &self.distinct
    }

    pub fn distinct_counts(&self) -> &[usize] {
        &self.distinct_counts
    }

    /// Index into [`Self::distinct_values`] for every row.
    pub fn ranks(&self) -> &[usize] {
        &self.rank
    }

    pub fn candidates(&self) -> &[f64] {
        &self.candidates
    }

    /// Bounds of the outermost intervals: declared domain bounds when
    /// present, else the column minimum and maximum.
    pub fn bounds(&self) -> (f64, f64) {
        (self.lower, self.upper)
    }

    pub fn min(&self) -> f64 {
        self.distinct[0]
    }

    pub fn max(&self) -> f64 {
        self.distinct[self.distinct.len() - 1]
    }
}

#[derive(Clone, Debug)]
pub struct DiscreteColumn {
    codes: Vec<usize>,
    arity: usize,
}

impl DiscreteColumn {
    pub fn codes(&self) -> &[usize] {
        &self.codes
    }

    pub fn arity(&self) -> usize {
        self.arity
    }
}

#[derive(Clone, Debug)]
pub enum Column {
    Continuous(ContinuousColumn),
    Discrete(DiscreteColumn),
}

/// Raw values handed to [`Dataset::from_columns`].
#[derive(Clone, Debug)]
pub enum ColumnData {
    Continuous(Vec<f64>),
    Discrete(Vec<usize>),
}

#[derive(Clone, Debug)]
pub struct Dataset {
    variables: Vec<VariableMeta>,
    columns: Vec<Column>,
    n_rows: usize,
}

impl Dataset {
    /// Builds a dataset from in-memory columns, validating every invariant.
    pub fn from_columns(variables: Vec<VariableMeta>, data: Vec<ColumnData>) -> Result<Self> {
        if variables.is_empty() {
            return Err(Error::Validation("dataset has no variables".into()));
        }
        if variables.len() != data.len() {
            return Err(Error::Validation(format!(
                "{} variables but {} columns",
                variables.len(),
                data.len()
            )));
        }
        let mut seen = BTreeSet::new();
        for v in &variables {
            v.validate()?;
            if !seen.insert(v.name.as_str()) {
                return Err(Error::Schema(format!("duplicate variable `{}`", v.name)));
            }
        }
        let n_rows = match &data[0] {
            ColumnData::Continuous(v) => v.len(),
            ColumnData::Discrete(v) => v.len(),
        };
        if n_rows == 0 {
            return Err(Error::Validation("dataset has no rows".into()));
        }

        let mut columns = Vec::with_capacity(data.len());
        for (meta, col) in variables.iter().zip(data) {
            let len = match &col {
                ColumnData::Continuous(v) => v.len(),
                ColumnData::Discrete(v) => v.len(),
            };
            if len != n_rows {
                return Err(Error::Validation(format!(
                    "column `{}` has {len} rows, expected {n_rows}",
                    meta.name
                )));
            }
            let column = match (&meta.kind, col) {
                (VariableKind::Continuous { bounds }, ColumnData::Continuous(values)) => {
                    for (row, &x) in values.iter().enumerate() {
                        if !x.is_finite() {
                            return Err(Error::Validation(format!(
                                "non-finite value {x} at row {}, column `{}`",
                                row + 1,
                                meta.name
                            )));
                        }
                        if let Some((lo, hi)) = *bounds {
                            if x < lo || x > hi {
                                return Err(Error::OutOfRange {
                                    column: meta.name.clone(),
                                    value: x,
                                    lower: lo,
                                    upper: hi,
                                });
                            }
                        }
                    }
                    Column::Continuous(ContinuousColumn::build(values, *bounds))
                }
                (VariableKind::Discrete { arity }, ColumnData::Discrete(codes)) => {
                    if let Some((row, &c)) = codes.iter().enumerate().find(|(_, &c)| c >= *arity) {
                        return Err(Error::Validation(format!(
                            "code {c} at row {}, column `{}` is outside 0..{arity}",
                            row + 1,
                            meta.name
                        )));
                    }
                    Column::Discrete(DiscreteColumn {
                        codes,
                        arity: *arity,
                    })
                }
                _ => {
                    return Err(Error::Schema(format!(
                        "column data for `{}` does not match its declared kind",
                        meta.name
                    )))
                }
            };
            columns.push(column);
        }
        Ok(Dataset {
            variables,
            columns,
            n_rows,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn variables(&self) -> &[VariableMeta] {
        &self.variables
    }

    pub fn variable(&self, i: usize) -> &VariableMeta {
        &self.variables[i]
    }

    pub fn names(&self) -> Vec<String> {
        self.variables.iter().map(|v| v.name.clone()).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    pub fn column(&self, i: usize) -> &Column {
        &self.columns[i]
    }

    pub fn is_continuous(&self, i: usize) -> bool {
        matches!(self.columns[i], Column::Continuous(_))
    }

    pub fn continuous(&self, i: usize) -> Option<&ContinuousColumn> {
        match &self.columns[i] {
            Column::Continuous(c) => Some(c),
            Column::Discrete(_) => None,
        }
    }

    pub fn discrete(&self, i: usize) -> Option<&DiscreteColumn> {
        match &self.columns[i] {
            Column::Discrete(c) => Some(c),
            Column::Continuous(_) => None,
        }
    }

    pub fn continuous_indices(&self) -> Vec<usize> {
        (0..self.n_vars()).filter(|&i| self.is_continuous(i)).collect()
    }

    pub fn discrete_indices(&self) -> Vec<usize> {
        (0..self.n_vars()).filter(|&i| !self.is_continuous(i)).collect()
    }

    /// Maps variable `i` through `policy`, naming the column on range errors.
    pub fn discretize_variable(&self, i: usize, policy: &DiscretizationPolicy) -> Result<Vec<usize>> {
        let name = &self.variables[i].name;
        match (&self.columns[i], policy) {
            (Column::Discrete(col), DiscretizationPolicy::Trivial { arity }) => {
                if *arity != col.arity {
                    return Err(Error::Policy(format!(
                        "trivial policy for `{name}` has arity {arity}, variable has {}",
                        col.arity
                    )));
                }
                Ok(col.codes.clone())
            }
            (Column::Continuous(col), DiscretizationPolicy::Intervals(p)) => {
                apply_policy(&col.values, p).map_err(|e| match e {
                    Error::OutOfRange {
                        value,
                        lower,
                        upper,
                        ..
                    } => Error::OutOfRange {
                        column: name.clone(),
                        value,
                        lower,
                        upper,
                    },
                    other => other,
                })
            }
            (Column::Discrete(_), _) => Err(Error::Policy(format!(
                "discrete variable `{name}` must carry the trivial policy"
            ))),
            (Column::Continuous(_), _) => Err(Error::Policy(format!(
                "continuous variable `{name}` cannot carry a trivial policy"
            ))),
        }
    }

    /// Materializes every column under `policies`.
    pub fn discretize(&self, policies: &NetworkPolicy) -> Result<DiscreteData> {
        policies.check_against(self)?;
        let mut columns = Vec::with_capacity(self.n_vars());
        let mut arities = Vec::with_capacity(self.n_vars());
        for i in 0..self.n_vars() {
            columns.push(self.discretize_variable(i, policies.get(i))?);
            arities.push(policies.get(i).arity());
        }
        Ok(DiscreteData::new(columns, arities))
    }

    /// Writes the data as CSV. Floats use the shortest representation that
    /// parses back to the same value.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(self.variables.iter().map(|v| v.name.as_str()))?;
        for row in 0..self.n_rows {
            let record: Vec<String> = self
                .columns
                .iter()
                .map(|c| match c {
                    Column::Continuous(c) => format_float(c.values[row]),
                    Column::Discrete(c) => c.codes[row].to_string(),
                })
                .collect();
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn schema_entries(&self) -> Vec<SchemaEntry> {
        self.variables.iter().map(SchemaEntry::from_meta).collect()
    }
}

pub(crate) fn format_float(x: f64) -> String {
    let s = format!("{x}");
    if s.contains('.') || s.contains('e') || s.contains("inf") || s.contains("NaN") {
        s
    } else {
        format!("{s}.0")
    }
}

/// Fully discretized data: one code column per variable plus its arity.
///
/// A column may be left empty when no family being scored reads it; every
/// non-empty column has the same length.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteData {
    columns: Vec<Vec<usize>>,
    arities: Vec<usize>,
    n_rows: usize,
}

impl DiscreteData {
    pub fn new(columns: Vec<Vec<usize>>, arities: Vec<usize>) -> Self {
        assert_eq!(columns.len(), arities.len());
        let n_rows = columns.iter().map(Vec::len).max().unwrap_or(0);
        assert!(
            columns.iter().all(|c| c.is_empty() || c.len() == n_rows),
            "code columns differ in length"
        );
        DiscreteData {
            columns,
            arities,
            n_rows,
        }
    }

    pub fn n_vars(&self) -> usize {
        self.columns.len()
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn column(&self, i: usize) -> &[usize] {
        &self.columns[i]
    }

    pub fn arity(&self, i: usize) -> usize {
        self.arities[i]
    }

    pub fn arities(&self) -> &[usize] {
        &self.arities
    }

    pub fn replace(&mut self, i: usize, codes: Vec<usize>, arity: usize) {
        if self.n_rows == 0 {
            self.n_rows = codes.len();
        }
        assert!(codes.is_empty() || codes.len() == self.n_rows, "code column length");
        self.columns[i] = codes;
        self.arities[i] = arity;
    }

    pub fn write_csv<W: Write>(&self, names: &[String], writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(names)?;
        for row in 0..self.n_rows() {
            w.write_record(self.columns.iter().map(|c| c[row].to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Midpoints between adjacent distinct values of an already sorted,
/// deduplicated slice.
fn midpoints(distinct: &[f64]) -> Vec<f64> {
    distinct
        .windows(2)
        .map(|w| {
            let mid = w[0] + (w[1] - w[0]) / 2.0;
            // adjacent floats: keep the upper value on the upper side
            if mid >= w[1] {
                w[0]
            } else {
                mid
            }
        })
        .collect()
}

/// Candidate thresholds for a continuous column: arithmetic midpoints between
/// contiguous distinct sorted values. A constant column yields none.
pub fn candidate_thresholds(values: &[f64]) -> Vec<f64> {
    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    midpoints(&sorted)
}

/// Threshold set plus the bounds of the two outermost intervals.
#[derive(Clone, Debug, PartialEq)]
pub struct IntervalPolicy {
    thresholds: Vec<f64>,
    lower: f64,
    upper: f64,
}

impl IntervalPolicy {
    /// `lower < t_1 < ... < t_m < upper`; with no thresholds `lower == upper`
    /// is accepted (constant column).
    pub fn new(thresholds: Vec<f64>, lower: f64, upper: f64) -> Result<Self> {
        if !lower.is_finite() || !upper.is_finite() || lower > upper {
            return Err(Error::Policy(format!("invalid bounds [{lower}, {upper}]")));
        }
        let mut prev = lower;
        for &t in &thresholds {
            if !(t > prev) || !(t < upper) {
                return Err(Error::Policy(format!(
                    "thresholds {thresholds:?} are not strictly increasing inside ({lower}, {upper})"
                )));
            }
            prev = t;
        }
        Ok(IntervalPolicy {
            thresholds,
            lower,
            upper,
        })
    }

    pub fn single(lower: f64, upper: f64) -> Result<Self> {
        Self::new(Vec::new(), lower, upper)
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.lower, self.upper)
    }

    pub fn arity(&self) -> usize {
        self.thresholds.len() + 1
    }

    /// Code of `x` without a bounds check: the number of thresholds strictly
    /// below `x`, so `x == t_k` lands in the lower interval.
    pub fn code_of(&self, x: f64) -> usize {
        self.thresholds.partition_point(|&t| t < x)
    }

    /// Edges of interval `k` (0-based). The first interval is closed at
    /// `lower`; every other interval is open on the left and closed on the
    /// right.
    pub fn interval(&self, k: usize) -> (f64, f64) {
        let left = if k == 0 { self.lower } else { self.thresholds[k - 1] };
        let right = if k == self.thresholds.len() {
            self.upper
        } else {
            self.thresholds[k]
        };
        (left, right)
    }

    pub fn contains(&self, k: usize, x: f64) -> bool {
        let (left, right) = self.interval(k);
        if k == 0 {
            left <= x && x <= right
        } else {
            left < x && x <= right
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum DiscretizationPolicy {
    /// Identity mapping of an already-discrete variable.
    Trivial { arity: usize },
    Intervals(IntervalPolicy),
}

impl DiscretizationPolicy {
    pub fn arity(&self) -> usize {
        match self {
            DiscretizationPolicy::Trivial { arity } => *arity,
            DiscretizationPolicy::Intervals(p) => p.arity(),
        }
    }

    pub fn is_trivial(&self) -> bool {
        matches!(self, DiscretizationPolicy::Trivial { .. })
    }

    pub fn intervals(&self) -> Option<&IntervalPolicy> {
        match self {
            DiscretizationPolicy::Intervals(p) => Some(p),
            DiscretizationPolicy::Trivial { .. } => None,
        }
    }
}

/// Maps every value through `policy`: code `k` for `x` in interval `k`.
pub fn apply_policy(values: &[f64], policy: &IntervalPolicy) -> Result<Vec<usize>> {
    values
        .iter()
        .map(|&x| {
            if x < policy.lower || x > policy.upper || x.is_nan() {
                Err(Error::OutOfRange {
                    column: String::new(),
                    value: x,
                    lower: policy.lower,
                    upper: policy.upper,
                })
            } else {
                Ok(policy.code_of(x))
            }
        })
        .collect()
}

/// One policy per variable, indexed like the dataset.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkPolicy(Vec<DiscretizationPolicy>);

impl NetworkPolicy {
    pub fn new(policies: Vec<DiscretizationPolicy>) -> Self {
        NetworkPolicy(policies)
    }

    /// Single-interval policies for continuous variables, trivial for
    /// discrete ones.
    pub fn coarsest(data: &Dataset) -> Self {
        NetworkPolicy(
            (0..data.n_vars())
                .map(|i| match data.column(i) {
                    Column::Discrete(c) => DiscretizationPolicy::Trivial { arity: c.arity },
                    Column::Continuous(c) => DiscretizationPolicy::Intervals(IntervalPolicy {
                        thresholds: Vec::new(),
                        lower: c.lower,
                        upper: c.upper,
                    }),
                })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> &DiscretizationPolicy {
        &self.0[i]
    }

    pub fn set(&mut self, i: usize, policy: DiscretizationPolicy) {
        self.0[i] = policy;
    }

    pub fn iter(&self) -> impl Iterator<Item = &DiscretizationPolicy> {
        self.0.iter()
    }

    pub fn arities(&self) -> Vec<usize> {
        self.0.iter().map(DiscretizationPolicy::arity).collect()
    }

    /// Totality and kind agreement with `data`.
    pub fn check_against(&self, data: &Dataset) -> Result<()> {
        if self.0.len() != data.n_vars() {
            return Err(Error::Policy(format!(
                "{} policies for {} variables",
                self.0.len(),
                data.n_vars()
            )));
        }
        for (i, p) in self.0.iter().enumerate() {
            let name = &data.variable(i).name;
            match (data.column(i), p) {
                (Column::Discrete(c), DiscretizationPolicy::Trivial { arity }) if *arity == c.arity => {}
                (Column::Discrete(c), DiscretizationPolicy::Trivial { arity }) => {
                    return Err(Error::Policy(format!(
                        "trivial policy for `{name}` has arity {arity}, variable has {}",
                        c.arity
                    )))
                }
                (Column::Discrete(_), _) => {
                    return Err(Error::Policy(format!(
                        "discrete variable `{name}` must carry the trivial policy"
                    )))
                }
                (Column::Continuous(_), DiscretizationPolicy::Trivial { .. }) => {
                    return Err(Error::Policy(format!(
                        "continuous variable `{name}` needs a threshold policy"
                    )))
                }
                (Column::Continuous(c), DiscretizationPolicy::Intervals(ip)) => {
                    if ip.lower > c.min() || ip.upper < c.max() {
                        return Err(Error::Policy(format!(
                            "bounds [{}, {}] of `{name}` do not cover the data range [{}, {}]",
                            ip.lower,
                            ip.upper,
                            c.min(),
                            c.max()
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Parses CSV text into a validated [`Dataset`].
pub fn load_dataset<R: Read>(source: R, schema: &Schema) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(Error::Validation("CSV has no header".into()));
    }
    let mut cells: Vec<Vec<String>> = vec![Vec::new(); header.len()];
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != header.len() {
            return Err(Error::Validation(format!(
                "row {} has {} fields, header has {}",
                row + 1,
                record.len(),
                header.len()
            )));
        }
        for (c, field) in record.iter().enumerate() {
            if field.is_empty() {
                return Err(Error::MissingValue {
                    row: row + 1,
                    column: header[c].clone(),
                });
            }
            cells[c].push(field.to_string());
        }
    }
    if cells[0].is_empty() {
        return Err(Error::Validation("CSV has no data rows".into()));
    }

    let parsed: Vec<Vec<f64>> = cells
        .iter()
        .enumerate()
        .map(|(c, col)| {
            col.iter()
                .enumerate()
                .map(|(row, tok)| match tok.parse::<f64>() {
                    Ok(x) if x.is_finite() => Ok(x),
                    _ => Err(Error::Parse {
                        row: row + 1,
                        column: header[c].clone(),
                        token: tok.clone(),
                    }),
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;

    let variables: Vec<VariableMeta> = match schema {
        Schema::Infer => header
            .iter()
            .enumerate()
            .map(|(c, name)| VariableMeta {
                name: name.clone(),
                kind: infer_kind(&parsed[c]),
                column_index: c,
            })
            .collect(),
        Schema::Explicit(entries) => {
            let by_name: HashMap<&str, &SchemaEntry> =
                entries.iter().map(|e| (e.name.as_str(), e)).collect();
            if by_name.len() != entries.len() {
                return Err(Error::Schema("schema lists a variable twice".into()));
            }
            for e in entries {
                if !header.contains(&e.name) {
                    return Err(Error::Schema(format!(
                        "schema variable `{}` is not a CSV column",
                        e.name
                    )));
                }
            }
            header
                .iter()
                .enumerate()
                .map(|(c, name)| {
                    let entry = by_name.get(name.as_str()).ok_or_else(|| {
                        Error::Schema(format!("CSV column `{name}` is missing from the schema"))
                    })?;
                    Ok(VariableMeta {
                        name: name.clone(),
                        kind: entry.to_kind()?,
                        column_index: c,
                    })
                })
                .collect::<Result<_>>()?
        }
    };

    let data = variables
        .iter()
        .zip(parsed)
        .map(|(meta, values)| match meta.kind {
            VariableKind::Continuous { .. } => Ok(ColumnData::Continuous(values)),
            VariableKind::Discrete { arity } => values
                .iter()
                .enumerate()
                .map(|(row, &x)| {
                    if x.fract() != 0.0 || x < 0.0 || x >= arity as f64 {
                        Err(Error::Validation(format!(
                            "value {x} at row {}, column `{}` is not a code in 0..{arity}",
                            row + 1,
                            meta.name
                        )))
                    } else {
                        Ok(x as usize)
                    }
                })
                .collect::<Result<Vec<usize>>>()
                .map(ColumnData::Discrete),
        })
        .collect::<Result<Vec<_>>>()?;

    Dataset::from_columns(variables, data)
}

fn infer_kind(values: &[f64]) -> VariableKind {
    let integral = values
        .iter()
        .all(|&x| x.fract() == 0.0 && x >= 0.0 && x < u32::MAX as f64);
    if integral {
        let distinct: BTreeSet<u64> = values.iter().map(|&x| x as u64).collect();
        if distinct.len() <= MAX_INFERRED_ARITY {
            let max = *distinct.iter().next_back().unwrap() as usize;
            return VariableKind::Discrete {
                arity: (max + 1).max(2),
            };
        }
    }
    VariableKind::Continuous { bounds: None }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load(text: &str, schema: &Schema) -> Result<Dataset> {
        load_dataset(text.as_bytes(), schema)
    }

    fn continuous_schema(names: &[&str]) -> Schema {
        Schema::Explicit(
            names
                .iter()
                .map(|n| SchemaEntry {
                    name: n.to_string(),
                    kind: SchemaKind::Continuous,
                    arity: None,
                    bounds: None,
                })
                .collect(),
        )
    }

    #[test]
    fn three_row_csv_builds_candidates() {
        let d = load("x\n1.0\n2.0\n4.0\n", &continuous_schema(&["x"])).unwrap();
        assert_eq!(d.n_rows(), 3);
        assert_eq!(d.continuous(0).unwrap().candidates(), &[1.5, 3.0]);
    }

    #[test]
    fn empty_cell_is_rejected_with_location() {
        let err = load("a,b\n1,2\n3,\n", &Schema::Infer).unwrap_err();
        match err {
            Error::MissingValue { row, column } => {
                assert_eq!(row, 2);
                assert_eq!(column, "b");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicates_collapse_before_midpoints() {
        let d = load("x\n1\n1\n2\n", &continuous_schema(&["x"])).unwrap();
        assert_eq!(d.continuous(0).unwrap().candidates(), &[1.5]);
    }

    #[test]
    fn non_numeric_token_is_a_parse_error() {
        let err = load("x\n1.0\nabc\n", &Schema::Infer).unwrap_err();
        assert!(matches!(err, Error::Parse { row: 2, .. }), "{err:?}");
    }

    #[test]
    fn discrete_code_out_of_range() {
        let schema = Schema::Explicit(vec![SchemaEntry {
            name: "d".into(),
            kind: SchemaKind::Discrete,
            arity: Some(2),
            bounds: None,
        }]);
        let err = load("d\n0\n2\n", &schema).unwrap_err();
        assert!(matches!(err, Error::Validation(_)), "{err:?}");
    }

    #[test]
    fn inference_heuristic() {
        let d = load("a,b\n0,0.5\n1,1.5\n2,2.25\n", &Schema::Infer).unwrap();
        assert_eq!(d.variable(0).kind, VariableKind::Discrete { arity: 3 });
        assert!(d.variable(1).is_continuous());

        let many: String = (0..20).map(|i| format!("{i}\n")).collect();
        let d = load(&format!("c\n{many}"), &Schema::Infer).unwrap();
        assert!(d.variable(0).is_continuous());
    }

    #[test]
    fn declared_bounds_override_and_are_checked() {
        let schema = Schema::Explicit(vec![SchemaEntry {
            name: "x".into(),
            kind: SchemaKind::Continuous,
            arity: None,
            bounds: Some([0.0, 10.0]),
        }]);
        let d = load("x\n1\n5\n", &schema).unwrap();
        assert_eq!(d.continuous(0).unwrap().bounds(), (0.0, 10.0));
        let err = load("x\n1\n11\n", &schema).unwrap_err();
        assert!(matches!(err, Error::OutOfRange { .. }));
    }

    #[test]
    fn schema_must_cover_every_column() {
        let err = load("x,y\n1,2\n", &continuous_schema(&["x"])).unwrap_err();
        assert!(matches!(err, Error::Schema(_)));
        let err = load("x\n1\n", &continuous_schema(&["x", "z"])).unwrap_err();
        assert!(matches!(err, Error::Schema(_)));
    }

    #[test]
    fn header_only_is_rejected() {
        assert!(load("x\n", &Schema::Infer).is_err());
    }

    #[test]
    fn candidate_threshold_examples() {
        assert_eq!(candidate_thresholds(&[1.0, 2.0, 4.0]), vec![1.5, 3.0]);
        assert!(candidate_thresholds(&[7.0, 7.0]).is_empty());
        assert_eq!(candidate_thresholds(&[5.0, 1.0, 3.0, 2.0, 4.0]).len(), 4);
    }

    #[test]
    fn apply_policy_examples() {
        let p = IntervalPolicy::new(vec![1.5], 1.0, 3.0).unwrap();
        assert_eq!(apply_policy(&[1.0, 2.0, 3.0], &p).unwrap(), vec![0, 1, 1]);
        assert_eq!(apply_policy(&[1.5], &p).unwrap(), vec![0]);
        let single = IntervalPolicy::single(1.0, 3.0).unwrap();
        assert_eq!(apply_policy(&[1.0, 2.0, 3.0], &single).unwrap(), vec![0, 0, 0]);
        let err = apply_policy(&[3.5], &p).unwrap_err();
        assert!(matches!(err, Error::OutOfRange { value, .. } if value == 3.5));
    }

    #[test]
    fn interval_policy_rejects_bad_thresholds() {
        assert!(IntervalPolicy::new(vec![2.0, 1.0], 0.0, 3.0).is_err());
        assert!(IntervalPolicy::new(vec![0.0], 0.0, 3.0).is_err());
        assert!(IntervalPolicy::new(vec![3.0], 0.0, 3.0).is_err());
        assert!(IntervalPolicy::new(vec![], 2.0, 1.0).is_err());
        assert!(IntervalPolicy::new(vec![], 2.0, 2.0).is_ok());
    }

    #[test]
    fn variable_meta_invariants() {
        assert!(VariableMeta::discrete("d", 0, 1).validate().is_err());
        assert!(VariableMeta::bounded("x", 0, 1.0, 1.0).validate().is_err());
        assert!(VariableMeta::bounded("x", 0, 0.0, 1.0).validate().is_ok());
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let values = vec![0.1, 1.0 / 3.0, -2.5e-7, 12345.678901234];
        let d = Dataset::from_columns(
            vec![VariableMeta::continuous("x", 0), VariableMeta::discrete("d", 1, 3)],
            vec![ColumnData::Continuous(values.clone()), ColumnData::Discrete(vec![0, 2, 1, 0])],
        )
        .unwrap();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        let schema = Schema::Explicit(d.schema_entries());
        let back = load_dataset(buf.as_slice(), &schema).unwrap();
        assert_eq!(back.continuous(0).unwrap().values(), values.as_slice());
        assert_eq!(back.discrete(1).unwrap().codes(), &[0, 2, 1, 0]);
    }

    #[test]
    fn network_policy_checks_kinds() {
        let d = Dataset::from_columns(
            vec![VariableMeta::continuous("x", 0), VariableMeta::discrete("d", 1, 2)],
            vec![ColumnData::Continuous(vec![0.0, 1.0]), ColumnData::Discrete(vec![0, 1])],
        )
        .unwrap();
        let good = NetworkPolicy::coarsest(&d);
        assert!(good.check_against(&d).is_ok());
        let bad = NetworkPolicy::new(vec![
            DiscretizationPolicy::Trivial { arity: 2 },
            DiscretizationPolicy::Trivial { arity: 2 },
        ]);
        assert!(bad.check_against(&d).is_err());
        let narrow = NetworkPolicy::new(vec![
            DiscretizationPolicy::Intervals(IntervalPolicy::single(0.5, 1.0).unwrap()),
            DiscretizationPolicy::Trivial { arity: 2 },
        ]);
        assert!(narrow.check_against(&d).is_err());
    }
}
