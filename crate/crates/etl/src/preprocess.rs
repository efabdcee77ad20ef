//! Fitted, replayable feature transformations over tabular data.
//!
//! `fit_transforms` learns per-column statistics over the rows that pass the
//! spec's filters; `apply_transforms` replays them. Statistics are computed
//! order-free (values are sorted before reduction) and output rows are
//! emitted in sorted order, so fit+apply is byte-identical across runs and
//! across row-order permutations of the input.
//!
//! Missing numeric values are only legal under an `impute` directive; the
//! scaling directives (`zscore`, `minmax`, `log1p`, `passthrough`) treat an
//! empty cell as a data error.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use giglite_core::table::{fmt_f32, RawTable};

use crate::error::EtlError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "transform", rename_all = "snake_case")]
pub enum Transform {
    Zscore,
    Minmax,
    Log1p,
    /// One-hot encode. `vocab: None` learns the vocabulary from the data
    /// (sorted lexicographically); an explicit vocabulary keeps its order.
    Onehot { vocab: Option<Vec<String>> },
    Impute { strategy: ImputeStrategy },
    Passthrough,
    Drop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImputeStrategy {
    Mean,
    Constant(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub column: String,
    #[serde(flatten)]
    pub transform: Transform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

/// A row-level predicate. `eq`/`ne` compare cell text; the ordering
/// operators compare numerically, and a row whose cell is missing or
/// non-numeric fails the filter (it is dropped, not an error).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowFilter {
    pub column: String,
    pub op: FilterOp,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformSpec {
    pub columns: Vec<ColumnSpec>,
    #[serde(default)]
    pub filters: Vec<RowFilter>,
}

impl TransformSpec {
    /// A spec that passes every listed column through unchanged.
    pub fn passthrough_all(columns: &[String]) -> TransformSpec {
        TransformSpec {
            columns: columns
                .iter()
                .map(|c| ColumnSpec {
                    column: c.clone(),
                    transform: Transform::Passthrough,
                })
                .collect(),
            filters: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FittedColumn {
    Zscore { mean: f64, stddev: f64 },
    Minmax { min: f64, max: f64 },
    Log1p,
    Onehot { vocab: Vec<String> },
    Impute { value: f64 },
    Passthrough,
    Drop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedTransform {
    pub columns: Vec<(String, FittedColumn)>,
    pub filters: Vec<RowFilter>,
}

pub const TRANSFORM_HEADER: &str = "giglite-transform v1";

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ApplyReport {
    pub rows_in: usize,
    pub rows_out: usize,
    pub rows_filtered: usize,
}

fn filter_passes(filters: &[RowFilter], table: &RawTable, row: &[String]) -> Result<bool, EtlError> {
    for f in filters {
        let idx = table
            .column_index(&f.column)
            .ok_or_else(|| EtlError::Spec(format!("filter references unknown column `{}`", f.column)))?;
        let cell = &row[idx];
        let pass = match f.op {
            FilterOp::Eq => cell == &f.value,
            FilterOp::Ne => cell != &f.value,
            FilterOp::Lt | FilterOp::Le | FilterOp::Gt | FilterOp::Ge => {
                let rhs: f64 = f.value.parse().map_err(|_| {
                    EtlError::Spec(format!(
                        "filter on `{}` has non-numeric value `{}`",
                        f.column, f.value
                    ))
                })?;
                match cell.parse::<f64>() {
                    Err(_) => false,
                    Ok(lhs) => match f.op {
                        FilterOp::Lt => lhs < rhs,
                        FilterOp::Le => lhs <= rhs,
                        FilterOp::Gt => lhs > rhs,
                        FilterOp::Ge => lhs >= rhs,
                        _ => unreachable!(),
                    },
                }
            }
        };
        if !pass {
            return Ok(false);
        }
    }
    Ok(true)
}

fn check_coverage(
    table: &RawTable,
    spec: &TransformSpec,
    key_columns: &[&str],
) -> Result<(), EtlError> {
    let mut covered = BTreeSet::new();
    for cs in &spec.columns {
        if key_columns.contains(&cs.column.as_str()) {
            return Err(EtlError::Spec(format!(
                "key column `{}` must not appear in the transform spec",
                cs.column
            )));
        }
        if table.column_index(&cs.column).is_none() {
            return Err(EtlError::Spec(format!(
                "spec names column `{}` absent from the table",
                cs.column
            )));
        }
        if !covered.insert(cs.column.as_str()) {
            return Err(EtlError::Spec(format!(
                "column `{}` has more than one directive",
                cs.column
            )));
        }
    }
    for c in &table.columns {
        if !key_columns.contains(&c.as_str()) && !covered.contains(c.as_str()) {
            return Err(EtlError::Spec(format!("column `{c}` has no directive")));
        }
    }
    Ok(())
}

fn numeric_cell(cell: &str, column: &str, row: usize) -> Result<Option<f64>, EtlError> {
    if cell.is_empty() {
        return Ok(None);
    }
    let v: f64 = cell.parse().map_err(|_| EtlError::Record {
        line: row + 3,
        msg: format!("column `{column}`: not numeric: `{cell}`"),
    })?;
    if !v.is_finite() {
        return Err(EtlError::Record {
            line: row + 3,
            msg: format!("column `{column}`: non-finite value `{cell}`"),
        });
    }
    Ok(Some(v))
}

/// Sorted-reduction mean: permutation-invariant to the last bit.
fn sorted_mean(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    values.iter().sum::<f64>() / values.len() as f64
}

/// Learn per-column statistics over rows that pass the spec's filters.
///
/// Variance is population variance (divide by n), matching the replay
/// contract that transformed columns have unit *population* stddev.
pub fn fit_transforms(
    table: &RawTable,
    spec: &TransformSpec,
    key_columns: &[&str],
) -> Result<FittedTransform, EtlError> {
    check_coverage(table, spec, key_columns)?;
    let mut passing: Vec<&Vec<String>> = Vec::with_capacity(table.rows.len());
    for row in &table.rows {
        if filter_passes(&spec.filters, table, row)? {
            passing.push(row);
        }
    }

    let mut fitted = Vec::with_capacity(spec.columns.len());
    for cs in &spec.columns {
        let idx = table.column_index(&cs.column).unwrap();
        let fc = match &cs.transform {
            Transform::Passthrough => FittedColumn::Passthrough,
            Transform::Drop => FittedColumn::Drop,
            Transform::Log1p => FittedColumn::Log1p,
            Transform::Zscore => {
                let mut vals = collect_numeric(&passing, idx, &cs.column, true)?;
                let mean = sorted_mean(&mut vals);
                let mut devs: Vec<f64> = vals.iter().map(|v| (v - mean) * (v - mean)).collect();
                let var = sorted_mean(&mut devs);
                FittedColumn::Zscore {
                    mean,
                    stddev: var.sqrt(),
                }
            }
            Transform::Minmax => {
                let vals = collect_numeric(&passing, idx, &cs.column, true)?;
                let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
                let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                FittedColumn::Minmax { min, max }
            }
            Transform::Impute { strategy } => {
                let value = match strategy {
                    ImputeStrategy::Constant(c) => *c,
                    ImputeStrategy::Mean => {
                        let mut present = Vec::new();
                        for (r, row) in passing.iter().enumerate() {
                            if let Some(v) = numeric_cell(&row[idx], &cs.column, r)? {
                                present.push(v);
                            }
                        }
                        if present.is_empty() {
                            return Err(EtlError::Spec(format!(
                                "column `{}` has no present values to impute from",
                                cs.column
                            )));
                        }
                        sorted_mean(&mut present)
                    }
                };
                FittedColumn::Impute { value }
            }
            Transform::Onehot { vocab } => {
                let vocab = match vocab {
                    Some(v) => v.clone(),
                    None => {
                        let set: BTreeSet<String> = passing
                            .iter()
                            .map(|row| row[idx].clone())
                            .filter(|c| !c.is_empty())
                            .collect();
                        set.into_iter().collect()
                    }
                };
                if vocab.is_empty() {
                    return Err(EtlError::Spec(format!(
                        "column `{}`: empty one-hot vocabulary",
                        cs.column
                    )));
                }
                FittedColumn::Onehot { vocab }
            }
        };
        fitted.push((cs.column.clone(), fc));
    }
    Ok(FittedTransform {
        columns: fitted,
        filters: spec.filters.clone(),
    })
}

fn collect_numeric(
    rows: &[&Vec<String>],
    idx: usize,
    column: &str,
    required: bool,
) -> Result<Vec<f64>, EtlError> {
    let mut out = Vec::with_capacity(rows.len());
    for (r, row) in rows.iter().enumerate() {
        match numeric_cell(&row[idx], column, r)? {
            Some(v) => out.push(v),
            None if required => {
                return Err(EtlError::Record {
                    line: r + 3,
                    msg: format!(
                        "column `{column}`: missing value (use an impute directive for incomplete columns)"
                    ),
                })
            }
            None => {}
        }
    }
    if out.is_empty() {
        return Err(EtlError::Spec(format!(
            "column `{column}` needs statistics but no rows passed the filters"
        )));
    }
    Ok(out)
}

/// Replay a fitted transform over a table.
///
/// Output columns are the key columns followed by the fitted columns in spec
/// order (one-hot columns expand to `name=token`). Output rows are sorted by
/// the key cells (full row when no keys) so replay does not depend on input
/// row order.
pub fn apply_transforms(
    table: &RawTable,
    fitted: &FittedTransform,
    key_columns: &[&str],
) -> Result<(RawTable, ApplyReport), EtlError> {
    for c in &table.columns {
        if !key_columns.contains(&c.as_str())
            && !fitted.columns.iter().any(|(name, _)| name == c)
        {
            return Err(EtlError::Schema(format!(
                "column `{c}` present at apply but absent at fit"
            )));
        }
    }
    let mut key_idx = Vec::with_capacity(key_columns.len());
    for k in key_columns {
        key_idx.push(table.column_index(k).ok_or_else(|| {
            EtlError::Schema(format!("missing key column `{k}`"))
        })?);
    }

    let mut out_columns: Vec<String> = key_columns.iter().map(|s| s.to_string()).collect();
    for (name, fc) in &fitted.columns {
        match fc {
            FittedColumn::Drop => {}
            FittedColumn::Onehot { vocab } => {
                for tok in vocab {
                    out_columns.push(format!("{name}={tok}"));
                }
            }
            _ => out_columns.push(name.clone()),
        }
        if table.column_index(name).is_none() {
            return Err(EtlError::Schema(format!(
                "column `{name}` fitted but absent at apply"
            )));
        }
    }

    let mut report = ApplyReport {
        rows_in: table.rows.len(),
        ..Default::default()
    };
    let mut out_rows: Vec<Vec<String>> = Vec::with_capacity(table.rows.len());
    for (r, row) in table.rows.iter().enumerate() {
        if !filter_passes(&fitted.filters, table, row)? {
            report.rows_filtered += 1;
            continue;
        }
        let mut out = Vec::with_capacity(out_columns.len());
        for &k in &key_idx {
            out.push(row[k].clone());
        }
        for (name, fc) in &fitted.columns {
            let idx = table.column_index(name).unwrap();
            let cell = &row[idx];
            match fc {
                FittedColumn::Drop => {}
                FittedColumn::Onehot { vocab } => {
                    // Unknown tokens map to the all-zeros vector: recurring
                    // pipelines see new categories between fit and apply.
                    for tok in vocab {
                        out.push(fmt_f32(if tok == cell { 1.0 } else { 0.0 }));
                    }
                }
                FittedColumn::Zscore { mean, stddev } => {
                    let v = require_numeric(cell, name, r)?;
                    let z = if *stddev == 0.0 { 0.0 } else { (v - mean) / stddev };
                    out.push(fmt_f32(z as f32));
                }
                FittedColumn::Minmax { min, max } => {
                    let v = require_numeric(cell, name, r)?;
                    let range = max - min;
                    let m = if range == 0.0 { 0.0 } else { (v - min) / range };
                    out.push(fmt_f32(m as f32));
                }
                FittedColumn::Log1p => {
                    let v = require_numeric(cell, name, r)?;
                    if v <= -1.0 {
                        return Err(EtlError::Record {
                            line: r + 3,
                            msg: format!("column `{name}`: log1p undefined for {v}"),
                        });
                    }
                    out.push(fmt_f32(v.ln_1p() as f32));
                }
                FittedColumn::Impute { value } => {
                    let v = numeric_cell(cell, name, r)?.unwrap_or(*value);
                    out.push(fmt_f32(v as f32));
                }
                FittedColumn::Passthrough => {
                    let v = require_numeric(cell, name, r)?;
                    out.push(fmt_f32(v as f32));
                }
            }
        }
        out_rows.push(out);
    }
    let klen = key_idx.len();
    out_rows.sort_by(|a, b| {
        if klen == 0 {
            a.cmp(b)
        } else {
            a[..klen].cmp(&b[..klen]).then_with(|| a.cmp(b))
        }
    });
    report.rows_out = out_rows.len();
    let out = RawTable {
        columns: out_columns,
        rows: out_rows,
    };
    Ok((out, report))
}

fn require_numeric(cell: &str, column: &str, row: usize) -> Result<f64, EtlError> {
    numeric_cell(cell, column, row)?.ok_or_else(|| EtlError::Record {
        line: row + 3,
        msg: format!(
            "column `{column}`: missing value (use an impute directive for incomplete columns)"
        ),
    })
}

// ---------------------------------------------------------------------------
// Mergeable partial statistics (the parallel-fit contract)
// ---------------------------------------------------------------------------

/// Per-column accumulator whose `merge` is associative, for fitting as a
/// reduction over table shards. The canonical single-threaded fit path stays
/// sorted-reduction for bit-exact permutation invariance; this exists for
/// parallel fits and is tested against the canonical path.
#[derive(Debug, Clone, Default)]
pub struct PartialStats {
    pub count: u64,
    pub mean: f64,
    pub m2: f64,
    pub min: f64,
    pub max: f64,
    pub vocab: BTreeSet<String>,
}

impl PartialStats {
    pub fn new() -> Self {
        PartialStats {
            count: 0,
            mean: 0.0,
            m2: 0.0,
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
            vocab: BTreeSet::new(),
        }
    }

    pub fn observe(&mut self, v: f64) {
        self.count += 1;
        let delta = v - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (v - self.mean);
        self.min = self.min.min(v);
        self.max = self.max.max(v);
    }

    pub fn observe_token(&mut self, tok: &str) {
        if !tok.is_empty() {
            self.vocab.insert(tok.to_string());
        }
    }

    /// Chan's parallel update; associative up to floating-point rounding.
    pub fn merge(mut self, other: PartialStats) -> PartialStats {
        if other.count == 0 {
            self.vocab.extend(other.vocab);
            return self;
        }
        if self.count == 0 {
            let mut o = other;
            o.vocab.extend(std::mem::take(&mut self.vocab));
            return o;
        }
        let n1 = self.count as f64;
        let n2 = other.count as f64;
        let delta = other.mean - self.mean;
        let total = n1 + n2;
        let mean = self.mean + delta * n2 / total;
        let m2 = self.m2 + other.m2 + delta * delta * n1 * n2 / total;
        let mut vocab = self.vocab;
        vocab.extend(other.vocab);
        PartialStats {
            count: self.count + other.count,
            mean,
            m2,
            min: self.min.min(other.min),
            max: self.max.max(other.max),
            vocab,
        }
    }

    pub fn population_stddev(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.m2 / self.count as f64).sqrt()
        }
    }
}

// ---------------------------------------------------------------------------
// Artifact file
// ---------------------------------------------------------------------------

pub fn save_fitted(fitted: &FittedTransform, path: &Path) -> Result<(), EtlError> {
    let body = serde_json::to_string_pretty(fitted)
        .map_err(|e| EtlError::Spec(format!("serialize fitted transform: {e}")))?;
    std::fs::write(path, format!("{TRANSFORM_HEADER}\n{body}\n")).map_err(|e| EtlError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

pub fn load_fitted(path: &Path) -> Result<FittedTransform, EtlError> {
    let text = std::fs::read_to_string(path).map_err(|e| EtlError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let Some((header, body)) = text.split_once('\n') else {
        return Err(EtlError::Record {
            line: 1,
            msg: "empty transform artifact".to_string(),
        });
    };
    if header != TRANSFORM_HEADER {
        return Err(EtlError::Record {
            line: 1,
            msg: format!("expected header `{TRANSFORM_HEADER}`, found `{header}`"),
        });
    }
    serde_json::from_str(body).map_err(|e| EtlError::Record {
        line: 2,
        msg: format!("bad fitted transform body: {e}"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(columns: &[&str], rows: &[&[&str]]) -> RawTable {
        RawTable {
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows: rows
                .iter()
                .map(|r| r.iter().map(|s| s.to_string()).collect())
                .collect(),
        }
    }

    fn spec_one(column: &str, transform: Transform) -> TransformSpec {
        TransformSpec {
            columns: vec![ColumnSpec {
                column: column.to_string(),
                transform,
            }],
            filters: Vec::new(),
        }
    }

    #[test]
    fn zscore_fit_symmetric_sequence() {
        let t = table(&["x"], &[&["1"], &["2"], &["3"]]);
        let fitted = fit_transforms(&t, &spec_one("x", Transform::Zscore), &[]).unwrap();
        match &fitted.columns[0].1 {
            FittedColumn::Zscore { mean, stddev } => {
                assert_eq!(*mean, 2.0);
                assert!((stddev - (2.0f64 / 3.0).sqrt()).abs() < 1e-12);
                assert!((stddev - 0.81650).abs() < 1e-5);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zscore_apply_values() {
        let t = table(&["x"], &[&["1"], &["2"], &["3"]]);
        let fitted = fit_transforms(&t, &spec_one("x", Transform::Zscore), &[]).unwrap();
        let (out, _) = apply_transforms(&t, &fitted, &[]).unwrap();
        let vals: Vec<f32> = out.rows.iter().map(|r| r[0].parse().unwrap()).collect();
        // Output rows are sorted, so the order is string order of the cells.
        let mut sorted = vals.clone();
        sorted.sort_by(f32::total_cmp);
        assert!((sorted[0] + 1.22474).abs() < 1e-5);
        assert_eq!(sorted[1], 0.0);
        assert!((sorted[2] - 1.22474).abs() < 1e-5);
    }

    #[test]
    fn onehot_learned_vocab_sorted() {
        let t = table(&["c"], &[&["a"], &["b"], &["b"]]);
        let fitted = fit_transforms(&t, &spec_one("c", Transform::Onehot { vocab: None }), &[])
            .unwrap();
        match &fitted.columns[0].1 {
            FittedColumn::Onehot { vocab } => assert_eq!(vocab, &["a", "b"]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn onehot_apply_known_and_unknown() {
        let fitted = FittedTransform {
            columns: vec![(
                "c".to_string(),
                FittedColumn::Onehot {
                    vocab: vec!["a".into(), "b".into(), "c".into()],
                },
            )],
            filters: Vec::new(),
        };
        let t = table(&["c"], &[&["b"], &["z"]]);
        let (out, _) = apply_transforms(&t, &fitted, &[]).unwrap();
        assert_eq!(out.columns, vec!["c=a", "c=b", "c=c"]);
        let rows: Vec<Vec<&str>> = out
            .rows
            .iter()
            .map(|r| r.iter().map(|c| c.as_str()).collect())
            .collect();
        assert!(rows.contains(&vec!["0.0", "1.0", "0.0"]));
        assert!(rows.contains(&vec!["0.0", "0.0", "0.0"]));
    }

    #[test]
    fn impute_mean_of_present() {
        let t = table(&["x"], &[&["5"], &[""], &["7"]]);
        let fitted = fit_transforms(
            &t,
            &spec_one(
                "x",
                Transform::Impute {
                    strategy: ImputeStrategy::Mean,
                },
            ),
            &[],
        )
        .unwrap();
        match &fitted.columns[0].1 {
            FittedColumn::Impute { value } => assert_eq!(*value, 6.0),
            other => panic!("unexpected {other:?}"),
        }
        let (out, _) = apply_transforms(&t, &fitted, &[]).unwrap();
        let mut vals: Vec<f32> = out.rows.iter().map(|r| r[0].parse().unwrap()).collect();
        vals.sort_by(f32::total_cmp);
        assert_eq!(vals, vec![5.0, 6.0, 7.0]);
    }

    #[test]
    fn zero_variance_column_maps_to_zero() {
        let t = table(&["x"], &[&["4"], &["4"]]);
        let fitted = fit_transforms(&t, &spec_one("x", Transform::Zscore), &[]).unwrap();
        match &fitted.columns[0].1 {
            FittedColumn::Zscore { stddev, .. } => assert_eq!(*stddev, 0.0),
            other => panic!("unexpected {other:?}"),
        }
        let (out, _) = apply_transforms(&t, &fitted, &[]).unwrap();
        assert!(out.rows.iter().all(|r| r[0] == "0.0"));
    }

    #[test]
    fn degenerate_minmax_maps_to_zero() {
        let t = table(&["x"], &[&["4"], &["4"]]);
        let fitted = fit_transforms(&t, &spec_one("x", Transform::Minmax), &[]).unwrap();
        let (out, _) = apply_transforms(&t, &fitted, &[]).unwrap();
        assert!(out.rows.iter().all(|r| r[0] == "0.0"));
    }

    #[test]
    fn missing_cell_under_zscore_is_error() {
        let t = table(&["x"], &[&["1"], &[""]]);
        let err = fit_transforms(&t, &spec_one("x", Transform::Zscore), &[]).unwrap_err();
        assert!(matches!(err, EtlError::Record { .. }), "{err}");
    }

    #[test]
    fn uncovered_column_is_spec_error() {
        let t = table(&["x", "y"], &[&["1", "2"]]);
        let err = fit_transforms(&t, &spec_one("x", Transform::Passthrough), &[]).unwrap_err();
        assert!(matches!(err, EtlError::Spec(_)), "{err}");
    }

    #[test]
    fn apply_with_unfitted_column_is_schema_error() {
        let t = table(&["x"], &[&["1"]]);
        let fitted = fit_transforms(&t, &spec_one("x", Transform::Passthrough), &[]).unwrap();
        let wider = table(&["x", "extra"], &[&["1", "2"]]);
        let err = apply_transforms(&wider, &fitted, &[]).unwrap_err();
        assert!(matches!(err, EtlError::Schema(_)), "{err}");
    }

    #[test]
    fn empty_explicit_vocab_is_spec_error() {
        let t = table(&["c"], &[&["a"]]);
        let err = fit_transforms(
            &t,
            &spec_one(
                "c",
                Transform::Onehot {
                    vocab: Some(Vec::new()),
                },
            ),
            &[],
        )
        .unwrap_err();
        assert!(matches!(err, EtlError::Spec(_)));
    }

    #[test]
    fn filters_restrict_fit_and_apply() {
        let t = table(&["k", "x"], &[&["keep", "1"], &["drop", "100"], &["keep", "3"]]);
        let spec = TransformSpec {
            columns: vec![ColumnSpec {
                column: "x".to_string(),
                transform: Transform::Minmax,
            }],
            filters: vec![RowFilter {
                column: "k".to_string(),
                op: FilterOp::Eq,
                value: "keep".to_string(),
            }],
        };
        let fitted = fit_transforms(&t, &spec, &["k"]).unwrap();
        match &fitted.columns[0].1 {
            FittedColumn::Minmax { min, max } => {
                assert_eq!((*min, *max), (1.0, 3.0));
            }
            other => panic!("unexpected {other:?}"),
        }
        let (out, report) = apply_transforms(&t, &fitted, &["k"]).unwrap();
        assert_eq!(report.rows_filtered, 1);
        assert_eq!(out.rows.len(), 2);
    }

    #[test]
    fn replay_is_permutation_invariant() {
        let t = table(
            &["id", "x", "c"],
            &[
                &["3", "1.5", "a"],
                &["1", "2.25", "b"],
                &["2", "9.125", "a"],
                &["4", "0.5", "c"],
            ],
        );
        let mut perm = t.clone();
        perm.rows.rotate_left(2);
        perm.rows.swap(0, 1);
        let spec = TransformSpec {
            columns: vec![
                ColumnSpec {
                    column: "x".to_string(),
                    transform: Transform::Zscore,
                },
                ColumnSpec {
                    column: "c".to_string(),
                    transform: Transform::Onehot { vocab: None },
                },
            ],
            filters: Vec::new(),
        };
        let f1 = fit_transforms(&t, &spec, &["id"]).unwrap();
        let f2 = fit_transforms(&perm, &spec, &["id"]).unwrap();
        assert_eq!(f1, f2);
        let (o1, _) = apply_transforms(&t, &f1, &["id"]).unwrap();
        let (o2, _) = apply_transforms(&perm, &f2, &["id"]).unwrap();
        assert_eq!(o1.to_text(), o2.to_text());
    }

    #[test]
    fn zscore_replay_standardizes() {
        let rows: Vec<Vec<String>> = (0..50)
            .map(|i| vec![i.to_string(), format!("{}", (i * 37 % 11) as f64 + 0.25)])
            .collect();
        let t = RawTable {
            columns: vec!["id".to_string(), "x".to_string()],
            rows,
        };
        let spec = spec_one("x", Transform::Zscore);
        let fitted = fit_transforms(&t, &spec, &["id"]).unwrap();
        let (out, _) = apply_transforms(&t, &fitted, &["id"]).unwrap();
        let vals: Vec<f64> = out.rows.iter().map(|r| r[1].parse().unwrap()).collect();
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        assert!(mean.abs() < 1e-6, "mean {mean}");
        assert!((var.sqrt() - 1.0).abs() < 1e-6, "std {}", var.sqrt());
    }

    #[test]
    fn partial_stats_merge_matches_canonical() {
        let values: Vec<f64> = (0..200).map(|i| ((i * 31 % 17) as f64) * 0.375 - 3.0).collect();
        let mut whole = PartialStats::new();
        for &v in &values {
            whole.observe(v);
        }
        // Shard three ways, merge in a different association order.
        let mut parts: Vec<PartialStats> = (0..3).map(|_| PartialStats::new()).collect();
        for (i, &v) in values.iter().enumerate() {
            parts[i % 3].observe(v);
        }
        let merged = parts
            .pop()
            .unwrap()
            .merge(parts.pop().unwrap())
            .merge(parts.pop().unwrap());
        assert_eq!(merged.count, whole.count);
        assert!((merged.mean - whole.mean).abs() < 1e-9);
        assert!((merged.population_stddev() - whole.population_stddev()).abs() < 1e-9);
        assert_eq!(merged.min, whole.min);
        assert_eq!(merged.max, whole.max);

        // And against the canonical sorted reduction used by fit.
        let mut sorted_vals = values.clone();
        let mean = sorted_mean(&mut sorted_vals);
        assert!((merged.mean - mean).abs() < 1e-9);
    }

    #[test]
    fn fitted_artifact_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.transform");
        let t = table(&["x", "c"], &[&["1", "a"], &["2", "b"]]);
        let spec = TransformSpec {
            columns: vec![
                ColumnSpec {
                    column: "x".to_string(),
                    transform: Transform::Zscore,
                },
                ColumnSpec {
                    column: "c".to_string(),
                    transform: Transform::Onehot { vocab: None },
                },
            ],
            filters: Vec::new(),
        };
        let fitted = fit_transforms(&t, &spec, &[]).unwrap();
        save_fitted(&fitted, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("giglite-transform v1\n"));
        let back = load_fitted(&path).unwrap();
        assert_eq!(back, fitted);
    }

    #[test]
    fn fmt_helpers_used_consistently() {
        assert_eq!(fmt_f32(1.0), "1.0");
        assert_eq!(giglite_core::table::fmt_f64(0.5), "0.5");
    }
}
