//! Tabular input, binarization, class balancing and fold splitting.

mod binarize;
mod csv;
mod sampling;

pub use self::binarize::{
    apply_binarizer, apply_features, fit_binarizer, BinarizationSchema, BinarizerConfig,
    FeatureSpec, Strategy, SCHEMA_VERSION,
};
pub use self::csv::{load_csv, load_unlabeled_csv, parse_csv};
pub use self::sampling::{oversample_minority, stratified_folds, Fold};

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Categorical,
    Numeric,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ColumnValues {
    Categorical(Vec<Option<String>>),
    Numeric(Vec<Option<f64>>),
}

impl ColumnValues {
    pub fn len(&self) -> usize {
        match self {
            ColumnValues::Categorical(v) => v.len(),
            ColumnValues::Numeric(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn kind(&self) -> ColumnKind {
        match self {
            ColumnValues::Categorical(_) => ColumnKind::Categorical,
            ColumnValues::Numeric(_) => ColumnKind::Numeric,
        }
    }

    fn select(&self, rows: &[usize]) -> Self {
        match self {
            ColumnValues::Categorical(v) => {
                ColumnValues::Categorical(rows.iter().map(|&i| v[i].clone()).collect())
            }
            ColumnValues::Numeric(v) => ColumnValues::Numeric(rows.iter().map(|&i| v[i]).collect()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub values: ColumnValues,
}

/// Label column of a [`RawTable`]: per-row class index plus the ordered
/// class names.
#[derive(Debug, Clone, PartialEq)]
pub struct Labels {
    pub column: String,
    pub classes: Vec<String>,
    pub values: Vec<usize>,
}

/// Feature columns as read from CSV, optionally with a label column.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    columns: Vec<Column>,
    labels: Option<Labels>,
    n_rows: usize,
}

impl RawTable {
    /// Builds a labeled table. Labels are encoded against the sorted set of
    /// distinct label strings (numeric order when all labels parse as numbers).
    pub fn new(columns: Vec<Column>, label_column: &str, labels: Vec<String>) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return Err(Error::InvalidData("zero data rows".into()));
        }
        let classes = sorted_classes(&labels);
        if classes.len() < 2 {
            return Err(Error::InvalidData(format!(
                "label column `{label_column}` has fewer than 2 distinct values"
            )));
        }
        let index: HashMap<&str, usize> = classes
            .iter()
            .enumerate()
            .map(|(i, c)| (c.as_str(), i))
            .collect();
        let values = labels.iter().map(|l| index[l.as_str()]).collect();
        let labels = Labels {
            column: label_column.to_string(),
            classes,
            values,
        };
        Self::with_labels(columns, Some(labels), n)
    }

    /// Builds a table without labels (for prediction). Zero rows is allowed.
    pub fn unlabeled(columns: Vec<Column>, n_rows: usize) -> Result<Self> {
        Self::with_labels(columns, None, n_rows)
    }

    fn with_labels(columns: Vec<Column>, labels: Option<Labels>, n_rows: usize) -> Result<Self> {
        for c in &columns {
            if c.values.len() != n_rows {
                return Err(Error::InvalidData(format!(
                    "column `{}` has {} rows, expected {n_rows}",
                    c.name,
                    c.values.len()
                )));
            }
        }
        let mut seen = BTreeSet::new();
        for c in &columns {
            if !seen.insert(c.name.as_str()) {
                return Err(Error::InvalidData(format!("duplicate column `{}`", c.name)));
            }
        }
        if let Some(l) = &labels {
            if let Some(&bad) = l.values.iter().find(|&&v| v >= l.classes.len()) {
                return Err(Error::InvalidData(format!("label index {bad} out of range")));
            }
        }
        Ok(Self {
            columns,
            labels,
            n_rows,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn labels(&self) -> Option<&Labels> {
        self.labels.as_ref()
    }

    pub fn label_values(&self) -> Result<&[usize]> {
        self.labels
            .as_ref()
            .map(|l| l.values.as_slice())
            .ok_or_else(|| Error::InvalidData("table has no label column".into()))
    }

    /// Row subset. Class names are kept even when a class loses all its rows.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self {
            columns: self
                .columns
                .iter()
                .map(|c| Column {
                    name: c.name.clone(),
                    values: c.values.select(rows),
                })
                .collect(),
            labels: self.labels.as_ref().map(|l| Labels {
                column: l.column.clone(),
                classes: l.classes.clone(),
                values: rows.iter().map(|&i| l.values[i]).collect(),
            }),
            n_rows: rows.len(),
        }
    }
}

fn sorted_classes(labels: &[String]) -> Vec<String> {
    let distinct: BTreeSet<&String> = labels.iter().collect();
    let mut classes: Vec<String> = distinct.into_iter().cloned().collect();
    let numeric: Option<Vec<f64>> = classes.iter().map(|c| c.trim().parse().ok()).collect();
    if let Some(nums) = numeric {
        let mut paired: Vec<(f64, String)> = nums.into_iter().zip(classes).collect();
        paired.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
        classes = paired.into_iter().map(|(_, c)| c).collect();
    }
    classes
}

/// n×D binary design matrix with one class index per row.
///
/// The intercept is not stored as a column; models carry a separate bias row.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryDataset {
    n: usize,
    d: usize,
    x: Vec<u8>,
    y: Vec<usize>,
    feature_names: Vec<String>,
    class_names: Vec<String>,
}

impl BinaryDataset {
    pub fn new(
        rows: Vec<Vec<u8>>,
        y: Vec<usize>,
        feature_names: Vec<String>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        let d = feature_names.len();
        if rows.len() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: rows.len(),
                got: y.len(),
            });
        }
        if class_names.len() < 2 {
            return Err(Error::InvalidData("need at least 2 classes".into()));
        }
        let mut x = Vec::with_capacity(rows.len() * d);
        for row in &rows {
            if row.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: row.len(),
                });
            }
            if row.iter().any(|&v| v > 1) {
                return Err(Error::InvalidData("feature values must be 0 or 1".into()));
            }
            x.extend_from_slice(row);
        }
        if let Some(&bad) = y.iter().find(|&&c| c >= class_names.len()) {
            return Err(Error::InvalidData(format!("class index {bad} out of range")));
        }
        Ok(Self {
            n: rows.len(),
            d,
            x,
            y,
            feature_names,
            class_names,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.n
    }

    pub fn n_features(&self) -> usize {
        self.d
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn row(&self, i: usize) -> &[u8] {
        &self.x[i * self.d..(i + 1) * self.d]
    }

    pub fn label(&self, i: usize) -> usize {
        self.y[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.y
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    /// One-hot label matrix, n×K.
    pub fn one_hot(&self) -> Vec<Vec<u8>> {
        self.y
            .iter()
            .map(|&c| {
                let mut r = vec![0; self.n_classes()];
                r[c] = 1;
                r
            })
            .collect()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for &c in &self.y {
            counts[c] += 1;
        }
        counts
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let mut x = Vec::with_capacity(rows.len() * self.d);
        for &i in rows {
            x.extend_from_slice(self.row(i));
        }
        Self {
            n: rows.len(),
            d: self.d,
            x,
            y: rows.iter().map(|&i| self.y[i]).collect(),
            feature_names: self.feature_names.clone(),
            class_names: self.class_names.clone(),
        }
    }

    /// Column subset in the given order.
    pub fn select_features(&self, features: &[usize]) -> Self {
        let mut x = Vec::with_capacity(self.n * features.len());
        for i in 0..self.n {
            let row = self.row(i);
            x.extend(features.iter().map(|&j| row[j]));
        }
        Self {
            n: self.n,
            d: features.len(),
            x,
            y: self.y.clone(),
            feature_names: features.iter().map(|&j| self.feature_names[j].clone()).collect(),
            class_names: self.class_names.clone(),
        }
    }
}
