//! Turning raw numeric/categorical columns into non-overlapping binary
//! indicator features.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{BinaryDataset, ColumnKind, ColumnValues, RawTable};
use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u64 = 1;

const KMEANS_MAX_ITER: usize = 100;
const KMEANS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Uniform,
    Quantile,
    Kmeans,
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Strategy::Uniform),
            "quantile" => Ok(Strategy::Quantile),
            "kmeans" => Ok(Strategy::Kmeans),
            other => Err(Error::InvalidConfig(format!("unknown discretizer `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinarizerConfig {
    pub strategy: Strategy,
    pub n_bins: usize,
    /// Only used to seed k-means.
    pub seed: u64,
}

impl Default for BinarizerConfig {
    fn default() -> Self {
        Self {
            strategy: Strategy::Quantile,
            n_bins: 3,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum FeatureSpec {
    Categorical {
        name: String,
        categories: Vec<String>,
        /// Missing values form their own category (listed last).
        missing: bool,
    },
    Numeric {
        name: String,
        strategy: Strategy,
        cut_points: Vec<f64>,
        observed_min: f64,
        observed_max: f64,
        /// Missing values get a dedicated indicator column.
        missing: bool,
    },
}

impl FeatureSpec {
    pub fn name(&self) -> &str {
        match self {
            FeatureSpec::Categorical { name, .. } | FeatureSpec::Numeric { name, .. } => name,
        }
    }

    fn kind(&self) -> ColumnKind {
        match self {
            FeatureSpec::Categorical { .. } => ColumnKind::Categorical,
            FeatureSpec::Numeric { .. } => ColumnKind::Numeric,
        }
    }

    /// Names of the binary columns this raw feature expands into.
    pub fn binary_names(&self) -> Vec<String> {
        match self {
            FeatureSpec::Categorical {
                name,
                categories,
                missing,
            } => {
                let mut out: Vec<String> =
                    categories.iter().map(|c| format!("{name}={c}")).collect();
                if *missing {
                    out.push(format!("{name}=MISSING"));
                }
                out
            }
            FeatureSpec::Numeric {
                name,
                cut_points,
                observed_min,
                observed_max,
                missing,
                ..
            } => {
                let mut out = Vec::new();
                if !cut_points.is_empty() {
                    let mut lo = *observed_min;
                    for &c in cut_points {
                        out.push(format!("{} <= {name} < {}", fmt_bound(lo), fmt_bound(c)));
                        lo = c;
                    }
                    out.push(format!(
                        "{} <= {name} <= {}",
                        fmt_bound(lo),
                        fmt_bound(*observed_max)
                    ));
                }
                if *missing {
                    out.push(format!("{name}=MISSING"));
                }
                out
            }
        }
    }
}

fn fmt_bound(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{v:.1}")
    } else {
        format!("{v}")
    }
}

/// Fitted binarization for every raw feature column of a table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BinarizationSchema {
    pub schema_version: u64,
    pub label_column: String,
    pub classes: Vec<String>,
    pub features: Vec<FeatureSpec>,
}

impl BinarizationSchema {
    pub fn feature_names(&self) -> Vec<String> {
        self.features.iter().flat_map(FeatureSpec::binary_names).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let version = value.get("schema_version").and_then(|v| v.as_u64()).unwrap_or(0);
        if version != SCHEMA_VERSION {
            return Err(Error::SchemaVersion(version));
        }
        let schema: Self = serde_json::from_value(value)?;
        schema.validate()?;
        Ok(schema)
    }

    fn validate(&self) -> Result<()> {
        for f in &self.features {
            match f {
                FeatureSpec::Categorical { categories, .. } => {
                    let distinct: BTreeSet<&String> = categories.iter().collect();
                    if distinct.len() != categories.len() {
                        return Err(Error::InvalidData(format!(
                            "feature `{}` has duplicate categories",
                            f.name()
                        )));
                    }
                }
                FeatureSpec::Numeric {
                    cut_points,
                    observed_min,
                    observed_max,
                    ..
                } => {
                    let increasing = cut_points.windows(2).all(|w| w[0] < w[1]);
                    let inside = cut_points
                        .iter()
                        .all(|&c| c > *observed_min && c < *observed_max);
                    if !increasing || !inside {
                        return Err(Error::InvalidData(format!(
                            "feature `{}` has invalid cut points",
                            f.name()
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Fits a binarization schema on every non-label column of `table`.
///
/// Numeric columns receive at most `n_bins - 1` cut points (fewer after
/// deduplication); a constant column gets none and produces no interval
/// features. Categorical columns enumerate their observed values in sorted
/// order, followed by MISSING when any cell is empty.
pub fn fit_binarizer(table: &RawTable, config: &BinarizerConfig) -> Result<BinarizationSchema> {
    if config.n_bins < 2 {
        return Err(Error::InvalidConfig("n_bins must be at least 2".into()));
    }
    let labels = table
        .labels()
        .ok_or_else(|| Error::InvalidData("binarizer must be fit on a labeled table".into()))?;
    if table.n_rows() == 0 {
        return Err(Error::InvalidData("zero data rows".into()));
    }
    let mut features = Vec::with_capacity(table.columns().len());
    for col in table.columns() {
        let spec = match &col.values {
            ColumnValues::Categorical(values) => {
                let categories: BTreeSet<&String> = values.iter().flatten().collect();
                FeatureSpec::Categorical {
                    name: col.name.clone(),
                    categories: categories.into_iter().cloned().collect(),
                    missing: values.iter().any(Option::is_none),
                }
            }
            ColumnValues::Numeric(values) => {
                let mut observed: Vec<f64> = values.iter().flatten().copied().collect();
                observed.sort_by(f64::total_cmp);
                let (min, max) = match (observed.first(), observed.last()) {
                    (Some(&a), Some(&b)) => (a, b),
                    _ => (0.0, 0.0),
                };
                let cut_points = if min < max {
                    let raw = match config.strategy {
                        Strategy::Uniform => uniform_cuts(min, max, config.n_bins),
                        Strategy::Quantile => quantile_cuts(&observed, config.n_bins),
                        Strategy::Kmeans => kmeans_cuts(&observed, config.n_bins, config.seed),
                    };
                    clean_cuts(raw, min, max)
                } else {
                    Vec::new()
                };
                if cut_points.is_empty() {
                    log::warn!(
                        "numeric column `{}` is constant; it yields no interval features",
                        col.name
                    );
                }
                FeatureSpec::Numeric {
                    name: col.name.clone(),
                    strategy: config.strategy,
                    cut_points,
                    observed_min: min,
                    observed_max: max,
                    missing: values.iter().any(Option::is_none),
                }
            }
        };
        features.push(spec);
    }
    Ok(BinarizationSchema {
        schema_version: SCHEMA_VERSION,
        label_column: labels.column.clone(),
        classes: labels.classes.clone(),
        features,
    })
}

fn uniform_cuts(min: f64, max: f64, n_bins: usize) -> Vec<f64> {
    let width = (max - min) / n_bins as f64;
    (1..n_bins).map(|i| min + width * i as f64).collect()
}

/// Quantiles by linear interpolation between order statistics of the sorted
/// values.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn quantile_cuts(sorted: &[f64], n_bins: usize) -> Vec<f64> {
    (1..n_bins)
        .map(|i| quantile(sorted, i as f64 / n_bins as f64))
        .collect()
}

/// 1-D Lloyd's k-means with farthest-point seeding; cut points are midpoints
/// between consecutive sorted centroids.
fn kmeans_cuts(sorted: &[f64], n_bins: usize, seed: u64) -> Vec<f64> {
    let distinct: Vec<f64> = {
        let mut d = sorted.to_vec();
        d.dedup();
        d
    };
    let k = n_bins.min(distinct.len());
    if k < 2 {
        return Vec::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = vec![sorted[rng.gen_range(0..sorted.len())]];
    while centroids.len() < k {
        let mut best = (f64::NEG_INFINITY, 0.0);
        for &v in &distinct {
            let dist = centroids
                .iter()
                .map(|c| (v - c).abs())
                .fold(f64::INFINITY, f64::min);
            if dist > best.0 {
                best = (dist, v);
            }
        }
        centroids.push(best.1);
    }
    for _ in 0..KMEANS_MAX_ITER {
        let mut sums = vec![0.0; k];
        let mut counts = vec![0usize; k];
        for &v in sorted {
            let mut nearest = 0;
            for (c, &centroid) in centroids.iter().enumerate() {
                if (v - centroid).abs() < (v - centroids[nearest]).abs() {
                    nearest = c;
                }
            }
            sums[nearest] += v;
            counts[nearest] += 1;
        }
        let mut moved: f64 = 0.0;
        for c in 0..k {
            if counts[c] > 0 {
                let updated = sums[c] / counts[c] as f64;
                moved = moved.max((updated - centroids[c]).abs());
                centroids[c] = updated;
            }
        }
        if moved <= KMEANS_TOL {
            break;
        }
    }
    centroids.sort_by(f64::total_cmp);
    centroids.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
}

fn clean_cuts(mut cuts: Vec<f64>, min: f64, max: f64) -> Vec<f64> {
    cuts.retain(|&c| c > min && c < max);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    cuts
}

/// Encodes the feature columns of `table` as binary rows according to
/// `schema`, matching columns by name.
///
/// Numeric values outside the fitted range clamp into the boundary interval;
/// unseen categories produce an all-zero group.
pub fn apply_features(table: &RawTable, schema: &BinarizationSchema) -> Result<Vec<Vec<u8>>> {
    let n = table.n_rows();
    let width: usize = schema.features.iter().map(|f| f.binary_names().len()).sum();
    let mut rows = vec![Vec::with_capacity(width); n];
    for spec in &schema.features {
        let col = table
            .column(spec.name())
            .ok_or_else(|| Error::UnknownColumn(spec.name().to_string()))?;
        if n > 0 && col.values.kind() != spec.kind() {
            return Err(Error::InvalidData(format!(
                "column `{}` kind does not match the schema",
                spec.name()
            )));
        }
        match (spec, &col.values) {
            (
                FeatureSpec::Categorical {
                    categories,
                    missing,
                    ..
                },
                ColumnValues::Categorical(values),
            ) => {
                let group = categories.len() + usize::from(*missing);
                for (row, v) in rows.iter_mut().zip(values) {
                    let start = row.len();
                    row.resize(start + group, 0);
                    match v {
                        Some(v) => {
                            if let Some(pos) = categories.iter().position(|c| c == v) {
                                row[start + pos] = 1;
                            }
                        }
                        None if *missing => row[start + categories.len()] = 1,
                        None => {}
                    }
                }
            }
            (
                FeatureSpec::Numeric {
                    cut_points,
                    missing,
                    ..
                },
                ColumnValues::Numeric(values),
            ) => {
                let intervals = if cut_points.is_empty() {
                    0
                } else {
                    cut_points.len() + 1
                };
                let group = intervals + usize::from(*missing);
                for (row, v) in rows.iter_mut().zip(values) {
                    let start = row.len();
                    row.resize(start + group, 0);
                    match v {
                        Some(v) if intervals > 0 => {
                            let idx = cut_points.iter().take_while(|&&c| c <= *v).count();
                            row[start + idx] = 1;
                        }
                        Some(_) => {}
                        None if *missing => row[start + intervals] = 1,
                        None => {}
                    }
                }
            }
            // Zero-row tables carry no type information for their columns.
            _ if n == 0 => {}
            _ => unreachable!("kind checked above"),
        }
    }
    Ok(rows)
}

/// Binarizes a labeled table into a [`BinaryDataset`].
pub fn apply_binarizer(table: &RawTable, schema: &BinarizationSchema) -> Result<BinaryDataset> {
    let labels = table
        .labels()
        .ok_or_else(|| Error::InvalidData("table has no label column".into()))?;
    if labels.classes != schema.classes {
        return Err(Error::InvalidData(
            "table classes differ from the classes the schema was fit on".into(),
        ));
    }
    let rows = apply_features(table, schema)?;
    BinaryDataset::new(
        rows,
        labels.values.clone(),
        schema.feature_names(),
        schema.classes.clone(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Column;

    fn numeric_table(values: &[f64]) -> RawTable {
        let labels = (0..values.len())
            .map(|i| if i % 2 == 0 { "p" } else { "q" }.to_string())
            .collect();
        RawTable::new(
            vec![Column {
                name: "a".into(),
                values: ColumnValues::Numeric(values.iter().map(|&v| Some(v)).collect()),
            }],
            "y",
            labels,
        )
        .unwrap()
    }

    fn cuts_of(schema: &BinarizationSchema) -> Vec<f64> {
        match &schema.features[0] {
            FeatureSpec::Numeric { cut_points, .. } => cut_points.clone(),
            _ => panic!("expected numeric"),
        }
    }

    fn config(strategy: Strategy, n_bins: usize) -> BinarizerConfig {
        BinarizerConfig {
            strategy,
            n_bins,
            seed: 0,
        }
    }

    #[test]
    fn quantile_median_cut() {
        let t = numeric_table(&[4.0, 1.0, 3.0, 2.0]);
        let s = fit_binarizer(&t, &config(Strategy::Quantile, 2)).unwrap();
        // Oracle: sorted [1,2,3,4], median = (2+3)/2.
        let mut sorted = [4.0, 1.0, 3.0, 2.0];
        sorted.sort_by(f64::total_cmp);
        assert_eq!(cuts_of(&s), vec![(sorted[1] + sorted[2]) / 2.0]);
    }

    #[test]
    fn uniform_midpoint_cut() {
        let t = numeric_table(&[0.0, 10.0]);
        let s = fit_binarizer(&t, &config(Strategy::Uniform, 2)).unwrap();
        assert_eq!(cuts_of(&s), vec![5.0]);
    }

    #[test]
    fn kmeans_separates_clusters() {
        let t = numeric_table(&[0.0, 0.1, 0.2, 10.0, 10.1, 10.2]);
        let s = fit_binarizer(&t, &config(Strategy::Kmeans, 2)).unwrap();
        let cuts = cuts_of(&s);
        assert_eq!(cuts.len(), 1);
        assert!((cuts[0] - 5.1).abs() < 1e-9, "{cuts:?}");
    }

    #[test]
    fn duplicate_cuts_collapse() {
        let t = numeric_table(&[1.0, 1.0, 1.0, 1.0, 1.0, 2.0]);
        let s = fit_binarizer(&t, &config(Strategy::Quantile, 4)).unwrap();
        let cuts = cuts_of(&s);
        assert!(cuts.windows(2).all(|w| w[0] < w[1]));
        assert!(cuts.iter().all(|&c| c > 1.0 && c < 2.0));
    }

    #[test]
    fn constant_column_yields_no_features() {
        let t = numeric_table(&[3.0, 3.0, 3.0]);
        let s = fit_binarizer(&t, &config(Strategy::Uniform, 3)).unwrap();
        assert!(cuts_of(&s).is_empty());
        assert!(s.feature_names().is_empty());
    }

    #[test]
    fn categorical_with_missing() {
        let t = RawTable::new(
            vec![Column {
                name: "color".into(),
                values: ColumnValues::Categorical(vec![
                    Some("red".into()),
                    Some("blue".into()),
                    None,
                ]),
            }],
            "y",
            vec!["a".into(), "b".into(), "a".into()],
        )
        .unwrap();
        let s = fit_binarizer(&t, &BinarizerConfig::default()).unwrap();
        assert_eq!(
            s.feature_names(),
            vec!["color=blue", "color=red", "color=MISSING"]
        );
        let ds = apply_binarizer(&t, &s).unwrap();
        assert_eq!(ds.row(0), &[0, 1, 0]);
        assert_eq!(ds.row(1), &[1, 0, 0]);
        assert_eq!(ds.row(2), &[0, 0, 1]);
    }

    #[test]
    fn interval_membership_and_clamp() {
        let t = numeric_table(&[1.0, 2.0, 3.0, 4.0]);
        let s = fit_binarizer(&t, &config(Strategy::Quantile, 2)).unwrap();
        assert_eq!(s.feature_names(), vec!["1.0 <= a < 2.5", "2.5 <= a <= 4.0"]);
        let probe = numeric_table(&[2.0, 9.0, -5.0, 2.5]);
        let rows = apply_features(&probe, &s).unwrap();
        assert_eq!(rows, vec![vec![1, 0], vec![0, 1], vec![1, 0], vec![0, 1]]);
    }

    #[test]
    fn unseen_category_is_all_zero() {
        let fit = RawTable::new(
            vec![Column {
                name: "c".into(),
                values: ColumnValues::Categorical(vec![Some("x".into()), Some("y".into())]),
            }],
            "l",
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        let s = fit_binarizer(&fit, &BinarizerConfig::default()).unwrap();
        let probe = RawTable::unlabeled(
            vec![Column {
                name: "c".into(),
                values: ColumnValues::Categorical(vec![Some("z".into())]),
            }],
            1,
        )
        .unwrap();
        assert_eq!(apply_features(&probe, &s).unwrap(), vec![vec![0, 0]]);
    }

    #[test]
    fn schema_json_round_trip_and_version() {
        let t = numeric_table(&[1.0, 2.0, 3.0, 4.0]);
        let s = fit_binarizer(&t, &BinarizerConfig::default()).unwrap();
        let json = s.to_json().unwrap();
        assert_eq!(BinarizationSchema::from_json(&json).unwrap(), s);
        let bumped = json.replace("\"schema_version\": 1", "\"schema_version\": 2");
        assert!(matches!(
            BinarizationSchema::from_json(&bumped),
            Err(Error::SchemaVersion(2))
        ));
    }

    #[test]
    fn missing_column_is_a_mismatch() {
        let t = numeric_table(&[1.0, 2.0, 3.0]);
        let s = fit_binarizer(&t, &BinarizerConfig::default()).unwrap();
        let other = RawTable::unlabeled(Vec::new(), 1).unwrap();
        assert!(matches!(
            apply_features(&other, &s),
            Err(Error::UnknownColumn(_))
        ));
    }

    #[test]
    fn iris_sample_under_reference_features() {
        // Reference scorecard features: sepal_length < 5.4,
        // 4.8 <= petal_length, 0.8 <= petal_width < 1.75.
        let (sl, pl, pw) = (5.0, 1.4, 0.2);
        let x = [
            u8::from(sl < 5.4),
            u8::from(4.8 <= pl),
            u8::from(0.8 <= pw && pw < 1.75),
        ];
        assert_eq!(x, [1, 0, 0]);
        // The same membership through the interval encoder.
        let schema = BinarizationSchema {
            schema_version: 1,
            label_column: "species".into(),
            classes: vec!["a".into(), "b".into()],
            features: vec![
                FeatureSpec::Numeric {
                    name: "sepal_length".into(),
                    strategy: Strategy::Quantile,
                    cut_points: vec![5.4],
                    observed_min: 4.3,
                    observed_max: 7.9,
                    missing: false,
                },
                FeatureSpec::Numeric {
                    name: "petal_length".into(),
                    strategy: Strategy::Quantile,
                    cut_points: vec![4.8],
                    observed_min: 1.0,
                    observed_max: 6.9,
                    missing: false,
                },
                FeatureSpec::Numeric {
                    name: "petal_width".into(),
                    strategy: Strategy::Quantile,
                    cut_points: vec![0.8, 1.75],
                    observed_min: 0.1,
                    observed_max: 2.5,
                    missing: false,
                },
            ],
        };
        let table = RawTable::unlabeled(
            vec![
                Column {
                    name: "sepal_length".into(),
                    values: ColumnValues::Numeric(vec![Some(sl)]),
                },
                Column {
                    name: "petal_length".into(),
                    values: ColumnValues::Numeric(vec![Some(pl)]),
                },
                Column {
                    name: "petal_width".into(),
                    values: ColumnValues::Numeric(vec![Some(pw)]),
                },
            ],
            1,
        )
        .unwrap();
        let row = &apply_features(&table, &schema).unwrap()[0];
        // columns: [sl<5.4, sl>=5.4, pl<4.8, pl>=4.8, pw<0.8, 0.8<=pw<1.75, pw>=1.75]
        assert_eq!([row[0], row[3], row[5]], x);
    }
}
