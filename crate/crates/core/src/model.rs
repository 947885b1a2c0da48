//! The integer scorecard: prediction, probabilities, objective accounting,
//! rendering and JSON persistence.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::coef::IntCoefs;
use crate::data::{BinarizationSchema, BinaryDataset};
use crate::error::{Error, Result};
use crate::loss::LossKernel;

pub const MODEL_SCHEMA_VERSION: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelMeta {
    pub c0: f64,
    pub lambda_min: i64,
    pub lambda_max: i64,
    pub bias_min: i64,
    pub bias_max: i64,
    pub r_max: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loss: Option<f64>,
    pub optimality_gap: f64,
    pub seed: u64,
}

impl Default for ModelMeta {
    fn default() -> Self {
        Self {
            c0: 1e-6,
            lambda_min: -5,
            lambda_max: 5,
            bias_min: -20,
            bias_max: 20,
            r_max: 5,
            objective: None,
            loss: None,
            optimality_gap: 1.0,
            seed: 0,
        }
    }
}

/// A multiclass scoring system.
///
/// `lambda` is (D+1)×K: row 0 holds the per-class bias, row `j` the points
/// awarded to each class when binary feature `j - 1` is true.
#[derive(Debug, Clone, PartialEq)]
pub struct MissModel {
    lambda: IntCoefs,
    feature_names: Vec<String>,
    class_names: Vec<String>,
    pub meta: ModelMeta,
    /// Raw-column binarization, when the model was trained from a raw table.
    pub binarizer: Option<BinarizationSchema>,
}

/// Loss, penalty and their sum for a fixed model on a dataset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Objective {
    pub loss: f64,
    pub penalty: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScorecardFormat {
    Text,
    Markdown,
}

/// Count of feature rows with any nonzero coefficient; the bias row is never
/// counted.
pub fn model_size(lambda: &IntCoefs) -> usize {
    lambda.active_rows()
}

/// Softmax with max-score subtraction.
pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Index of the largest entry, lowest index on ties.
pub fn argmax<T: PartialOrd + Copy>(values: &[T]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

impl MissModel {
    pub fn new(
        lambda: IntCoefs,
        feature_names: Vec<String>,
        class_names: Vec<String>,
        meta: ModelMeta,
    ) -> Result<Self> {
        let model = Self {
            lambda,
            feature_names,
            class_names,
            meta,
            binarizer: None,
        };
        model.validate()?;
        Ok(model)
    }

    fn validate(&self) -> Result<()> {
        let (rows, cols) = (self.lambda.rows(), self.lambda.cols());
        if rows != self.feature_names.len() + 1 {
            return Err(Error::InvalidModel(format!(
                "{} coefficient rows for {} features",
                rows,
                self.feature_names.len()
            )));
        }
        if cols != self.class_names.len() || cols < 2 {
            return Err(Error::InvalidModel(format!(
                "{} coefficient columns for {} classes",
                cols,
                self.class_names.len()
            )));
        }
        let m = &self.meta;
        if let Some(&b) = self
            .lambda
            .row(0)
            .iter()
            .find(|&&b| b < m.bias_min || b > m.bias_max)
        {
            return Err(Error::InvalidModel(format!(
                "bias {b} outside [{}, {}]",
                m.bias_min, m.bias_max
            )));
        }
        for j in 1..rows {
            if let Some(&v) = self
                .lambda
                .row(j)
                .iter()
                .find(|&&v| v < m.lambda_min || v > m.lambda_max)
            {
                return Err(Error::InvalidModel(format!(
                    "coefficient {v} of `{}` outside [{}, {}]",
                    self.feature_names[j - 1],
                    m.lambda_min,
                    m.lambda_max
                )));
            }
        }
        let size = model_size(&self.lambda);
        if size > m.r_max {
            return Err(Error::InvalidModel(format!(
                "model uses {size} features, more than r_max = {}",
                m.r_max
            )));
        }
        if !(0.0..=1.0).contains(&m.optimality_gap) {
            return Err(Error::InvalidModel(format!(
                "optimality gap {} outside [0, 1]",
                m.optimality_gap
            )));
        }
        if !(m.c0 > 0.0) {
            return Err(Error::InvalidModel("c0 must be positive".into()));
        }
        Ok(())
    }

    pub fn lambda(&self) -> &IntCoefs {
        &self.lambda
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn size(&self) -> usize {
        model_size(&self.lambda)
    }

    fn check_dim(&self, x: &[u8]) -> Result<()> {
        if x.len() != self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Per-class totals: bias plus the points of every true feature.
    pub fn scores(&self, x: &[u8]) -> Result<Vec<i64>> {
        self.check_dim(x)?;
        let mut s = self.lambda.row(0).to_vec();
        for (j, &xj) in x.iter().enumerate() {
            if xj != 0 {
                for (acc, v) in s.iter_mut().zip(self.lambda.row(j + 1)) {
                    *acc += v;
                }
            }
        }
        Ok(s)
    }

    pub fn predict(&self, x: &[u8]) -> Result<usize> {
        Ok(argmax(&self.scores(x)?))
    }

    pub fn predict_proba(&self, x: &[u8]) -> Result<Vec<f64>> {
        let s: Vec<f64> = self.scores(x)?.into_iter().map(|v| v as f64).collect();
        Ok(softmax(&s))
    }

    fn check_dataset(&self, ds: &BinaryDataset) -> Result<()> {
        if ds.n_features() != self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                got: ds.n_features(),
            });
        }
        if ds.n_classes() != self.n_classes() {
            return Err(Error::DimensionMismatch {
                expected: self.n_classes(),
                got: ds.n_classes(),
            });
        }
        Ok(())
    }

    pub fn objective(&self, ds: &BinaryDataset) -> Result<Objective> {
        self.check_dataset(ds)?;
        let loss = LossKernel::new(ds).value(&self.lambda.to_real())?;
        let penalty = self.meta.c0 * self.size() as f64;
        Ok(Objective {
            loss,
            penalty,
            value: loss + penalty,
        })
    }

    /// Renders the used features, the bias and a blank score line.
    pub fn render_scorecard(&self, format: ScorecardFormat) -> String {
        let mut header = vec!["Binary feature".to_string()];
        header.extend(self.class_names.iter().cloned());
        let mut body: Vec<Vec<String>> = Vec::new();
        for j in 1..self.lambda.rows() {
            let row = self.lambda.row(j);
            if row.iter().any(|&v| v != 0) {
                let mut cells = vec![self.feature_names[j - 1].clone()];
                cells.extend(row.iter().map(|v| v.to_string()));
                body.push(cells);
            }
        }
        let mut bias = vec!["+ bias".to_string()];
        bias.extend(self.lambda.row(0).iter().map(|v| v.to_string()));
        body.push(bias);
        let mut score = vec!["Score:".to_string()];
        score.extend(self.class_names.iter().map(|_| "= ....".to_string()));
        body.push(score);

        let mut out = String::new();
        match format {
            ScorecardFormat::Markdown => {
                let line = |cells: &[String]| format!("| {} |\n", cells.join(" | "));
                out.push_str(&line(&header));
                let sep: Vec<String> = std::iter::once(":---".to_string())
                    .chain(self.class_names.iter().map(|_| "---:".to_string()))
                    .collect();
                out.push_str(&line(&sep));
                for row in &body {
                    out.push_str(&line(row));
                }
            }
            ScorecardFormat::Text => {
                let ncols = header.len();
                let widths: Vec<usize> = (0..ncols)
                    .map(|c| {
                        std::iter::once(&header)
                            .chain(&body)
                            .map(|r| r[c].chars().count())
                            .max()
                            .unwrap_or(0)
                    })
                    .collect();
                let total: usize = widths.iter().sum::<usize>() + 2 * (ncols - 1);
                let rule = "-".repeat(total);
                let emit = |out: &mut String, cells: &[String]| {
                    let mut line = String::new();
                    for (c, cell) in cells.iter().enumerate() {
                        if c == 0 {
                            let _ = write!(line, "{cell:<w$}", w = widths[0]);
                        } else {
                            let _ = write!(line, "  {cell:>w$}", w = widths[c]);
                        }
                    }
                    out.push_str(line.trim_end());
                    out.push('\n');
                };
                emit(&mut out, &header);
                out.push_str(&rule);
                out.push('\n');
                let (score_row, rows) = body.split_last().expect("score row");
                for row in rows {
                    emit(&mut out, row);
                }
                out.push_str(&rule);
                out.push('\n');
                emit(&mut out, score_row);
            }
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = ModelDocument {
            schema_version: MODEL_SCHEMA_VERSION,
            classes: self.class_names.clone(),
            features: self
                .feature_names
                .iter()
                .enumerate()
                .map(|(j, name)| FeatureDocument {
                    name: name.clone(),
                    points: self.lambda.row(j + 1).to_vec(),
                })
                .collect(),
            bias: self.lambda.row(0).to_vec(),
            meta: self.meta.clone(),
            binarizer: self.binarizer.clone(),
        };
        let mut text = serde_json::to_string_pretty(&doc)?;
        text.push('\n');
        Ok(text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let version = value
            .get("schema_version")
            .and_then(serde_json::Value::as_u64)
            .ok_or_else(|| Error::InvalidModel("missing schema_version".into()))?;
        if version != MODEL_SCHEMA_VERSION {
            return Err(Error::SchemaVersion(version));
        }
        let doc: ModelDocument = serde_json::from_value(value)?;
        let k = doc.classes.len();
        if doc.bias.len() != k {
            return Err(Error::InvalidModel(format!(
                "bias has {} entries for {k} classes",
                doc.bias.len()
            )));
        }
        let mut rows = vec![doc.bias];
        for f in &doc.features {
            if f.points.len() != k {
                return Err(Error::InvalidModel(format!(
                    "feature `{}` has {} points for {k} classes",
                    f.name,
                    f.points.len()
                )));
            }
            rows.push(f.points.clone());
        }
        let mut model = Self::new(
            IntCoefs::from_rows(rows),
            doc.features.into_iter().map(|f| f.name).collect(),
            doc.classes,
            doc.meta,
        )?;
        model.binarizer = doc.binarizer;
        Ok(model)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FeatureDocument {
    name: String,
    points: Vec<i64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDocument {
    schema_version: u64,
    classes: Vec<String>,
    features: Vec<FeatureDocument>,
    bias: Vec<i64>,
    meta: ModelMeta,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    binarizer: Option<BinarizationSchema>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn strings(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    /// Reference iris scorecard.
    pub(crate) fn iris_model() -> MissModel {
        MissModel::new(
            IntCoefs::from_rows(vec![
                vec![6, 3, 1],
                vec![1, -2, 1],
                vec![-5, 0, 5],
                vec![-5, 5, 2],
            ]),
            strings(&[
                "sepal_length < 5.4",
                "4.8 <= petal_length",
                "0.8 <= petal_width < 1.75",
            ]),
            strings(&["setosa", "versicolor", "virginica"]),
            ModelMeta::default(),
        )
        .unwrap()
    }

    fn heart_model() -> MissModel {
        MissModel::new(
            IntCoefs::from_rows(vec![
                vec![-14, -13, -13],
                vec![-4, -2, -1],
                vec![2, 1, 0],
                vec![2, 4, 5],
                vec![2, 0, -1],
                vec![2, 1, 0],
            ]),
            strings(&[
                "cp=asymptomatic",
                "restecg=normal",
                "thal=reversable defect",
                "ca=0.0",
                "0.0 <= oldpeak < 2.2",
            ]),
            strings(&["No HD", "Mediocre HD", "Severe HD"]),
            ModelMeta::default(),
        )
        .unwrap()
    }

    #[test]
    fn iris_scores_and_prediction() {
        let m = iris_model();
        assert_eq!(m.scores(&[1, 0, 0]).unwrap(), vec![7, 1, 2]);
        assert_eq!(m.predict(&[1, 0, 0]).unwrap(), 0);
        assert_eq!(m.scores(&[0, 0, 0]).unwrap(), vec![6, 3, 1]);
        assert_eq!(m.size(), 3);
    }

    #[test]
    fn heart_scores_and_prediction() {
        let m = heart_model();
        assert_eq!(m.scores(&[0, 1, 0, 1, 1]).unwrap(), vec![-8, -11, -14]);
        assert_eq!(m.predict(&[0, 1, 0, 1, 1]).unwrap(), 0);
    }

    #[test]
    fn dimension_mismatch() {
        assert!(matches!(
            iris_model().scores(&[1, 0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn tie_goes_to_lowest_class() {
        assert_eq!(argmax(&[3, 3]), 0);
        assert_eq!(argmax(&[1, 4, 4]), 1);
    }

    #[test]
    fn softmax_reference_values() {
        let p = softmax(&[1.0, 0.0]);
        assert!((p[0] - 0.7310585786300049).abs() < 1e-12);
        assert!((p[1] - 0.2689414213699951).abs() < 1e-12);
        let u = softmax(&[4.0, 4.0, 4.0, 4.0]);
        assert!(u.iter().all(|&v| (v - 0.25).abs() < 1e-15));
    }

    #[test]
    fn model_size_semantics() {
        assert_eq!(model_size(&IntCoefs::zeros(4, 3)), 0);
        let lambda = IntCoefs::from_rows(vec![vec![5, 5, 5], vec![0, -2, 0], vec![0, 0, 0]]);
        assert_eq!(model_size(&lambda), 1);
    }

    #[test]
    fn penalty_arithmetic() {
        let m = iris_model();
        let ds = BinaryDataset::new(
            vec![vec![1, 0, 0], vec![0, 1, 1]],
            vec![0, 2],
            m.feature_names().to_vec(),
            m.class_names().to_vec(),
        )
        .unwrap();
        let obj = m.objective(&ds).unwrap();
        assert!((obj.penalty - 3e-6).abs() < 1e-18);
        assert_eq!(obj.value, obj.loss + obj.penalty);
    }

    #[test]
    fn zero_model_objective_is_log_k() {
        let m = MissModel::new(
            IntCoefs::zeros(3, 4),
            strings(&["a", "b"]),
            strings(&["w", "x", "y", "z"]),
            ModelMeta::default(),
        )
        .unwrap();
        let ds = BinaryDataset::new(
            vec![vec![1, 0], vec![0, 1], vec![1, 1]],
            vec![0, 3, 1],
            strings(&["a", "b"]),
            strings(&["w", "x", "y", "z"]),
        )
        .unwrap();
        let obj = m.objective(&ds).unwrap();
        assert!((obj.value - 4f64.ln()).abs() < 1e-12);
        assert_eq!(obj.penalty, 0.0);
    }

    #[test]
    fn scorecard_rows() {
        let text = iris_model().render_scorecard(ScorecardFormat::Markdown);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2 + 3 + 2);
        assert_eq!(lines[2], "| sepal_length < 5.4 | 1 | -2 | 1 |");
        assert_eq!(lines[3], "| 4.8 <= petal_length | -5 | 0 | 5 |");
        assert_eq!(lines[4], "| 0.8 <= petal_width < 1.75 | -5 | 5 | 2 |");
        assert_eq!(lines[5], "| + bias | 6 | 3 | 1 |");
        assert!(lines[6].starts_with("| Score:"));

        let plain = iris_model().render_scorecard(ScorecardFormat::Text);
        assert!(plain.contains("setosa"));
        assert_eq!(plain.lines().count(), 1 + 1 + 4 + 1 + 1);
    }

    #[test]
    fn empty_model_renders_bias_only() {
        let m = MissModel::new(
            IntCoefs::from_rows(vec![vec![1, 0], vec![0, 0]]),
            strings(&["f"]),
            strings(&["a", "b"]),
            ModelMeta::default(),
        )
        .unwrap();
        let md = m.render_scorecard(ScorecardFormat::Markdown);
        assert_eq!(md.lines().count(), 4);
        assert!(!md.contains("| f |"));
    }

    #[test]
    fn json_round_trip() {
        let m = iris_model();
        let back = MissModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
        // Rendering does not change predictions.
        let _ = back.render_scorecard(ScorecardFormat::Markdown);
        for x in [[1, 0, 0], [0, 1, 1], [1, 1, 0]] {
            assert_eq!(back.predict(&x).unwrap(), m.predict(&x).unwrap());
        }
    }

    #[test]
    fn out_of_box_coefficient_rejected_on_load() {
        let mut doc: serde_json::Value =
            serde_json::from_str(&iris_model().to_json().unwrap()).unwrap();
        doc["features"][0]["points"][0] = serde_json::json!(7);
        let json = doc.to_string();
        assert!(matches!(
            MissModel::from_json(&json),
            Err(Error::InvalidModel(_))
        ));
    }

    #[test]
    fn version_and_unknown_fields() {
        let json = iris_model().to_json().unwrap();
        let v2 = json.replace("\"schema_version\": 1", "\"schema_version\": 2");
        assert!(matches!(MissModel::from_json(&v2), Err(Error::SchemaVersion(2))));
        let extra = json.replacen('{', "{\"extra\": 1,", 1);
        assert!(MissModel::from_json(&extra).is_err());
        assert!(MissModel::from_json("{not json").is_err());
    }

    proptest! {
        #[test]
        fn proba_is_normalized_and_consistent(
            bias in proptest::collection::vec(-20i64..=20, 3),
            pts in proptest::collection::vec(-5i64..=5, 9),
            x in proptest::collection::vec(0u8..2, 3),
        ) {
            let mut rows = vec![bias];
            rows.extend(pts.chunks(3).map(|c| c.to_vec()));
            let m = MissModel::new(
                IntCoefs::from_rows(rows),
                strings(&["a", "b", "c"]),
                strings(&["p", "q", "r"]),
                ModelMeta::default(),
            ).unwrap();
            let p = m.predict_proba(&x).unwrap();
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(p.iter().all(|&v| v > 0.0));
            let pred = m.predict(&x).unwrap();
            prop_assert_eq!(pred, argmax(&p));
        }

        #[test]
        fn predict_is_shift_invariant(s in proptest::collection::vec(-50i64..50, 2..6), c in -30i64..30) {
            let shifted: Vec<i64> = s.iter().map(|v| v + c).collect();
            prop_assert_eq!(argmax(&s), argmax(&shifted));
            let a = softmax(&s.iter().map(|&v| v as f64).collect::<Vec<_>>());
            let b = softmax(&shifted.iter().map(|&v| v as f64).collect::<Vec<_>>());
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }
    }
}
