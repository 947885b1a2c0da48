//! Weighted one-vs-rest metrics and the cross-validation driver.
//!
//! ECE uses plain equal-mass binning per class (one-vs-rest), with per-bin
//! gaps weighted by bin mass and classes weighted by support. It is not the
//! debiased estimator.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::coef::IntCoefs;
use crate::data::{
    apply_binarizer, fit_binarizer, oversample_minority, stratified_folds, BinarizationSchema,
    BinarizerConfig, BinaryDataset, RawTable,
};
use crate::error::{Error, Result};
use crate::model::MissModel;
use crate::rfa::{rfa_select, RfaConfig};
use crate::solver::{solve_miss, SolveResult, SolveStatus, SolverConfig};

const PROBA_SUM_TOL: f64 = 1e-6;

fn check_labels(y: &[usize], k: usize, what: &str) -> Result<()> {
    if let Some(&bad) = y.iter().find(|&&v| v >= k) {
        return Err(Error::Metric(format!("{what} label {bad} out of range for {k} classes")));
    }
    Ok(())
}

fn check_probs(y_true: &[usize], probs: &[Vec<f64>], k: usize) -> Result<()> {
    if y_true.is_empty() || probs.len() != y_true.len() {
        return Err(Error::Metric(format!(
            "{} probability rows for {} labels",
            probs.len(),
            y_true.len()
        )));
    }
    check_labels(y_true, k, "true")?;
    for row in probs {
        if row.len() != k {
            return Err(Error::Metric(format!("probability row of width {}", row.len())));
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > PROBA_SUM_TOL || row.iter().any(|p| !p.is_finite()) {
            return Err(Error::Metric(format!("probability row sums to {sum}")));
        }
    }
    Ok(())
}

fn supports(y: &[usize], k: usize) -> Vec<usize> {
    let mut s = vec![0; k];
    for &v in y {
        s[v] += 1;
    }
    s
}

/// Support-weighted average of per-class F1 (class vs rest).
pub fn weighted_f1(y_true: &[usize], y_pred: &[usize], k: usize) -> Result<f64> {
    if y_true.is_empty() || y_true.len() != y_pred.len() {
        return Err(Error::Metric(format!(
            "{} predictions for {} labels",
            y_pred.len(),
            y_true.len()
        )));
    }
    check_labels(y_true, k, "true")?;
    check_labels(y_pred, k, "predicted")?;
    let n = y_true.len() as f64;
    let mut total = 0.0;
    for c in 0..k {
        let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
        for (&t, &p) in y_true.iter().zip(y_pred) {
            match (t == c, p == c) {
                (true, true) => tp += 1,
                (false, true) => fp += 1,
                (true, false) => fn_ += 1,
                _ => {}
            }
        }
        let denom = 2 * tp + fp + fn_;
        let f1 = if denom == 0 {
            0.0
        } else {
            2.0 * tp as f64 / denom as f64
        };
        total += f1 * (tp + fn_) as f64 / n;
    }
    Ok(total)
}

/// Mann-Whitney AUC of `scores` for `positive`, ties credited 0.5 via midranks.
fn binary_auc(scores: &[f64], positive: &[bool]) -> f64 {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut ranks = vec![0.0; scores.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let mid = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = mid;
        }
        i = j + 1;
    }
    let p = positive.iter().filter(|&&b| b).count() as f64;
    let q = positive.len() as f64 - p;
    let rank_sum: f64 = ranks.iter().zip(positive).filter(|(_, &b)| b).map(|(r, _)| r).sum();
    (rank_sum - p * (p + 1.0) / 2.0) / (p * q)
}

/// Support-weighted one-vs-rest AUC; classes absent from `y_true` get weight 0.
pub fn weighted_ovr_auc(y_true: &[usize], probs: &[Vec<f64>], k: usize) -> Result<f64> {
    check_probs(y_true, probs, k)?;
    let support = supports(y_true, k);
    if support.iter().filter(|&&s| s > 0).count() < 2 {
        return Err(Error::Metric("AUC undefined: y_true holds a single class".into()));
    }
    let n = y_true.len() as f64;
    let mut total = 0.0;
    for c in 0..k {
        if support[c] == 0 {
            continue;
        }
        let scores: Vec<f64> = probs.iter().map(|r| r[c]).collect();
        let positive: Vec<bool> = y_true.iter().map(|&t| t == c).collect();
        total += binary_auc(&scores, &positive) * support[c] as f64 / n;
    }
    Ok(total)
}

/// Binned calibration error of one probability column against indicators.
fn binary_ece(values: &[f64], outcome: &[bool], n_bins: usize) -> f64 {
    let n = values.len();
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut thresholds: Vec<f64> = (1..n_bins).map(|b| sorted[b * n / n_bins]).collect();
    thresholds.dedup();
    let bins = thresholds.len() + 1;
    let mut count = vec![0usize; bins];
    let mut sum = vec![0.0; bins];
    let mut hits = vec![0usize; bins];
    let mut first = vec![f64::NAN; bins];
    let mut uniform = vec![true; bins];
    for (&v, &o) in values.iter().zip(outcome) {
        let b = thresholds.partition_point(|&t| t <= v);
        if count[b] == 0 {
            first[b] = v;
        } else if v != first[b] {
            uniform[b] = false;
        }
        count[b] += 1;
        sum[b] += v;
        hits[b] += usize::from(o);
    }
    (0..bins)
        .filter(|&b| count[b] > 0)
        .map(|b| {
            let m = count[b] as f64;
            let mean = if uniform[b] { first[b] } else { sum[b] / m };
            (mean - hits[b] as f64 / m).abs() * m / n as f64
        })
        .sum()
}

/// Support-weighted one-vs-rest expected calibration error with `n_bins`
/// equal-mass bins per class.
pub fn ece(y_true: &[usize], probs: &[Vec<f64>], k: usize, n_bins: usize) -> Result<f64> {
    check_probs(y_true, probs, k)?;
    if n_bins == 0 {
        return Err(Error::Metric("n_bins must be positive".into()));
    }
    let support = supports(y_true, k);
    let n = y_true.len() as f64;
    let mut total = 0.0;
    for c in 0..k {
        if support[c] == 0 {
            continue;
        }
        let values: Vec<f64> = probs.iter().map(|r| r[c]).collect();
        let outcome: Vec<bool> = y_true.iter().map(|&t| t == c).collect();
        total += binary_ece(&values, &outcome, n_bins) * support[c] as f64 / n;
    }
    Ok(total)
}

/// Binarize, balance, optionally select features, and solve.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub binarizer: BinarizerConfig,
    /// Feature indices in `solver` are ignored; forced features are given by
    /// binary feature name (or raw column name, for exclusion) below.
    pub solver: SolverConfig,
    pub force_include: Vec<String>,
    pub force_exclude: Vec<String>,
    /// Number of features for recursive feature aggregation, if enabled.
    pub rfa: Option<usize>,
    /// RFA budget; defaults to the solver time limit.
    pub rfa_time_seconds: Option<f64>,
    pub oversample: bool,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            binarizer: BinarizerConfig::default(),
            solver: SolverConfig::default(),
            force_include: Vec::new(),
            force_exclude: Vec::new(),
            rfa: None,
            rfa_time_seconds: None,
            oversample: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trained {
    /// Model over every binarized feature, carrying the fitted schema.
    pub model: MissModel,
    pub result: SolveResult,
    /// RFA selection (indices into the binarized features), if RFA ran.
    pub selected: Option<Vec<usize>>,
}

fn resolve_names(
    names: &[String],
    ds: &BinaryDataset,
    schema: &BinarizationSchema,
    allow_columns: bool,
) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for name in names {
        if let Some(i) = ds.feature_names().iter().position(|f| f == name) {
            out.push(i);
            continue;
        }
        let mut offset = 0;
        let mut found = false;
        for spec in &schema.features {
            let width = spec.binary_names().len();
            if allow_columns && spec.name() == name {
                out.extend(offset..offset + width);
                found = true;
            }
            offset += width;
        }
        if !found {
            return Err(Error::UnknownColumn(name.clone()));
        }
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// Trains one model on a labeled raw table.
pub fn train_pipeline(table: &RawTable, cfg: &PipelineConfig) -> Result<Trained> {
    let schema = fit_binarizer(table, &cfg.binarizer)?;
    let full = apply_binarizer(table, &schema)?;
    let ds = if cfg.oversample {
        oversample_minority(&full, cfg.seed)?
    } else {
        full
    };
    let include = resolve_names(&cfg.force_include, &ds, &schema, false)?;
    let exclude = resolve_names(&cfg.force_exclude, &ds, &schema, true)?;
    let solver = SolverConfig {
        force_include: include.clone(),
        force_exclude: exclude.clone(),
        feature_boxes: Vec::new(),
        seed: cfg.seed,
        ..cfg.solver.clone()
    };

    let (subset, selected) = match cfg.rfa {
        None => ((0..ds.n_features()).collect::<Vec<_>>(), None),
        Some(f) => {
            let rfa_cfg = RfaConfig {
                f,
                solver: solver.clone(),
                time_limit_seconds: cfg.rfa_time_seconds.unwrap_or(solver.time_limit_seconds),
            };
            let picked = rfa_select(&ds, &rfa_cfg)?;
            let mut subset = picked.clone();
            subset.extend(include.iter().filter(|i| !picked.contains(i)));
            subset.sort_unstable();
            (subset, Some(picked))
        }
    };
    let local = |idx: &[usize]| -> Vec<usize> {
        idx.iter()
            .filter_map(|i| subset.iter().position(|s| s == i))
            .collect()
    };
    let sub_solver = SolverConfig {
        force_include: local(&include),
        force_exclude: local(&exclude),
        ..solver
    };
    let sub = ds.select_features(&subset);
    let result = solve_miss(&sub, &sub_solver)?;

    let small = result.model.lambda();
    let mut lambda = IntCoefs::zeros(ds.n_features() + 1, ds.n_classes());
    lambda.row_mut(0).copy_from_slice(small.row(0));
    for (local_j, &j) in subset.iter().enumerate() {
        lambda.row_mut(j + 1).copy_from_slice(small.row(local_j + 1));
    }
    let mut model = MissModel::new(
        lambda,
        ds.feature_names().to_vec(),
        ds.class_names().to_vec(),
        result.model.meta.clone(),
    )?;
    model.binarizer = Some(schema);
    Ok(Trained {
        model,
        result,
        selected,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub train_size: usize,
    pub test_size: usize,
    pub f1: f64,
    pub auc: f64,
    pub ece: f64,
    pub optimality_gap: f64,
    pub objective: f64,
    pub model_size: usize,
    pub status: SolveStatus,
    /// Row indices of the held-out split, for auditing.
    #[serde(skip)]
    pub test_rows: Vec<usize>,
    #[serde(skip)]
    pub schema: Option<BinarizationSchema>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Sample standard deviation (0 for a single value).
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        Self { mean, std }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvSummary {
    pub f1: MeanStd,
    pub auc: MeanStd,
    pub ece: MeanStd,
    pub optimality_gap: MeanStd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub folds: Vec<FoldReport>,
    pub summary: CvSummary,
}

impl CvReport {
    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:>4}  {:>7}  {:>7}  {:>7}  {:>7}  {:>4}  {}",
            "fold", "f1", "auc", "ece", "gap", "size", "status"
        );
        for f in &self.folds {
            let _ = writeln!(
                out,
                "{:>4}  {:>7.4}  {:>7.4}  {:>7.4}  {:>7.4}  {:>4}  {}",
                f.fold, f.f1, f.auc, f.ece, f.optimality_gap, f.model_size, f.status
            );
        }
        let s = &self.summary;
        for (name, m) in [
            ("f1", s.f1),
            ("auc", s.auc),
            ("ece", s.ece),
            ("gap", s.optimality_gap),
        ] {
            let _ = writeln!(out, "{name:>4}  {:.4} ± {:.4}", m.mean, m.std);
        }
        out
    }
}

fn run_fold(
    table: &RawTable,
    cfg: &PipelineConfig,
    fold: usize,
    train: &[usize],
    test: &[usize],
) -> Result<FoldReport> {
    let train_table = table.select_rows(train);
    let test_table = table.select_rows(test);
    let fold_cfg = PipelineConfig {
        seed: cfg.seed.wrapping_add(fold as u64),
        ..cfg.clone()
    };
    let trained = train_pipeline(&train_table, &fold_cfg)?;
    let schema = trained.model.binarizer.clone().expect("pipeline attaches the schema");
    let test_ds = apply_binarizer(&test_table, &schema)?;
    let k = test_ds.n_classes();
    let mut pred = Vec::with_capacity(test.len());
    let mut probs = Vec::with_capacity(test.len());
    for i in 0..test_ds.n_samples() {
        pred.push(trained.model.predict(test_ds.row(i))?);
        probs.push(trained.model.predict_proba(test_ds.row(i))?);
    }
    let y = test_ds.labels();
    Ok(FoldReport {
        fold,
        train_size: train.len(),
        test_size: test.len(),
        f1: weighted_f1(y, &pred, k)?,
        auc: weighted_ovr_auc(y, &probs, k)?,
        ece: ece(y, &probs, k, 10)?,
        optimality_gap: trained.result.gap,
        objective: trained.result.v_max,
        model_size: trained.model.size(),
        status: trained.result.status,
        test_rows: test.to_vec(),
        schema: Some(schema),
    })
}

/// Stratified k-fold cross-validation of the full pipeline. Folds run on up
/// to `threads` threads; the report is ordered by fold index either way.
pub fn cross_validate(
    table: &RawTable,
    cfg: &PipelineConfig,
    k: usize,
    threads: usize,
) -> Result<CvReport> {
    let labels = table.label_values()?;
    let n_classes = table
        .labels()
        .map(|l| l.classes.len())
        .ok_or_else(|| Error::InvalidData("table has no labels".into()))?;
    let folds = stratified_folds(labels, n_classes, k, cfg.seed)?;
    let threads = threads.max(1).min(folds.len());
    let mut results: Vec<Option<Result<FoldReport>>> = (0..folds.len()).map(|_| None).collect();
    if threads == 1 {
        for (i, f) in folds.iter().enumerate() {
            results[i] = Some(run_fold(table, cfg, i, &f.train, &f.test));
        }
    } else {
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..threads)
                .map(|t| {
                    let folds = &folds;
                    scope.spawn(move || {
                        (t..folds.len())
                            .step_by(threads)
                            .map(|i| (i, run_fold(table, cfg, i, &folds[i].train, &folds[i].test)))
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            for h in handles {
                for (i, r) in h.join().expect("fold thread panicked") {
                    results[i] = Some(r);
                }
            }
        });
    }
    let folds: Vec<FoldReport> = results
        .into_iter()
        .map(|r| r.expect("every fold ran"))
        .collect::<Result<_>>()?;
    let col = |f: fn(&FoldReport) -> f64| folds.iter().map(f).collect::<Vec<_>>();
    let summary = CvSummary {
        f1: MeanStd::of(&col(|f| f.f1)),
        auc: MeanStd::of(&col(|f| f.auc)),
        ece: MeanStd::of(&col(|f| f.ece)),
        optimality_gap: MeanStd::of(&col(|f| f.optimality_gap)),
    };
    Ok(CvReport { folds, summary })
}
