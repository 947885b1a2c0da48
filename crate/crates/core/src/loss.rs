//! Normalized softmax cross-entropy over a coefficient matrix, its gradient,
//! and tangent cuts.
//!
//! Samples are grouped into distinct binary patterns with per-class counts;
//! the loss is accumulated over patterns in first-occurrence order, so
//! repeated evaluations are bit-identical.

use std::collections::HashMap;

use crate::coef::RealCoefs;
use crate::data::BinaryDataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
struct Pattern {
    /// Indices (0-based, excluding the bias) of features equal to 1.
    active: Vec<usize>,
    counts: Vec<f64>,
    total: f64,
}

/// Precomputed view of a dataset for repeated loss evaluation.
#[derive(Debug, Clone)]
pub struct LossKernel {
    n: f64,
    d: usize,
    k: usize,
    patterns: Vec<Pattern>,
    /// For each feature, the patterns in which it is active (ascending).
    by_feature: Vec<Vec<usize>>,
}

/// `sum_k counts[k] * (logsumexp(scores) - scores[k])`, stabilized by the
/// maximum score.
fn pattern_loss(scores: &[f64], counts: &[f64]) -> f64 {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = scores.iter().map(|s| (s - max).exp()).sum();
    let lse = max + sum.ln();
    scores
        .iter()
        .zip(counts)
        .filter(|(_, &c)| c != 0.0)
        .map(|(s, c)| c * (lse - s))
        .sum()
}

impl LossKernel {
    pub fn new(ds: &BinaryDataset) -> Self {
        let d = ds.n_features();
        let k = ds.n_classes();
        let mut index: HashMap<&[u8], usize> = HashMap::new();
        let mut patterns: Vec<Pattern> = Vec::new();
        for i in 0..ds.n_samples() {
            let row = ds.row(i);
            let p = *index.entry(row).or_insert_with(|| {
                patterns.push(Pattern {
                    active: (0..d).filter(|&j| row[j] == 1).collect(),
                    counts: vec![0.0; k],
                    total: 0.0,
                });
                patterns.len() - 1
            });
            patterns[p].counts[ds.label(i)] += 1.0;
            patterns[p].total += 1.0;
        }
        let mut by_feature = vec![Vec::new(); d];
        for (p, pat) in patterns.iter().enumerate() {
            for &j in &pat.active {
                by_feature[j].push(p);
            }
        }
        Self {
            n: ds.n_samples() as f64,
            d,
            k,
            patterns,
            by_feature,
        }
    }

    pub fn n_features(&self) -> usize {
        self.d
    }

    pub fn n_classes(&self) -> usize {
        self.k
    }

    pub fn n_patterns(&self) -> usize {
        self.patterns.len()
    }

    fn check(&self, lambda: &RealCoefs) -> Result<()> {
        if lambda.rows() != self.d + 1 {
            return Err(Error::DimensionMismatch {
                expected: self.d + 1,
                got: lambda.rows(),
            });
        }
        if lambda.cols() != self.k {
            return Err(Error::DimensionMismatch {
                expected: self.k,
                got: lambda.cols(),
            });
        }
        if !lambda.is_finite() {
            return Err(Error::NonFinite("coefficients"));
        }
        if self.n == 0.0 {
            return Err(Error::InvalidData("empty dataset".into()));
        }
        Ok(())
    }

    fn pattern_scores(&self, pat: &Pattern, lambda: &RealCoefs, out: &mut [f64]) {
        out.copy_from_slice(lambda.row(0));
        for &j in &pat.active {
            for (s, l) in out.iter_mut().zip(lambda.row(j + 1)) {
                *s += l;
            }
        }
    }

    pub fn value(&self, lambda: &RealCoefs) -> Result<f64> {
        self.check(lambda)?;
        let mut scores = vec![0.0; self.k];
        let mut total = 0.0;
        for pat in &self.patterns {
            self.pattern_scores(pat, lambda, &mut scores);
            total += pattern_loss(&scores, &pat.counts);
        }
        Ok(total / self.n)
    }

    pub fn value_and_gradient(&self, lambda: &RealCoefs) -> Result<(f64, RealCoefs)> {
        self.check(lambda)?;
        let mut grad = RealCoefs::zeros(self.d + 1, self.k);
        let mut scores = vec![0.0; self.k];
        let mut resid = vec![0.0; self.k];
        let mut total = 0.0;
        for pat in &self.patterns {
            self.pattern_scores(pat, lambda, &mut scores);
            total += pattern_loss(&scores, &pat.counts);
            let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let norm: f64 = scores.iter().map(|s| (s - max).exp()).sum();
            for k in 0..self.k {
                let prob = (scores[k] - max).exp() / norm;
                resid[k] = pat.total * prob - pat.counts[k];
            }
            for (g, r) in grad.row_mut(0).iter_mut().zip(&resid) {
                *g += r;
            }
            for &j in &pat.active {
                for (g, r) in grad.row_mut(j + 1).iter_mut().zip(&resid) {
                    *g += r;
                }
            }
        }
        let inv = 1.0 / self.n;
        for g in grad.as_mut_slice() {
            *g *= inv;
        }
        Ok((total / self.n, grad))
    }

    pub fn gradient(&self, lambda: &RealCoefs) -> Result<RealCoefs> {
        Ok(self.value_and_gradient(lambda)?.1)
    }

    pub fn cut(&self, lambda: &RealCoefs) -> Result<Cut> {
        let (value, gradient) = self.value_and_gradient(lambda)?;
        Ok(Cut {
            anchor: lambda.clone(),
            value,
            gradient,
        })
    }
}

/// Tangent hyperplane of the loss: `L >= value + <gradient, lambda - anchor>`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cut {
    pub anchor: RealCoefs,
    pub value: f64,
    pub gradient: RealCoefs,
}

impl Cut {
    pub fn evaluate(&self, lambda: &RealCoefs) -> f64 {
        let shift: f64 = self
            .gradient
            .as_slice()
            .iter()
            .zip(lambda.as_slice().iter().zip(self.anchor.as_slice()))
            .map(|(g, (l, a))| g * (l - a))
            .sum();
        self.value + shift
    }

    /// Constant term of the cut written as `L - <g, lambda> >= rhs`.
    pub fn rhs(&self) -> f64 {
        self.value - self.gradient.dot(&self.anchor)
    }
}

pub fn loss_value(lambda: &RealCoefs, ds: &BinaryDataset) -> Result<f64> {
    LossKernel::new(ds).value(lambda)
}

pub fn loss_gradient(lambda: &RealCoefs, ds: &BinaryDataset) -> Result<RealCoefs> {
    LossKernel::new(ds).gradient(lambda)
}

pub fn make_cut(lambda: &RealCoefs, ds: &BinaryDataset) -> Result<Cut> {
    LossKernel::new(ds).cut(lambda)
}

/// Per-pattern score cache supporting cheap single-entry what-if queries.
///
/// Used by the rounding and polishing heuristics. Loss values are summed over
/// all patterns in the same order as [`LossKernel::value`].
#[derive(Debug, Clone)]
pub struct ScoreCache<'a> {
    kernel: &'a LossKernel,
    lambda: RealCoefs,
    scores: Vec<f64>,
    contrib: Vec<f64>,
    scratch: Vec<f64>,
}

impl<'a> ScoreCache<'a> {
    pub fn new(kernel: &'a LossKernel, lambda: RealCoefs) -> Result<Self> {
        kernel.check(&lambda)?;
        let k = kernel.k;
        let mut scores = vec![0.0; kernel.patterns.len() * k];
        let mut contrib = Vec::with_capacity(kernel.patterns.len());
        for (p, pat) in kernel.patterns.iter().enumerate() {
            let s = &mut scores[p * k..(p + 1) * k];
            kernel.pattern_scores(pat, &lambda, s);
            contrib.push(pattern_loss(s, &pat.counts));
        }
        Ok(Self {
            kernel,
            lambda,
            scores,
            contrib,
            scratch: vec![0.0; k],
        })
    }

    pub fn lambda(&self) -> &RealCoefs {
        &self.lambda
    }

    pub fn loss(&self) -> f64 {
        self.contrib.iter().sum::<f64>() / self.kernel.n
    }

    /// Loss if entry `(j, k)` were set to `value`, everything else unchanged.
    pub fn loss_with(&mut self, j: usize, k: usize, value: f64) -> f64 {
        let delta = value - self.lambda[(j, k)];
        if delta == 0.0 {
            return self.loss();
        }
        let kk = self.kernel.k;
        let mut total = 0.0;
        if j == 0 {
            for (p, pat) in self.kernel.patterns.iter().enumerate() {
                self.scratch.copy_from_slice(&self.scores[p * kk..(p + 1) * kk]);
                self.scratch[k] += delta;
                total += pattern_loss(&self.scratch, &pat.counts);
            }
        } else {
            let affected = &self.kernel.by_feature[j - 1];
            let mut next = affected.iter().peekable();
            for (p, pat) in self.kernel.patterns.iter().enumerate() {
                if next.peek() == Some(&&p) {
                    next.next();
                    self.scratch.copy_from_slice(&self.scores[p * kk..(p + 1) * kk]);
                    self.scratch[k] += delta;
                    total += pattern_loss(&self.scratch, &pat.counts);
                } else {
                    total += self.contrib[p];
                }
            }
        }
        total / self.kernel.n
    }

    pub fn set(&mut self, j: usize, k: usize, value: f64) {
        let delta = value - self.lambda[(j, k)];
        self.lambda[(j, k)] = value;
        if delta == 0.0 {
            return;
        }
        let kk = self.kernel.k;
        let kernel = self.kernel;
        let mut update = |p: usize| {
            let s = &mut self.scores[p * kk..(p + 1) * kk];
            s[k] += delta;
            self.contrib[p] = pattern_loss(s, &kernel.patterns[p].counts);
        };
        if j == 0 {
            (0..kernel.patterns.len()).for_each(&mut update);
        } else {
            kernel.by_feature[j - 1].iter().copied().for_each(update);
        }
    }
}
