//! Sequential rounding of fractional LP points and 1-opt polishing of
//! integer points. Both return integer matrices inside the global boxes whose
//! model size never exceeds `r_max`.

use crate::coef::{IntCoefs, RealCoefs};
use crate::error::{Error, Result};
use crate::loss::{LossKernel, ScoreCache};

const IMPROVEMENT_TOL: f64 = 1e-9;
const MAX_POLISH_PASSES: usize = 50;

/// The integer feasible set the heuristics work in.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    pub c0: f64,
    pub lambda_lo: IntCoefs,
    pub lambda_hi: IntCoefs,
    pub r_min: usize,
    pub r_max: usize,
    /// Feature indices (0-based, excluding the bias) that must stay active.
    pub force_include: Vec<usize>,
}

impl Lattice {
    fn check(&self, lambda_rows: usize, lambda_cols: usize) -> Result<()> {
        if self.lambda_lo.rows() != lambda_rows || self.lambda_lo.cols() != lambda_cols {
            return Err(Error::DimensionMismatch {
                expected: self.lambda_lo.as_slice().len(),
                got: lambda_rows * lambda_cols,
            });
        }
        Ok(())
    }

    fn forced(&self, row: usize) -> bool {
        row > 0 && self.force_include.contains(&(row - 1))
    }

    /// Whether `lambda` lies in the boxes and meets every size constraint.
    pub fn is_feasible(&self, lambda: &IntCoefs) -> bool {
        let in_box = lambda
            .as_slice()
            .iter()
            .zip(self.lambda_lo.as_slice().iter().zip(self.lambda_hi.as_slice()))
            .all(|(v, (lo, hi))| lo <= v && v <= hi);
        let size = lambda.active_rows();
        in_box
            && size >= self.r_min
            && size <= self.r_max
            && self
                .force_include
                .iter()
                .all(|&f| lambda.row(f + 1).iter().any(|&v| v != 0))
    }

    /// `loss + c0 * size` for an integer point.
    pub fn objective(&self, kernel: &LossKernel, lambda: &IntCoefs) -> Result<f64> {
        Ok(kernel.value(&lambda.to_real())? + self.c0 * lambda.active_rows() as f64)
    }
}

/// Nonzero-entry counts per feature row, maintained alongside a `ScoreCache`.
struct RowSupport {
    nnz: Vec<usize>,
    active: usize,
}

impl RowSupport {
    fn new(lambda: &RealCoefs) -> Self {
        let nnz: Vec<usize> = (0..lambda.rows())
            .map(|j| lambda.row(j).iter().filter(|v| **v != 0.0).count())
            .collect();
        let active = nnz.iter().skip(1).filter(|&&c| c > 0).count();
        Self { nnz, active }
    }

    /// Model size after setting entry `(j, k)` from `old` to `new`.
    fn size_after(&self, j: usize, old: f64, new: f64) -> usize {
        if j == 0 {
            return self.active;
        }
        match (old != 0.0, new != 0.0) {
            (false, true) if self.nnz[j] == 0 => self.active + 1,
            (true, false) if self.nnz[j] == 1 => self.active - 1,
            _ => self.active,
        }
    }

    fn update(&mut self, j: usize, old: f64, new: f64) {
        self.active = self.size_after(j, old, new);
        match (old != 0.0, new != 0.0) {
            (false, true) => self.nnz[j] += 1,
            (true, false) => self.nnz[j] -= 1,
            _ => {}
        }
    }
}

fn fractionality(v: f64) -> f64 {
    (v - v.floor() - 0.5).abs()
}

/// Rounds each fractional entry in turn (most fractional first, ties by
/// row-major position) to whichever of its floor and ceiling, clamped to the
/// box, gives the lower objective with every other entry held at its current
/// value. Rows are then zeroed greedily, cheapest first, until the size is at
/// most `r_max`.
pub fn sequential_rounding(
    lambda_real: &RealCoefs,
    kernel: &LossKernel,
    lattice: &Lattice,
) -> Result<IntCoefs> {
    lattice.check(lambda_real.rows(), lambda_real.cols())?;
    if !lambda_real.is_finite() {
        return Err(Error::NonFinite("lambda"));
    }
    let clamp = |j: usize, k: usize, v: f64| {
        v.max(lattice.lambda_lo[(j, k)] as f64)
            .min(lattice.lambda_hi[(j, k)] as f64)
    };
    let mut start = lambda_real.clone();
    for (j, k, v) in lambda_real.entries() {
        start[(j, k)] = clamp(j, k, v);
    }
    let mut order: Vec<(usize, usize)> = start
        .entries()
        .filter(|(_, _, v)| v.fract() != 0.0)
        .map(|(j, k, _)| (j, k))
        .collect();
    order.sort_by(|a, b| {
        fractionality(start[*a])
            .total_cmp(&fractionality(start[*b]))
            .then(a.cmp(b))
    });

    let mut cache = ScoreCache::new(kernel, start.clone())?;
    let mut support = RowSupport::new(&start);
    for (j, k) in order {
        let old = cache.lambda()[(j, k)];
        let candidates = [clamp(j, k, old.floor()), clamp(j, k, old.ceil())];
        let mut best = (f64::INFINITY, candidates[0]);
        for c in candidates {
            let obj = cache.loss_with(j, k, c) + lattice.c0 * support.size_after(j, old, c) as f64;
            if obj < best.0 {
                best = (obj, c);
            }
        }
        support.update(j, old, best.1);
        cache.set(j, k, best.1);
    }

    let mut lambda = cache.lambda().map(|v| v as i64);
    while lambda.active_rows() > lattice.r_max {
        let mut cheapest: Option<(f64, usize)> = None;
        for j in 1..lambda.rows() {
            if lattice.forced(j) || lambda.row(j).iter().all(|&v| v == 0) {
                continue;
            }
            let mut trial = lambda.clone();
            trial.row_mut(j).fill(0);
            let obj = lattice.objective(kernel, &trial)?;
            if cheapest.map_or(true, |(best, _)| obj < best) {
                cheapest = Some((obj, j));
            }
        }
        match cheapest {
            Some((_, j)) => lambda.row_mut(j).fill(0),
            // Only forced rows remain active; nothing more can be dropped.
            None => break,
        }
    }
    Ok(lambda)
}

/// Coordinate descent over single entries until no single-entry change
/// improves the objective by more than 1e-9.
///
/// Entries are scanned row-major (bias first). For each, every value in its
/// box is tried and the lowest-objective value is kept (lowest value on ties).
/// Moves that would push the size above `r_max`, below `r_min`, or deactivate
/// a force-included feature are skipped.
pub fn polish_one_opt(
    lambda_int: &IntCoefs,
    kernel: &LossKernel,
    lattice: &Lattice,
) -> Result<IntCoefs> {
    lattice.check(lambda_int.rows(), lambda_int.cols())?;
    let real = lambda_int.to_real();
    let mut cache = ScoreCache::new(kernel, real.clone())?;
    let mut support = RowSupport::new(&real);
    let mut current = cache.loss() + lattice.c0 * support.active as f64;
    for _ in 0..MAX_POLISH_PASSES {
        let mut improved = false;
        for j in 0..lambda_int.rows() {
            for k in 0..lambda_int.cols() {
                let old = cache.lambda()[(j, k)];
                let mut best = (current, old);
                for v in lattice.lambda_lo[(j, k)]..=lattice.lambda_hi[(j, k)] {
                    let v = v as f64;
                    if v == old {
                        continue;
                    }
                    let size = support.size_after(j, old, v);
                    let deactivates = j > 0 && old != 0.0 && v == 0.0 && support.nnz[j] == 1;
                    if size > lattice.r_max
                        || size < lattice.r_min.min(support.active)
                        || (deactivates && lattice.forced(j))
                    {
                        continue;
                    }
                    let obj = cache.loss_with(j, k, v) + lattice.c0 * size as f64;
                    if obj < best.0 {
                        best = (obj, v);
                    }
                }
                if best.0 < current - IMPROVEMENT_TOL {
                    support.update(j, old, best.1);
                    cache.set(j, k, best.1);
                    current = best.0;
                    improved = true;
                }
            }
        }
        if !improved {
            break;
        }
    }
    Ok(cache.lambda().map(|v| v as i64))
}
