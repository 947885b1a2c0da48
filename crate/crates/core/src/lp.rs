//! Dense bounded-variable primal simplex.
//!
//! Solves `min c'x  s.t.  a_i'x {<=,>=,=} b_i,  lo <= x <= hi` where every
//! variable has at least one finite bound. Each row gets a slack; rows whose
//! slack starts out of bounds get an artificial variable and are driven to
//! feasibility in phase 1. Pricing is largest reduced cost, switching to
//! Bland's rule after a run of degenerate pivots. The tableau is rebuilt
//! from the original matrix when the final residual check fails.

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-9;
const OPT_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-7;
const DEGENERATE_RUN: usize = 50;
const MAX_ITERATIONS: usize = 200_000;
const MAX_REFACTORS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<(usize, f64)>,
    pub kind: RowKind,
    pub rhs: f64,
}

#[derive(Debug, Clone, Default)]
pub struct LinearProgram {
    objective: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    rows: Vec<Constraint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
}

#[derive(Debug, Clone)]
pub struct LpOutcome {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a variable and returns its index.
    pub fn add_var(&mut self, cost: f64, lower: f64, upper: f64) -> usize {
        self.objective.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.objective.len() - 1
    }

    pub fn add_row(&mut self, coeffs: Vec<(usize, f64)>, kind: RowKind, rhs: f64) {
        self.rows.push(Constraint { coeffs, kind, rhs });
    }

    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Constraint] {
        &self.rows
    }

    pub fn bounds(&self, j: usize) -> (f64, f64) {
        (self.lower[j], self.upper[j])
    }

    /// Largest violation of any row or bound by `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (j, &v) in x.iter().enumerate() {
            worst = worst.max(self.lower[j] - v).max(v - self.upper[j]);
        }
        for row in &self.rows {
            let lhs: f64 = row.coeffs.iter().map(|&(j, a)| a * x[j]).sum();
            let r = match row.kind {
                RowKind::Le => lhs - row.rhs,
                RowKind::Ge => row.rhs - lhs,
                RowKind::Eq => (lhs - row.rhs).abs(),
            };
            worst = worst.max(r);
        }
        worst
    }

    pub fn solve(&self) -> Result<LpOutcome> {
        for j in 0..self.n_vars() {
            let (lo, hi) = (self.lower[j], self.upper[j]);
            if lo.is_nan() || hi.is_nan() || (lo == f64::NEG_INFINITY && hi == f64::INFINITY) {
                return Err(Error::Numerical(format!("variable {j} needs a finite bound")));
            }
            if lo > hi {
                return Ok(LpOutcome {
                    status: LpStatus::Infeasible,
                    x: Vec::new(),
                    objective: f64::NAN,
                    iterations: 0,
                });
            }
        }
        for row in &self.rows {
            if !row.rhs.is_finite() || row.coeffs.iter().any(|(_, a)| !a.is_finite()) {
                return Err(Error::Numerical("non-finite constraint data".into()));
            }
        }
        Tableau::build(self).run(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum State {
    Basic(usize),
    AtLower,
    AtUpper,
}

struct Tableau {
    m: usize,
    ncols: usize,
    n_struct: usize,
    /// Original constraint matrix including slack and artificial columns.
    a: Vec<f64>,
    b: Vec<f64>,
    /// Current `B^-1 A`, row-major m×ncols.
    t: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    cost: Vec<f64>,
    x: Vec<f64>,
    state: Vec<State>,
    basis: Vec<usize>,
    reduced: Vec<f64>,
    artificials: Vec<usize>,
    iterations: usize,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Self {
        let n = lp.n_vars();
        let m = lp.n_rows();
        let mut x = vec![0.0; n + m];
        let mut state = Vec::with_capacity(n + 2 * m);
        for j in 0..n {
            if lp.lower[j].is_finite() {
                x[j] = lp.lower[j];
                state.push(State::AtLower);
            } else {
                x[j] = lp.upper[j];
                state.push(State::AtUpper);
            }
        }
        let mut lower = lp.lower.clone();
        let mut upper = lp.upper.clone();
        let mut residual = Vec::with_capacity(m);
        for row in &lp.rows {
            let lhs: f64 = row.coeffs.iter().map(|&(j, a)| a * x[j]).sum();
            residual.push(row.rhs - lhs);
            let (lo, hi) = match row.kind {
                RowKind::Le => (0.0, f64::INFINITY),
                RowKind::Ge => (f64::NEG_INFINITY, 0.0),
                RowKind::Eq => (0.0, 0.0),
            };
            lower.push(lo);
            upper.push(hi);
        }
        let mut artificials = Vec::new();
        let mut art_sign = Vec::new();
        for (i, &r) in residual.iter().enumerate() {
            if r < lower[n + i] - FEAS_TOL || r > upper[n + i] + FEAS_TOL {
                artificials.push(i);
                art_sign.push(if r >= 0.0 { 1.0 } else { -1.0 });
            }
        }
        let ncols = n + m + artificials.len();
        let mut a = vec![0.0; m * ncols];
        for (i, row) in lp.rows.iter().enumerate() {
            for &(j, v) in &row.coeffs {
                a[i * ncols + j] += v;
            }
            a[i * ncols + n + i] = 1.0;
        }
        let mut basis: Vec<usize> = (n..n + m).collect();
        let mut cost = vec![0.0; ncols];
        for (q, (&i, &sign)) in artificials.iter().zip(&art_sign).enumerate() {
            let col = n + m + q;
            a[i * ncols + col] = sign;
            basis[i] = col;
            lower.push(0.0);
            upper.push(f64::INFINITY);
            cost[col] = 1.0;
        }
        x.resize(ncols, 0.0);
        for i in 0..m {
            let slack = n + i;
            if basis[i] == slack {
                state.push(State::Basic(i));
                x[slack] = residual[i];
            } else {
                // Slack parked at its finite bound, which is zero for every row kind.
                state.push(if lower[slack].is_finite() {
                    State::AtLower
                } else {
                    State::AtUpper
                });
                x[slack] = 0.0;
            }
        }
        for (q, &i) in artificials.iter().enumerate() {
            state.push(State::Basic(i));
            x[n + m + q] = residual[i].abs();
        }
        let b = lp.rows.iter().map(|r| r.rhs).collect();
        // The initial basis is diagonal with entries +-1.
        let mut t = a.clone();
        for (i, &col) in basis.iter().enumerate() {
            let d = a[i * ncols + col];
            if d != 1.0 {
                for v in &mut t[i * ncols..(i + 1) * ncols] {
                    *v /= d;
                }
            }
        }
        let artificial_cols = (n + m..ncols).collect();
        let mut tab = Self {
            m,
            ncols,
            n_struct: n,
            a,
            b,
            t,
            lower,
            upper,
            cost,
            x,
            state,
            basis,
            reduced: vec![0.0; ncols],
            artificials: artificial_cols,
            iterations: 0,
        };
        tab.compute_reduced_costs();
        tab
    }

    fn compute_reduced_costs(&mut self) {
        self.reduced.copy_from_slice(&self.cost);
        for i in 0..self.m {
            let cb = self.cost[self.basis[i]];
            if cb != 0.0 {
                let row = &self.t[i * self.ncols..(i + 1) * self.ncols];
                for (d, &v) in self.reduced.iter_mut().zip(row) {
                    *d -= cb * v;
                }
            }
        }
        for &j in &self.basis {
            self.reduced[j] = 0.0;
        }
    }

    fn run(mut self, lp: &LinearProgram) -> Result<LpOutcome> {
        if !self.artificials.is_empty() {
            self.iterate()?;
            let infeasibility: f64 = self.artificials.iter().map(|&j| self.x[j]).sum();
            if infeasibility > FEAS_TOL {
                return Ok(LpOutcome {
                    status: LpStatus::Infeasible,
                    x: Vec::new(),
                    objective: f64::NAN,
                    iterations: self.iterations,
                });
            }
            for &j in &self.artificials {
                self.upper[j] = 0.0;
                self.cost[j] = 0.0;
                if !matches!(self.state[j], State::Basic(_)) {
                    self.state[j] = State::AtLower;
                    self.x[j] = 0.0;
                }
            }
        }
        for j in 0..self.n_struct {
            self.cost[j] = lp.objective[j];
        }
        self.compute_reduced_costs();
        let mut refactors = 0;
        loop {
            self.iterate()?;
            let x = self.x[..self.n_struct].to_vec();
            let violation = lp.max_violation(&x);
            if violation <= FEAS_TOL {
                let objective = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
                return Ok(LpOutcome {
                    status: LpStatus::Optimal,
                    x,
                    objective,
                    iterations: self.iterations,
                });
            }
            refactors += 1;
            if refactors > MAX_REFACTORS {
                return Err(Error::Numerical(format!(
                    "residual {violation:.3e} after {MAX_REFACTORS} refactorizations"
                )));
            }
            self.refactor()?;
        }
    }

    /// Runs simplex iterations on the current cost vector until optimal.
    fn iterate(&mut self) -> Result<()> {
        let mut degenerate = 0usize;
        loop {
            if self.iterations >= MAX_ITERATIONS {
                return Err(Error::Numerical("iteration limit reached".into()));
            }
            let bland = degenerate >= DEGENERATE_RUN;
            let Some((entering, dir)) = self.price(bland) else {
                return Ok(());
            };
            self.iterations += 1;
            let step = self.ratio_test(entering, dir, bland)?;
            if step.length <= 1e-12 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.apply(entering, dir, step);
        }
    }

    fn price(&self, bland: bool) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        let mut best_score = 0.0;
        for j in 0..self.ncols {
            let d = self.reduced[j];
            let dir = match self.state[j] {
                State::Basic(_) => continue,
                State::AtLower if d < -OPT_TOL && self.upper[j] > self.lower[j] => 1.0,
                State::AtUpper if d > OPT_TOL && self.upper[j] > self.lower[j] => -1.0,
                _ => continue,
            };
            if bland {
                return Some((j, dir));
            }
            if d.abs() > best_score {
                best_score = d.abs();
                best = Some((j, dir));
            }
        }
        best
    }

    fn ratio_test(&self, entering: usize, dir: f64, bland: bool) -> Result<Step> {
        if bland {
            return self.ratio_test_textbook(entering, dir);
        }
        // Harris two-pass: find the largest step allowed with bounds relaxed
        // by FEAS_TOL, then take the biggest pivot among rows that block
        // within it. Keeps tiny pivots out of the basis.
        let flip = self.upper[entering] - self.lower[entering];
        let mut relaxed = flip;
        for i in 0..self.m {
            let alpha = dir * self.t[i * self.ncols + entering];
            if let Some(room) = self.room(i, alpha) {
                relaxed = relaxed.min((room + FEAS_TOL) / alpha.abs());
            }
        }
        if !relaxed.is_finite() {
            return Err(Error::Numerical("LP is unbounded".into()));
        }
        if flip <= relaxed {
            return Ok(Step { length: flip, leaving: None });
        }
        let mut best: Option<(usize, bool, f64, f64)> = None;
        for i in 0..self.m {
            let alpha = dir * self.t[i * self.ncols + entering];
            let Some(room) = self.room(i, alpha) else {
                continue;
            };
            let limit = room.max(0.0) / alpha.abs();
            if limit <= relaxed && best.map_or(true, |(_, _, _, mag)| alpha.abs() > mag) {
                best = Some((i, alpha < 0.0, limit, alpha.abs()));
            }
        }
        match best {
            Some((i, to_upper, limit, _)) => Ok(Step {
                length: limit,
                leaving: Some((i, to_upper)),
            }),
            None => self.ratio_test_textbook(entering, dir),
        }
    }

    /// Distance the basic variable of row `i` can travel before it hits the
    /// bound it moves toward, or None when that bound is infinite or the
    /// entry is below the pivot tolerance.
    fn room(&self, i: usize, alpha: f64) -> Option<f64> {
        if alpha.abs() <= PIVOT_TOL {
            return None;
        }
        let bv = self.basis[i];
        if alpha > 0.0 {
            self.lower[bv].is_finite().then(|| self.x[bv] - self.lower[bv])
        } else {
            self.upper[bv].is_finite().then(|| self.upper[bv] - self.x[bv])
        }
    }

    /// Plain minimum-ratio test with Bland tie-breaking, used once pricing
    /// has switched to Bland's rule.
    fn ratio_test_textbook(&self, entering: usize, dir: f64) -> Result<Step> {
        let mut length = self.upper[entering] - self.lower[entering];
        let mut leaving: Option<(usize, bool)> = None;
        for i in 0..self.m {
            let alpha = dir * self.t[i * self.ncols + entering];
            let Some(room) = self.room(i, alpha) else {
                continue;
            };
            let limit = room.max(0.0) / alpha.abs();
            let take = if limit < length - 1e-12 {
                true
            } else if limit <= length + 1e-12 {
                match leaving {
                    None => false,
                    Some((r, _)) => self.basis[i] < self.basis[r],
                }
            } else {
                false
            };
            if take {
                length = length.min(limit);
                leaving = Some((i, alpha < 0.0));
            }
        }
        if !length.is_finite() {
            return Err(Error::Numerical("LP is unbounded".into()));
        }
        Ok(Step { length, leaving })
    }

    fn apply(&mut self, entering: usize, dir: f64, step: Step) {
        let nc = self.ncols;
        if step.length != 0.0 {
            for i in 0..self.m {
                let alpha = self.t[i * nc + entering];
                if alpha != 0.0 {
                    let bv = self.basis[i];
                    self.x[bv] -= dir * alpha * step.length;
                }
            }
            self.x[entering] += dir * step.length;
        }
        match step.leaving {
            None => {
                // Bound flip.
                if dir > 0.0 {
                    self.state[entering] = State::AtUpper;
                    self.x[entering] = self.upper[entering];
                } else {
                    self.state[entering] = State::AtLower;
                    self.x[entering] = self.lower[entering];
                }
            }
            Some((r, to_upper)) => {
                let leaving = self.basis[r];
                if to_upper {
                    self.state[leaving] = State::AtUpper;
                    self.x[leaving] = self.upper[leaving];
                } else {
                    self.state[leaving] = State::AtLower;
                    self.x[leaving] = self.lower[leaving];
                }
                self.pivot(r, entering);
            }
        }
    }

    fn pivot(&mut self, r: usize, entering: usize) {
        let nc = self.ncols;
        let piv = self.t[r * nc + entering];
        {
            let row = &mut self.t[r * nc..(r + 1) * nc];
            for v in row.iter_mut() {
                *v /= piv;
            }
            row[entering] = 1.0;
        }
        let (before, rest) = self.t.split_at_mut(r * nc);
        let (prow, after) = rest.split_at_mut(nc);
        for row in before.chunks_exact_mut(nc).chain(after.chunks_exact_mut(nc)) {
            let f = row[entering];
            if f != 0.0 {
                for (v, p) in row.iter_mut().zip(prow.iter()) {
                    *v -= f * p;
                }
                row[entering] = 0.0;
            }
        }
        let f = self.reduced[entering];
        if f != 0.0 {
            for (d, p) in self.reduced.iter_mut().zip(prow.iter()) {
                *d -= f * p;
            }
            self.reduced[entering] = 0.0;
        }
        self.basis[r] = entering;
        self.state[entering] = State::Basic(r);
    }

    /// Rebuilds `B^-1 A`, basic values and reduced costs from the original
    /// matrix by Gauss-Jordan elimination on the current basis.
    fn refactor(&mut self) -> Result<()> {
        let (m, nc) = (self.m, self.ncols);
        let mut binv = vec![0.0; m * m];
        let mut bmat = vec![0.0; m * m];
        for i in 0..m {
            binv[i * m + i] = 1.0;
            for (c, &col) in self.basis.iter().enumerate() {
                bmat[i * m + c] = self.a[i * nc + col];
            }
        }
        for c in 0..m {
            let p = (c..m)
                .max_by(|&x, &y| bmat[x * m + c].abs().total_cmp(&bmat[y * m + c].abs()))
                .unwrap();
            let piv = bmat[p * m + c];
            if piv.abs() < 1e-12 {
                return Err(Error::Numerical("singular basis".into()));
            }
            for k in 0..m {
                bmat.swap(c * m + k, p * m + k);
                binv.swap(c * m + k, p * m + k);
            }
            for k in 0..m {
                bmat[c * m + k] /= piv;
                binv[c * m + k] /= piv;
            }
            for i in 0..m {
                if i != c {
                    let f = bmat[i * m + c];
                    if f != 0.0 {
                        for k in 0..m {
                            bmat[i * m + k] -= f * bmat[c * m + k];
                            binv[i * m + k] -= f * binv[c * m + k];
                        }
                    }
                }
            }
        }
        let mut t = vec![0.0; m * nc];
        for i in 0..m {
            for k in 0..m {
                let f = binv[i * m + k];
                if f != 0.0 {
                    for j in 0..nc {
                        t[i * nc + j] += f * self.a[k * nc + j];
                    }
                }
            }
        }
        self.t = t;
        let mut rhs = self.b.clone();
        for j in 0..nc {
            if !matches!(self.state[j], State::Basic(_)) && self.x[j] != 0.0 {
                for (i, r) in rhs.iter_mut().enumerate() {
                    *r -= self.a[i * nc + j] * self.x[j];
                }
            }
        }
        for i in 0..m {
            let v: f64 = (0..m).map(|k| binv[i * m + k] * rhs[k]).sum();
            self.x[self.basis[i]] = v;
        }
        self.compute_reduced_costs();
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
struct Step {
    length: f64,
    leaving: Option<(usize, bool)>,
}
