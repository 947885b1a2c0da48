//! The surrogate LP: objective `V = L + c0 R`, L0 indicators `alpha`/`beta`,
//! a globally shared pool of loss cuts, and bound tightening.

use std::collections::HashSet;
use std::fmt::Write as _;

use crate::coef::{IntCoefs, RealCoefs};
use crate::error::{Error, Result};
use crate::loss::Cut;
use crate::lp::{LinearProgram, LpStatus, RowKind};

const TIGHTEN_ROUNDS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct VariableBounds {
    pub v: (f64, f64),
    pub l: (f64, f64),
    pub r: (usize, usize),
    /// Integer boxes for every coefficient; row 0 is the bias.
    pub lambda_lo: IntCoefs,
    pub lambda_hi: IntCoefs,
}

impl VariableBounds {
    /// Initial bounds: `V in [0, ln K + c0 r_max]`, `L in [0, ln K]`.
    ///
    /// The upper bounds are valid whenever `lambda = 0` is feasible, since its
    /// objective is exactly `ln K`.
    pub fn initial(
        k: usize,
        c0: f64,
        r: (usize, usize),
        lambda_lo: IntCoefs,
        lambda_hi: IntCoefs,
    ) -> Self {
        let ln_k = (k as f64).ln();
        Self {
            v: (0.0, ln_k + c0 * r.1 as f64),
            l: (0.0, ln_k),
            r,
            lambda_lo,
            lambda_hi,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.lambda_lo.rows().saturating_sub(1);
        if self.lambda_lo.rows() != self.lambda_hi.rows()
            || self.lambda_lo.cols() != self.lambda_hi.cols()
        {
            return Err(Error::InvalidConfig("coefficient box shapes differ".into()));
        }
        if self.v.0 > self.v.1 || self.l.0 > self.l.1 || self.r.0 > self.r.1 {
            return Err(Error::InvalidConfig("crossed V/L/R bounds".into()));
        }
        if self.r.1 > d {
            return Err(Error::InvalidConfig(format!(
                "R_max = {} exceeds the number of features {d}",
                self.r.1
            )));
        }
        for ((j, k, lo), hi) in self.lambda_lo.entries().zip(self.lambda_hi.as_slice()) {
            if lo > *hi {
                return Err(Error::InvalidConfig(format!("empty box for entry ({j}, {k})")));
            }
            if j > 0 && (lo > 0 || *hi < 0) {
                return Err(Error::InvalidConfig(format!(
                    "box for entry ({j}, {k}) must contain 0"
                )));
            }
        }
        Ok(())
    }
}

/// Per-node restriction of the global boxes: tightened coefficient boxes and
/// optional fixings of the row indicators `beta`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LocalRegion {
    pub lambda_lo: IntCoefs,
    pub lambda_hi: IntCoefs,
    pub beta: Vec<Option<bool>>,
}

impl LocalRegion {
    pub fn from_bounds(bounds: &VariableBounds) -> Self {
        Self {
            lambda_lo: bounds.lambda_lo.clone(),
            lambda_hi: bounds.lambda_hi.clone(),
            beta: vec![None; bounds.lambda_lo.rows() - 1],
        }
    }

    pub fn contains(&self, lambda: &IntCoefs) -> bool {
        lambda
            .as_slice()
            .iter()
            .zip(self.lambda_lo.as_slice().iter().zip(self.lambda_hi.as_slice()))
            .all(|(v, (lo, hi))| lo <= v && v <= hi)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub v: f64,
    pub l: f64,
    pub r: f64,
    pub lambda: RealCoefs,
    /// Row-major over features 1..=D and classes.
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutOutcome {
    Added,
    Duplicate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundStatus {
    /// Bounds are consistent; `changed` reports whether anything moved.
    Valid { changed: bool },
    /// Some lower bound exceeds its upper bound: no point beats the incumbent.
    Empty,
}

#[derive(Debug, Clone)]
pub struct LpRelaxation {
    d: usize,
    k: usize,
    c0: f64,
    pub bounds: VariableBounds,
    cuts: Vec<Cut>,
    anchors: HashSet<Vec<u64>>,
    pub skip_duplicate_cuts: bool,
}

/// Column layout of the LP.
#[derive(Debug, Clone, Copy)]
struct Layout {
    d: usize,
    k: usize,
}

impl Layout {
    const V: usize = 0;
    const L: usize = 1;
    const R: usize = 2;

    fn lambda(&self, j: usize, k: usize) -> usize {
        3 + j * self.k + k
    }

    fn alpha(&self, j: usize, k: usize) -> usize {
        3 + (self.d + 1) * self.k + (j - 1) * self.k + k
    }

    fn beta(&self, j: usize) -> usize {
        3 + (self.d + 1) * self.k + self.d * self.k + (j - 1)
    }

    fn n_vars(&self) -> usize {
        3 + (self.d + 1) * self.k + self.d * self.k + self.d
    }
}

impl LpRelaxation {
    pub fn new(d: usize, k: usize, c0: f64, bounds: VariableBounds) -> Result<Self> {
        if !(c0 > 0.0) || !c0.is_finite() {
            return Err(Error::InvalidConfig("c0 must be positive and finite".into()));
        }
        if bounds.lambda_lo.rows() != d + 1 || bounds.lambda_lo.cols() != k {
            return Err(Error::InvalidConfig("coefficient boxes do not match (D+1)xK".into()));
        }
        bounds.validate()?;
        Ok(Self {
            d,
            k,
            c0,
            bounds,
            cuts: Vec::new(),
            anchors: HashSet::new(),
            skip_duplicate_cuts: true,
        })
    }

    fn layout(&self) -> Layout {
        Layout { d: self.d, k: self.k }
    }

    pub fn num_variables(&self) -> usize {
        self.layout().n_vars()
    }

    pub fn cuts(&self) -> &[Cut] {
        &self.cuts
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    pub fn add_cut(&mut self, cut: Cut) -> Result<CutOutcome> {
        if !cut.value.is_finite() || !cut.gradient.is_finite() || !cut.anchor.is_finite() {
            return Err(Error::NonFinite("cut"));
        }
        if cut.anchor.rows() != self.d + 1 || cut.anchor.cols() != self.k {
            return Err(Error::DimensionMismatch {
                expected: (self.d + 1) * self.k,
                got: cut.anchor.as_slice().len(),
            });
        }
        let key: Vec<u64> = cut.anchor.as_slice().iter().map(|v| v.to_bits()).collect();
        let fresh = self.anchors.insert(key);
        if !fresh && self.skip_duplicate_cuts {
            return Ok(CutOutcome::Duplicate);
        }
        self.cuts.push(cut);
        Ok(if fresh {
            CutOutcome::Added
        } else {
            CutOutcome::Duplicate
        })
    }

    /// Whether a cut anchored at `lambda` is already in the pool.
    pub fn has_cut_at(&self, lambda: &RealCoefs) -> bool {
        let key: Vec<u64> = lambda.as_slice().iter().map(|v| v.to_bits()).collect();
        self.anchors.contains(&key)
    }

    /// Assembles the LP over `region` (or the global boxes).
    pub fn to_linear_program(&self, region: Option<&LocalRegion>) -> LinearProgram {
        let lay = self.layout();
        let b = &self.bounds;
        let (lo_box, hi_box, beta_fix) = match region {
            Some(r) => (&r.lambda_lo, &r.lambda_hi, Some(&r.beta)),
            None => (&b.lambda_lo, &b.lambda_hi, None),
        };
        let mut lp = LinearProgram::new();
        lp.add_var(1.0, b.v.0, b.v.1);
        lp.add_var(0.0, b.l.0, b.l.1);
        lp.add_var(0.0, b.r.0 as f64, b.r.1 as f64);
        for j in 0..=self.d {
            for k in 0..self.k {
                lp.add_var(0.0, lo_box[(j, k)] as f64, hi_box[(j, k)] as f64);
            }
        }
        for j in 1..=self.d {
            for k in 0..self.k {
                let (lo, hi) = (lo_box[(j, k)], hi_box[(j, k)]);
                let a_lo = if lo > 0 || hi < 0 { 1.0 } else { 0.0 };
                let a_hi = if lo == 0 && hi == 0 { 0.0 } else { 1.0 };
                lp.add_var(0.0, a_lo, a_hi);
            }
        }
        for j in 1..=self.d {
            let (lo, hi) = match beta_fix.and_then(|f| f[j - 1]) {
                Some(true) => (1.0, 1.0),
                Some(false) => (0.0, 0.0),
                None => (0.0, 1.0),
            };
            lp.add_var(0.0, lo, hi);
        }
        debug_assert_eq!(lp.n_vars(), lay.n_vars());

        lp.add_row(
            vec![(Layout::V, 1.0), (Layout::L, -1.0), (Layout::R, -self.c0)],
            RowKind::Eq,
            0.0,
        );
        let mut r_row = vec![(Layout::R, 1.0)];
        r_row.extend((1..=self.d).map(|j| (lay.beta(j), -1.0)));
        lp.add_row(r_row, RowKind::Eq, 0.0);
        for j in 1..=self.d {
            for k in 0..self.k {
                let upper = hi_box[(j, k)].max(0) as f64;
                let lower = lo_box[(j, k)].min(0) as f64;
                lp.add_row(
                    vec![(lay.lambda(j, k), 1.0), (lay.alpha(j, k), -upper)],
                    RowKind::Le,
                    0.0,
                );
                lp.add_row(
                    vec![(lay.lambda(j, k), 1.0), (lay.alpha(j, k), -lower)],
                    RowKind::Ge,
                    0.0,
                );
                lp.add_row(
                    vec![(lay.beta(j), 1.0), (lay.alpha(j, k), -1.0)],
                    RowKind::Ge,
                    0.0,
                );
            }
            let mut row = vec![(lay.beta(j), 1.0)];
            row.extend((0..self.k).map(|k| (lay.alpha(j, k), -1.0)));
            lp.add_row(row, RowKind::Le, 0.0);
        }
        for cut in &self.cuts {
            let mut row = vec![(Layout::L, 1.0)];
            for (j, k, g) in cut.gradient.entries() {
                if g != 0.0 {
                    row.push((lay.lambda(j, k), -g));
                }
            }
            lp.add_row(row, RowKind::Ge, cut.rhs());
        }
        lp
    }

    /// Solves the LP relaxation over `region` with all integrality dropped.
    pub fn solve(&self, region: Option<&LocalRegion>) -> Result<LpSolution> {
        let lay = self.layout();
        let lp = self.to_linear_program(region);
        let out = lp.solve()?;
        if out.status == LpStatus::Infeasible {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                v: f64::INFINITY,
                l: f64::NAN,
                r: f64::NAN,
                lambda: RealCoefs::zeros(self.d + 1, self.k),
                alpha: Vec::new(),
                beta: Vec::new(),
                iterations: out.iterations,
            });
        }
        let x = &out.x;
        let mut lambda = RealCoefs::zeros(self.d + 1, self.k);
        for j in 0..=self.d {
            for k in 0..self.k {
                lambda[(j, k)] = x[lay.lambda(j, k)];
            }
        }
        let mut alpha = Vec::with_capacity(self.d * self.k);
        for j in 1..=self.d {
            for k in 0..self.k {
                alpha.push(x[lay.alpha(j, k)]);
            }
        }
        Ok(LpSolution {
            status: LpStatus::Optimal,
            v: x[Layout::V],
            l: x[Layout::L],
            r: x[Layout::R],
            lambda,
            alpha,
            beta: (1..=self.d).map(|j| x[lay.beta(j)]).collect(),
            iterations: out.iterations,
        })
    }

    /// Tightens V/L/R bounds to a fixpoint using `V = L + c0 R`, the incumbent
    /// value as an upper bound on V and the best LP bound as a lower bound.
    /// Bounds only ever shrink.
    pub fn tighten_bounds(&mut self, incumbent_value: f64, best_lp_bound: f64) -> BoundStatus {
        let c0 = self.c0;
        let b = &mut self.bounds;
        let before = (b.v, b.l, b.r);
        for _ in 0..TIGHTEN_ROUNDS {
            let prev = (b.v, b.l, b.r);
            b.v.1 = b.v.1.min(incumbent_value);
            b.v.0 = b.v.0.max(best_lp_bound);
            b.l.1 = b.l.1.min(b.v.1 - c0 * b.r.0 as f64);
            b.l.0 = b.l.0.max(b.v.0 - c0 * b.r.1 as f64);
            let room = ((b.v.1 - b.l.0) / c0).floor();
            if room < b.r.1 as f64 {
                b.r.1 = if room < 0.0 { 0 } else { room as usize };
                if room < 0.0 && b.r.0 == 0 {
                    // V_max < L_min: no point can satisfy both.
                    return BoundStatus::Empty;
                }
            }
            if b.v.0 > b.v.1 || b.l.0 > b.l.1 || b.r.0 > b.r.1 {
                return BoundStatus::Empty;
            }
            if (b.v, b.l, b.r) == prev {
                break;
            }
        }
        BoundStatus::Valid {
            changed: (b.v, b.l, b.r) != before,
        }
    }

    /// CPLEX-style LP text for diagnostics.
    pub fn to_lp_format(&self, region: Option<&LocalRegion>) -> String {
        let lay = self.layout();
        let mut names = vec!["V".to_string(), "L".to_string(), "R".to_string()];
        for j in 0..=self.d {
            for k in 0..self.k {
                names.push(format!("lambda_{j}_{k}"));
            }
        }
        for j in 1..=self.d {
            for k in 0..self.k {
                names.push(format!("alpha_{j}_{k}"));
            }
        }
        for j in 1..=self.d {
            names.push(format!("beta_{j}"));
        }
        debug_assert_eq!(names.len(), lay.n_vars());
        let lp = self.to_linear_program(region);
        let mut out = String::from("Minimize\n obj: V\nSubject To\n");
        for (i, row) in lp.rows().iter().enumerate() {
            let _ = write!(out, " c{i}:");
            for &(j, a) in &row.coeffs {
                let _ = write!(out, " {} {} {}", if a < 0.0 { "-" } else { "+" }, a.abs(), names[j]);
            }
            let op = match row.kind {
                RowKind::Le => "<=",
                RowKind::Ge => ">=",
                RowKind::Eq => "=",
            };
            let _ = writeln!(out, " {op} {}", row.rhs);
        }
        out.push_str("Bounds\n");
        for (j, name) in names.iter().enumerate() {
            let (lo, hi) = lp.bounds(j);
            let fmt = |v: f64| {
                if v == f64::INFINITY {
                    "+inf".to_string()
                } else if v == f64::NEG_INFINITY {
                    "-inf".to_string()
                } else {
                    v.to_string()
                }
            };
            let _ = writeln!(out, " {} <= {name} <= {}", fmt(lo), fmt(hi));
        }
        out.push_str("End\n");
        out
    }
}
