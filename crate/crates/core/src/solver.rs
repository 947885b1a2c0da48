//! Lattice cutting-plane branch-and-bound.
//!
//! Nodes are integer boxes over the coefficient lattice (plus optional row
//! indicator fixings). Each node solves the surrogate LP; tangent cuts of the
//! loss are added at integer LP points and shared by every node. The search
//! keeps an incumbent (upper bound `v_max`) and the smallest open LP bound
//! (`v_min`), so stopping at any time yields a certified gap.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use log::debug;
use serde::{Deserialize, Serialize};

use crate::coef::{IntCoefs, RealCoefs};
use crate::data::BinaryDataset;
use crate::error::{Error, Result};
use crate::heuristics::{polish_one_opt, sequential_rounding, Lattice};
use crate::loss::LossKernel;
use crate::lp::LpStatus;
use crate::model::{MissModel, ModelMeta};
use crate::relaxation::{BoundStatus, CutOutcome, LocalRegion, LpRelaxation, VariableBounds};

const PRUNE_TOL: f64 = 1e-9;
const INCUMBENT_TOL: f64 = 1e-9;

/// Integer box for every class coefficient of one feature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureBox {
    pub feature: usize,
    pub lo: i64,
    pub hi: i64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub c0: f64,
    pub lambda_min: i64,
    pub lambda_max: i64,
    pub bias_min: i64,
    pub bias_max: i64,
    pub r_min: usize,
    pub r_max: usize,
    pub gap_tolerance: f64,
    pub time_limit_seconds: f64,
    pub node_limit: Option<usize>,
    pub integrality_tolerance: f64,
    pub seed: u64,
    pub force_include: Vec<usize>,
    pub force_exclude: Vec<usize>,
    pub feature_boxes: Vec<FeatureBox>,
    /// Round fractional LP points into incumbents.
    pub rounding: bool,
    /// 1-opt polish every new integer point.
    pub polishing: bool,
    pub bound_tightening: bool,
    /// Consecutive cut-and-resolve rounds on one node before branching.
    pub max_cut_rounds: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            c0: 1e-6,
            lambda_min: -5,
            lambda_max: 5,
            bias_min: -20,
            bias_max: 20,
            r_min: 0,
            r_max: 5,
            gap_tolerance: 0.0,
            time_limit_seconds: 90.0 * 60.0,
            node_limit: None,
            integrality_tolerance: 1e-6,
            seed: 0,
            force_include: Vec::new(),
            force_exclude: Vec::new(),
            feature_boxes: Vec::new(),
            rounding: true,
            polishing: true,
            bound_tightening: true,
            max_cut_rounds: 5,
        }
    }
}

impl SolverConfig {
    /// Plain LCPA: no rounding, no polishing, no bound tightening.
    pub fn plain(mut self) -> Self {
        self.rounding = false;
        self.polishing = false;
        self.bound_tightening = false;
        self
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.c0 > 0.0 && self.c0.is_finite()) {
            return bad(format!("c0 must be positive and finite, got {}", self.c0));
        }
        if self.lambda_min > 0 || self.lambda_max < 0 {
            return bad("coefficient range must contain 0".into());
        }
        if self.bias_min > 0 || self.bias_max < 0 {
            return bad("bias range must contain 0".into());
        }
        if self.r_min > self.r_max {
            return bad(format!("min size {} exceeds max size {}", self.r_min, self.r_max));
        }
        if !(0.0..=1.0).contains(&self.gap_tolerance) {
            return bad("gap tolerance must lie in [0, 1]".into());
        }
        if !(self.time_limit_seconds >= 0.0) {
            return bad("time limit must be non-negative".into());
        }
        if !(self.integrality_tolerance > 0.0 && self.integrality_tolerance < 0.5) {
            return bad("integrality tolerance must lie in (0, 0.5)".into());
        }
        for &f in self.force_include.iter().chain(&self.force_exclude) {
            if f >= d {
                return bad(format!("feature index {f} out of range for {d} features"));
            }
        }
        for b in &self.feature_boxes {
            if b.feature >= d {
                return bad(format!("feature index {} out of range for {d} features", b.feature));
            }
            if b.lo > 0 || b.hi < 0 {
                return bad(format!("box for feature {} must contain 0", b.feature));
            }
        }
        if let Some(f) = self.force_include.iter().find(|f| self.force_exclude.contains(f)) {
            return Err(Error::Infeasible(format!(
                "feature {f} is both force-included and force-excluded"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    GapReached,
    Timeout,
    NodeLimit,
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Optimal => "optimal",
            Self::GapReached => "gap_reached",
            Self::Timeout => "timeout",
            Self::NodeLimit => "node_limit",
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub nodes_processed: usize,
    pub cuts_added: usize,
    pub lp_solves: usize,
    pub heuristic_improvements: usize,
    pub wall_time_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub model: MissModel,
    pub v_max: f64,
    pub v_min: f64,
    pub gap: f64,
    pub status: SolveStatus,
    pub stats: SolveStats,
}

/// A branch-and-bound node.
#[derive(Debug, Clone)]
pub struct BnbNode {
    pub region: LocalRegion,
    /// LP bound of the parent; a lower bound for every point in `region`.
    pub parent_bound: f64,
    pub depth: usize,
    seq: u64,
}

impl PartialEq for BnbNode {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for BnbNode {}

impl PartialOrd for BnbNode {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for BnbNode {
    /// Reversed so that `BinaryHeap` pops the lowest bound, oldest first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .parent_bound
            .total_cmp(&self.parent_bound)
            .then(other.seq.cmp(&self.seq))
    }
}

/// `1 - v_min / v_max`, clamped to [0, 1].
pub fn optimality_gap(v_min: f64, v_max: f64) -> Result<f64> {
    if v_min < 0.0 || v_max < 0.0 || v_min.is_nan() || v_max.is_nan() {
        return Err(Error::InvalidData(format!(
            "bounds must be non-negative, got v_min={v_min}, v_max={v_max}"
        )));
    }
    if v_max == 0.0 {
        return Ok(0.0);
    }
    Ok((1.0 - v_min / v_max).clamp(0.0, 1.0))
}

/// The most fractional entry (fractional part closest to 0.5), lowest
/// row-major position on ties. Errors if every entry is within `tol` of an
/// integer.
pub fn select_branch_entry(lambda: &RealCoefs, tol: f64) -> Result<(usize, usize)> {
    let mut best: Option<(f64, (usize, usize))> = None;
    for (j, k, v) in lambda.entries() {
        if (v - v.round()).abs() <= tol {
            continue;
        }
        let score = (v - v.floor() - 0.5).abs();
        if best.map_or(true, |(s, _)| score < s) {
            best = Some((score, (j, k)));
        }
    }
    best.map(|(_, e)| e)
        .ok_or_else(|| Error::InvalidData("no fractional entry to branch on".into()))
}

fn is_integral(lambda: &RealCoefs, tol: f64) -> bool {
    lambda.as_slice().iter().all(|v| (v - v.round()).abs() <= tol)
}

struct Incumbent {
    lambda: IntCoefs,
    value: f64,
}

struct Search<'a> {
    cfg: &'a SolverConfig,
    kernel: LossKernel,
    lattice: Lattice,
    relax: LpRelaxation,
    incumbent: Incumbent,
    heap: BinaryHeap<BnbNode>,
    next_seq: u64,
    v_min: f64,
    logged_gap: f64,
    stats: SolveStats,
    start: Instant,
}

impl Search<'_> {
    /// Accepts `lambda` if it is feasible and strictly better.
    fn offer(&mut self, lambda: &IntCoefs, heuristic: bool) -> Result<bool> {
        if !self.lattice.is_feasible(lambda) {
            return Ok(false);
        }
        let value = self.lattice.objective(&self.kernel, lambda)?;
        if value < self.incumbent.value - INCUMBENT_TOL {
            self.incumbent = Incumbent {
                lambda: lambda.clone(),
                value,
            };
            if heuristic {
                self.stats.heuristic_improvements += 1;
            }
            return Ok(true);
        }
        Ok(false)
    }

    fn offer_polished(&mut self, lambda: &IntCoefs) -> Result<bool> {
        if !self.cfg.polishing || !self.lattice.is_feasible(lambda) {
            return Ok(false);
        }
        let polished = polish_one_opt(lambda, &self.kernel, &self.lattice)?;
        self.offer(&polished, true)
    }

    fn push(&mut self, region: LocalRegion, bound: f64, depth: usize) {
        self.heap.push(BnbNode {
            region,
            parent_bound: bound,
            depth,
            seq: self.next_seq,
        });
        self.next_seq += 1;
    }

    fn open_bound(&self) -> f64 {
        let v_max = self.incumbent.value;
        let lowest = self.heap.peek().map_or(v_max, |n| n.parent_bound);
        lowest.max(self.v_min).min(v_max)
    }

    /// Logs at info level when the gap moved by at least 1e-4 since the last
    /// info line (or `force`), at debug level otherwise.
    fn log_progress(&mut self, force: bool) {
        let gap = optimality_gap(self.v_min.max(0.0), self.incumbent.value).unwrap_or(1.0);
        let level = if force || (gap - self.logged_gap).abs() >= 1e-4 {
            self.logged_gap = gap;
            log::Level::Info
        } else {
            log::Level::Debug
        };
        log::log!(
            level,
            "elapsed={:.3} nodes={} v_min={:.9} v_max={:.9} gap={:.6}",
            self.start.elapsed().as_secs_f64(),
            self.stats.nodes_processed,
            self.v_min,
            self.incumbent.value,
            gap
        );
    }

    /// Fallback when the node LP fails numerically: split the widest box
    /// at its midpoint and carry the parent bound, or evaluate the region
    /// directly once it is a single point.
    fn split_blind(&mut self, node: BnbNode, msg: &str) -> Result<bool> {
        log::warn!("node LP failed ({msg}); splitting without a bound");
        let mut mid_point = node.region.lambda_lo.clone();
        for (j, k, lo) in node.region.lambda_lo.entries() {
            mid_point[(j, k)] = lo + (node.region.lambda_hi[(j, k)] - lo) / 2;
        }
        let no_beta = vec![0.0; node.region.beta.len()];
        match branch_integral(&node.region, &no_beta, &mid_point, self.cfg.integrality_tolerance) {
            Some((a, b)) => {
                self.push(a, node.parent_bound, node.depth + 1);
                self.push(b, node.parent_bound, node.depth + 1);
                Ok(false)
            }
            None => {
                if node.region.contains(&mid_point) {
                    self.offer(&mid_point, false)
                } else {
                    Ok(false)
                }
            }
        }
    }

    /// Processes one node; returns whether the incumbent improved.
    fn process(&mut self, mut node: BnbNode) -> Result<bool> {
        let tol = self.cfg.integrality_tolerance;
        let mut improved = false;
        let mut rounds = 0;
        loop {
            let sol = match self.relax.solve(Some(&node.region)) {
                Ok(sol) => sol,
                Err(Error::Numerical(msg)) => return self.split_blind(node, &msg),
                Err(e) => return Err(e),
            };
            self.stats.lp_solves += 1;
            if sol.status == LpStatus::Infeasible || sol.v >= self.incumbent.value - PRUNE_TOL {
                return Ok(improved);
            }
            let bound = sol.v.max(node.parent_bound);
            if !is_integral(&sol.lambda, tol) {
                if self.cfg.rounding {
                    let rounded = sequential_rounding(&sol.lambda, &self.kernel, &self.lattice)?;
                    improved |= self.offer(&rounded, true)?;
                    improved |= self.offer_polished(&rounded)?;
                }
                let (j, k) = select_branch_entry(&sol.lambda, tol)?;
                let v = sol.lambda[(j, k)];
                let mut left = node.region.clone();
                left.lambda_hi[(j, k)] = v.floor() as i64;
                let mut right = node.region;
                right.lambda_lo[(j, k)] = v.ceil() as i64;
                self.push(left, bound, node.depth + 1);
                self.push(right, bound, node.depth + 1);
                return Ok(improved);
            }

            let point = sol.lambda.map(|v| v.round() as i64);
            let value = self.lattice.objective(&self.kernel, &point)?;
            let feasible = self.lattice.is_feasible(&point);
            let fresh = self.relax.add_cut(self.kernel.cut(&point.to_real())?)? == CutOutcome::Added;
            if fresh {
                self.stats.cuts_added += 1;
            }
            improved |= self.offer(&point, false)?;
            improved |= self.offer_polished(&point)?;
            if feasible && sol.v >= value - PRUNE_TOL {
                // The LP certifies this point is the best in the region.
                return Ok(improved);
            }
            if fresh && rounds < self.cfg.max_cut_rounds {
                rounds += 1;
                node.parent_bound = bound;
                continue;
            }
            if let Some((a, b)) = branch_integral(&node.region, &sol.beta, &point, tol) {
                self.push(a, bound, node.depth + 1);
                self.push(b, bound, node.depth + 1);
            }
            return Ok(improved);
        }
    }
}

/// Branching when the LP point is integral but the node is not resolved:
/// on a fractional row indicator first, then on a zero row whose indicator
/// is 1, and finally on the widest box.
fn branch_integral(
    region: &LocalRegion,
    beta: &[f64],
    point: &IntCoefs,
    tol: f64,
) -> Option<(LocalRegion, LocalRegion)> {
    let k_count = point.cols();
    let mut frac: Option<(f64, usize)> = None;
    for (i, &b) in beta.iter().enumerate() {
        if region.beta[i].is_none() && b > tol && b < 1.0 - tol {
            let score = (b - 0.5).abs();
            if frac.map_or(true, |(s, _)| score < s) {
                frac = Some((score, i));
            }
        }
    }
    if let Some((_, i)) = frac {
        let mut off = region.clone();
        off.beta[i] = Some(false);
        off.lambda_lo.row_mut(i + 1).fill(0);
        off.lambda_hi.row_mut(i + 1).fill(0);
        let mut on = region.clone();
        on.beta[i] = Some(true);
        return Some((off, on));
    }

    for (i, &b) in beta.iter().enumerate() {
        let j = i + 1;
        if b < 1.0 - tol || point.row(j).iter().any(|&v| v != 0) {
            continue;
        }
        for k in 0..k_count {
            let (lo, hi) = (region.lambda_lo[(j, k)], region.lambda_hi[(j, k)]);
            if lo == hi {
                continue;
            }
            let mut a = region.clone();
            let mut c = region.clone();
            if lo < 0 {
                a.lambda_hi[(j, k)] = -1;
                c.lambda_lo[(j, k)] = 0;
            } else {
                a.lambda_hi[(j, k)] = 0;
                c.lambda_lo[(j, k)] = 1;
            }
            return Some((a, c));
        }
    }

    let mut widest: Option<(i64, (usize, usize))> = None;
    for (j, k, lo) in region.lambda_lo.entries() {
        let width = region.lambda_hi[(j, k)] - lo;
        if width > 0 && widest.map_or(true, |(w, _)| width > w) {
            widest = Some((width, (j, k)));
        }
    }
    let (_, pos) = widest?;
    let (lo, hi) = (region.lambda_lo[pos], region.lambda_hi[pos]);
    let split = point[pos].clamp(lo, hi - 1);
    let mut a = region.clone();
    a.lambda_hi[pos] = split;
    let mut c = region.clone();
    c.lambda_lo[pos] = split + 1;
    Some((a, c))
}

fn global_boxes(cfg: &SolverConfig, d: usize, k: usize) -> (IntCoefs, IntCoefs) {
    let mut lo = IntCoefs::filled(d + 1, k, cfg.lambda_min);
    let mut hi = IntCoefs::filled(d + 1, k, cfg.lambda_max);
    lo.row_mut(0).fill(cfg.bias_min);
    hi.row_mut(0).fill(cfg.bias_max);
    for b in &cfg.feature_boxes {
        lo.row_mut(b.feature + 1).fill(b.lo);
        hi.row_mut(b.feature + 1).fill(b.hi);
    }
    for &f in &cfg.force_exclude {
        lo.row_mut(f + 1).fill(0);
        hi.row_mut(f + 1).fill(0);
    }
    (lo, hi)
}

/// A feasible starting point when `lambda = 0` violates the size constraints:
/// activate forced features, then further features in index order, each with
/// a single unit coefficient, then polish.
fn constructed_start(kernel: &LossKernel, lattice: &Lattice) -> Result<Option<IntCoefs>> {
    let (rows, cols) = (lattice.lambda_lo.rows(), lattice.lambda_lo.cols());
    let mut lambda = IntCoefs::zeros(rows, cols);
    let unit = |j: usize| {
        (0..cols).find_map(|k| {
            if lattice.lambda_hi[(j, k)] > 0 {
                Some((k, 1))
            } else if lattice.lambda_lo[(j, k)] < 0 {
                Some((k, -1))
            } else {
                None
            }
        })
    };
    let mut wanted: Vec<usize> = lattice.force_include.iter().map(|f| f + 1).collect();
    let rest: Vec<usize> = (1..rows).filter(|j| !wanted.contains(j)).collect();
    wanted.extend(rest);
    let mut active = 0;
    for j in wanted {
        if active >= lattice.r_min && !lattice.force_include.contains(&(j - 1)) {
            continue;
        }
        if let Some((k, v)) = unit(j) {
            lambda[(j, k)] = v;
            active += 1;
        }
    }
    if !lattice.is_feasible(&lambda) {
        return Ok(None);
    }
    Ok(Some(polish_one_opt(&lambda, kernel, lattice)?))
}

struct Prepared {
    kernel: LossKernel,
    lattice: Lattice,
    relax: LpRelaxation,
    root: LocalRegion,
    seed: IntCoefs,
    seed_value: f64,
    r_max: usize,
}

fn prepare(ds: &BinaryDataset, cfg: &SolverConfig) -> Result<Prepared> {
    let (d, k) = (ds.n_features(), ds.n_classes());
    if ds.n_samples() == 0 {
        return Err(Error::InvalidData("empty dataset".into()));
    }
    cfg.validate(d)?;
    let r_max = cfg.r_max.min(d);
    if cfg.r_min > r_max {
        return Err(Error::Infeasible(format!(
            "min size {} exceeds the {r_max} usable features",
            cfg.r_min
        )));
    }
    if cfg.force_include.len() > r_max {
        return Err(Error::Infeasible(format!(
            "{} force-included features exceed the max size {r_max}",
            cfg.force_include.len()
        )));
    }
    let (lo, hi) = global_boxes(cfg, d, k);
    let kernel = LossKernel::new(ds);
    let lattice = Lattice {
        c0: cfg.c0,
        lambda_lo: lo.clone(),
        lambda_hi: hi.clone(),
        r_min: cfg.r_min,
        r_max,
        force_include: cfg.force_include.clone(),
    };

    let zero = IntCoefs::zeros(d + 1, k);
    let seed = if lattice.is_feasible(&zero) {
        zero.clone()
    } else {
        constructed_start(&kernel, &lattice)?.ok_or_else(|| {
            Error::Infeasible("no coefficient matrix satisfies the size constraints".into())
        })?
    };
    let seed_value = lattice.objective(&kernel, &seed)?;

    let mut bounds = VariableBounds::initial(k, cfg.c0, (cfg.r_min, r_max), lo, hi);
    if seed != zero {
        bounds.v.1 = bounds.v.1.max(seed_value);
        bounds.l.1 = bounds.l.1.max(seed_value);
    }
    let mut relax = LpRelaxation::new(d, k, cfg.c0, bounds)?;
    relax.add_cut(kernel.cut(&zero.to_real())?)?;
    let mut root = LocalRegion::from_bounds(&relax.bounds);
    for &f in &cfg.force_include {
        root.beta[f] = Some(true);
    }
    for &f in &cfg.force_exclude {
        root.beta[f] = Some(false);
    }
    Ok(Prepared {
        kernel,
        lattice,
        relax,
        root,
        seed,
        seed_value,
        r_max,
    })
}

/// The root LP (with the single cut at `lambda = 0`) in CPLEX LP text form.
pub fn root_lp_text(ds: &BinaryDataset, cfg: &SolverConfig) -> Result<String> {
    let p = prepare(ds, cfg)?;
    Ok(p.relax.to_lp_format(Some(&p.root)))
}

/// Minimizes `loss + c0 * size` over the integer lattice.
pub fn solve_miss(ds: &BinaryDataset, cfg: &SolverConfig) -> Result<SolveResult> {
    let start = Instant::now();
    let Prepared {
        kernel,
        lattice,
        relax,
        root,
        seed,
        seed_value,
        r_max,
    } = prepare(ds, cfg)?;

    let mut search = Search {
        cfg,
        kernel,
        lattice,
        relax,
        incumbent: Incumbent {
            lambda: seed.clone(),
            value: seed_value,
        },
        heap: BinaryHeap::new(),
        next_seq: 0,
        v_min: 0.0,
        logged_gap: 2.0,
        stats: SolveStats {
            cuts_added: 1,
            ..SolveStats::default()
        },
        start,
    };
    search.offer_polished(&seed)?;
    search.push(root, 0.0, 0);

    let status = loop {
        let v_min = search.open_bound();
        let moved = v_min > search.v_min;
        search.v_min = v_min;
        if moved {
            search.log_progress(false);
        }
        let gap = optimality_gap(search.v_min, search.incumbent.value)?;
        if search.heap.is_empty() || gap == 0.0 {
            break SolveStatus::Optimal;
        }
        if gap <= cfg.gap_tolerance {
            break SolveStatus::GapReached;
        }
        if start.elapsed().as_secs_f64() >= cfg.time_limit_seconds {
            break SolveStatus::Timeout;
        }
        if cfg.node_limit.is_some_and(|limit| search.stats.nodes_processed >= limit) {
            break SolveStatus::NodeLimit;
        }

        let node = search.heap.pop().expect("heap checked non-empty");
        if node.parent_bound >= search.incumbent.value - PRUNE_TOL {
            continue;
        }
        search.stats.nodes_processed += 1;
        let improved = search.process(node)?;
        if improved {
            search.log_progress(true);
        }
        if cfg.bound_tightening {
            let v_min = search.open_bound();
            if search.relax.tighten_bounds(search.incumbent.value, v_min) == BoundStatus::Empty {
                debug!("bound tightening emptied the search region");
                search.heap.clear();
            }
        }
    };

    let v_max = search.incumbent.value;
    let v_min = if status == SolveStatus::Optimal {
        v_max
    } else {
        search.v_min.min(v_max)
    };
    let gap = optimality_gap(v_min, v_max)?;
    search.stats.wall_time_seconds = start.elapsed().as_secs_f64();
    search.log_progress(true);
    let loss = search.kernel.value(&search.incumbent.lambda.to_real())?;
    let meta = ModelMeta {
        c0: cfg.c0,
        lambda_min: cfg.lambda_min,
        lambda_max: cfg.lambda_max,
        bias_min: cfg.bias_min,
        bias_max: cfg.bias_max,
        r_max,
        objective: Some(v_max),
        loss: Some(loss),
        optimality_gap: gap,
        seed: cfg.seed,
    };
    let model = MissModel::new(
        search.incumbent.lambda,
        ds.feature_names().to_vec(),
        ds.class_names().to_vec(),
        meta,
    )?;
    Ok(SolveResult {
        model,
        v_max,
        v_min,
        gap,
        status,
        stats: search.stats,
    })
}
