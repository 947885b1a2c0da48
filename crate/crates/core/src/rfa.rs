//! Recursive feature aggregation: grow a feature pool by repeatedly training
//! single-feature models on the features not yet chosen.

use log::info;

use crate::data::BinaryDataset;
use crate::error::Result;
use crate::loss::{LossKernel, ScoreCache};
use crate::solver::{solve_miss, SolverConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct RfaConfig {
    /// Number of features to choose.
    pub f: usize,
    /// Settings for the inner models. Size limits, forced features and
    /// per-feature boxes are overridden; `force_exclude` removes candidates.
    pub solver: SolverConfig,
    /// Total wall-clock budget, split evenly across the `f` inner solves.
    pub time_limit_seconds: f64,
}

/// Chooses up to `f` features, in selection order.
pub fn rfa_select(ds: &BinaryDataset, cfg: &RfaConfig) -> Result<Vec<usize>> {
    let d = ds.n_features();
    let mut remaining: Vec<usize> = (0..d)
        .filter(|j| !cfg.solver.force_exclude.contains(j))
        .collect();
    if remaining.len() <= cfg.f {
        info!("RFA selected {}/{d} features", remaining.len());
        return Ok(remaining);
    }
    let inner = SolverConfig {
        r_min: 0,
        r_max: 1,
        force_include: Vec::new(),
        force_exclude: Vec::new(),
        feature_boxes: Vec::new(),
        time_limit_seconds: cfg.time_limit_seconds / cfg.f as f64,
        ..cfg.solver.clone()
    };
    let mut chosen = Vec::with_capacity(cfg.f);
    for round in 0..cfg.f {
        let sub = ds.select_features(&remaining);
        let res = solve_miss(&sub, &inner)?;
        let lambda = res.model.lambda();
        let pick = match (1..lambda.rows()).find(|&j| lambda.row(j).iter().any(|&v| v != 0)) {
            Some(j) => j - 1,
            None => best_single_activation(&sub, &inner, lambda.to_real())?,
        };
        info!(
            "RFA round {} picked `{}` (inner r_max=1, status={}, gap={:.4})",
            round + 1,
            sub.feature_names()[pick],
            res.status,
            res.gap
        );
        chosen.push(remaining.remove(pick));
    }
    info!("RFA selected {}/{d} features", chosen.len());
    Ok(chosen)
}

/// The feature whose best single nonzero coefficient, added to the bias-only
/// model, gives the lowest objective. Lowest index on ties.
fn best_single_activation(
    ds: &BinaryDataset,
    cfg: &SolverConfig,
    lambda: crate::coef::RealCoefs,
) -> Result<usize> {
    let kernel = LossKernel::new(ds);
    let mut cache = ScoreCache::new(&kernel, lambda)?;
    let mut best = (f64::INFINITY, 0);
    for j in 0..ds.n_features() {
        for k in 0..ds.n_classes() {
            for v in cfg.lambda_min..=cfg.lambda_max {
                if v == 0 {
                    continue;
                }
                let loss = cache.loss_with(j + 1, k, v as f64);
                if loss < best.0 {
                    best = (loss, j);
                }
            }
        }
    }
    Ok(best.1)
}
