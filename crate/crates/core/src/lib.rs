//! Multiclass interpretable scoring systems.
//!
//! A scoring system assigns a small integer number of points to every
//! (binary feature, class) pair plus a per-class bias. The predicted class is
//! the one with the highest total; softmax over the totals gives calibrated
//! class probabilities. Models are learned by minimizing the normalized
//! softmax cross-entropy plus an L0 penalty on the number of used features
//! over an integer coefficient lattice, using a lattice cutting-plane
//! branch-and-bound that reports a certified optimality gap.
//!
//! Module map:
//!
//! - [`data`]: CSV ingestion, binarization, oversampling, stratified folds.
//! - [`model`]: the integer scorecard, prediction, rendering, JSON I/O.
//! - [`loss`]: cross-entropy value, gradient and tangent cuts.
//! - [`lp`]: a dense bounded-variable primal simplex.
//! - [`relaxation`]: the surrogate LP and bound tightening.
//! - [`heuristics`]: sequential rounding and 1-opt polishing.
//! - [`solver`]: the branch-and-bound driver.
//! - [`rfa`]: recursive feature aggregation.
//! - [`eval`]: weighted one-vs-rest metrics and cross-validation.
//! - [`cli`]: the `miss` command line.

pub mod cli;
pub mod coef;
pub mod data;
pub mod error;
pub mod eval;
pub mod heuristics;
pub mod loss;
pub mod lp;
pub mod model;
pub mod relaxation;
pub mod rfa;
pub mod solver;

pub use coef::{CoefMatrix, IntCoefs, RealCoefs};
pub use data::{BinaryDataset, RawTable};
pub use error::{Error, Result};
pub use model::MissModel;
pub use solver::{solve_miss, SolveResult, SolveStatus, SolverConfig};
