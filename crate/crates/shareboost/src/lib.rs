//! Greedy multiclass training with shared features: a column-sparse k x d
//! weight matrix is grown one feature (or feature group) at a time, with a
//! fully corrective re-optimization after every selection. Includes the
//! non-linear feature constructions (stumps, quadratic expansion, anchor
//! maps), comparison baselines, synthetic dataset generators, and file I/O
//! for the command-line tool.

pub mod baselines;
pub mod data;
pub mod error;
pub mod exec;
pub mod feature_map;
pub mod io;
pub mod model;
pub mod regularizer;
pub mod solver;
pub mod synthetic;
pub mod trainer;

pub use data::{Dataset, LabeledExample};
pub use error::{Error, Result};
pub use model::{
    gradient, loss_avg, predict, zero_one_error, ClassPosterior, GradientMatrix, WeightMatrix,
};
pub use regularizer::Regularizer;
pub use solver::{minimize_smooth, SmoothObjective, SolverConfig, SolverResult};
pub use trainer::{
    corrective_solve, progress_check, select_feature, select_group, shareboost_train,
    shareboost_train_stumps, SelectionRule, TrainConfig, TrainTrace,
};
