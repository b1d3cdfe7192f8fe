//! Smooth regularizers added to the training objective.

use crate::error::{Error, Result};

/// Regularization term R(W). All variants are smooth, so the same solver
/// handles the regularized corrective subproblems.
///
/// `SmoothMixedNorm` is the soft-max smoothing of the l_inf/l_1 mixed norm:
/// each column contributes (1/beta) * ln(sum_i e^{beta w} + e^{-beta w}),
/// which sandwiches the column's true max-magnitude within ln(2k)/beta.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regularizer {
    None,
    Frobenius { lambda: f64 },
    SmoothMixedNorm { lambda: f64, beta: f64 },
}

impl Regularizer {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Regularizer::None => Ok(()),
            Regularizer::Frobenius { lambda } => {
                if lambda < 0.0 {
                    Err(Error::input("regularization weight must be nonnegative"))
                } else {
                    Ok(())
                }
            }
            Regularizer::SmoothMixedNorm { lambda, beta } => {
                if lambda < 0.0 {
                    Err(Error::input("regularization weight must be nonnegative"))
                } else if beta < 1.0 {
                    Err(Error::input("smoothness parameter beta must be >= 1"))
                } else {
                    Ok(())
                }
            }
        }
    }

    /// R evaluated on a k x d column-block stored row-major in `entries`.
    /// `absent_columns` counts all-zero columns outside the block, which
    /// matter for the mixed-norm variant (each contributes ln(2k)/beta).
    pub fn value(&self, entries: &[f64], k: usize, d: usize, absent_columns: usize) -> f64 {
        match *self {
            Regularizer::None => 0.0,
            Regularizer::Frobenius { lambda } => {
                lambda * entries.iter().map(|w| w * w).sum::<f64>()
            }
            Regularizer::SmoothMixedNorm { lambda, beta } => {
                let mut total = absent_columns as f64 * (2.0 * k as f64).ln() / beta;
                for j in 0..d {
                    total += column_softmax(entries, k, d, j, beta);
                }
                lambda * total
            }
        }
    }

    /// Adds dR/dW to `grad` (same k x d row-major layout as `entries`).
    pub fn add_gradient(&self, entries: &[f64], k: usize, d: usize, grad: &mut [f64]) {
        match *self {
            Regularizer::None => {}
            Regularizer::Frobenius { lambda } => {
                for (g, w) in grad.iter_mut().zip(entries) {
                    *g += 2.0 * lambda * w;
                }
            }
            Regularizer::SmoothMixedNorm { lambda, beta } => {
                for j in 0..d {
                    let shift = column_abs_max(entries, k, d, j) * beta;
                    let mut denom = 0.0;
                    for i in 0..k {
                        let bw = beta * entries[i * d + j];
                        denom += (bw - shift).exp() + (-bw - shift).exp();
                    }
                    for i in 0..k {
                        let bw = beta * entries[i * d + j];
                        let numer = (bw - shift).exp() - (-bw - shift).exp();
                        grad[i * d + j] += lambda * numer / denom;
                    }
                }
            }
        }
    }

    pub fn is_none(&self) -> bool {
        matches!(self, Regularizer::None)
    }
}

fn column_abs_max(entries: &[f64], k: usize, d: usize, j: usize) -> f64 {
    (0..k).map(|i| entries[i * d + j].abs()).fold(0.0, f64::max)
}

// (1/beta) * ln sum_i (e^{beta w_ij} + e^{-beta w_ij}), computed with
// max-subtraction so large |w| does not overflow.
fn column_softmax(entries: &[f64], k: usize, d: usize, j: usize, beta: f64) -> f64 {
    let shift = column_abs_max(entries, k, d, j) * beta;
    let mut sum = 0.0;
    for i in 0..k {
        let bw = beta * entries[i * d + j];
        sum += (bw - shift).exp() + (-bw - shift).exp();
    }
    (shift + sum.ln()) / beta
}
