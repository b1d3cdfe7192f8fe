//! Core model: the k x d weight matrix, the multiclass logistic loss, class
//! posteriors, gradients, and the column scores driving greedy selection.
//!
//! The per-example loss is
//!
//! ```text
//! l(W,(x,y)) = ln sum_{y'} exp(1[y' != y] - (Wx)_y + (Wx)_{y'})
//! ```
//!
//! a smooth convex upper bound on the 0-1 loss. Both the loss and the
//! posteriors are computed from the same max-shifted exponents so they stay
//! mutually consistent and finite for large scores.

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::exec;
use crate::regularizer::Regularizer;

/// k x d weight matrix with an explicit support: the ordered set of column
/// indices holding any non-zero entry. Columns outside the support are
/// exactly zero.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    k: usize,
    d: usize,
    entries: Vec<f64>,
    support: Vec<usize>,
}

impl WeightMatrix {
    pub fn zeros(k: usize, d: usize) -> Self {
        WeightMatrix { k, d, entries: vec![0.0; k * d], support: Vec::new() }
    }

    pub fn from_entries(k: usize, d: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != k * d {
            return Err(Error::input(format!(
                "weight matrix has {} entries, expected {k} x {d}",
                entries.len()
            )));
        }
        let mut w = WeightMatrix { k, d, entries, support: Vec::new() };
        w.recompute_support();
        Ok(w)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn entry(&self, class: usize, feature: usize) -> f64 {
        self.entries[class * self.d + feature]
    }

    /// Ordered indices of non-zero columns; its length is ||W||_{inf,0}.
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.k).map(|i| self.entries[i * self.d + j]).collect()
    }

    pub fn set_column(&mut self, j: usize, values: &[f64]) {
        assert_eq!(values.len(), self.k);
        for (i, &v) in values.iter().enumerate() {
            self.entries[i * self.d + j] = v;
        }
        self.recompute_support();
    }

    fn recompute_support(&mut self) {
        self.support = (0..self.d)
            .filter(|&j| (0..self.k).any(|i| self.entries[i * self.d + j] != 0.0))
            .collect();
    }

    /// Score vector Wx, summing over the support only.
    pub fn scores(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.d {
            return Err(Error::input(format!(
                "feature vector has length {}, expected {}",
                x.len(),
                self.d
            )));
        }
        let mut scores = vec![0.0; self.k];
        for (c, s) in scores.iter_mut().enumerate() {
            let row = &self.entries[c * self.d..(c + 1) * self.d];
            *s = self.support.iter().map(|&j| row[j] * x[j]).sum();
        }
        Ok(scores)
    }
}

/// Soft-max weights of the classes in the loss gradient; entries lie in
/// [0,1] and sum to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassPosterior {
    pub probabilities: Vec<f64>,
}

/// Matrix of partial derivatives dL/dW_{q,r}, same shape as the model.
#[derive(Debug, Clone)]
pub struct GradientMatrix {
    pub k: usize,
    pub d: usize,
    pub entries: Vec<f64>,
}

impl GradientMatrix {
    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.k).map(|i| self.entries[i * self.d + j]).collect()
    }
}

// Shifted exponents u_c = 1[c != y] + s_c - s_y minus their max; returns
// (shifted exponents, max) so loss and rho share one stabilization.
fn shifted_margins(scores: &[f64], label: usize) -> (Vec<f64>, f64) {
    let sy = scores[label];
    let mut margins: Vec<f64> = scores
        .iter()
        .enumerate()
        .map(|(c, &s)| if c == label { 0.0 } else { 1.0 + s - sy })
        .collect();
    let max = margins.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    for u in margins.iter_mut() {
        *u -= max;
    }
    (margins, max)
}

/// The logistic multiclass loss as a function of a raw score vector.
pub fn loss_from_scores(scores: &[f64], label: usize) -> f64 {
    let (margins, max) = shifted_margins(scores, label);
    max + margins.iter().map(|u| u.exp()).sum::<f64>().ln()
}

/// Class posteriors rho_c from a raw score vector.
pub fn rho_from_scores(scores: &[f64], label: usize) -> ClassPosterior {
    let (margins, _) = shifted_margins(scores, label);
    let exps: Vec<f64> = margins.iter().map(|u| u.exp()).collect();
    let total: f64 = exps.iter().sum();
    ClassPosterior { probabilities: exps.iter().map(|e| e / total).collect() }
}

/// Gradient of the loss with respect to the score vector: rho_c - 1[c = y].
pub fn score_gradient(scores: &[f64], label: usize) -> Vec<f64> {
    let mut g = rho_from_scores(scores, label).probabilities;
    g[label] -= 1.0;
    g
}

/// argmax_y (Wx)_y, breaking ties toward the lowest class index.
pub fn predict(w: &WeightMatrix, x: &[f64]) -> Result<usize> {
    let scores = w.scores(x)?;
    Ok(argmax_lowest(&scores))
}

pub(crate) fn argmax_lowest(scores: &[f64]) -> usize {
    let mut best = 0;
    for (c, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = c;
        }
    }
    best
}

pub fn loss_example(w: &WeightMatrix, x: &[f64], label: usize) -> Result<f64> {
    let scores = w.scores(x)?;
    Ok(loss_from_scores(&scores, label))
}

pub fn rho(w: &WeightMatrix, x: &[f64], label: usize) -> Result<ClassPosterior> {
    let scores = w.scores(x)?;
    Ok(rho_from_scores(&scores, label))
}

/// Mean loss over the dataset plus the regularizer value.
pub fn loss_avg(w: &WeightMatrix, data: &Dataset, reg: &Regularizer) -> Result<f64> {
    data.require_non_empty()?;
    check_shape(w, data)?;
    let sum = exec::sum_over(data.m(), |i| {
        let scores = w.scores(data.example(i)).expect("shape checked");
        loss_from_scores(&scores, data.label(i))
    });
    Ok(sum / data.m() as f64 + reg.value(w.entries(), w.k, w.d, 0))
}

/// dL/dW_{q,r} = (1/m) sum_{(x,y)} x_r (rho_q(x,y) - 1[q=y]), plus the
/// regularizer gradient.
pub fn gradient(w: &WeightMatrix, data: &Dataset, reg: &Regularizer) -> Result<GradientMatrix> {
    data.require_non_empty()?;
    check_shape(w, data)?;
    let (k, d) = (w.k, w.d);
    let mut entries = exec::sum_vectors(data.m(), k * d, |i, acc| {
        let x = data.example(i);
        let scores = w.scores(x).expect("shape checked");
        let resid = score_gradient(&scores, data.label(i));
        for (q, rq) in resid.iter().enumerate() {
            let row = &mut acc[q * d..(q + 1) * d];
            for (r, xr) in x.iter().enumerate() {
                row[r] += xr * rq;
            }
        }
    });
    let inv_m = 1.0 / data.m() as f64;
    for e in entries.iter_mut() {
        *e *= inv_m;
    }
    reg.add_gradient(w.entries(), k, d, &mut entries);
    Ok(GradientMatrix { k, d, entries })
}

/// Per-column l1 norms of the gradient, the greedy selection criterion.
pub fn column_scores(g: &GradientMatrix) -> Vec<f64> {
    (0..g.d)
        .map(|r| (0..g.k).map(|q| g.entries[q * g.d + r].abs()).sum())
        .collect()
}

/// Fraction of examples with predict(W,x) != y.
pub fn zero_one_error(w: &WeightMatrix, data: &Dataset) -> Result<f64> {
    data.require_non_empty()?;
    check_shape(w, data)?;
    let wrong = exec::sum_over(data.m(), |i| {
        let scores = w.scores(data.example(i)).expect("shape checked");
        if argmax_lowest(&scores) != data.label(i) {
            1.0
        } else {
            0.0
        }
    });
    Ok(wrong / data.m() as f64)
}

/// Per-column norm tag for mixed norms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnNorm {
    L1,
    L2,
    LInf,
}

/// Norm applied across the vector of column norms; `L0` counts non-zeros.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AcrossNorm {
    L0,
    L1,
    L2,
    LInf,
}

/// ||W||_{p,r}: the p-norm of every column, then the r-norm of the
/// resulting d-vector.
pub fn mixed_norm(w: &WeightMatrix, p: ColumnNorm, r: AcrossNorm) -> f64 {
    let col_norms: Vec<f64> = (0..w.d)
        .map(|j| {
            let col = w.column(j);
            match p {
                ColumnNorm::L1 => col.iter().map(|v| v.abs()).sum(),
                ColumnNorm::L2 => col.iter().map(|v| v * v).sum::<f64>().sqrt(),
                ColumnNorm::LInf => col.iter().map(|v| v.abs()).fold(0.0, f64::max),
            }
        })
        .collect();
    match r {
        AcrossNorm::L0 => col_norms.iter().filter(|&&n| n > 0.0).count() as f64,
        AcrossNorm::L1 => col_norms.iter().sum(),
        AcrossNorm::L2 => col_norms.iter().map(|n| n * n).sum::<f64>().sqrt(),
        AcrossNorm::LInf => col_norms.iter().cloned().fold(0.0, f64::max),
    }
}

fn check_shape(w: &WeightMatrix, data: &Dataset) -> Result<()> {
    if w.d != data.d() || w.k != data.k() {
        return Err(Error::input(format!(
            "model shape ({}, {}) does not match dataset ({}, {})",
            w.k,
            w.d,
            data.k(),
            data.d()
        )));
    }
    Ok(())
}
