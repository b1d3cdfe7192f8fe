//! Comparison methods: greedy one-vs-rest binary logistic models and
//! entrywise l1/l2-regularized full training along a lambda path.

use std::collections::BTreeSet;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::exec;
use crate::model::WeightMatrix;
use crate::regularizer::Regularizer;
use crate::solver::{minimize_smooth, SmoothObjective, SolverConfig};
use crate::trainer::{corrective_solve, RestrictedObjective};

/// One binary classifier: a dense weight vector with its support.
#[derive(Debug, Clone)]
pub struct BinaryModel {
    pub weights: Vec<f64>,
    pub support: Vec<usize>,
}

/// One-vs-rest multiclass model: one binary scorer per class; prediction is
/// the argmax of the k binary scores.
#[derive(Debug, Clone)]
pub struct OneVsRestModel {
    pub classifiers: Vec<BinaryModel>,
    pub d: usize,
}

impl OneVsRestModel {
    pub fn union_support(&self) -> Vec<usize> {
        let mut set = BTreeSet::new();
        for c in &self.classifiers {
            set.extend(c.support.iter().cloned());
        }
        set.into_iter().collect()
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        if x.len() != self.d {
            return Err(Error::input(format!(
                "feature vector has length {}, expected {}",
                x.len(),
                self.d
            )));
        }
        let mut best = 0;
        let mut best_score = f64::NEG_INFINITY;
        for (c, clf) in self.classifiers.iter().enumerate() {
            let score: f64 = clf.support.iter().map(|&j| clf.weights[j] * x[j]).sum();
            if score > best_score {
                best = c;
                best_score = score;
            }
        }
        Ok(best)
    }

    pub fn zero_one_error(&self, data: &Dataset) -> Result<f64> {
        data.require_non_empty()?;
        let wrong = exec::sum_over(data.m(), |i| {
            if self.predict(data.example(i)).expect("shape checked") != data.label(i) {
                1.0
            } else {
                0.0
            }
        });
        Ok(wrong / data.m() as f64)
    }
}

/// Union-support growth of the one-vs-rest run, one row per global round
/// (one greedy step per class).
#[derive(Debug, Clone)]
pub struct OneVsRestTraceRow {
    pub round: usize,
    pub union_support: usize,
    pub train_err: f64,
}

fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

fn sigmoid(t: f64) -> f64 {
    if t > 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

// Mean binary logistic loss log(1 + exp(-z <w,x>)) over a fixed support.
struct BinaryObjective<'a> {
    data: &'a Dataset,
    signs: &'a [f64],
    support: &'a [usize],
}

impl BinaryObjective<'_> {
    fn margin(&self, point: &[f64], i: usize) -> f64 {
        let x = self.data.example(i);
        let dot: f64 = self.support.iter().zip(point).map(|(&j, w)| w * x[j]).sum();
        self.signs[i] * dot
    }
}

impl SmoothObjective for BinaryObjective<'_> {
    fn dimension(&self) -> usize {
        self.support.len()
    }

    fn value(&self, point: &[f64]) -> f64 {
        let m = self.data.m();
        exec::sum_over(m, |i| softplus(-self.margin(point, i))) / m as f64
    }

    fn gradient(&self, point: &[f64]) -> Vec<f64> {
        let m = self.data.m();
        let mut grad = exec::sum_vectors(m, self.support.len(), |i, acc| {
            let coeff = -self.signs[i] * sigmoid(-self.margin(point, i));
            let x = self.data.example(i);
            for (a, &j) in acc.iter_mut().zip(self.support) {
                *a += coeff * x[j];
            }
        });
        let inv_m = 1.0 / m as f64;
        for g in grad.iter_mut() {
            *g *= inv_m;
        }
        grad
    }
}

// Greedy forward selection for one binary problem; returns the dense weight
// vector and support after every round.
fn train_binary_greedy(
    data: &Dataset,
    signs: &[f64],
    rounds: usize,
    solver: &SolverConfig,
) -> Result<Vec<BinaryModel>> {
    let d = data.d();
    let mut weights = vec![0.0; d];
    let mut support: BTreeSet<usize> = BTreeSet::new();
    let mut snapshots = Vec::with_capacity(rounds);
    let all: Vec<usize> = (0..d).collect();
    for _ in 0..rounds {
        let grad = BinaryObjective { data, signs, support: &all }.gradient(&weights);
        let best = exec::argbest(d, |j| (j, grad[j].abs()), |c, b| c.1 > b.1).expect("d >= 1");
        if best.1 <= 1e-10 {
            snapshots.push(BinaryModel {
                weights: weights.clone(),
                support: support.iter().cloned().collect(),
            });
            continue;
        }
        support.insert(best.0);
        let sup: Vec<usize> = support.iter().cloned().collect();
        let init: Vec<f64> = sup.iter().map(|&j| weights[j]).collect();
        let obj = BinaryObjective { data, signs, support: &sup };
        let res = minimize_smooth(&obj, &init, solver)?;
        weights = vec![0.0; d];
        for (&j, &w) in sup.iter().zip(&res.point) {
            weights[j] = w;
        }
        snapshots.push(BinaryModel { weights: weights.clone(), support: sup });
    }
    Ok(snapshots)
}

/// Trains k independent greedy binary models (one per class, label +1 iff
/// y = c) with fully corrective refits, `rounds_per_class` rounds each.
/// The trace reports the union support and train error after each global
/// round.
pub fn one_vs_rest_train(
    data: &Dataset,
    rounds_per_class: usize,
    solver: &SolverConfig,
) -> Result<(OneVsRestModel, Vec<OneVsRestTraceRow>)> {
    data.require_non_empty()?;
    if rounds_per_class == 0 {
        return Err(Error::input("rounds per class must be >= 1"));
    }
    solver.validate()?;
    let k = data.k();
    let mut per_class: Vec<Vec<BinaryModel>> = Vec::with_capacity(k);
    for c in 0..k {
        let signs: Vec<f64> = data
            .labels()
            .iter()
            .map(|&y| if y == c { 1.0 } else { -1.0 })
            .collect();
        per_class.push(train_binary_greedy(data, &signs, rounds_per_class, solver)?);
    }

    let mut trace = Vec::with_capacity(rounds_per_class);
    for t in 0..rounds_per_class {
        let model = OneVsRestModel {
            classifiers: per_class.iter().map(|snaps| snaps[t].clone()).collect(),
            d: data.d(),
        };
        trace.push(OneVsRestTraceRow {
            round: t + 1,
            union_support: model.union_support().len(),
            train_err: model.zero_one_error(data)?,
        });
    }
    let model = OneVsRestModel {
        classifiers: per_class.into_iter().map(|mut s| s.pop().expect("rounds >= 1")).collect(),
        d: data.d(),
    };
    Ok((model, trace))
}

/// Entrywise-regularized full training setup: penalty lambda * sum |w|^p
/// with p in {1,2}, solved along a descending lambda grid with warm starts.
#[derive(Debug, Clone)]
pub struct EntrywiseRegConfig {
    pub p: u8,
    pub grid: Vec<f64>,
}

impl EntrywiseRegConfig {
    pub fn validate(&self) -> Result<()> {
        if self.p != 1 && self.p != 2 {
            return Err(Error::input("entrywise penalty exponent p must be 1 or 2"));
        }
        if self.grid.is_empty() {
            return Err(Error::input("lambda grid must be non-empty"));
        }
        if self.grid.iter().any(|l| *l < 0.0) {
            return Err(Error::input("lambda values must be nonnegative"));
        }
        if self.grid.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::input("lambda grid must be sorted descending"));
        }
        Ok(())
    }
}

/// One solution along the path.
#[derive(Debug, Clone)]
pub struct PathPoint {
    pub lambda: f64,
    pub weights: WeightMatrix,
    /// Unregularized mean loss at the solution.
    pub loss: f64,
    pub train_err: f64,
    /// Non-zero column count at a 1e-8 magnitude threshold.
    pub support_count: usize,
}

pub(crate) fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

// Proximal gradient (ISTA) for f(x) + lambda ||x||_1 with backtracking on
// the smooth part. Stops when the prox-gradient mapping norm falls below
// tolerance.
pub(crate) fn ista_l1(
    obj: &dyn SmoothObjective,
    lambda: f64,
    init: &[f64],
    cfg: &SolverConfig,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    let mut x = init.to_vec();
    let mut fx = obj.value(&x);
    let mut step = cfg.initial_step;
    for _ in 0..cfg.max_iterations {
        let grad = obj.gradient(&x);
        if !fx.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::numerical("non-finite objective in proximal gradient"));
        }
        step = (step / cfg.shrink).min(cfg.initial_step * 1e6);
        let mut stalled = false;
        let (next, fnext) = loop {
            let cand: Vec<f64> = x
                .iter()
                .zip(&grad)
                .map(|(xi, gi)| soft_threshold(xi - step * gi, lambda * step))
                .collect();
            let fcand = obj.value(&cand);
            let diff_sq: f64 = cand.iter().zip(&x).map(|(a, b)| (a - b) * (a - b)).sum();
            let linear: f64 = grad.iter().zip(cand.iter().zip(&x)).map(|(g, (a, b))| g * (a - b)).sum();
            if fcand.is_finite() && fcand <= fx + linear + diff_sq / (2.0 * step) {
                break (cand, fcand);
            }
            step *= cfg.shrink;
            if step < 1e-18 {
                // no representable decrease left; keep the current iterate
                stalled = true;
                break (x.clone(), fx);
            }
        };
        if stalled {
            break;
        }
        let mapping = next
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
            / step;
        x = next;
        fx = fnext;
        if mapping <= cfg.tolerance {
            break;
        }
    }
    Ok(x)
}

fn support_count(w: &WeightMatrix, threshold: f64) -> usize {
    (0..w.d())
        .filter(|&j| w.column(j).iter().any(|v| v.abs() > threshold))
        .count()
}

/// Minimizes L(W) + lambda * sum_{ij} |W_ij|^p for every lambda on the
/// descending grid, warm-starting each solve from the previous solution.
pub fn entrywise_reg_train(
    data: &Dataset,
    cfg: &EntrywiseRegConfig,
    solver: &SolverConfig,
) -> Result<Vec<PathPoint>> {
    data.require_non_empty()?;
    cfg.validate()?;
    solver.validate()?;
    let (k, d) = (data.k(), data.d());
    let full_support: Vec<usize> = (0..d).collect();
    let mut warm = WeightMatrix::zeros(k, d);
    let mut path = Vec::with_capacity(cfg.grid.len());
    for &lambda in &cfg.grid {
        let w = match cfg.p {
            2 => {
                let reg = Regularizer::Frobenius { lambda };
                corrective_solve(data, &full_support, &warm, &reg, solver)?
            }
            1 => {
                let obj = RestrictedObjective::new(data, full_support.clone(), &Regularizer::None);
                let point = ista_l1(&obj, lambda, warm.entries(), solver)?;
                WeightMatrix::from_entries(k, d, point)?
            }
            _ => unreachable!("validated"),
        };
        let loss = crate::model::loss_avg(&w, data, &Regularizer::None)?;
        let train_err = crate::model::zero_one_error(&w, data)?;
        path.push(PathPoint {
            lambda,
            loss,
            train_err,
            support_count: support_count(&w, 1e-8),
            weights: w.clone(),
        });
        warm = w;
    }
    Ok(path)
}

/// Tabular text form of a path, one row per lambda.
pub fn path_to_tsv(path: &[PathPoint]) -> String {
    let mut out = String::from("lambda\tloss\tsupport_count\ttrain_err\n");
    for p in path {
        out.push_str(&format!(
            "{:.17e}\t{:.17e}\t{}\t{:.17e}\n",
            p.lambda, p.loss, p.support_count, p.train_err
        ));
    }
    out
}
