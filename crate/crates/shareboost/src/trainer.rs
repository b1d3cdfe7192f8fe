//! The outer training loop: greedy column selection followed by a fully
//! corrective re-optimization of all selected columns.
//!
//! Each round picks the feature whose gradient column has the largest l1
//! norm (or a variant rule, or a whole feature group), adds it to the
//! support, and re-solves the loss restricted to the support.

use std::collections::BTreeSet;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::exec;
use crate::feature_map::{best_stump, Stump};
use crate::model::{
    self, column_scores, gradient, loss_from_scores, score_gradient, WeightMatrix,
};
use crate::regularizer::Regularizer;
use crate::solver::{minimize_smooth, SmoothObjective, SolverConfig, SolverResult};

/// How the next feature is chosen each round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SelectionRule {
    /// argmax of the gradient-column l1 norms (the default rule).
    #[default]
    GradL1,
    /// Feature whose fully refit restricted loss is smallest.
    BestColumnRefit,
    /// Feature with the best scalar step along its negative gradient column.
    SingleColumnLinesearch,
    /// Feature with the best free column vector.
    SingleColumnVector,
}

#[derive(Debug, Clone)]
pub struct TrainConfig {
    /// Maximum number of rounds T.
    pub rounds: usize,
    pub rule: SelectionRule,
    pub reg: Regularizer,
    /// Optional partition of the feature indices; when present, whole
    /// groups are selected by summed column score.
    pub groups: Option<Vec<Vec<usize>>>,
    pub solver: SolverConfig,
    /// Stop early when every column score falls at or below this.
    pub early_stop_score: f64,
    /// Gradient infinity-norm target for the corrective solves.
    pub corrective_tolerance: f64,
    /// Warm-start each corrective solve from the previous round's weights.
    pub warm_start: bool,
}

impl TrainConfig {
    pub fn new(rounds: usize) -> Self {
        TrainConfig {
            rounds,
            rule: SelectionRule::GradL1,
            reg: Regularizer::None,
            groups: None,
            solver: SolverConfig::default(),
            early_stop_score: 1e-10,
            corrective_tolerance: 1e-8,
            warm_start: true,
        }
    }

    fn validate(&self, d: usize) -> Result<()> {
        if self.rounds == 0 {
            return Err(Error::input("round count T must be >= 1"));
        }
        self.reg.validate()?;
        self.solver.validate()?;
        if let Some(groups) = &self.groups {
            let mut seen = vec![false; d];
            for group in groups {
                for &j in group {
                    if j >= d {
                        return Err(Error::input(format!("group member {j} out of range")));
                    }
                    if seen[j] {
                        return Err(Error::input(format!("feature {j} appears in two groups")));
                    }
                    seen[j] = true;
                }
            }
            if !seen.iter().all(|&s| s) {
                return Err(Error::input("groups must partition all feature indices"));
            }
        }
        Ok(())
    }

    fn corrective_solver(&self) -> SolverConfig {
        self.solver.with_tolerance(self.corrective_tolerance)
    }
}

/// What a round selected: a single feature or a whole group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Selection {
    Feature(usize),
    Group { id: usize, members: Vec<usize> },
}

impl Selection {
    pub fn members(&self) -> Vec<usize> {
        match self {
            Selection::Feature(j) => vec![*j],
            Selection::Group { members, .. } => members.clone(),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Selection::Feature(j) => j.to_string(),
            Selection::Group { id, .. } => format!("g{id}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainRecord {
    pub round: usize,
    pub selection: Selection,
    /// Column score (or summed group score) of the selection.
    pub score: f64,
    /// Training objective (loss plus regularizer) after the corrective solve.
    pub train_loss: f64,
    pub train_err: f64,
    pub heldout_err: Option<f64>,
    /// Size of the selected index set I after this round.
    pub support_size: usize,
    pub solver_converged: bool,
    /// Infinity norm of the restricted gradient after the corrective solve.
    pub restricted_grad_inf: f64,
    /// Largest l1 norm over restricted gradient columns after the solve.
    pub restricted_col_l1_max: f64,
    pub warning: Option<String>,
}

/// The regularization path of one run: per-round records plus the round-0
/// baseline at W = 0.
#[derive(Debug, Clone)]
pub struct TrainTrace {
    pub initial_loss: f64,
    pub initial_err: f64,
    pub records: Vec<TrainRecord>,
}

impl TrainTrace {
    /// Objective values L(W^(0)), L(W^(1)), ... including the W=0 baseline.
    pub fn loss_sequence(&self) -> Vec<f64> {
        let mut seq = Vec::with_capacity(self.records.len() + 1);
        seq.push(self.initial_loss);
        seq.extend(self.records.iter().map(|r| r.train_loss));
        seq
    }

    /// Tabular text form: one row per round.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from(
            "round\tselected\tscore\ttrain_loss\ttrain_err\theldout_err\tsupport_size\n",
        );
        for r in &self.records {
            let heldout = r
                .heldout_err
                .map(|e| format!("{e:.17e}"))
                .unwrap_or_else(|| "-".to_string());
            out.push_str(&format!(
                "{}\t{}\t{:.17e}\t{:.17e}\t{:.17e}\t{}\t{}\n",
                r.round,
                r.selection.label(),
                r.score,
                r.train_loss,
                r.train_err,
                heldout,
                r.support_size,
            ));
        }
        out
    }
}

// Restricted objective: L over matrices supported on a fixed column set,
// parameterized by the k x |support| block (row-major).
pub(crate) struct RestrictedObjective<'a> {
    data: &'a Dataset,
    support: Vec<usize>,
    reg: &'a Regularizer,
}

impl<'a> RestrictedObjective<'a> {
    pub(crate) fn new(data: &'a Dataset, support: Vec<usize>, reg: &'a Regularizer) -> Self {
        RestrictedObjective { data, support, reg }
    }

    fn scores(&self, point: &[f64], x: &[f64]) -> Vec<f64> {
        let s = self.support.len();
        (0..self.data.k())
            .map(|c| {
                self.support
                    .iter()
                    .enumerate()
                    .map(|(j, &col)| point[c * s + j] * x[col])
                    .sum()
            })
            .collect()
    }
}

impl SmoothObjective for RestrictedObjective<'_> {
    fn dimension(&self) -> usize {
        self.data.k() * self.support.len()
    }

    fn value(&self, point: &[f64]) -> f64 {
        let m = self.data.m();
        let sum = exec::sum_over(m, |i| {
            let scores = self.scores(point, self.data.example(i));
            loss_from_scores(&scores, self.data.label(i))
        });
        let absent = self.data.d() - self.support.len();
        sum / m as f64 + self.reg.value(point, self.data.k(), self.support.len(), absent)
    }

    fn gradient(&self, point: &[f64]) -> Vec<f64> {
        let m = self.data.m();
        let s = self.support.len();
        let k = self.data.k();
        let mut grad = exec::sum_vectors(m, k * s, |i, acc| {
            let x = self.data.example(i);
            let scores = self.scores(point, x);
            let resid = score_gradient(&scores, self.data.label(i));
            for (q, rq) in resid.iter().enumerate() {
                for (j, &col) in self.support.iter().enumerate() {
                    acc[q * s + j] += rq * x[col];
                }
            }
        });
        let inv_m = 1.0 / m as f64;
        for g in grad.iter_mut() {
            *g *= inv_m;
        }
        self.reg.add_gradient(point, k, s, &mut grad);
        grad
    }
}

fn max_column_l1(grad: &[f64], k: usize, s: usize) -> f64 {
    (0..s)
        .map(|j| (0..k).map(|q| grad[q * s + j].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Re-optimizes all columns in `support`, leaving every other column zero.
/// The result's loss never exceeds the warm-start's.
pub fn corrective_solve(
    data: &Dataset,
    support: &[usize],
    w_init: &WeightMatrix,
    reg: &Regularizer,
    cfg: &SolverConfig,
) -> Result<WeightMatrix> {
    let (w, _) = corrective_solve_inner(data, support, w_init, reg, cfg)?;
    Ok(w)
}

fn corrective_solve_inner(
    data: &Dataset,
    support: &[usize],
    w_init: &WeightMatrix,
    reg: &Regularizer,
    cfg: &SolverConfig,
) -> Result<(WeightMatrix, SolverResult)> {
    let support: Vec<usize> = support.to_vec();
    if let Some(&bad) = w_init.support().iter().find(|j| !support.contains(j)) {
        return Err(Error::input(format!(
            "warm start uses column {bad} outside the requested support"
        )));
    }
    if support.is_empty() {
        let res = SolverResult {
            point: Vec::new(),
            value: model::loss_avg(w_init, data, reg)?,
            iterations: 0,
            final_gradient_norm: 0.0,
            converged: true,
        };
        return Ok((w_init.clone(), res));
    }
    let k = data.k();
    let s = support.len();
    let mut init = vec![0.0; k * s];
    for (j, &col) in support.iter().enumerate() {
        for c in 0..k {
            init[c * s + j] = w_init.entry(c, col);
        }
    }
    let obj = RestrictedObjective::new(data, support.clone(), reg);
    let res = minimize_smooth(&obj, &init, cfg)?;
    let mut entries = vec![0.0; k * data.d()];
    for (j, &col) in support.iter().enumerate() {
        for c in 0..k {
            entries[c * data.d() + col] = res.point[c * s + j];
        }
    }
    let w = WeightMatrix::from_entries(k, data.d(), entries)?;
    Ok((w, res))
}

/// Picks the next feature under `rule`. Returns `None` when every column
/// score is at or below `early_stop` (the optimum has been reached).
pub fn select_feature(
    w: &WeightMatrix,
    data: &Dataset,
    selected: &BTreeSet<usize>,
    rule: SelectionRule,
    reg: &Regularizer,
    solver: &SolverConfig,
    early_stop: f64,
) -> Result<Option<(usize, f64)>> {
    let g = gradient(w, data, reg)?;
    let scores = column_scores(&g);
    let best = exec::argbest(scores.len(), |j| (j, scores[j]), |c, b| c.1 > b.1)
        .expect("d >= 1");
    if best.1 <= early_stop {
        return Ok(None);
    }
    match rule {
        SelectionRule::GradL1 => Ok(Some(best)),
        SelectionRule::BestColumnRefit => {
            let candidates: Vec<usize> = (0..data.d()).filter(|j| !selected.contains(j)).collect();
            if candidates.is_empty() {
                return Ok(Some(best));
            }
            let scan = exec::argbest(
                candidates.len(),
                |ci| {
                    let r = candidates[ci];
                    let mut support: Vec<usize> = selected.iter().cloned().collect();
                    support.push(r);
                    support.sort_unstable();
                    let value = corrective_solve_inner(data, &support, w, reg, solver)
                        .map(|(_, res)| res.value)
                        .unwrap_or(f64::INFINITY);
                    (r, value)
                },
                |c, b| c.1 < b.1,
            )
            .expect("non-empty candidates");
            Ok(Some((scan.0, scores[scan.0])))
        }
        SelectionRule::SingleColumnLinesearch | SelectionRule::SingleColumnVector => {
            let candidates: Vec<usize> = (0..data.d()).filter(|j| !selected.contains(j)).collect();
            if candidates.is_empty() {
                return Ok(Some(best));
            }
            // base scores with the candidate column zero (true for r not in I)
            let base: Vec<Vec<f64>> = (0..data.m())
                .map(|i| w.scores(data.example(i)).expect("shape checked"))
                .collect();
            let scan = exec::argbest(
                candidates.len(),
                |ci| {
                    let r = candidates[ci];
                    let value = match rule {
                        SelectionRule::SingleColumnLinesearch => {
                            let direction: Vec<f64> =
                                g.column(r).iter().map(|v| -v).collect();
                            let obj = ColumnObjective {
                                data,
                                base: &base,
                                column: r,
                                direction: Some(direction),
                                reg,
                            };
                            minimize_smooth(&obj, &[0.0], &scan_config(solver))
                                .map(|res| res.value)
                                .unwrap_or(f64::INFINITY)
                        }
                        SelectionRule::SingleColumnVector => {
                            let obj = ColumnObjective {
                                data,
                                base: &base,
                                column: r,
                                direction: None,
                                reg,
                            };
                            minimize_smooth(&obj, &vec![0.0; data.k()], &scan_config(solver))
                                .map(|res| res.value)
                                .unwrap_or(f64::INFINITY)
                        }
                        _ => unreachable!(),
                    };
                    (r, value)
                },
                |c, b| c.1 < b.1,
            )
            .expect("non-empty candidates");
            Ok(Some((scan.0, scores[scan.0])))
        }
    }
}

fn scan_config(solver: &SolverConfig) -> SolverConfig {
    // candidate scans need a ranking, not a polished solution
    solver.with_max_iterations(solver.max_iterations.min(300))
}

// Loss as a function of a single (scaled) column while all other columns
// stay fixed; used by the intermediate selection rules.
struct ColumnObjective<'a> {
    data: &'a Dataset,
    base: &'a [Vec<f64>],
    column: usize,
    /// Some(u): 1-D objective along u; None: free k-vector column.
    direction: Option<Vec<f64>>,
    reg: &'a Regularizer,
}

impl ColumnObjective<'_> {
    fn column_values(&self, point: &[f64]) -> Vec<f64> {
        match &self.direction {
            Some(u) => u.iter().map(|ui| point[0] * ui).collect(),
            None => point.to_vec(),
        }
    }
}

impl SmoothObjective for ColumnObjective<'_> {
    fn dimension(&self) -> usize {
        if self.direction.is_some() {
            1
        } else {
            self.data.k()
        }
    }

    fn value(&self, point: &[f64]) -> f64 {
        let col = self.column_values(point);
        let m = self.data.m();
        let sum = exec::sum_over(m, |i| {
            let xr = self.data.example(i)[self.column];
            let scores: Vec<f64> =
                self.base[i].iter().zip(&col).map(|(b, w)| b + w * xr).collect();
            loss_from_scores(&scores, self.data.label(i))
        });
        // other columns contribute the same constant for every candidate
        sum / m as f64 + self.reg.value(&col, self.data.k(), 1, 0)
    }

    fn gradient(&self, point: &[f64]) -> Vec<f64> {
        let col = self.column_values(point);
        let k = self.data.k();
        let m = self.data.m();
        let mut col_grad = exec::sum_vectors(m, k, |i, acc| {
            let xr = self.data.example(i)[self.column];
            let scores: Vec<f64> =
                self.base[i].iter().zip(&col).map(|(b, w)| b + w * xr).collect();
            let resid = score_gradient(&scores, self.data.label(i));
            for (a, rq) in acc.iter_mut().zip(&resid) {
                *a += rq * xr;
            }
        });
        let inv_m = 1.0 / m as f64;
        for g in col_grad.iter_mut() {
            *g *= inv_m;
        }
        self.reg.add_gradient(&col, k, 1, &mut col_grad);
        match &self.direction {
            Some(u) => vec![col_grad.iter().zip(u).map(|(g, ui)| g * ui).sum()],
            None => col_grad,
        }
    }
}

/// Picks the group with the largest summed column score; lowest id on ties.
pub fn select_group(
    w: &WeightMatrix,
    data: &Dataset,
    groups: &[Vec<usize>],
    reg: &Regularizer,
    early_stop: f64,
) -> Result<Option<(usize, f64)>> {
    let g = gradient(w, data, reg)?;
    let scores = column_scores(&g);
    let best = groups
        .iter()
        .enumerate()
        .map(|(id, members)| (id, members.iter().map(|&j| scores[j]).sum::<f64>()))
        .max_by(|a, b| {
            a.1.partial_cmp(&b.1)
                .unwrap()
                .then(b.0.cmp(&a.0)) // prefer the lower id on ties
        })
        .expect("at least one group");
    if best.1 <= early_stop {
        Ok(None)
    } else {
        Ok(Some(best))
    }
}

/// Runs the greedy training loop: at most `cfg.rounds` rounds of select,
/// extend the support, and fully corrective re-solve. Stops early when all
/// column scores vanish. The output support never exceeds the round count
/// (or round count times group size under group selection).
pub fn shareboost_train(
    data: &Dataset,
    cfg: &TrainConfig,
    heldout: Option<&Dataset>,
) -> Result<(WeightMatrix, TrainTrace)> {
    data.require_non_empty()?;
    cfg.validate(data.d())?;
    if let Some(h) = heldout {
        if h.d() != data.d() || h.k() != data.k() {
            return Err(Error::input("held-out set shape does not match training set"));
        }
    }

    let mut w = WeightMatrix::zeros(data.k(), data.d());
    let mut selected: BTreeSet<usize> = BTreeSet::new();
    let initial_loss = model::loss_avg(&w, data, &cfg.reg)?;
    let initial_err = model::zero_one_error(&w, data)?;
    let mut records = Vec::new();
    let corrective_cfg = cfg.corrective_solver();

    for round in 1..=cfg.rounds {
        let (selection, score) = match &cfg.groups {
            Some(groups) => {
                match select_group(&w, data, groups, &cfg.reg, cfg.early_stop_score)? {
                    None => break,
                    Some((id, score)) => {
                        (Selection::Group { id, members: groups[id].clone() }, score)
                    }
                }
            }
            None => {
                match select_feature(
                    &w,
                    data,
                    &selected,
                    cfg.rule,
                    &cfg.reg,
                    &cfg.solver,
                    cfg.early_stop_score,
                )? {
                    None => break,
                    Some((j, score)) => (Selection::Feature(j), score),
                }
            }
        };
        selected.extend(selection.members());
        let support: Vec<usize> = selected.iter().cloned().collect();

        let warm = if cfg.warm_start { w.clone() } else { WeightMatrix::zeros(data.k(), data.d()) };
        let (w_next, res) = corrective_solve_inner(data, &support, &warm, &cfg.reg, &corrective_cfg)?;
        w = w_next;

        let warning = if !res.converged && res.final_gradient_norm > 1e-4 {
            Some(format!(
                "corrective solve stopped at gradient norm {:.3e} after {} iterations",
                res.final_gradient_norm, res.iterations
            ))
        } else {
            None
        };
        let obj = RestrictedObjective::new(data, support.clone(), &cfg.reg);
        let final_grad = if res.point.is_empty() { Vec::new() } else { obj.gradient(&res.point) };
        let col_l1 = max_column_l1(&final_grad, data.k(), support.len());

        records.push(TrainRecord {
            round,
            selection,
            score,
            train_loss: res.value,
            train_err: model::zero_one_error(&w, data)?,
            heldout_err: heldout.map(|h| model::zero_one_error(&w, h)).transpose()?,
            support_size: selected.len(),
            solver_converged: res.converged,
            restricted_grad_inf: res.final_gradient_norm,
            restricted_col_l1_max: col_l1,
            warning,
        });
    }

    Ok((w, TrainTrace { initial_loss, initial_err, records }))
}

/// Per-round report for the greedy progress inequality
/// `eps_t - eps_{t+1} >= eps_t^2 / (4 ||W*||_{inf,1}^2)` (up to solver
/// inexactness), valid on rounds where the loss still exceeds L(W*).
#[derive(Debug, Clone)]
pub struct ProgressRound {
    pub round: usize,
    pub epsilon: f64,
    pub decrease: f64,
    pub required: f64,
    /// The sharper bound using only the reference columns missing from the
    /// current support; `None` when the support already covers them.
    pub required_sharp: Option<f64>,
    /// Round exempt because L(W^(t)) <= L(W*).
    pub exempt: bool,
    pub violation: bool,
    pub violation_sharp: bool,
}

/// Checks the per-round progress inequality of a finished run against a
/// reference matrix. Losses are compared without regularization, so the
/// trace should come from an unregularized run.
pub fn progress_check(
    trace: &TrainTrace,
    data: &Dataset,
    w_star: &WeightMatrix,
    corrective_tolerance: f64,
) -> Result<Vec<ProgressRound>> {
    let l_star = model::loss_avg(w_star, data, &Regularizer::None)?;
    let inf1 = model::mixed_norm(w_star, model::ColumnNorm::LInf, model::AcrossNorm::L1);
    let losses = trace.loss_sequence();
    let budget = 10.0 * corrective_tolerance;

    let mut support: BTreeSet<usize> = BTreeSet::new();
    let mut out = Vec::new();
    for (t, rec) in trace.records.iter().enumerate() {
        let eps_t = losses[t] - l_star;
        let decrease = losses[t] - losses[t + 1];
        let exempt = eps_t <= 0.0;
        let required = eps_t * eps_t / (4.0 * inf1 * inf1) - budget;

        let missing_sum: f64 = w_star
            .support()
            .iter()
            .filter(|j| !support.contains(j))
            .map(|&j| w_star.column(j).iter().map(|v| v.abs()).fold(0.0, f64::max))
            .sum();
        let required_sharp = if missing_sum > 0.0 {
            Some(eps_t * eps_t / (4.0 * missing_sum * missing_sum) - budget)
        } else {
            None
        };

        out.push(ProgressRound {
            round: rec.round,
            epsilon: eps_t,
            decrease,
            required,
            required_sharp,
            exempt,
            violation: !exempt && decrease < required,
            violation_sharp: !exempt
                && required_sharp.map(|r| decrease < r).unwrap_or(false),
        });
        support.extend(rec.selection.members());
    }
    Ok(out)
}

/// Training trace plus the stump pool: the mapped design matrix is never
/// materialized; each round scans all (feature, threshold) stumps in
/// O(m log m) per raw feature.
pub struct StumpTrainResult {
    pub stumps: Vec<Stump>,
    /// Weights over the selected stump columns, in `stumps` order.
    pub weights: WeightMatrix,
    pub trace: TrainTrace,
}

/// Greedy training over the implicit decision-stump feature space.
pub fn shareboost_train_stumps(
    raw: &Dataset,
    cfg: &TrainConfig,
    heldout: Option<&Dataset>,
) -> Result<StumpTrainResult> {
    raw.require_non_empty()?;
    if cfg.rounds == 0 {
        return Err(Error::input("round count T must be >= 1"));
    }
    if cfg.groups.is_some() {
        return Err(Error::input("group selection is not available with stump features"));
    }
    if cfg.rule != SelectionRule::GradL1 {
        return Err(Error::input("stump features support only the gradient selection rule"));
    }
    if let Some(h) = heldout {
        if h.d() != raw.d() || h.k() != raw.k() {
            return Err(Error::input("held-out set shape does not match training set"));
        }
    }

    let (m, k) = (raw.m(), raw.k());
    let corrective_cfg = cfg.corrective_solver();
    let mut stumps: Vec<Stump> = Vec::new();
    let mut columns: Vec<Vec<f64>> = Vec::new(); // m-vectors in {0,1}
    let mut w = WeightMatrix::zeros(k, 0.max(1));
    let mut scores_cache: Vec<Vec<f64>> = vec![vec![0.0; k]; m];

    let initial_loss = exec::sum_over(m, |i| loss_from_scores(&scores_cache[i], raw.label(i)))
        / m as f64;
    let initial_err = raw
        .labels()
        .iter()
        .filter(|&&y| y != model::argmax_lowest(&vec![0.0; k]))
        .count() as f64
        / m as f64;
    let mut records = Vec::new();

    for round in 1..=cfg.rounds {
        // residuals rho_q - 1[q=y] under the current scores, m x k
        let residuals = exec::sum_vectors(m, m * k, |i, acc| {
            let r = score_gradient(&scores_cache[i], raw.label(i));
            acc[i * k..(i + 1) * k].copy_from_slice(&r);
        });
        let (feature, threshold, score) = best_stump(raw, &residuals);
        if score <= cfg.early_stop_score {
            break;
        }
        let stump = Stump { raw_feature: feature, threshold };
        let selection_index = match stumps.iter().position(|s| *s == stump) {
            Some(idx) => idx, // re-selection consumes the round, adds nothing
            None => {
                let col: Vec<f64> = (0..m)
                    .map(|i| if raw.example(i)[feature] <= threshold { 1.0 } else { 0.0 })
                    .collect();
                stumps.push(stump.clone());
                columns.push(col);
                stumps.len() - 1
            }
        };

        // dataset over the materialized stump columns
        let n = stumps.len();
        let mut features = Vec::with_capacity(m * n);
        for i in 0..m {
            for col in &columns {
                features.push(col[i]);
            }
        }
        let mapped = Dataset::new(features, raw.labels().to_vec(), n, k)?;
        let mut warm = WeightMatrix::zeros(k, n);
        if cfg.warm_start {
            for j in 0..w.d().min(n) {
                warm.set_column(j, &w.column(j));
            }
        }
        let support: Vec<usize> = (0..n).collect();
        let (w_next, res) =
            corrective_solve_inner(&mapped, &support, &warm, &cfg.reg, &corrective_cfg)?;
        w = w_next;
        for i in 0..m {
            scores_cache[i] = w.scores(mapped.example(i))?;
        }

        let train_err = model::zero_one_error(&w, &mapped)?;
        let heldout_err = heldout
            .map(|h| {
                let mapped_h = apply_stumps(h, &stumps)?;
                model::zero_one_error(&w, &mapped_h)
            })
            .transpose()?;
        let obj = RestrictedObjective::new(&mapped, support.clone(), &cfg.reg);
        let final_grad = obj.gradient(&res.point);
        let col_l1 = max_column_l1(&final_grad, k, n);
        let warning = if !res.converged && res.final_gradient_norm > 1e-4 {
            Some(format!(
                "corrective solve stopped at gradient norm {:.3e} after {} iterations",
                res.final_gradient_norm, res.iterations
            ))
        } else {
            None
        };
        records.push(TrainRecord {
            round,
            selection: Selection::Feature(selection_index),
            score,
            train_loss: res.value,
            train_err,
            heldout_err,
            support_size: stumps.len(),
            solver_converged: res.converged,
            restricted_grad_inf: res.final_gradient_norm,
            restricted_col_l1_max: col_l1,
            warning,
        });
    }

    Ok(StumpTrainResult {
        stumps,
        weights: w,
        trace: TrainTrace { initial_loss, initial_err, records },
    })
}

fn apply_stumps(raw: &Dataset, stumps: &[Stump]) -> Result<Dataset> {
    raw.map_features(stumps.len(), |v, out| {
        out.extend(
            stumps
                .iter()
                .map(|s| if v[s.raw_feature] <= s.threshold { 1.0 } else { 0.0 }),
        )
    })
}
