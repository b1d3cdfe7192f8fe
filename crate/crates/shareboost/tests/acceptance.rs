//! End-to-end acceptance checks. Each numbered criterion prints exactly one
//! verdict line; the test fails if any criterion does. Quantitative
//! tolerances and runtime budgets are pinned in the individual checks.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use shareboost::baselines::{entrywise_reg_train, one_vs_rest_train, EntrywiseRegConfig};
use shareboost::feature_map::{apply_map_dataset, best_stump, build_anchor_map};
use shareboost::feature_map::FeatureMapDescriptor;
use shareboost::io::{scale_features, ModelFile};
use shareboost::model::{
    self, loss_from_scores, loss_example, predict, score_gradient, AcrossNorm, ColumnNorm,
};
use shareboost::synthetic::{
    block_reference_matrices, code_reference_matrices, gen_block_dataset, gen_code_dataset,
    BlockDatasetSpec, CodeDatasetSpec,
};
use shareboost::trainer::{corrective_solve, progress_check, shareboost_train, TrainConfig};
use shareboost::trainer::TrainTrace;
use shareboost::{
    minimize_smooth, Dataset, Regularizer, SmoothObjective, SolverConfig, WeightMatrix,
};

type CheckResult = Result<(), String>;

fn fail(msg: impl Into<String>) -> CheckResult {
    Err(msg.into())
}

fn ensure(cond: bool, msg: impl Into<String>) -> CheckResult {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

/// Traces gathered from the training runs, re-checked by criterion 11.
struct RecordedRun {
    label: &'static str,
    trace: TrainTrace,
    corrective_tolerance: f64,
    k: usize,
}

fn random_instance(rng: &mut ChaCha8Rng, m: usize, d: usize, k: usize) -> (WeightMatrix, Dataset) {
    let entries: Vec<f64> = (0..k * d).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let w = WeightMatrix::from_entries(k, d, entries).unwrap();
    let features: Vec<f64> = (0..m * d).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let labels: Vec<usize> = (0..m).map(|_| rng.gen_range(0..k)).collect();
    (w, Dataset::new(features, labels, d, k).unwrap())
}

// 1. Analytic gradient vs central finite differences on random instances.
fn c01_gradient_oracle() -> CheckResult {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let h = 1e-5;
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let m = rng.gen_range(1..=20);
        let d = rng.gen_range(1..=8);
        let k = rng.gen_range(2..=5);
        let (w, data) = random_instance(&mut rng, m, d, k);
        let analytic = model::gradient(&w, &data, &Regularizer::None).unwrap();
        for idx in 0..k * d {
            let perturbed = |delta: f64| {
                let mut e = w.entries().to_vec();
                e[idx] += delta;
                let wp = WeightMatrix::from_entries(k, d, e).unwrap();
                model::loss_avg(&wp, &data, &Regularizer::None).unwrap()
            };
            let fd = (perturbed(h) - perturbed(-h)) / (2.0 * h);
            let a = analytic.entries[idx];
            let rel = (a - fd).abs() / a.abs().max(fd.abs()).max(1.0);
            worst = worst.max(rel);
        }
    }
    ensure(worst <= 1e-6, format!("max relative gradient error {worst:.3e} > 1e-6"))?;
    ensure(start.elapsed() < Duration::from_secs(5), "gradient oracle exceeded 5 s")
}

// 2. Class posteriors sum to one on random (W, x, y) evaluations.
fn c02_rho_normalization() -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    for _ in 0..10_000 {
        let d = rng.gen_range(1..=6);
        let k = rng.gen_range(2..=10);
        let (w, _) = random_instance(&mut rng, 1, d, k);
        let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let y = rng.gen_range(0..k);
        let rho = model::rho(&w, &x, y).unwrap();
        let total: f64 = rho.probabilities.iter().sum();
        ensure((total - 1.0).abs() <= 1e-12, format!("|sum rho - 1| = {:.3e}", (total - 1.0).abs()))?;
    }
    Ok(())
}

// 3. Second-order smoothness of the loss in the score vector:
//    l(u+v) <= l(u) + <grad l(u), v> + ||v||_inf^2.
fn c03_smoothness() -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    for _ in 0..10_000 {
        let k = rng.gen_range(2..=10);
        let u: Vec<f64> = (0..k).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let v: Vec<f64> = (0..k).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let y = rng.gen_range(0..k);
        let uv: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a + b).collect();
        let g = score_gradient(&u, y);
        let linear: f64 = g.iter().zip(&v).map(|(a, b)| a * b).sum();
        let vinf = v.iter().map(|t| t.abs()).fold(0.0, f64::max);
        let slack = loss_from_scores(&u, y) + linear + vinf * vinf - loss_from_scores(&uv, y);
        ensure(slack >= -1e-12, format!("smoothness slack {slack:.3e} < -1e-12"))?;
    }
    Ok(())
}

// 4. The loss upper-bounds the misclassification indicator.
fn c04_loss_dominates_zero_one() -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    for _ in 0..10_000 {
        let d = rng.gen_range(1..=6);
        let k = rng.gen_range(2..=8);
        let (w, _) = random_instance(&mut rng, 1, d, k);
        let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let y = rng.gen_range(0..k);
        let loss = loss_example(&w, &x, y).unwrap();
        let wrong = predict(&w, &x).unwrap() != y;
        ensure(
            loss >= if wrong { 1.0 } else { 0.0 },
            format!("loss {loss:.6} below 0-1 indicator (wrong = {wrong})"),
        )?;
    }
    Ok(())
}

// Bounded dataset for the competitive-loss run: labels follow the quadrant
// of the first two coordinates with a small flip rate, so the problem is
// nearly realizable over a 2-column support but not separable.
fn quadrant_dataset(m: usize, d: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut features = Vec::with_capacity(m * d);
    let mut labels = Vec::with_capacity(m);
    for _ in 0..m {
        let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut y = (x[0] > 0.0) as usize * 2 + (x[1] > 0.0) as usize;
        if rng.gen_bool(0.03) {
            y = (y + rng.gen_range(1..4)) % 4;
        }
        features.extend(x);
        labels.push(y);
    }
    Dataset::new(features, labels, d, 4).unwrap()
}

// 5. Competitive with a bounded reference in T = 4 ||W*||^2 / eps rounds.
fn c05_competitive_loss(runs: &mut Vec<RecordedRun>) -> Result<(Dataset, WeightMatrix), String> {
    let start = Instant::now();
    let data = quadrant_dataset(200, 20, 55);
    assert!(data.bounded());

    let solver = SolverConfig { max_iterations: 3000, ..Default::default() };
    let fit = corrective_solve(
        &data,
        &[0, 1],
        &WeightMatrix::zeros(4, 20),
        &Regularizer::None,
        &solver.with_tolerance(1e-8),
    )
    .map_err(|e| e.to_string())?;
    let clipped: Vec<f64> = fit.entries().iter().map(|v| v.clamp(-1.0, 1.0)).collect();
    let w_star = WeightMatrix::from_entries(4, 20, clipped).unwrap();
    let norm = model::mixed_norm(&w_star, ColumnNorm::LInf, AcrossNorm::L1);
    if norm > 2.0 {
        return Err(format!("reference norm {norm} > 2 despite clipping"));
    }
    let l_star = model::loss_avg(&w_star, &data, &Regularizer::None).unwrap();

    let mut cfg = TrainConfig::new(32);
    cfg.solver = solver;
    cfg.corrective_tolerance = 1e-6;
    let (w, trace) = shareboost_train(&data, &cfg, None).map_err(|e| e.to_string())?;
    let final_loss = *trace.loss_sequence().last().unwrap();
    let support = w.support().len();
    runs.push(RecordedRun { label: "competitive", trace, corrective_tolerance: 1e-6, k: 4 });

    if final_loss > l_star + 0.5 {
        return Err(format!("final loss {final_loss:.6} > reference {l_star:.6} + 0.5"));
    }
    if support > 32 {
        return Err(format!("support {support} exceeds the 32-round budget"));
    }
    if start.elapsed() >= Duration::from_secs(30) {
        return Err("competitive run exceeded 30 s".into());
    }
    Ok((data, w_star))
}

// 6. Per-round progress inequality on the run from criterion 5.
fn c06_per_round_progress(
    runs: &[RecordedRun],
    data: &Dataset,
    w_star: &WeightMatrix,
) -> CheckResult {
    let run = runs.iter().find(|r| r.label == "competitive").unwrap();
    let rounds = progress_check(&run.trace, data, w_star, run.corrective_tolerance)
        .map_err(|e| e.to_string())?;
    let violations: Vec<usize> =
        rounds.iter().filter(|r| r.violation).map(|r| r.round).collect();
    ensure(violations.is_empty(), format!("progress violated in rounds {violations:?}"))
}

// 7. Code dataset: few shared columns suffice; entrywise l1 cannot match.
fn c07_code_dataset(runs: &mut Vec<RecordedRun>) -> CheckResult {
    let start = Instant::now();
    let spec = CodeDatasetSpec::new(16, 1600).unwrap();
    let data = gen_code_dataset(&spec, 0.0, 7).unwrap();
    let k = spec.k as f64;

    let mut cfg = TrainConfig::new(8);
    cfg.solver = SolverConfig { max_iterations: 2000, ..Default::default() };
    cfg.corrective_tolerance = 1e-6;
    let (_, trace) = shareboost_train(&data, &cfg, None).map_err(|e| e.to_string())?;
    let zero_round = trace.records.iter().find(|r| r.train_err == 0.0).map(|r| r.round);
    runs.push(RecordedRun { label: "code", trace, corrective_tolerance: 1e-6, k: 16 });
    match zero_round {
        Some(r) if r <= 8 => {}
        other => return fail(format!("zero training error not reached within 8 rounds ({other:?})")),
    }

    let refs = code_reference_matrices(&spec);
    for c in [1.0, 2.0, 5.0] {
        let scale = |w: &WeightMatrix| {
            WeightMatrix::from_entries(
                w.k(),
                w.d(),
                w.entries().iter().map(|v| c * v).collect(),
            )
            .unwrap()
        };
        let lf = model::loss_avg(&scale(&refs.flat), &data, &Regularizer::None).unwrap();
        let ls = model::loss_avg(&scale(&refs.shared), &data, &Regularizer::None).unwrap();
        let closed = (1.0 + (k - 1.0) * (1.0 - 2.0 * c * k.ln()).exp()).ln();
        ensure(
            (lf - closed).abs() <= 1e-9,
            format!("flat loss {lf:.12} vs closed form {closed:.12} at c={c}"),
        )?;
        ensure(lf < ls, format!("flat loss {lf:.6} not below shared loss {ls:.6} at c={c}"))?;
    }

    // descending 20-point lambda grid, log-spaced
    let grid: Vec<f64> = (0..20)
        .map(|i| 10f64.powf(-1.0 - 5.0 * i as f64 / 19.0))
        .collect();
    let reg_cfg = EntrywiseRegConfig { p: 1, grid };
    let solver = SolverConfig { tolerance: 1e-5, max_iterations: 400, ..Default::default() };
    let path = entrywise_reg_train(&data, &reg_cfg, &solver).map_err(|e| e.to_string())?;
    let zero_err: Vec<_> = path.iter().filter(|p| p.train_err == 0.0).collect();
    ensure(!zero_err.is_empty(), "no l1-path point reached zero training error")?;
    for point in zero_err {
        ensure(
            point.support_count >= 16,
            format!("zero-error l1 solution uses only {} columns", point.support_count),
        )?;
    }
    ensure(start.elapsed() < Duration::from_secs(60), "code-dataset criterion exceeded 60 s")
}

// 8. Block dataset: equal convex surrogate norms, strictly better flat
//    loss, and greedy selection concentrated on one block.
fn c08_block_dataset(runs: &mut Vec<RecordedRun>) -> CheckResult {
    let spec = BlockDatasetSpec::new(8, 6, 480, 0.25).unwrap();
    let data = gen_block_dataset(&spec, 11).unwrap();
    let refs = block_reference_matrices(&spec);

    let norm_f = model::mixed_norm(&refs.flat, ColumnNorm::LInf, AcrossNorm::L1);
    let norm_s = model::mixed_norm(&refs.shared, ColumnNorm::LInf, AcrossNorm::L1);
    ensure(norm_f == norm_s, format!("mixed norms differ: flat {norm_f} vs shared {norm_s}"))?;
    let lf = model::loss_avg(&refs.flat, &data, &Regularizer::None).unwrap();
    let ls = model::loss_avg(&refs.shared, &data, &Regularizer::None).unwrap();
    ensure(lf < ls, format!("flat loss {lf:.6} not strictly below shared loss {ls:.6}"))?;

    let bits = spec.code_length();
    let rounds = 2 * bits; // 2 log2(k)
    let mut cfg = TrainConfig::new(rounds);
    cfg.solver = SolverConfig { max_iterations: 2000, ..Default::default() };
    cfg.corrective_tolerance = 1e-5;
    let (_, trace) = shareboost_train(&data, &cfg, None).map_err(|e| e.to_string())?;
    let selected: BTreeSet<usize> = trace
        .records
        .iter()
        .flat_map(|r| r.selection.members())
        .collect();
    let final_err = trace.records.last().map(|r| r.train_err);
    runs.push(RecordedRun { label: "block", trace, corrective_tolerance: 1e-5, k: 8 });

    // each round adds a distinct column, so 2 log2(k) rounds cannot stay in
    // one log2(k)-column block; the concentration claim becomes: one block
    // is selected in full, everything lies in two blocks plus <= 2 strays,
    // and two blocks' worth already reaches zero error (the flat reference
    // spreads over all s blocks)
    let in_block = |b: usize| -> usize {
        selected.iter().filter(|&&j| j / bits == b).count()
    };
    let per_block: Vec<usize> = (0..spec.s).map(in_block).collect();
    ensure(
        per_block.iter().any(|&c| c == bits),
        format!("no block selected in full; per-block counts {per_block:?}"),
    )?;
    let mut sorted = per_block.clone();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    let extras = selected.len() - sorted[0] - sorted[1];
    ensure(
        extras <= 2,
        format!("selection {selected:?} strays {extras} columns beyond two blocks"),
    )?;
    ensure(
        final_err == Some(0.0),
        format!("train error {final_err:?} after {rounds} rounds, expected 0"),
    )
}

// Exhaustive stump search over all realizable activation patterns.
fn brute_force_stump(raw: &Dataset, residuals: &[f64]) -> f64 {
    let (m, k) = (raw.m(), raw.k());
    let mut best = f64::NEG_INFINITY;
    for j in 0..raw.d() {
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| raw.example(a)[j].total_cmp(&raw.example(b)[j]));
        let mut acc = vec![0.0f64; k];
        // cut = number of active examples; realizable when it falls on a
        // boundary between distinct values (or at either end)
        let score_of = |acc: &[f64]| acc.iter().map(|a| a.abs()).sum::<f64>() / m as f64;
        best = best.max(score_of(&acc));
        for cut in 1..=m {
            let i = order[cut - 1];
            for q in 0..k {
                acc[q] += residuals[i * k + q];
            }
            let realizable = cut == m
                || raw.example(order[cut - 1])[j] < raw.example(order[cut])[j];
            if realizable {
                best = best.max(score_of(&acc));
            }
        }
    }
    best
}

// 9. Stump scan matches brute force and scales near-linearly.
fn c09_stump_scan() -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    for trial in 0..100 {
        let m = rng.gen_range(1..=50);
        let p = rng.gen_range(1..=5);
        let k = rng.gen_range(2..=4);
        // coarse grid values force plenty of duplicates
        let features: Vec<f64> = (0..m * p)
            .map(|_| (rng.gen_range(-4i32..=4) as f64) / 4.0)
            .collect();
        let labels: Vec<usize> = (0..m).map(|_| rng.gen_range(0..k)).collect();
        let raw = Dataset::new(features, labels, p, k).unwrap();
        let residuals: Vec<f64> = (0..m * k).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (_, _, score) = best_stump(&raw, &residuals);
        let brute = brute_force_stump(&raw, &residuals);
        ensure(
            (score - brute).abs() <= 1e-12,
            format!("trial {trial}: scan score {score:.15} vs brute force {brute:.15}"),
        )?;
    }

    // coarse timing bound: doubling m must less-than-triple the scan time
    let mut timed = |m: usize| {
        let features: Vec<f64> = (0..m * 5).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let labels: Vec<usize> = (0..m).map(|_| rng.gen_range(0..4)).collect();
        let raw = Dataset::new(features, labels, 5, 4).unwrap();
        let residuals: Vec<f64> = (0..m * 4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        (0..5)
            .map(|_| {
                let t = Instant::now();
                std::hint::black_box(best_stump(&raw, &residuals));
                t.elapsed()
            })
            .min()
            .unwrap()
    };
    let t1 = timed(20_000);
    let t2 = timed(40_000);
    ensure(
        t2 < 3 * t1,
        format!("scan time grew from {t1:?} to {t2:?} when doubling m"),
    )
}

// 10. Feature count to 90% train accuracy stays logarithmic in the class
//     count, while the one-vs-rest union grows linearly.
fn c10_feature_growth(runs: &mut Vec<RecordedRun>) -> CheckResult {
    let start = Instant::now();
    for k in [4usize, 8, 16, 32] {
        let bits = k.trailing_zeros() as usize;
        let spec = CodeDatasetSpec::new(k, 50 * k).unwrap();
        let data = gen_code_dataset(&spec, 0.05, 13 + k as u64).unwrap();
        let mut cfg = TrainConfig::new(3 * bits);
        cfg.solver = SolverConfig { max_iterations: 1500, ..Default::default() };
        cfg.corrective_tolerance = 1e-5;
        let (_, trace) = shareboost_train(&data, &cfg, None).map_err(|e| e.to_string())?;
        let reached = trace
            .records
            .iter()
            .find(|r| r.train_err <= 0.10)
            .map(|r| r.support_size);
        runs.push(RecordedRun {
            label: "growth",
            trace,
            corrective_tolerance: 1e-5,
            k,
        });
        match reached {
            Some(s) if s <= 3 * bits => {}
            Some(s) => return fail(format!("k={k}: 90% accuracy needed {s} > {} features", 3 * bits)),
            None => return fail(format!("k={k}: 90% accuracy not reached in {} rounds", 3 * bits)),
        }

        if k == 32 {
            let solver =
                SolverConfig { tolerance: 1e-6, max_iterations: 150, ..Default::default() };
            let (_, ovr_trace) =
                one_vs_rest_train(&data, 20, &solver).map_err(|e| e.to_string())?;
            // the union must reach k/2 features before (or without ever)
            // matching 90% accuracy
            let union = match ovr_trace.iter().find(|r| r.train_err <= 0.10) {
                Some(row) => row.union_support,
                None => ovr_trace.last().unwrap().union_support,
            };
            ensure(union >= k / 2, format!("one-vs-rest union {union} < {}", k / 2))?;
        }
    }
    ensure(start.elapsed() < Duration::from_secs(180), "feature-growth criterion exceeded 3 min")
}

// 11. Every recorded training trace is monotone and fully corrected.
fn c11_monotone_corrective_traces(runs: &[RecordedRun]) -> CheckResult {
    ensure(runs.len() >= 5, "expected traces from the earlier criteria")?;
    for run in runs {
        let budget = 10.0 * run.corrective_tolerance;
        let seq = run.trace.loss_sequence();
        for (t, pair) in seq.windows(2).enumerate() {
            ensure(
                pair[1] <= pair[0] + budget,
                format!(
                    "{}: loss rose from {:.9} to {:.9} at round {}",
                    run.label,
                    pair[0],
                    pair[1],
                    t + 1
                ),
            )?;
        }
        for rec in &run.trace.records {
            let cap = run.k as f64 * run.corrective_tolerance;
            ensure(
                rec.restricted_col_l1_max <= cap,
                format!(
                    "{}: round {} restricted column l1 {:.3e} > {:.3e}",
                    run.label, rec.round, rec.restricted_col_l1_max, cap
                ),
            )?;
        }
    }
    Ok(())
}

struct Quadratic {
    coeffs: Vec<f64>,
    centers: Vec<f64>,
}

impl SmoothObjective for Quadratic {
    fn dimension(&self) -> usize {
        self.coeffs.len()
    }
    fn value(&self, p: &[f64]) -> f64 {
        p.iter()
            .zip(self.coeffs.iter().zip(&self.centers))
            .map(|(x, (a, c))| 0.5 * a * (x - c) * (x - c))
            .sum()
    }
    fn gradient(&self, p: &[f64]) -> Vec<f64> {
        p.iter()
            .zip(self.coeffs.iter().zip(&self.centers))
            .map(|(x, (a, c))| a * (x - c))
            .collect()
    }
}

// 12. Solver sanity on a strongly convex quadratic.
fn c12_solver_sanity() -> CheckResult {
    let n = 50;
    let coeffs: Vec<f64> = (0..n)
        .map(|i| 1e-2 * 1e4f64.powf(i as f64 / (n - 1) as f64))
        .collect();
    let centers: Vec<f64> = (0..n).map(|i| ((i * 7919) % 13) as f64 - 6.0).collect();
    let obj = Quadratic { coeffs, centers };
    let cfg = SolverConfig { max_iterations: 5000, tolerance: 1e-10, ..Default::default() };
    let res = minimize_smooth(&obj, &vec![0.0; n], &cfg).map_err(|e| e.to_string())?;
    // the optimum value is 0 at the centers
    ensure(res.value <= 1e-8, format!("quadratic value {:.3e} > 1e-8", res.value))?;
    ensure(res.iterations <= 5000, format!("{} iterations > 5000", res.iterations))
}

fn gaussian_blobs(seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers = [(0.0, 0.0), (3.5, 0.0), (0.0, 3.5)];
    let sigma = 0.8;
    let normal = |rng: &mut ChaCha8Rng| {
        // Box-Muller
        let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
        let v: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        (-2.0 * u.ln()).sqrt() * v.cos()
    };
    let mut features = Vec::with_capacity(600 * 2);
    let mut labels = Vec::with_capacity(600);
    for i in 0..600 {
        let y = i % 3;
        let (cx, cy) = centers[y];
        features.push(cx + sigma * normal(&mut rng));
        features.push(cy + sigma * normal(&mut rng));
        labels.push(y);
    }
    Dataset::new(features, labels, 2, 3).unwrap()
}

// 13. Anchor feature map: a handful of local affine pieces separate blobs.
fn c13_anchor_map(runs: &mut Vec<RecordedRun>) -> CheckResult {
    let start = Instant::now();
    let raw = gaussian_blobs(1313);
    let desc = build_anchor_map(&raw, 30, &[0.3, 0.5, 0.8], 77).map_err(|e| e.to_string())?;
    let mapped = apply_map_dataset(&desc, &raw).map_err(|e| e.to_string())?;
    let groups = desc.groups().expect("anchor maps define column groups");

    let mut cfg = TrainConfig::new(10);
    cfg.groups = Some(groups);
    cfg.solver = SolverConfig { max_iterations: 1500, ..Default::default() };
    cfg.corrective_tolerance = 1e-5;
    let (_, trace) = shareboost_train(&mapped, &cfg, None).map_err(|e| e.to_string())?;
    let best = trace
        .records
        .iter()
        .map(|r| r.train_err)
        .fold(f64::INFINITY, f64::min);
    let rounds = trace.records.len();
    runs.push(RecordedRun { label: "anchors", trace, corrective_tolerance: 1e-5, k: 3 });

    ensure(
        best <= 0.05,
        format!("train error {best:.4} > 5% after {rounds} anchor groups"),
    )?;
    ensure(start.elapsed() < Duration::from_secs(60), "anchor criterion exceeded 60 s")
}

// 14. Save/load round trip and bit-level determinism at one thread.
fn c14_round_trip_determinism() -> CheckResult {
    let run_once = || -> Result<(ModelFile, Dataset), String> {
        shareboost::exec::sequential_scope(|| {
            let spec = CodeDatasetSpec::new(4, 120).unwrap();
            let data = gen_code_dataset(&spec, 0.0, 3).unwrap();
            let (scaled, transform) = scale_features(&data).map_err(|e| e.to_string())?;
            let mut cfg = TrainConfig::new(4);
            cfg.corrective_tolerance = 1e-6;
            cfg.solver = SolverConfig { max_iterations: 2000, ..Default::default() };
            let (w, _) = shareboost_train(&scaled, &cfg, None).map_err(|e| e.to_string())?;
            let file = ModelFile::from_parts(
                &w,
                FeatureMapDescriptor::Identity { raw_dim: data.d() },
                Some(transform),
            );
            Ok((file, data))
        })
    };

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (file_a, data) = run_once()?;
    let (file_b, _) = run_once()?;
    let path_a = dir.path().join("a.model.json");
    let path_b = dir.path().join("b.model.json");
    file_a.save(&path_a).map_err(|e| e.to_string())?;
    file_b.save(&path_b).map_err(|e| e.to_string())?;
    let bytes_a = std::fs::read(&path_a).map_err(|e| e.to_string())?;
    let bytes_b = std::fs::read(&path_b).map_err(|e| e.to_string())?;
    ensure(bytes_a == bytes_b, "identical seeds produced different model files")?;

    let loaded = ModelFile::load(&path_a).map_err(|e| e.to_string())?;
    let w = file_a.weight_matrix().map_err(|e| e.to_string())?;
    let transform = file_a.scaling.as_ref().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1414);
    for trial in 0..1000 {
        let x: Vec<f64> = (0..data.d()).map(|_| rng.gen_range(-4.0..4.0)).collect();
        let direct = predict(&w, &transform.apply_vec(&x)).unwrap();
        let via_file = loaded.predict_raw(&x).map_err(|e| e.to_string())?;
        ensure(
            direct == via_file,
            format!("trial {trial}: prediction {via_file} differs from {direct} after reload"),
        )?;
    }
    Ok(())
}

#[test]
fn acceptance() {
    let mut runs: Vec<RecordedRun> = Vec::new();
    let mut failures = Vec::new();

    let mut report = |id: usize, name: &str, result: CheckResult| {
        match result {
            Ok(()) => println!("criterion {id:2} ({name}): pass"),
            Err(msg) => {
                println!("criterion {id:2} ({name}): FAIL - {msg}");
                failures.push(id);
            }
        }
    };

    report(1, "gradient oracle", c01_gradient_oracle());
    report(2, "posterior normalization", c02_rho_normalization());
    report(3, "loss smoothness", c03_smoothness());
    report(4, "loss dominates 0-1", c04_loss_dominates_zero_one());

    let reference = c05_competitive_loss(&mut runs);
    match &reference {
        Ok(_) => report(5, "competitive loss bound", Ok(())),
        Err(msg) => report(5, "competitive loss bound", Err(msg.clone())),
    }
    let c6 = match &reference {
        Ok((data, w_star)) => c06_per_round_progress(&runs, data, w_star),
        Err(_) => fail("skipped: competitive run failed"),
    };
    report(6, "per-round progress", c6);

    report(7, "code dataset sharing", c07_code_dataset(&mut runs));
    report(8, "block dataset sharing", c08_block_dataset(&mut runs));
    report(9, "stump scan", c09_stump_scan());
    report(10, "feature growth vs classes", c10_feature_growth(&mut runs));
    // run the anchor criterion first so its trace joins the monotonicity check
    let c13 = c13_anchor_map(&mut runs);
    report(11, "monotone corrective traces", c11_monotone_corrective_traces(&runs));
    report(12, "solver sanity", c12_solver_sanity());
    report(13, "anchor feature map", c13);
    report(14, "round trip and determinism", c14_round_trip_determinism());

    assert!(failures.is_empty(), "failed acceptance criteria: {failures:?}");
}
