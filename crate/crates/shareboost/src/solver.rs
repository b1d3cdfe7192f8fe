//! Smooth convex minimizer for the fully corrective step: accelerated
//! gradient with backtracking line search and adaptive restart. Restarting
//! whenever the momentum step would increase the objective keeps the
//! iterate values monotone, which plain accelerated gradient does not.

use crate::error::{Error, Result};

/// Value + gradient oracle over a flat parameter vector.
pub trait SmoothObjective: Sync {
    fn dimension(&self) -> usize;
    fn value(&self, point: &[f64]) -> f64;
    fn gradient(&self, point: &[f64]) -> Vec<f64>;
}

#[derive(Debug, Clone, Copy)]
pub struct SolverConfig {
    /// Convergence threshold on the gradient infinity norm.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Backtracking shrink factor in (0,1).
    pub shrink: f64,
    /// Initial step-size estimate.
    pub initial_step: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { tolerance: 1e-8, max_iterations: 10_000, shrink: 0.5, initial_step: 1.0 }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tolerance <= 0.0 {
            return Err(Error::input("solver tolerance must be positive"));
        }
        if self.max_iterations == 0 {
            return Err(Error::input("solver max_iterations must be >= 1"));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(Error::input("backtracking shrink factor must lie in (0,1)"));
        }
        if self.initial_step <= 0.0 {
            return Err(Error::input("initial step must be positive"));
        }
        Ok(())
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn with_max_iterations(mut self, max_iterations: usize) -> Self {
        self.max_iterations = max_iterations;
        self
    }
}

#[derive(Debug, Clone)]
pub struct SolverResult {
    pub point: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub final_gradient_norm: f64,
    pub converged: bool,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_finite(value: f64, grad: &[f64], point: &[f64]) -> Result<()> {
    if value.is_finite() && grad.iter().all(|g| g.is_finite()) {
        return Ok(());
    }
    let head: Vec<f64> = point.iter().take(4).cloned().collect();
    Err(Error::numerical(format!(
        "non-finite objective or gradient (value {value}, point head {head:?})"
    )))
}

// Backtracking from `base` along -grad: accept the first step eta with
// f(next) <= f(base) + <grad, next-base> + ||next-base||^2 / (2 eta),
// i.e. f(next) <= f(base) - (eta/2) ||grad||^2. Returns `None` when the
// step underflows, meaning no decrease is representable in floating point
// (the iterate sits at the resolution limit of the objective).
fn backtrack(
    obj: &dyn SmoothObjective,
    base: &[f64],
    fbase: f64,
    grad: &[f64],
    mut step: f64,
    shrink: f64,
) -> Option<(Vec<f64>, f64, f64)> {
    let gsq = dot(grad, grad);
    loop {
        let next: Vec<f64> = base.iter().zip(grad).map(|(x, g)| x - step * g).collect();
        let fnext = obj.value(&next);
        if fnext.is_finite() && fnext <= fbase - 0.5 * step * gsq {
            return Some((next, fnext, step));
        }
        step *= shrink;
        if step < 1e-18 {
            return None;
        }
    }
}

/// Minimizes a smooth objective from `init`. Returns the best point seen;
/// its value never exceeds the value at `init`. `converged` is set iff the
/// gradient infinity norm at the returned point is within tolerance.
pub fn minimize_smooth(
    obj: &dyn SmoothObjective,
    init: &[f64],
    cfg: &SolverConfig,
) -> Result<SolverResult> {
    cfg.validate()?;
    if init.len() != obj.dimension() {
        return Err(Error::input(format!(
            "initial point has {} entries, objective expects {}",
            init.len(),
            obj.dimension()
        )));
    }

    let mut x = init.to_vec();
    let mut fx = obj.value(&x);
    let mut gx = obj.gradient(&x);
    check_finite(fx, &gx, &x)?;
    let mut gnorm = inf_norm(&gx);
    if gnorm <= cfg.tolerance {
        return Ok(SolverResult {
            point: x,
            value: fx,
            iterations: 0,
            final_gradient_norm: gnorm,
            converged: true,
        });
    }

    let mut x_prev = x.clone();
    let mut t: f64 = 1.0;
    let mut step = cfg.initial_step;
    let mut iterations = 0;

    for _ in 0..cfg.max_iterations {
        iterations += 1;

        // extrapolated point
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let beta = (t - 1.0) / t_next;
        let y: Vec<f64> = x
            .iter()
            .zip(&x_prev)
            .map(|(xc, xp)| xc + beta * (xc - xp))
            .collect();
        let fy = obj.value(&y);
        let gy = obj.gradient(&y);
        check_finite(fy, &gy, &y)?;

        // allow the step to grow back after conservative rounds
        step = (step / cfg.shrink).min(cfg.initial_step * 1e6);
        let attempt = backtrack(obj, &y, fy, &gy, step, cfg.shrink);

        let stalled;
        let (mut next, mut fnext) = match attempt {
            Some((n, f, s)) => {
                step = s;
                stalled = false;
                (n, f)
            }
            None => {
                stalled = true;
                (x.clone(), fx)
            }
        };

        if stalled || fnext > fx {
            // momentum overshot (or stalled at the extrapolated point):
            // restart from the current iterate
            t = 1.0;
            let Some((n2, f2, s2)) = backtrack(obj, &x, fx, &gx, step, cfg.shrink) else {
                // no representable decrease from the best iterate either
                break;
            };
            next = n2;
            fnext = f2;
            step = s2;
            x_prev = x.clone();
        } else {
            t = t_next;
            x_prev = std::mem::take(&mut x);
        }
        x = next;
        fx = fnext;
        gx = obj.gradient(&x);
        check_finite(fx, &gx, &x)?;
        gnorm = inf_norm(&gx);
        if gnorm <= cfg.tolerance {
            return Ok(SolverResult {
                point: x,
                value: fx,
                iterations,
                final_gradient_norm: gnorm,
                converged: true,
            });
        }
    }

    Ok(SolverResult { point: x, value: fx, iterations, final_gradient_norm: gnorm, converged: false })
}
