//! Box-constrained quasi-Newton minimization with finite-difference
//! gradients, plus maximin-LHS multistart.
//!
//! The minimizer is a projected limited-memory BFGS: the quasi-Newton
//! direction is computed on the variables not held at an active bound, the
//! trial point is projected back onto the box and accepted by a backtracking
//! Armijo test. It is not a port of L-BFGS-B (no generalized Cauchy point),
//! but shares its stopping rules.

mod lhs;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use lhs::{latin_hypercube, maximin_lhs, min_pairwise_distance, EXCHANGE_ITERATIONS};

/// Limited-memory history length.
pub const HISTORY: usize = 10;
/// Secondary stop on the infinity norm of the projected gradient.
pub const PG_TOLERANCE: f64 = 1e-5;
const ARMIJO_C1: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptMode {
    Short,
    Long,
}

impl std::fmt::Display for OptMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            OptMode::Short => "short",
            OptMode::Long => "long",
        })
    }
}

impl std::str::FromStr for OptMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "short" => Ok(OptMode::Short),
            "long" => Ok(OptMode::Long),
            _ => Err(Error::Config(format!("unknown optimizer mode `{s}`"))),
        }
    }
}

/// Optimizer control parameters.
///
/// `max_fun_evals = None` means the mode default: 15000 for Short and
/// `max_iters * (n_params + 1 + line_search_steps)` for Long.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptSettings {
    pub mode: OptMode,
    pub max_fun_evals: Option<usize>,
    pub max_iters: usize,
    pub tolerance: f64,
    pub line_search_steps: usize,
    pub n_restarts: usize,
}

impl OptSettings {
    pub fn short() -> Self {
        Self {
            mode: OptMode::Short,
            max_fun_evals: Some(15000),
            max_iters: 15000,
            tolerance: 1e-9,
            line_search_steps: 20,
            n_restarts: 96,
        }
    }

    pub fn long() -> Self {
        Self {
            mode: OptMode::Long,
            max_fun_evals: None,
            max_iters: 3000,
            tolerance: 1e-10,
            line_search_steps: 20,
            n_restarts: 96,
        }
    }

    pub fn for_mode(mode: OptMode) -> Self {
        match mode {
            OptMode::Short => Self::short(),
            OptMode::Long => Self::long(),
        }
    }

    pub fn with_restarts(mut self, n: usize) -> Self {
        self.n_restarts = n;
        self
    }

    /// Evaluation cap for a problem with `n_params` parameters.
    pub fn eval_cap(&self, n_params: usize) -> usize {
        self.max_fun_evals
            .unwrap_or(self.max_iters * (n_params + 1 + self.line_search_steps))
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 || self.line_search_steps == 0 || self.n_restarts == 0 {
            return Err(Error::Config(
                "max_iters, line_search_steps and n_restarts must be positive".into(),
            ));
        }
        if !(self.tolerance >= 0.0) {
            return Err(Error::Config(format!("tolerance {} must be >= 0", self.tolerance)));
        }
        if self.max_fun_evals == Some(0) {
            return Err(Error::Config("max_fun_evals must be positive".into()));
        }
        Ok(())
    }
}

impl Default for OptSettings {
    fn default() -> Self {
        Self::long()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Termination {
    Tolerance,
    MaxIters,
    MaxEvals,
    Failure,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptResult {
    pub x_best: Vec<f64>,
    pub f_best: f64,
    /// Objective at the starting point.
    pub f_start: f64,
    pub n_evals: usize,
    pub iterations: usize,
    pub converged: bool,
    pub termination: Termination,
}

/// Counts objective calls and enforces the cap. NaN is mapped to +∞.
struct Counted<'a, F> {
    f: &'a mut F,
    evals: usize,
    cap: usize,
}

struct CapReached;

impl<F: FnMut(&[f64]) -> f64> Counted<'_, F> {
    fn call(&mut self, x: &[f64]) -> std::result::Result<f64, CapReached> {
        if self.evals >= self.cap {
            return Err(CapReached);
        }
        self.evals += 1;
        let v = (self.f)(x);
        Ok(if v.is_nan() { f64::INFINITY } else { v })
    }
}

fn check_box(x: &[f64], lower: &[f64], upper: &[f64]) -> Result<()> {
    if x.len() != lower.len() || x.len() != upper.len() {
        return Err(Error::Dimension(format!(
            "point of length {} with bounds of length {} and {}",
            x.len(),
            lower.len(),
            upper.len()
        )));
    }
    for i in 0..x.len() {
        if !(lower[i] <= upper[i]) {
            return Err(Error::InvalidParameter(format!(
                "bound {i}: lower {} > upper {}",
                lower[i], upper[i]
            )));
        }
        if !(lower[i] <= x[i] && x[i] <= upper[i]) {
            return Err(Error::InvalidParameter(format!(
                "x[{i}] = {} outside [{}, {}]",
                x[i], lower[i], upper[i]
            )));
        }
    }
    Ok(())
}

fn fd_step(x: f64) -> f64 {
    f64::EPSILON.sqrt() * x.abs().max(1.0)
}

enum GradError {
    Cap,
    /// Component `i` could not be probed on either side.
    Infinite(usize),
}

impl From<CapReached> for GradError {
    fn from(_: CapReached) -> Self {
        GradError::Cap
    }
}

/// Forward differences, backward where the forward probe would leave the
/// box. A probe returning +∞ falls back to the other side once.
fn gradient<F: FnMut(&[f64]) -> f64>(
    f: &mut Counted<'_, F>,
    x: &[f64],
    fx: f64,
    lower: &[f64],
    upper: &[f64],
) -> std::result::Result<Vec<f64>, GradError> {
    let mut g = vec![0.0; x.len()];
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        let h = fd_step(x[i]);
        let forward = x[i] + h <= upper[i];
        let mut done = false;
        for side in [forward, !forward] {
            let xi = if side { x[i] + h } else { x[i] - h };
            if xi < lower[i] || xi > upper[i] {
                continue;
            }
            probe[i] = xi;
            let fp = f.call(&probe)?;
            probe[i] = x[i];
            if fp.is_finite() {
                // divide by the representable step
                g[i] = (fp - fx) / (xi - x[i]);
                done = true;
                break;
            }
        }
        if !done {
            return Err(GradError::Infinite(i));
        }
    }
    Ok(g)
}

/// Central differences, shrinking the step toward the box when needed.
/// Used when the forward-difference direction fails to descend.
fn central_gradient<F: FnMut(&[f64]) -> f64>(
    f: &mut Counted<'_, F>,
    x: &[f64],
    lower: &[f64],
    upper: &[f64],
) -> std::result::Result<Vec<f64>, GradError> {
    let mut g = vec![0.0; x.len()];
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        let h = f64::EPSILON.cbrt() * x[i].abs().max(1.0);
        let hi = (x[i] + h).min(upper[i]);
        let lo = (x[i] - h).max(lower[i]);
        if hi <= lo {
            continue;
        }
        probe[i] = hi;
        let fp = f.call(&probe)?;
        probe[i] = lo;
        let fm = f.call(&probe)?;
        probe[i] = x[i];
        if !(fp.is_finite() && fm.is_finite()) {
            return Err(GradError::Infinite(i));
        }
        g[i] = (fp - fm) / (hi - lo);
    }
    Ok(g)
}

/// Finite-difference gradient as used by the minimizer.
///
/// Costs `x.len() + 1` evaluations (one at `x`). Fails when some component
/// cannot be probed with a finite value.
pub fn finite_diff_grad<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x: &[f64],
    lower: &[f64],
    upper: &[f64],
) -> Result<Vec<f64>> {
    check_box(x, lower, upper)?;
    let mut counted = Counted {
        f: &mut f,
        evals: 0,
        cap: usize::MAX,
    };
    let fx = counted.call(x).unwrap_or(f64::INFINITY);
    if !fx.is_finite() {
        return Err(Error::Optimization("objective is not finite at x".into()));
    }
    gradient(&mut counted, x, fx, lower, upper).map_err(|e| match e {
        GradError::Infinite(i) => {
            Error::Optimization(format!("objective infinite at both probes of component {i}"))
        }
        GradError::Cap => unreachable!("uncapped"),
    })
}

fn project(x: &mut [f64], lower: &[f64], upper: &[f64]) {
    for i in 0..x.len() {
        x[i] = x[i].clamp(lower[i], upper[i]);
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn projected_gradient_norm(x: &[f64], g: &[f64], lower: &[f64], upper: &[f64]) -> f64 {
    (0..x.len())
        .map(|i| ((x[i] - g[i]).clamp(lower[i], upper[i]) - x[i]).abs())
        .fold(0.0, f64::max)
}

/// Variables pinned at a bound with the gradient pushing outward.
fn active_set(x: &[f64], g: &[f64], lower: &[f64], upper: &[f64]) -> Vec<bool> {
    (0..x.len())
        .map(|i| (x[i] <= lower[i] && g[i] > 0.0) || (x[i] >= upper[i] && g[i] < 0.0))
        .collect()
}

struct Memory {
    s: Vec<Vec<f64>>,
    y: Vec<Vec<f64>>,
}

impl Memory {
    fn push(&mut self, s: Vec<f64>, y: Vec<f64>) {
        if self.s.len() == HISTORY {
            self.s.remove(0);
            self.y.remove(0);
        }
        self.s.push(s);
        self.y.push(y);
    }

    fn clear(&mut self) {
        self.s.clear();
        self.y.clear();
    }

    /// Two-loop recursion restricted to the free variables.
    fn direction(&self, g: &[f64], active: &[bool]) -> Vec<f64> {
        let mask = |v: &[f64]| -> Vec<f64> {
            v.iter().zip(active).map(|(&a, &act)| if act { 0.0 } else { a }).collect()
        };
        let mut q = mask(g);
        let pairs: Vec<(Vec<f64>, Vec<f64>, f64)> = self
            .s
            .iter()
            .zip(&self.y)
            .filter_map(|(s, y)| {
                let (s, y) = (mask(s), mask(y));
                let sy = dot(&s, &y);
                (sy > 1e-10 * dot(&y, &y).max(f64::MIN_POSITIVE)).then(|| (s, y, 1.0 / sy))
            })
            .collect();
        let mut alpha = vec![0.0; pairs.len()];
        for (k, (s, y, rho)) in pairs.iter().enumerate().rev() {
            alpha[k] = rho * dot(s, &q);
            for i in 0..q.len() {
                q[i] -= alpha[k] * y[i];
            }
        }
        if let Some((s, y, _)) = pairs.last() {
            let gamma = dot(s, y) / dot(y, y);
            q.iter_mut().for_each(|v| *v *= gamma);
        }
        for (k, (s, y, rho)) in pairs.iter().enumerate() {
            let beta = rho * dot(y, &q);
            for i in 0..q.len() {
                q[i] += (alpha[k] - beta) * s[i];
            }
        }
        q.iter().map(|v| -v).collect()
    }
}

/// Minimizes `f` over the box `[lower, upper]` starting from `x0`.
///
/// `f` may return +∞ (or NaN, treated as +∞) at infeasible points; the line
/// search backs off from them. A non-finite value at `x0` yields
/// `Termination::Failure` with `f_best = +∞`.
pub fn bounded_quasi_newton<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    lower: &[f64],
    upper: &[f64],
    settings: &OptSettings,
) -> Result<OptResult> {
    check_box(x0, lower, upper)?;
    settings.validate()?;
    let n = x0.len();
    let mut counted = Counted {
        f: &mut f,
        evals: 0,
        cap: settings.eval_cap(n),
    };
    let mut x = x0.to_vec();
    let mut fx = counted.call(&x).unwrap_or(f64::INFINITY);
    let f_start = fx;
    let finish = |x: Vec<f64>, fx: f64, evals: usize, iterations: usize, t: Termination| OptResult {
        x_best: x,
        f_best: fx,
        f_start,
        n_evals: evals,
        iterations,
        converged: t == Termination::Tolerance,
        termination: t,
    };
    if !fx.is_finite() {
        return Ok(finish(x, f64::INFINITY, counted.evals, 0, Termination::Failure));
    }
    if n == 0 {
        return Ok(finish(x, fx, counted.evals, 0, Termination::Tolerance));
    }
    let mut g = match gradient(&mut counted, &x, fx, lower, upper) {
        Ok(g) => g,
        Err(GradError::Cap) => {
            return Ok(finish(x, fx, counted.evals, 0, Termination::MaxEvals))
        }
        Err(GradError::Infinite(_)) => {
            return Ok(finish(x, fx, counted.evals, 0, Termination::Failure))
        }
    };
    let mut memory = Memory {
        s: Vec::new(),
        y: Vec::new(),
    };
    let mut iter = 0;
    let mut used_central = false;
    loop {
        if projected_gradient_norm(&x, &g, lower, upper) <= PG_TOLERANCE {
            return Ok(finish(x, fx, counted.evals, iter, Termination::Tolerance));
        }
        if iter >= settings.max_iters {
            return Ok(finish(x, fx, counted.evals, iter, Termination::MaxIters));
        }
        let active = active_set(&x, &g, lower, upper);
        let mut d = memory.direction(&g, &active);
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            memory.clear();
            d = memory.direction(&g, &active);
            slope = dot(&g, &d);
            if !(slope < 0.0) {
                return Ok(finish(x, fx, counted.evals, iter, Termination::Tolerance));
            }
        }
        let dnorm = dot(&d, &d).sqrt();
        let mut step = if memory.s.is_empty() { (1.0 / dnorm).min(1.0) } else { 1.0 };

        let mut accepted = None;
        let mut trial = vec![0.0; n];
        for _ in 0..settings.line_search_steps {
            for i in 0..n {
                trial[i] = x[i] + step * d[i];
            }
            project(&mut trial, lower, upper);
            let decrease: f64 = (0..n).map(|i| g[i] * (trial[i] - x[i])).sum();
            if trial == x {
                break;
            }
            let ft = match counted.call(&trial) {
                Ok(v) => v,
                Err(CapReached) => {
                    return Ok(finish(x, fx, counted.evals, iter, Termination::MaxEvals))
                }
            };
            if ft.is_finite() && ft <= fx + ARMIJO_C1 * decrease {
                accepted = Some(ft);
                break;
            }
            step *= 0.5;
        }
        let Some(f_new) = accepted else {
            if memory.s.is_empty() {
                if used_central {
                    // steepest descent cannot improve at this resolution
                    return Ok(finish(x, fx, counted.evals, iter, Termination::Tolerance));
                }
                g = match central_gradient(&mut counted, &x, lower, upper) {
                    Ok(g) => g,
                    Err(GradError::Cap) => {
                        return Ok(finish(x, fx, counted.evals, iter, Termination::MaxEvals))
                    }
                    Err(GradError::Infinite(_)) => {
                        return Ok(finish(x, fx, counted.evals, iter, Termination::Tolerance))
                    }
                };
                used_central = true;
            }
            memory.clear();
            continue;
        };
        used_central = false;
        iter += 1;
        let rel = (fx - f_new) / fx.abs().max(f_new.abs()).max(1.0);
        let s: Vec<f64> = (0..n).map(|i| trial[i] - x[i]).collect();
        x.copy_from_slice(&trial);
        fx = f_new;
        if rel <= settings.tolerance {
            return Ok(finish(x, fx, counted.evals, iter, Termination::Tolerance));
        }
        let g_new = match gradient(&mut counted, &x, fx, lower, upper) {
            Ok(g) => g,
            Err(GradError::Cap) => {
                return Ok(finish(x, fx, counted.evals, iter, Termination::MaxEvals))
            }
            Err(GradError::Infinite(_)) => {
                return Ok(finish(x, fx, counted.evals, iter, Termination::Failure))
            }
        };
        let y: Vec<f64> = (0..n).map(|i| g_new[i] - g[i]).collect();
        if dot(&s, &y) > 1e-10 * dot(&y, &y) {
            memory.push(s, y);
        }
        g = g_new;
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestartSummary {
    pub f_start: f64,
    pub f_best: f64,
    pub n_evals: usize,
    pub iterations: usize,
    pub termination: Termination,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultistartResult {
    pub best: OptResult,
    pub best_index: usize,
    pub restarts: Vec<RestartSummary>,
    pub n_failed: usize,
}

impl MultistartResult {
    pub fn total_evals(&self) -> usize {
        self.restarts.iter().map(|r| r.n_evals).sum()
    }
}

/// Runs the minimizer from each of `settings.n_restarts` maximin-LHS points.
///
/// Restarts with `f_best = +∞` are skipped. Ties go to the lowest restart
/// index.
pub fn multistart<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    lower: &[f64],
    upper: &[f64],
    settings: &OptSettings,
    seed: u64,
) -> Result<MultistartResult> {
    settings.validate()?;
    let starts = maximin_lhs(settings.n_restarts, lower.len(), lower, upper, seed)?;
    multistart_from(&mut f, &starts, lower, upper, settings)
}

/// Same as [`multistart`] with explicit starting points.
pub fn multistart_from<F: FnMut(&[f64]) -> f64>(
    f: &mut F,
    starts: &[Vec<f64>],
    lower: &[f64],
    upper: &[f64],
    settings: &OptSettings,
) -> Result<MultistartResult> {
    let mut best: Option<(usize, OptResult)> = None;
    let mut restarts = Vec::with_capacity(starts.len());
    let mut n_failed = 0;
    for (k, x0) in starts.iter().enumerate() {
        let r = bounded_quasi_newton(&mut *f, x0, lower, upper, settings)?;
        restarts.push(RestartSummary {
            f_start: r.f_start,
            f_best: r.f_best,
            n_evals: r.n_evals,
            iterations: r.iterations,
            termination: r.termination,
        });
        if !r.f_best.is_finite() {
            n_failed += 1;
            continue;
        }
        if best.as_ref().is_none_or(|(_, b)| r.f_best < b.f_best) {
            best = Some((k, r));
        }
    }
    match best {
        Some((best_index, best)) => Ok(MultistartResult {
            best,
            best_index,
            restarts,
            n_failed,
        }),
        None => Err(Error::Optimization(format!(
            "all {} restarts failed",
            starts.len()
        ))),
    }
}
