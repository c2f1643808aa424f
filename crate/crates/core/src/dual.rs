//! Lagrange dual of the time-sharing relaxation, minimized by projected
//! subgradient descent.
//!
//! Relaxing tone ownership to time shares `T[i][k] in [0, 1]` makes the
//! weighted sum-rate problem convex. Dualizing the per-link power budgets with
//! multipliers `lambda` and the per-tone share constraints with `mu`, the inner
//! maximization separates:
//!
//! - per unit of share, link `i` on tone `k` transmits at the power density
//!   `d = [theta / lambda - 1/g]+`,
//! - the resulting per-tone score is `xi = theta (ln x - 1 + 1/x)` for
//!   `x = theta g / lambda > 1` and zero otherwise,
//! - the tone goes to the link with the largest score, and the optimal `mu`
//!   equals that score.
//!
//! So `D(lambda) = sum_k max_i xi[i][k] + sum_i lambda_i P_i` with subgradient
//! `P_i - sum_{k won by i} d[i][k]`. Values are in nats; multiply by
//! [`TsProblem::bps_per_nat`] for bits/s.

use alloc::vec::Vec;

use crate::waterfill::water_fill;
use crate::{Allocation, Error, Grid, Result, TsProblem};

/// Multipliers are floored here before evaluating `ln(theta g / lambda)`.
pub const LAMBDA_FLOOR: f64 = 1e-12;

/// Per-tone dual score of one link, `theta (ln x - 1 + 1/x)` with
/// `x = theta g / lambda`, or zero when `x <= 1`.
///
/// This is `max_p theta ln(1 + g p) - lambda p`, so it is continuous and
/// non-increasing in `lambda`. `lambda` below [`LAMBDA_FLOOR`] is evaluated
/// at the floor.
pub fn xi_value(theta: f64, g: f64, lambda: f64) -> f64 {
    let lambda = lambda.max(LAMBDA_FLOOR);
    let x = theta * g / lambda;
    if x > 1.0 {
        theta * (libm::log(x) - 1.0 + 1.0 / x)
    } else {
        0.0
    }
}

/// Power per unit share, `[theta / lambda - 1/g]+` (mW).
#[inline]
pub fn power_density(theta: f64, g: f64, lambda: f64) -> f64 {
    let lambda = lambda.max(LAMBDA_FLOOR);
    if theta * g > lambda {
        theta / lambda - 1.0 / g
    } else {
        0.0
    }
}

/// Power densities for every link and tone under `lambda`.
pub fn inner_power(problem: &TsProblem, lambda: &[f64]) -> Grid<f64> {
    let w = problem.weights();
    Grid::from_fn(problem.num_links(), problem.num_tones(), |i, k| {
        power_density(w[i], problem.gain(i, k), lambda[i])
    })
}

/// Dual function value and its ingredients at one multiplier vector.
#[derive(Debug, Clone, PartialEq)]
pub struct DualEval {
    pub value: f64,
    pub subgradient: Vec<f64>,
    /// Highest-scoring link per tone, lowest index on ties.
    pub winner: Vec<usize>,
    pub xi: Grid<f64>,
    /// `mu[k] = max_i xi[i][k]`
    pub mu: Vec<f64>,
    /// Some multiplier was below [`LAMBDA_FLOOR`].
    pub floored: bool,
}

pub fn dual_value(problem: &TsProblem, lambda: &[f64]) -> DualEval {
    assert_eq!(lambda.len(), problem.num_links(), "one multiplier per link");
    let links = problem.num_links();
    let tones = problem.num_tones();
    let w = problem.weights();
    let budgets = problem.budgets();
    let xi = Grid::from_fn(links, tones, |i, k| xi_value(w[i], problem.gain(i, k), lambda[i]));

    let mut winner = Vec::with_capacity(tones);
    let mut mu = Vec::with_capacity(tones);
    let mut subgradient = budgets.to_vec();
    for k in 0..tones {
        let mut best = 0;
        for i in 1..links {
            if xi[(i, k)] > xi[(best, k)] {
                best = i;
            }
        }
        winner.push(best);
        mu.push(xi[(best, k)]);
        subgradient[best] -= power_density(w[best], problem.gain(best, k), lambda[best]);
    }
    let value = mu.iter().sum::<f64>()
        + lambda.iter().zip(budgets).map(|(l, p)| l.max(0.0) * p).sum::<f64>();
    let floored = lambda.iter().any(|&l| l < LAMBDA_FLOOR);
    DualEval { value, subgradient, winner, xi, mu, floored }
}

/// Diminishing step `a / (b + t)`: square summable, not summable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSchedule {
    pub a: f64,
    pub b: f64,
}

impl Default for StepSchedule {
    fn default() -> Self {
        StepSchedule { a: 1.0, b: 10.0 }
    }
}

impl StepSchedule {
    #[inline]
    pub fn alpha(&self, t: usize) -> f64 {
        self.a / (self.b + t as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub schedule: StepSchedule,
    pub max_iters: usize,
    /// Early stop when the best dual improves by less than `tol * |best|`
    /// over `window` iterations. Zero disables early stopping.
    pub tol: f64,
    pub window: usize,
    /// Step in budget-scaled multipliers `lambda_i * P_i`, which makes the
    /// default schedule independent of the power unit.
    pub normalize: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            schedule: StepSchedule::default(),
            max_iters: 10_000,
            tol: 1e-6,
            window: 100,
            normalize: true,
        }
    }
}

/// Full state at one iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct DualIterate {
    pub t: usize,
    pub lambda: Vec<f64>,
    pub mu: Vec<f64>,
    pub xi: Grid<f64>,
    pub dual_value: f64,
    pub subgradient: Vec<f64>,
    pub step: f64,
    pub floored: bool,
}

/// One row of the convergence trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub t: usize,
    pub dual_value: f64,
    pub best_dual: f64,
    /// Norm in the solver's working coordinates.
    pub subgradient_norm: f64,
    pub step: f64,
    /// `(R^2 + G^2 sum alpha^2) / sum alpha` with `R` and `G` measured on
    /// this run; an upper bound on `best_dual - D*`.
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubgradientOutcome {
    pub last: DualIterate,
    pub best_lambda: Vec<f64>,
    pub best_dual: f64,
    pub trace: Vec<TracePoint>,
    pub iterations: usize,
    pub stopped_early: bool,
    /// Distance from the start to the best multiplier (working coordinates).
    pub radius: f64,
    pub max_subgradient_norm: f64,
}

impl SubgradientOutcome {
    /// Largest amount by which `best_dual - lower_bound` exceeds the trace
    /// bound; non-positive means the bound held everywhere.
    pub fn bound_excess(&self, lower_bound: f64) -> f64 {
        self.trace
            .iter()
            .map(|p| (p.best_dual - lower_bound) - p.bound)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Starting multipliers `theta * m / (1 + P m / K)` with `m` the median gain
/// of the link: the water level slope if the link spread its budget over all
/// tones at median gain.
pub fn initial_lambda(problem: &TsProblem) -> Vec<f64> {
    let k = problem.num_tones() as f64;
    (0..problem.num_links())
        .map(|i| {
            let m = median(problem.gains().row(i));
            problem.weights()[i] * m / (1.0 + problem.budgets()[i] * m / k)
        })
        .collect()
}

fn norm(v: impl Iterator<Item = f64>) -> f64 {
    libm::sqrt(v.map(|x| x * x).sum())
}

/// Projected subgradient descent on `D(lambda)`:
/// `lambda <- [lambda - alpha(t) (P - sum_k p_k)]+`.
pub fn subgradient_solve(problem: &TsProblem, cfg: &SolverConfig) -> Result<SubgradientOutcome> {
    if cfg.max_iters == 0 {
        return Err(Error::InvalidInput("max_iters must be at least 1"));
    }
    if !(cfg.schedule.a > 0.0 && cfg.schedule.b > 0.0) {
        return Err(Error::InvalidInput("step schedule needs a, b > 0"));
    }
    let links = problem.num_links();
    let scale: Vec<f64> = if cfg.normalize {
        problem.budgets().to_vec()
    } else {
        alloc::vec![1.0; links]
    };
    let mut lambda = initial_lambda(problem);
    let start: Vec<f64> = lambda.iter().zip(&scale).map(|(l, s)| l * s).collect();

    let mut best_dual = f64::INFINITY;
    let mut best_lambda = lambda.clone();
    let mut trace: Vec<TracePoint> = Vec::with_capacity(cfg.max_iters.min(1 << 16));
    let mut sum_alpha = 0.0;
    let mut sum_alpha_sq = 0.0;
    let mut max_g: f64 = 0.0;
    // partial sums needed to fill in the bound once R is known
    let mut sums: Vec<(f64, f64, f64)> = Vec::with_capacity(trace.capacity());
    let mut stopped_early = false;
    let mut last = None;

    for t in 1..=cfg.max_iters {
        let eval = dual_value(problem, &lambda);
        if !eval.value.is_finite() {
            return Err(Error::NumericalFailure { iteration: t });
        }
        if eval.value < best_dual {
            best_dual = eval.value;
            best_lambda.clone_from(&lambda);
        }
        let step = cfg.schedule.alpha(t);
        let g_norm = norm(eval.subgradient.iter().zip(&scale).map(|(g, s)| g / s));
        max_g = max_g.max(g_norm);
        sum_alpha += step;
        sum_alpha_sq += step * step;
        sums.push((sum_alpha, sum_alpha_sq, max_g));
        trace.push(TracePoint {
            t,
            dual_value: eval.value,
            best_dual,
            subgradient_norm: g_norm,
            step,
            bound: f64::NAN,
        });

        let next: Vec<f64> = lambda
            .iter()
            .zip(&eval.subgradient)
            .zip(&scale)
            .map(|((l, g), s)| (l - step * g / (s * s)).max(0.0))
            .collect();
        last = Some(DualIterate {
            t,
            lambda: core::mem::replace(&mut lambda, next),
            mu: eval.mu,
            xi: eval.xi,
            dual_value: eval.value,
            subgradient: eval.subgradient,
            step,
            floored: eval.floored,
        });

        if cfg.tol > 0.0 && t > cfg.window {
            let earlier = trace[t - 1 - cfg.window].best_dual;
            if earlier - best_dual < cfg.tol * best_dual.abs() {
                stopped_early = true;
                break;
            }
        }
    }

    let radius = norm(best_lambda.iter().zip(&scale).zip(&start).map(|((l, s), u0)| l * s - u0));
    for (p, &(sa, sa2, g)) in trace.iter_mut().zip(&sums) {
        p.bound = (radius * radius + g * g * sa2) / sa;
    }
    let iterations = trace.len();
    Ok(SubgradientOutcome {
        last: last.expect("at least one iteration"),
        best_lambda,
        best_dual,
        trace,
        iterations,
        stopped_early,
        radius,
        max_subgradient_norm: max_g,
    })
}

/// Feasible orthogonal allocation from multipliers: each tone goes wholly to
/// its highest-scoring link, then every link water-fills its budget over the
/// tones it won. A link that wins nothing gets zero rate.
pub fn recover_primal(problem: &TsProblem, lambda: &[f64]) -> Allocation {
    let eval = dual_value(problem, lambda);
    let owner: Vec<Option<usize>> = eval.winner.iter().map(|&i| Some(i)).collect();
    let power = fill_owned_tones(problem, &owner);
    Allocation::orthogonal(problem, &owner, power)
}

/// Water-fills each link's budget over the tones it owns.
pub(crate) fn fill_owned_tones(problem: &TsProblem, owner: &[Option<usize>]) -> Grid<f64> {
    let mut power = Grid::filled(problem.num_links(), problem.num_tones(), 0.0);
    let mut tones = Vec::new();
    let mut gains = Vec::new();
    for i in 0..problem.num_links() {
        tones.clear();
        tones.extend((0..problem.num_tones()).filter(|&k| owner[k] == Some(i)));
        if tones.is_empty() {
            continue;
        }
        gains.clear();
        gains.extend(tones.iter().map(|&k| problem.gain(i, k)));
        for (&k, p) in tones.iter().zip(water_fill(&gains, problem.budgets()[i])) {
            power[(i, k)] = p;
        }
    }
    power
}

/// Runs the solver and recovers an allocation from the best multipliers.
pub fn solve(problem: &TsProblem, cfg: &SolverConfig) -> Result<(SubgradientOutcome, Allocation)> {
    let outcome = subgradient_solve(problem, cfg)?;
    let alloc = recover_primal(problem, &outcome.best_lambda);
    Ok((outcome, alloc))
}
