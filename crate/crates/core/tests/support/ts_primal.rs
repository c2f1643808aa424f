//! Conditional-gradient solver for the time-sharing primal, used as an
//! independent check on dual values.
//!
//! For fixed shares `T` each link's best power split is a width-weighted
//! water-fill, so the primal value `V(T)` is concave in `T`. Its partial
//! derivative in `T_ik` is `ln(1 + g s) - s/nu` at power density `s`. The
//! linear maximizer over the shares simplex hands each tone to the largest
//! partial derivative, and `<grad, S - T>` bounds `V* - V(T)` from above.

use smallcell_core::TsProblem;

pub struct TsPrimal {
    /// Feasible primal value, nats; a lower bound on the optimum.
    pub value: f64,
    /// Frank-Wolfe gap; `value + gap` bounds the optimum from above.
    pub gap: f64,
}

/// Density per tone and water level for `max sum T ln(1 + g s)` subject to
/// `sum T s = budget`.
fn weighted_fill(gains: &[f64], widths: &[f64], budget: f64) -> (Vec<f64>, f64) {
    let mut order: Vec<usize> =
        (0..gains.len()).filter(|&k| gains[k] > 0.0 && widths[k] > 0.0).collect();
    let mut density = vec![0.0; gains.len()];
    if order.is_empty() {
        return (density, f64::INFINITY);
    }
    order.sort_by(|&a, &b| gains[b].total_cmp(&gains[a]));
    let (mut width_sum, mut inv_sum) = (0.0, 0.0);
    let mut level = 0.0;
    for (m, &k) in order.iter().enumerate() {
        width_sum += widths[k];
        inv_sum += widths[k] / gains[k];
        let candidate = (budget + inv_sum) / width_sum;
        let next_ok = order.get(m + 1).is_none_or(|&n| candidate <= 1.0 / gains[n]);
        if candidate > 1.0 / gains[k] && next_ok {
            level = candidate;
            break;
        }
    }
    for &k in &order {
        density[k] = (level - 1.0 / gains[k]).max(0.0);
    }
    (density, level)
}

fn link_value(gains: &[f64], widths: &[f64], budget: f64) -> f64 {
    let (s, _) = weighted_fill(gains, widths, budget);
    (0..gains.len()).map(|k| widths[k] * (gains[k] * s[k]).ln_1p()).sum()
}

fn value(problem: &TsProblem, shares: &[Vec<f64>]) -> f64 {
    (0..problem.num_links())
        .map(|i| problem.weights()[i] * link_value(problem.gains().row(i), &shares[i], problem.budgets()[i]))
        .sum()
}

fn gradient(problem: &TsProblem, shares: &[Vec<f64>]) -> Vec<Vec<f64>> {
    (0..problem.num_links())
        .map(|i| {
            let g = problem.gains().row(i);
            let (s, level) = weighted_fill(g, &shares[i], problem.budgets()[i]);
            (0..g.len())
                .map(|k| {
                    let d = if s[k] > 0.0 { (g[k] * s[k]).ln_1p() - s[k] / level } else { 0.0 };
                    problem.weights()[i] * d
                })
                .collect()
        })
        .collect()
}

pub fn solve(problem: &TsProblem, iterations: usize) -> TsPrimal {
    let links = problem.num_links();
    let tones = problem.num_tones();
    let mut shares = vec![vec![1.0 / links as f64; tones]; links];
    let mut current = value(problem, &shares);
    let mut gap = f64::INFINITY;
    for _ in 0..iterations {
        let grad = gradient(problem, &shares);
        let mut target = vec![vec![0.0; tones]; links];
        for k in 0..tones {
            let best = (0..links).max_by(|&a, &b| grad[a][k].total_cmp(&grad[b][k])).unwrap();
            target[best][k] = 1.0;
        }
        gap = (0..links)
            .flat_map(|i| (0..tones).map(move |k| (i, k)))
            .map(|(i, k)| grad[i][k] * (target[i][k] - shares[i][k]))
            .sum::<f64>()
            .max(0.0);
        if gap <= 1e-13 * current.abs().max(1.0) {
            break;
        }
        let along = |gamma: f64| -> Vec<Vec<f64>> {
            shares
                .iter()
                .zip(&target)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + gamma * (y - x)).collect())
                .collect()
        };
        // golden-section search on the concave segment
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..60 {
            let a = hi - phi * (hi - lo);
            let b = lo + phi * (hi - lo);
            if value(problem, &along(a)) < value(problem, &along(b)) {
                lo = a;
            } else {
                hi = b;
            }
        }
        let next = along(0.5 * (lo + hi));
        let v = value(problem, &next);
        if v > current {
            shares = next;
            current = v;
        }
    }
    TsPrimal { value: current, gap }
}
