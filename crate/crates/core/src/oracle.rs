//! Exhaustive search over orthogonal tone assignments.

use alloc::vec::Vec;

use crate::dual::fill_owned_tones;
use crate::waterfill::{sum_log_rate, water_fill};
use crate::{Allocation, Error, Result, TsProblem};

/// Largest number of assignments the oracle will enumerate.
pub const MAX_ASSIGNMENTS: u64 = 1_000_000;

/// Best orthogonal allocation: every tone goes to one link or to nobody, and
/// each link water-fills its budget over its tones. Also returns the
/// weighted objective in bits/s.
pub fn oracle_orthogonal(problem: &TsProblem) -> Result<(Allocation, f64)> {
    let links = problem.num_links();
    let tones = problem.num_tones();
    let count = libm::pow((links + 1) as f64, tones as f64);
    if count > MAX_ASSIGNMENTS as f64 {
        return Err(Error::InstanceTooLarge { assignments: count, limit: MAX_ASSIGNMENTS });
    }

    // digit[k] == links means unassigned
    let mut digit = alloc::vec![0usize; tones];
    let mut best_value = f64::NEG_INFINITY;
    let mut best = digit.clone();
    let mut gains = Vec::with_capacity(tones);
    loop {
        let mut value = 0.0;
        for i in 0..links {
            gains.clear();
            gains.extend((0..tones).filter(|&k| digit[k] == i).map(|k| problem.gain(i, k)));
            if !gains.is_empty() {
                let p = water_fill(&gains, problem.budgets()[i]);
                value += problem.weights()[i] * sum_log_rate(&gains, &p);
            }
        }
        if value > best_value {
            best_value = value;
            best.copy_from_slice(&digit);
        }
        // odometer increment
        let mut pos = 0;
        loop {
            if pos == tones {
                let owner: Vec<Option<usize>> =
                    best.iter().map(|&d| (d < links).then_some(d)).collect();
                let power = fill_owned_tones(problem, &owner);
                let alloc = Allocation::orthogonal(problem, &owner, power);
                let objective = alloc.objective;
                return Ok((alloc, objective));
            }
            digit[pos] += 1;
            if digit[pos] <= links {
                break;
            }
            digit[pos] = 0;
            pos += 1;
        }
    }
}
