//! Iterative water-filling and SINR scoring of concurrent transmissions.

use alloc::vec::Vec;
use core::f64::consts::LN_2;

use crate::waterfill::water_fill;
use crate::{ChannelRealization, Error, Grid, Result};

/// Powers with the SINR and rate they achieve when every link transmits at
/// once.
#[derive(Debug, Clone, PartialEq)]
pub struct InterferenceAllocation {
    /// mW
    pub power: Grid<f64>,
    pub sinr: Grid<f64>,
    /// bits/s
    pub rate: Vec<f64>,
}

/// `G_ii p_i / (N0 B + sum_{j != i} G_ji p_j)` for every link and tone.
pub fn sinr_grid(real: &ChannelRealization, power: &Grid<f64>) -> Grid<f64> {
    let links = real.num_links();
    Grid::from_fn(links, real.num_tones(), |i, k| {
        let interference: f64 = (0..links)
            .filter(|&j| j != i)
            .map(|j| real.cross_gain(j, i, k) * power[(j, k)])
            .sum();
        real.cross_gain(i, i, k) * power[(i, k)] / (real.noise_power_mw() + interference)
    })
}

/// Per-link Shannon rates `B sum_k log2(1 + SINR)` in bits/s with everyone's
/// power on the air.
pub fn evaluate_concurrent(real: &ChannelRealization, power: &Grid<f64>) -> Vec<f64> {
    score(real, power.clone()).rate
}

pub fn score(real: &ChannelRealization, power: Grid<f64>) -> InterferenceAllocation {
    let sinr = sinr_grid(real, &power);
    let bw = real.tone_bandwidth();
    let rate = sinr.iter_rows().map(|row| bw * row.iter().map(|s| libm::log1p(*s)).sum::<f64>() / LN_2).collect();
    InterferenceAllocation { power, sinr, rate }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UpdateOrder {
    /// Links respond one after another within a round, each seeing the
    /// newest powers.
    #[default]
    Sequential,
    /// All links respond to the previous round's powers.
    Simultaneous,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IwfaConfig {
    pub max_rounds: usize,
    /// Convergence threshold on the largest per-tone power change, mW.
    pub eps: f64,
    pub order: UpdateOrder,
}

impl Default for IwfaConfig {
    fn default() -> Self {
        IwfaConfig { max_rounds: 200, eps: 1e-6, order: UpdateOrder::Sequential }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IwfaOutcome {
    pub allocation: InterferenceAllocation,
    pub rounds: usize,
    pub converged: bool,
}

/// Water-fills `link`'s budget against noise plus the interference created by
/// `power`.
pub fn best_response(real: &ChannelRealization, power: &Grid<f64>, link: usize, budget: f64) -> Vec<f64> {
    let effective: Vec<f64> = (0..real.num_tones())
        .map(|k| {
            let interference: f64 = (0..real.num_links())
                .filter(|&j| j != link)
                .map(|j| real.cross_gain(j, link, k) * power[(j, k)])
                .sum();
            real.cross_gain(link, link, k) / (real.noise_power_mw() + interference)
        })
        .collect();
    water_fill(&effective, budget)
}

/// Best-response dynamics. Powers start at every link's interference-free
/// water-fill; each round every link water-fills against the current
/// interference. Stops once no power moves by `eps` in a round.
pub fn iwfa_solve(real: &ChannelRealization, budgets: &[f64], cfg: &IwfaConfig) -> Result<IwfaOutcome> {
    let links = real.num_links();
    let tones = real.num_tones();
    if budgets.len() != links || budgets.iter().any(|b| !(b.is_finite() && *b > 0.0)) {
        return Err(Error::InvalidInput("one positive budget per link"));
    }
    if cfg.max_rounds == 0 || !(cfg.eps > 0.0) {
        return Err(Error::InvalidInput("max_rounds >= 1 and eps > 0 required"));
    }
    let mut power = Grid::filled(links, tones, 0.0);
    for i in 0..links {
        let direct: Vec<f64> = real.direct_gain_normalized().row(i).to_vec();
        power.row_mut(i).copy_from_slice(&water_fill(&direct, budgets[i]));
    }

    let mut rounds = 0;
    let mut converged = false;
    while rounds < cfg.max_rounds {
        rounds += 1;
        let mut max_change: f64 = 0.0;
        match cfg.order {
            UpdateOrder::Sequential => {
                for i in 0..links {
                    let next = best_response(real, &power, i, budgets[i]);
                    for (old, new) in power.row_mut(i).iter_mut().zip(next) {
                        max_change = max_change.max((*old - new).abs());
                        *old = new;
                    }
                }
            }
            UpdateOrder::Simultaneous => {
                let responses: Vec<Vec<f64>> =
                    (0..links).map(|i| best_response(real, &power, i, budgets[i])).collect();
                for (i, next) in responses.into_iter().enumerate() {
                    for (old, new) in power.row_mut(i).iter_mut().zip(next) {
                        max_change = max_change.max((*old - new).abs());
                        *old = new;
                    }
                }
            }
        }
        if max_change < cfg.eps {
            converged = true;
            break;
        }
    }
    Ok(IwfaOutcome { allocation: score(real, power), rounds, converged })
}
