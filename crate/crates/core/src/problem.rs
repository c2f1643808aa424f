use alloc::vec::Vec;
use core::f64::consts::LN_2;

use crate::{ChannelRealization, Error, Grid, Result};

/// Weighted sum-rate instance: normalized gains `g[i][k]` (1/mW), link
/// weights and per-link power budgets (mW).
///
/// Gains may be zero, which is how an erased signaling entry reaches the
/// schedulers; weights and budgets must be strictly positive.
#[derive(Debug, Clone, PartialEq)]
pub struct TsProblem {
    gains: Grid<f64>,
    weights: Vec<f64>,
    budgets: Vec<f64>,
    tone_bandwidth: f64,
}

impl TsProblem {
    pub fn new(gains: Grid<f64>, weights: Vec<f64>, budgets: Vec<f64>) -> Result<Self> {
        if gains.rows() == 0 || gains.cols() == 0 {
            return Err(Error::InvalidInput("problem needs at least one link and one tone"));
        }
        if weights.len() != gains.rows() || budgets.len() != gains.rows() {
            return Err(Error::InvalidInput("weights and budgets need one entry per link"));
        }
        if gains.as_slice().iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
            return Err(Error::InvalidInput("gains must be finite and non-negative"));
        }
        if weights.iter().chain(&budgets).any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidInput("weights and budgets must be positive"));
        }
        Ok(TsProblem { gains, weights, budgets, tone_bandwidth: 1.0 })
    }

    /// Unit weights and a common budget over the realization's direct gains.
    pub fn from_realization(real: &ChannelRealization, budget_mw: f64) -> Result<Self> {
        let links = real.num_links();
        TsProblem::new(
            real.direct_gain_normalized().clone(),
            alloc::vec![1.0; links],
            alloc::vec![budget_mw; links],
        )
        .map(|p| p.with_bandwidth(real.tone_bandwidth()))
    }

    /// Sets the tone bandwidth in Hz used to report rates in bits/s. The
    /// default of 1 Hz reports bits per channel use.
    pub fn with_bandwidth(mut self, hz: f64) -> Self {
        assert!(hz > 0.0 && hz.is_finite(), "bandwidth must be positive");
        self.tone_bandwidth = hz;
        self
    }

    pub fn with_weights(mut self, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != self.num_links() || weights.iter().any(|w| !(w.is_finite() && *w > 0.0))
        {
            return Err(Error::InvalidInput("weights must be positive, one per link"));
        }
        self.weights = weights;
        Ok(self)
    }

    pub fn num_links(&self) -> usize {
        self.gains.rows()
    }

    pub fn num_tones(&self) -> usize {
        self.gains.cols()
    }

    #[inline]
    pub fn gain(&self, link: usize, tone: usize) -> f64 {
        self.gains[(link, tone)]
    }

    pub fn gains(&self) -> &Grid<f64> {
        &self.gains
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn budgets(&self) -> &[f64] {
        &self.budgets
    }

    pub fn tone_bandwidth(&self) -> f64 {
        self.tone_bandwidth
    }

    /// Conversion factor from natural-log rates to bits/s.
    pub fn bps_per_nat(&self) -> f64 {
        self.tone_bandwidth / LN_2
    }
}

/// Per-link per-tone time shares and powers with the rates they achieve
/// under orthogonal transmission.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    pub share: Grid<f64>,
    /// mW
    pub power: Grid<f64>,
    /// bits/s per link
    pub rate: Vec<f64>,
    /// `sum_i weight_i * rate_i`, bits/s
    pub objective: f64,
}

impl Allocation {
    /// Scores shares and powers on `problem`. Rates are
    /// `B * sum_k T log2(1 + g p / T)` with the `T = 0` terms dropped.
    pub fn evaluate(problem: &TsProblem, share: Grid<f64>, power: Grid<f64>) -> Self {
        let rate: Vec<f64> = (0..problem.num_links())
            .map(|i| {
                let nats: f64 = (0..problem.num_tones())
                    .filter(|&k| share[(i, k)] > 0.0)
                    .map(|k| {
                        let t = share[(i, k)];
                        t * libm::log1p(problem.gain(i, k) * power[(i, k)] / t)
                    })
                    .sum();
                nats * problem.bps_per_nat()
            })
            .collect();
        let objective = rate.iter().zip(problem.weights()).map(|(r, w)| r * w).sum();
        Allocation { share, power, rate, objective }
    }

    /// Whole tones with the given powers: `T = 1` wherever a link was handed
    /// the tone.
    pub fn orthogonal(problem: &TsProblem, owner: &[Option<usize>], power: Grid<f64>) -> Self {
        let share = Grid::from_fn(problem.num_links(), problem.num_tones(), |i, k| {
            if owner[k] == Some(i) {
                1.0
            } else {
                0.0
            }
        });
        Allocation::evaluate(problem, share, power)
    }

    /// Weighted objective in nats, comparable with dual values.
    pub fn objective_nats(&self, problem: &TsProblem) -> f64 {
        self.objective / problem.bps_per_nat()
    }

    /// Checks the tone-sharing and power-budget constraints with relative
    /// slack `tol`, and that power only flows on shared-in tones.
    pub fn is_feasible(&self, problem: &TsProblem, tol: f64) -> bool {
        let links = problem.num_links();
        let tones = problem.num_tones();
        for k in 0..tones {
            let total: f64 = self.share.column(k).sum();
            if total > 1.0 + tol || self.share.column(k).any(|t| !(0.0..=1.0 + tol).contains(t)) {
                return false;
            }
        }
        for i in 0..links {
            let used: f64 = self.power.row(i).iter().sum();
            if used > problem.budgets()[i] * (1.0 + tol) {
                return false;
            }
            for k in 0..tones {
                let p = self.power[(i, k)];
                if p < 0.0 || (p > 0.0 && self.share[(i, k)] <= 0.0) {
                    return false;
                }
            }
        }
        true
    }
}
