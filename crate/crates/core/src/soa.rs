//! Greedy marginal-rate channel assignment with equal power.
//!
//! Each link keeps its tones sorted by gain. On every round it looks at its
//! best still-unassigned tone and at how much its weighted rate would grow if
//! that tone were added and the budget re-split evenly. The link with the
//! largest strictly positive gain takes its tone. Rounds stop when every tone
//! is assigned or nobody gains.
//!
//! Work is one sort per link plus, per round, an `O(I)` scan and an
//! `O(|ACS|)` refresh of the winning link only.

use alloc::vec::Vec;

use crate::dual::fill_owned_tones;
use crate::{Allocation, Grid, TsProblem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PowerMode {
    #[default]
    EqualPower,
    WaterFill,
}

/// `theta [ sum_{k in acs + cta} ln(1 + P g_k/(n+1)) - sum_{k in acs} ln(1 + P g_k/n) ]`
/// where `n = |acs|`.
pub fn marginal_rate(theta: f64, budget: f64, gains: &[f64], acs: &[usize], cta: usize) -> f64 {
    debug_assert!(!acs.contains(&cta));
    let n = acs.len() as f64;
    let grown: f64 = acs
        .iter()
        .chain(core::iter::once(&cta))
        .map(|&k| libm::log1p(budget * gains[k] / (n + 1.0)))
        .sum();
    let current: f64 = if acs.is_empty() {
        0.0
    } else {
        acs.iter().map(|&k| libm::log1p(budget * gains[k] / n)).sum()
    };
    theta * (grown - current)
}

/// Bookkeeping of the greedy loop.
#[derive(Debug, Clone)]
pub struct GreedyState {
    pub assigned_count: usize,
    /// Assigned tones per link, in assignment order.
    pub acs: Vec<Vec<usize>>,
    /// Best unassigned tone per link.
    pub cta: Vec<Option<usize>>,
    /// Tone indices per link sorted by descending gain.
    pub sorted_tones: Vec<Vec<usize>>,
    taken: Vec<bool>,
    cursor: Vec<usize>,
    /// `theta [A(n+1) - A(n)]` with `A(m) = sum_{acs} ln(1 + P g/m)`
    dilution: Vec<f64>,
    /// `A(n+1)`, reused when the next tone arrives
    grown_sum: Vec<f64>,
    /// Marginal rate of `cta`, valid unless `stale`
    candidate: Vec<f64>,
    stale: Vec<bool>,
}

impl GreedyState {
    pub fn new(problem: &TsProblem) -> Self {
        let tones = problem.num_tones();
        let links = problem.num_links();
        let sorted_tones: Vec<Vec<usize>> = (0..links)
            .map(|i| {
                let row = problem.gains().row(i);
                let mut order: Vec<usize> = (0..tones).collect();
                order.sort_unstable_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
                order
            })
            .collect();
        let cta = sorted_tones.iter().map(|s| s.first().copied()).collect();
        GreedyState {
            assigned_count: 0,
            acs: alloc::vec![Vec::new(); links],
            cta,
            sorted_tones,
            taken: alloc::vec![false; tones],
            cursor: alloc::vec![0; links],
            dilution: alloc::vec![0.0; links],
            grown_sum: alloc::vec![0.0; links],
            candidate: alloc::vec![0.0; links],
            stale: alloc::vec![true; links],
        }
    }

    fn refresh_cta(&mut self, link: usize) {
        let order = &self.sorted_tones[link];
        let cur = &mut self.cursor[link];
        if *cur < order.len() && !self.taken[order[*cur]] {
            return;
        }
        while *cur < order.len() && self.taken[order[*cur]] {
            *cur += 1;
        }
        self.cta[link] = order.get(*cur).copied();
        self.stale[link] = true;
    }

    fn marginal(&mut self, problem: &TsProblem, link: usize) -> Option<f64> {
        let tone = self.cta[link]?;
        if self.stale[link] {
            let n = self.acs[link].len() as f64;
            let theta = problem.weights()[link];
            let budget = problem.budgets()[link];
            self.candidate[link] = self.dilution[link]
                + theta * libm::log1p(budget * problem.gain(link, tone) / (n + 1.0));
            self.stale[link] = false;
        }
        Some(self.candidate[link])
    }

    fn accept(&mut self, problem: &TsProblem, link: usize) {
        let tone = self.cta[link].expect("winner has a tone to assign");
        self.taken[tone] = true;
        self.acs[link].push(tone);
        self.assigned_count += 1;
        let n = self.acs[link].len() as f64;
        let budget = problem.budgets()[link];
        let row = problem.gains().row(link);
        // A(n) over the grown set is last round's A(n) over the old set plus
        // the new tone
        let now = self.grown_sum[link] + libm::log1p(budget * row[tone] / n);
        let next: f64 = self.acs[link].iter().map(|&k| libm::log1p(budget * row[k] / (n + 1.0))).sum();
        self.grown_sum[link] = next;
        self.dilution[link] = problem.weights()[link] * (next - now);
        self.stale[link] = true;
    }

    /// Runs rounds until all tones are assigned or no link gains.
    pub fn run(&mut self, problem: &TsProblem) {
        let links = problem.num_links();
        while self.assigned_count < problem.num_tones() {
            let mut best: Option<(usize, f64)> = None;
            for i in 0..links {
                self.refresh_cta(i);
                if let Some(m) = self.marginal(problem, i) {
                    if m > 0.0 && best.is_none_or(|(_, b)| m > b) {
                        best = Some((i, m));
                    }
                }
            }
            match best {
                Some((i, _)) => self.accept(problem, i),
                None => break,
            }
        }
        for i in 0..links {
            self.refresh_cta(i);
        }
    }

    /// Owning link per tone.
    pub fn owners(&self, tones: usize) -> Vec<Option<usize>> {
        let mut owner = alloc::vec![None; tones];
        for (i, set) in self.acs.iter().enumerate() {
            for &k in set {
                owner[k] = Some(i);
            }
        }
        owner
    }
}

/// Greedy tone sets per link; tones nobody gains from stay unassigned.
pub fn assign_channels(problem: &TsProblem) -> Vec<Vec<usize>> {
    let mut state = GreedyState::new(problem);
    state.run(problem);
    state.acs
}

/// Greedy assignment followed by the chosen power phase.
pub fn soa_allocate(problem: &TsProblem, mode: PowerMode) -> Allocation {
    let mut state = GreedyState::new(problem);
    state.run(problem);
    let owner = state.owners(problem.num_tones());
    let power = match mode {
        PowerMode::EqualPower => {
            let mut power = Grid::filled(problem.num_links(), problem.num_tones(), 0.0);
            for (i, set) in state.acs.iter().enumerate() {
                let each = problem.budgets()[i] / set.len().max(1) as f64;
                for &k in set {
                    power[(i, k)] = each;
                }
            }
            power
        }
        PowerMode::WaterFill => fill_owned_tones(problem, &owner),
    };
    Allocation::orthogonal(problem, &owner, power)
}
