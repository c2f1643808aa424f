//! Slotted operation with every link scheduling on its own.
//!
//! Each traffic slot opens with a signaling slot. Every link then runs the
//! greedy scheduler on the gains it decoded and transmits on the tones it gave
//! itself. With lossless signaling all links see the same table and pick
//! disjoint tones. With losses, a link that missed another link's signal on a
//! tone treats that tone as worthless for the other link, so two links can
//! claim the same tone. A link notices the collision when its rate on the tone
//! falls below the interference-free rate, and then gives the tone up for good
//! with a fixed probability before the next slot.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;
use core::f64::consts::LN_2;

use rand::Rng;

use crate::iwfa::{evaluate_concurrent, sinr_grid};
use crate::signaling::{run_signaling_slot_with, Erasures, GainView, QuantizationTable};
use crate::soa::{soa_allocate, PowerMode};
use crate::{ChannelRealization, Error, Grid, Result, TsProblem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LossMode {
    /// One erasure pattern for the whole run: a static channel loses the
    /// same signals every slot.
    #[default]
    Persistent,
    /// Fresh erasures every slot.
    PerSlot,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlotConfig {
    pub num_slots: usize,
    pub p_loss: f64,
    pub giveup_probability: f64,
    pub loss_mode: LossMode,
    pub power_mode: PowerMode,
    /// Power of the first signaling burst, mW.
    pub signal_power: f64,
    /// Share of each slot spent on signaling; discounts throughput.
    pub overhead: f64,
}

impl Default for SlotConfig {
    fn default() -> Self {
        SlotConfig {
            num_slots: 20,
            p_loss: 0.0,
            giveup_probability: 0.5,
            loss_mode: LossMode::Persistent,
            power_mode: PowerMode::EqualPower,
            signal_power: 100.0,
            overhead: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlotState {
    pub slot_index: usize,
    pub views: Vec<GainView>,
    /// Row `j` is what link `j` decided to transmit, mW.
    pub intended_power: Grid<f64>,
    /// Interference-free rate of each link's own choice, bits/s.
    pub intended_rate: Vec<f64>,
    /// Rate with everyone on the air, bits/s.
    pub realized_rate: Vec<f64>,
    /// Links transmitting on each tone.
    pub claimants: Vec<Vec<usize>>,
    /// Tones with two or more claimants.
    pub collided_tones: Vec<usize>,
    /// `(link, tone)` pairs relinquished after this slot.
    pub gave_up: Vec<(usize, usize)>,
    pub giveup_probability: f64,
    /// Weighted realized rate after the signaling overhead, bits/s.
    pub throughput: f64,
}

impl SlotState {
    pub fn collision_count(&self) -> usize {
        self.collided_tones.len()
    }
}

/// Runs `cfg.num_slots` traffic slots over one static channel.
pub fn run_distributed_slots<R: Rng + ?Sized>(
    real: &ChannelRealization,
    table: &QuantizationTable,
    weights: &[f64],
    budgets: &[f64],
    cfg: &SlotConfig,
    rng: &mut R,
) -> Result<Vec<SlotState>> {
    if !(0.0..=1.0).contains(&cfg.giveup_probability) {
        return Err(Error::InvalidInput("giveup_probability must lie in [0, 1]"));
    }
    if !(0.0..=1.0).contains(&cfg.p_loss) {
        return Err(Error::InvalidInput("p_loss must lie in [0, 1]"));
    }
    if !(0.0..1.0).contains(&cfg.overhead) {
        return Err(Error::InvalidInput("overhead must lie in [0, 1)"));
    }
    let links = real.num_links();
    let tones = real.num_tones();
    let truth = real.direct_gain_normalized();
    let bw = real.tone_bandwidth();
    // validates weights and budgets once
    TsProblem::new(truth.clone(), weights.to_vec(), budgets.to_vec())?;

    let mut excluded: Vec<BTreeSet<usize>> = alloc::vec![BTreeSet::new(); links];
    let mut erasures = Erasures::draw(links, tones, cfg.p_loss, rng);
    let mut slots = Vec::with_capacity(cfg.num_slots);

    for slot_index in 0..cfg.num_slots {
        if slot_index > 0 && cfg.loss_mode == LossMode::PerSlot {
            erasures = Erasures::draw(links, tones, cfg.p_loss, rng);
        }
        let views = run_signaling_slot_with(real, table, cfg.signal_power, &erasures);

        let mut intended_power = Grid::filled(links, tones, 0.0);
        for (j, view) in views.iter().enumerate() {
            let mut gains = view.to_gains();
            for &k in &excluded[j] {
                gains[(j, k)] = 0.0;
            }
            let problem = TsProblem::new(gains, weights.to_vec(), budgets.to_vec())?;
            let plan = soa_allocate(&problem, cfg.power_mode);
            intended_power.row_mut(j).copy_from_slice(plan.power.row(j));
        }

        let intended_rate: Vec<f64> = (0..links)
            .map(|j| {
                let nats: f64 = (0..tones)
                    .map(|k| libm::log1p(truth[(j, k)] * intended_power[(j, k)]))
                    .sum();
                bw * nats / LN_2
            })
            .collect();
        let realized_rate = evaluate_concurrent(real, &intended_power);

        let claimants: Vec<Vec<usize>> = (0..tones)
            .map(|k| (0..links).filter(|&j| intended_power[(j, k)] > 0.0).collect())
            .collect();
        // a link sees a collision when its SINR falls short of its SNR
        let sinr = sinr_grid(real, &intended_power);
        let mut collided_tones = Vec::new();
        let mut gave_up = Vec::new();
        for (k, owners) in claimants.iter().enumerate() {
            let hit: Vec<usize> = owners
                .iter()
                .copied()
                .filter(|&j| {
                    let snr = truth[(j, k)] * intended_power[(j, k)];
                    sinr[(j, k)] < snr * (1.0 - 1e-12)
                })
                .collect();
            if hit.is_empty() {
                continue;
            }
            collided_tones.push(k);
            for j in hit {
                if rng.random::<f64>() < cfg.giveup_probability {
                    excluded[j].insert(k);
                    gave_up.push((j, k));
                }
            }
        }

        let throughput = (1.0 - cfg.overhead)
            * realized_rate.iter().zip(weights).map(|(r, w)| r * w).sum::<f64>();
        slots.push(SlotState {
            slot_index,
            views,
            intended_power,
            intended_rate,
            realized_rate,
            claimants,
            collided_tones,
            gave_up,
            giveup_probability: cfg.giveup_probability,
            throughput,
        });
    }
    Ok(slots)
}

/// A stretch of consecutive slots in which one tone had several claimants.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CollisionEpisode {
    pub tone: usize,
    pub start_slot: usize,
    /// Claimants in the first colliding slot.
    pub claimants: usize,
    /// Colliding slots until the tone is clear again; `None` if still
    /// colliding when the run ended.
    pub duration: Option<usize>,
}

pub fn collision_episodes(slots: &[SlotState]) -> Vec<CollisionEpisode> {
    let Some(first) = slots.first() else { return Vec::new() };
    let tones = first.claimants.len();
    let mut open: Vec<Option<CollisionEpisode>> = alloc::vec![None; tones];
    let mut done = Vec::new();
    for slot in slots {
        for (k, episode) in open.iter_mut().enumerate() {
            let colliding = slot.collided_tones.contains(&k);
            match (episode.as_mut(), colliding) {
                (None, true) => {
                    *episode = Some(CollisionEpisode {
                        tone: k,
                        start_slot: slot.slot_index,
                        claimants: slot.claimants[k].len(),
                        duration: None,
                    });
                }
                (Some(e), false) => {
                    e.duration = Some(slot.slot_index - e.start_slot);
                    done.push(*e);
                    *episode = None;
                }
                _ => {}
            }
        }
    }
    done.extend(open.into_iter().flatten());
    done.sort_by_key(|e| (e.start_slot, e.tone));
    done
}

/// Expected colliding slots before a tone claimed by `claimants` links is
/// clear, when every claimant independently gives up with probability `q`
/// after each colliding slot. The tone is clear once at most one claimant
/// remains.
pub fn expected_resolution_slots(claimants: usize, q: f64) -> f64 {
    if claimants < 2 {
        return 0.0;
    }
    if q <= 0.0 {
        return f64::INFINITY;
    }
    let keep = 1.0 - q;
    // e[m]: expected slots with m claimants
    let mut e = alloc::vec![0.0f64; claimants + 1];
    for n in 2..=claimants {
        let mut rest = 1.0;
        for m in 2..n {
            rest += binomial(n, m) * libm::pow(keep, m as f64) * libm::pow(q, (n - m) as f64) * e[m];
        }
        let stay = libm::pow(keep, n as f64);
        e[n] = rest / (1.0 - stay);
    }
    e[claimants]
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}
