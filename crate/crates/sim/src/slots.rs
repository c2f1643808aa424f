//! Repeated distributed-scheduling runs with collision bookkeeping.

use std::io::Write;

use anyhow::{anyhow, Result};
use rayon::prelude::*;
use smallcell_core::channel::generate;
use smallcell_core::distributed::{
    collision_episodes, expected_resolution_slots, run_distributed_slots, CollisionEpisode, SlotConfig,
};
use smallcell_core::ScenarioConfig;

use crate::experiment::{calibrate_table, trial_rng};

#[derive(Debug, Clone)]
pub struct SlotsConfig {
    /// `rng_seed` is the master seed; run `r` uses stream `r`.
    pub scenario: ScenarioConfig,
    pub slot: SlotConfig,
    pub runs: usize,
    pub table_levels: usize,
    pub calibration_drops: usize,
}

impl Default for SlotsConfig {
    fn default() -> Self {
        SlotsConfig {
            scenario: ScenarioConfig::default(),
            slot: SlotConfig::default(),
            runs: 100,
            table_levels: 16,
            calibration_drops: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlotRecord {
    pub run: u64,
    pub slot: usize,
    pub throughput_bps: f64,
    pub collisions: usize,
    pub gave_up: usize,
    /// Signals erased across all receivers in this slot.
    pub missing: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlotsOutcome {
    pub records: Vec<SlotRecord>,
    pub episodes: Vec<(u64, CollisionEpisode)>,
    giveup_probability: f64,
}

impl SlotsOutcome {
    pub fn total_collisions(&self) -> usize {
        self.records.iter().map(|r| r.collisions).sum()
    }

    /// Episodes that cleared before their run ended.
    pub fn resolved(&self) -> impl Iterator<Item = &CollisionEpisode> {
        self.episodes.iter().map(|(_, e)| e).filter(|e| e.duration.is_some())
    }

    /// Mean colliding slots per resolved episode.
    pub fn mean_resolution_slots(&self) -> Option<f64> {
        let d: Vec<usize> = self.resolved().filter_map(|e| e.duration).collect();
        (!d.is_empty()).then(|| d.iter().sum::<usize>() as f64 / d.len() as f64)
    }

    /// What the give-up model predicts for the same episodes, given how many
    /// links each started with.
    pub fn model_resolution_slots(&self) -> Option<f64> {
        let m: Vec<f64> =
            self.resolved().map(|e| expected_resolution_slots(e.claimants, self.giveup_probability)).collect();
        (!m.is_empty()).then(|| m.iter().sum::<f64>() / m.len() as f64)
    }
}

pub fn run_slots(cfg: &SlotsConfig) -> Result<SlotsOutcome> {
    if cfg.runs == 0 {
        return Err(anyhow!("runs must be at least 1"));
    }
    let table = calibrate_table(&cfg.scenario, cfg.table_levels, cfg.calibration_drops)?;
    let links = cfg.scenario.num_links;
    let weights = vec![1.0; links];
    let budgets = vec![cfg.scenario.max_power_mw(); links];
    let runs: Vec<(Vec<SlotRecord>, Vec<(u64, CollisionEpisode)>)> = (0..cfg.runs as u64)
        .into_par_iter()
        .map(|run| {
            let mut rng = trial_rng(cfg.scenario.rng_seed, run);
            let real = generate(&cfg.scenario, &mut rng)?;
            let slots = run_distributed_slots(&real, &table, &weights, &budgets, &cfg.slot, &mut rng)?;
            let records = slots
                .iter()
                .map(|s| SlotRecord {
                    run,
                    slot: s.slot_index,
                    throughput_bps: s.throughput,
                    collisions: s.collision_count(),
                    gave_up: s.gave_up.len(),
                    missing: s.views.iter().map(|v| v.missing()).sum(),
                })
                .collect();
            let episodes = collision_episodes(&slots).into_iter().map(|e| (run, e)).collect();
            Ok((records, episodes))
        })
        .collect::<Result<_>>()?;
    let mut records = Vec::new();
    let mut episodes = Vec::new();
    for (r, e) in runs {
        records.extend(r);
        episodes.extend(e);
    }
    Ok(SlotsOutcome { records, episodes, giveup_probability: cfg.slot.giveup_probability })
}

pub fn write_slot_records<W: Write>(out: W, records: &[SlotRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["run", "slot", "throughput_bps", "collisions", "gave_up", "missing"])?;
    for r in records {
        w.write_record([
            r.run.to_string(),
            r.slot.to_string(),
            r.throughput_bps.to_string(),
            r.collisions.to_string(),
            r.gave_up.to_string(),
            r.missing.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lossless_runs_are_collision_free() {
        let cfg = SlotsConfig { runs: 5, slot: SlotConfig { num_slots: 4, ..SlotConfig::default() }, ..SlotsConfig::default() };
        let out = run_slots(&cfg).unwrap();
        assert_eq!(out.records.len(), 20);
        assert_eq!(out.total_collisions(), 0);
        assert!(out.records.iter().all(|r| r.missing == 0));
        assert_eq!(out.mean_resolution_slots(), None);
    }

    #[test]
    fn lossy_runs_are_reproducible() {
        let cfg = SlotsConfig {
            runs: 8,
            slot: SlotConfig { num_slots: 6, p_loss: 0.3, ..SlotConfig::default() },
            ..SlotsConfig::default()
        };
        let a = run_slots(&cfg).unwrap();
        assert_eq!(a, run_slots(&cfg).unwrap());
        assert!(a.records.iter().any(|r| r.missing > 0));
    }
}
