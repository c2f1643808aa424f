//! Seeded trial runs over fresh drops, one record per (trial, algorithm).

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use anyhow::{anyhow, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use smallcell_core::channel::{generate, sample_direct_gains};
use smallcell_core::dual::{self, SolverConfig};
use smallcell_core::iwfa::{evaluate_concurrent, iwfa_solve, IwfaConfig};
use smallcell_core::oracle::oracle_orthogonal;
use smallcell_core::signaling::{build_cdf_table, QuantizationTable};
use smallcell_core::soa::{soa_allocate, PowerMode};
use smallcell_core::{ChannelRealization, Error, Grid, ScenarioConfig, ScenarioId, TsProblem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Soa,
    TsSubgradient,
    Iwfa,
    Oracle,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::Soa, Algorithm::TsSubgradient, Algorithm::Iwfa, Algorithm::Oracle];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Soa => "SOA",
            Algorithm::TsSubgradient => "TS-Subgradient",
            Algorithm::Iwfa => "IWFA",
            Algorithm::Oracle => "Oracle",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "soa" => Ok(Algorithm::Soa),
            "ts-subgradient" | "ts" | "subgradient" | "dual" => Ok(Algorithm::TsSubgradient),
            "iwfa" => Ok(Algorithm::Iwfa),
            "oracle" => Ok(Algorithm::Oracle),
            other => Err(anyhow!("unknown algorithm `{other}`")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    /// `rng_seed` is the master seed.
    pub scenario: ScenarioConfig,
    pub trials: usize,
    pub algorithms: Vec<Algorithm>,
    pub power_mode: PowerMode,
    /// Schedulers see gains quantized to a table with this many levels, as
    /// they would after a lossless signaling slot.
    pub signaling_levels: Option<usize>,
    /// Drops pooled to calibrate the quantization table.
    pub calibration_drops: usize,
    pub solver: SolverConfig,
    pub iwfa: IwfaConfig,
    /// Share of each slot spent on signaling.
    pub overhead: f64,
    pub parallel: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            scenario: ScenarioConfig::default(),
            trials: 100,
            algorithms: vec![Algorithm::Soa, Algorithm::Iwfa],
            power_mode: PowerMode::EqualPower,
            signaling_levels: None,
            calibration_drops: 100,
            solver: SolverConfig::default(),
            iwfa: IwfaConfig::default(),
            overhead: 0.0,
            parallel: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial_id: u64,
    pub scenario: ScenarioId,
    pub num_links: usize,
    pub num_tones: usize,
    pub algorithm: Algorithm,
    /// Weighted bits/s rescored on the true channel; `None` when the solver
    /// was skipped.
    pub objective_bps: Option<f64>,
    pub per_link_rates: Vec<f64>,
    /// Solve time only.
    pub runtime_us: f64,
    /// Subgradient iterations, IWFA rounds or SOA assignment steps.
    pub iterations: u64,
    pub collisions: u64,
    /// Master seed; the trial stream is `(seed, trial_id)`.
    pub seed: u64,
}

/// Generator for one trial: the master seed selects the key and the trial id
/// the stream, so trials never share randomness.
pub fn trial_rng(master_seed: u64, trial_id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial_id);
    rng
}

/// Stream used for table calibration, disjoint from every trial stream.
const CALIBRATION_STREAM: u64 = u64::MAX;

/// Quantization table calibrated on `drops` draws of the scenario.
pub fn calibrate_table(scenario: &ScenarioConfig, levels: usize, drops: usize) -> Result<QuantizationTable> {
    let mut rng = trial_rng(scenario.rng_seed, CALIBRATION_STREAM);
    let samples = sample_direct_gains(scenario, drops.max(1), &mut rng)?;
    Ok(build_cdf_table(&samples, levels)?)
}

fn scheduler_view(real: &ChannelRealization, table: Option<&QuantizationTable>) -> Grid<f64> {
    let gains = real.direct_gain_normalized();
    match table {
        Some(t) => Grid::from_fn(gains.rows(), gains.cols(), |i, k| t.quantize(gains[(i, k)])),
        None => gains.clone(),
    }
}

struct Solved {
    power: Grid<f64>,
    runtime_us: f64,
    iterations: u64,
}

fn solve_one(
    algorithm: Algorithm,
    cfg: &ExperimentConfig,
    real: &ChannelRealization,
    problem: &TsProblem,
) -> Result<Option<Solved>> {
    let budgets = problem.budgets();
    let start = Instant::now();
    let (power, iterations) = match algorithm {
        Algorithm::Soa => {
            let alloc = soa_allocate(problem, cfg.power_mode);
            let steps = alloc.share.as_slice().iter().filter(|&&t| t > 0.0).count();
            (alloc.power, steps as u64)
        }
        Algorithm::TsSubgradient => {
            let (outcome, alloc) = dual::solve(problem, &cfg.solver)?;
            (alloc.power, outcome.iterations as u64)
        }
        Algorithm::Iwfa => {
            let out = iwfa_solve(real, budgets, &cfg.iwfa)?;
            (out.allocation.power, out.rounds as u64)
        }
        Algorithm::Oracle => match oracle_orthogonal(problem) {
            Ok((alloc, _)) => (alloc.power, 0),
            Err(Error::InstanceTooLarge { .. }) => return Ok(None),
            Err(e) => return Err(e.into()),
        },
    };
    let runtime_us = (start.elapsed().as_secs_f64() * 1e6).max(f64::MIN_POSITIVE);
    Ok(Some(Solved { power, runtime_us, iterations }))
}

fn run_trial(cfg: &ExperimentConfig, table: Option<&QuantizationTable>, trial_id: u64) -> Result<Vec<TrialRecord>> {
    let sc = &cfg.scenario;
    let mut rng = trial_rng(sc.rng_seed, trial_id);
    let real = generate(sc, &mut rng)?;
    let links = real.num_links();
    let weights = vec![1.0; links];
    let problem = TsProblem::new(scheduler_view(&real, table), weights.clone(), vec![sc.max_power_mw(); links])?
        .with_bandwidth(real.tone_bandwidth());

    let mut records = Vec::with_capacity(cfg.algorithms.len());
    for &algorithm in &cfg.algorithms {
        let solved = solve_one(algorithm, cfg, &real, &problem)?;
        let base = TrialRecord {
            trial_id,
            scenario: sc.scenario_id,
            num_links: links,
            num_tones: real.num_tones(),
            algorithm,
            objective_bps: None,
            per_link_rates: Vec::new(),
            runtime_us: 0.0,
            iterations: 0,
            collisions: 0,
            seed: sc.rng_seed,
        };
        let record = match solved {
            None => base,
            Some(s) => {
                // scored on the true channel with everyone's power on the air
                let rates: Vec<f64> =
                    evaluate_concurrent(&real, &s.power).into_iter().map(|r| r * (1.0 - cfg.overhead)).collect();
                let objective = rates.iter().zip(&weights).map(|(r, w)| r * w).sum();
                TrialRecord {
                    objective_bps: Some(objective),
                    per_link_rates: rates,
                    runtime_us: s.runtime_us,
                    iterations: s.iterations,
                    ..base
                }
            }
        };
        records.push(record);
    }
    Ok(records)
}

/// Runs every algorithm on `cfg.trials` fresh instances. Records come back
/// sorted by trial id and then by the order of `cfg.algorithms`, identical
/// for serial and parallel runs apart from runtimes.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    if cfg.trials == 0 {
        return Err(anyhow!("trials must be at least 1"));
    }
    if !(0.0..1.0).contains(&cfg.overhead) {
        return Err(anyhow!("overhead must lie in [0, 1)"));
    }
    cfg.scenario.validate()?;
    let table = cfg
        .signaling_levels
        .map(|m| calibrate_table(&cfg.scenario, m, cfg.calibration_drops))
        .transpose()?;
    let ids = 0..cfg.trials as u64;
    let per_trial: Vec<Vec<TrialRecord>> = if cfg.parallel {
        ids.into_par_iter().map(|t| run_trial(cfg, table.as_ref(), t)).collect::<Result<_>>()?
    } else {
        ids.map(|t| run_trial(cfg, table.as_ref(), t)).collect::<Result<_>>()?
    };
    Ok(per_trial.into_iter().flatten().collect())
}
