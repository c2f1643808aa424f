use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use smallcell_core::distributed::{LossMode, SlotConfig};
use smallcell_core::dual::{self, SolverConfig};
use smallcell_core::iwfa::{IwfaConfig, UpdateOrder};
use smallcell_core::soa::PowerMode;
use smallcell_core::{ScenarioConfig, ScenarioId, TsProblem};
use smallcell_sim::experiment::calibrate_table;
use smallcell_sim::io::{write_records, write_table, write_trace};
use smallcell_sim::slots::{run_slots, write_slot_records, SlotsConfig};
use smallcell_sim::summary::{format_table, write_summary_csv};
use smallcell_sim::{load_config, run_experiment, summarize, trial_rng, Algorithm, ExperimentConfig};

#[derive(Parser)]
#[command(name = "smallcell", version, about = "Small-cell resource allocation simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run algorithms on random drops and write one CSV row per trial and algorithm.
    Sim(SimArgs),
    /// Run distributed scheduling over lossy signaling slots.
    Slots(SlotsArgs),
    /// Repeat `sim` over a list of link counts or cell radii.
    Sweep(SweepArgs),
}

#[derive(Args, Clone)]
struct ScenarioArgs {
    /// Scenario file with `key = value` lines; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// 1-4 or urban-indoor, urban-outdoor, suburban-indoor, suburban-outdoor.
    #[arg(long)]
    scenario: Option<String>,
    /// Cell radius in meters.
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long)]
    links: Option<usize>,
    #[arg(long)]
    tones: Option<usize>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
}

impl ScenarioArgs {
    fn resolve(&self) -> Result<ScenarioConfig> {
        let mut cfg = match &self.config {
            Some(path) => load_config(path, ScenarioConfig::default())?,
            None => ScenarioConfig::default(),
        };
        if let Some(s) = &self.scenario {
            cfg.scenario_id = s.parse::<ScenarioId>().with_context(|| format!("scenario `{s}`"))?;
        }
        if let Some(r) = self.radius {
            cfg.cell_radius = r;
        }
        if let Some(l) = self.links {
            cfg.num_links = l;
        }
        if let Some(k) = self.tones {
            cfg.num_tones = k;
        }
        if let Some(s) = self.seed {
            cfg.rng_seed = s;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PowerArg {
    Equal,
    Waterfill,
}

impl From<PowerArg> for PowerMode {
    fn from(p: PowerArg) -> Self {
        match p {
            PowerArg::Equal => PowerMode::EqualPower,
            PowerArg::Waterfill => PowerMode::WaterFill,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum OrderArg {
    Sequential,
    Simultaneous,
}

#[derive(Args, Clone)]
struct RunArgs {
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Comma-separated: soa, ts-subgradient, iwfa, oracle.
    #[arg(long, value_delimiter = ',', default_value = "soa,iwfa")]
    algos: Vec<Algorithm>,
    #[arg(long, value_enum, default_value = "equal")]
    power_mode: PowerArg,
    /// Quantize the schedulers' gains to a table with this many levels.
    #[arg(long)]
    signaling_levels: Option<usize>,
    /// Fraction of every slot spent signaling.
    #[arg(long, default_value_t = 0.0)]
    overhead: f64,
    #[arg(long, default_value_t = 10_000)]
    max_iters: usize,
    /// Relative early-stop tolerance of the subgradient solver; 0 disables.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, value_enum, default_value = "sequential")]
    iwfa_order: OrderArg,
    /// Run trials on one thread.
    #[arg(long)]
    serial: bool,
    /// Summary CSV path; the aligned table always goes to stderr.
    #[arg(long)]
    summary: Option<PathBuf>,
}

impl RunArgs {
    fn experiment(&self, scenario: ScenarioConfig) -> ExperimentConfig {
        ExperimentConfig {
            scenario,
            trials: self.trials,
            algorithms: self.algos.clone(),
            power_mode: self.power_mode.into(),
            signaling_levels: self.signaling_levels,
            solver: SolverConfig { max_iters: self.max_iters, tol: self.tol, ..SolverConfig::default() },
            iwfa: IwfaConfig {
                order: match self.iwfa_order {
                    OrderArg::Sequential => UpdateOrder::Sequential,
                    OrderArg::Simultaneous => UpdateOrder::Simultaneous,
                },
                ..IwfaConfig::default()
            },
            overhead: self.overhead,
            parallel: !self.serial,
            ..ExperimentConfig::default()
        }
    }
}

#[derive(Args)]
struct SimArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[command(flatten)]
    run: RunArgs,
    /// Record CSV; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the subgradient trace of trial 0 to this CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Write the calibrated quantization table (needs --signaling-levels).
    #[arg(long)]
    table_out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum LossArg {
    Persistent,
    PerSlot,
}

#[derive(Args)]
struct SlotsArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[arg(long, default_value_t = 100)]
    runs: usize,
    #[arg(long, default_value_t = 20)]
    slots: usize,
    #[arg(long, default_value_t = 0.1)]
    loss_prob: f64,
    #[arg(long, default_value_t = 0.5)]
    giveup_prob: f64,
    #[arg(long, value_enum, default_value = "persistent")]
    loss_mode: LossArg,
    #[arg(long, value_enum, default_value = "equal")]
    power_mode: PowerArg,
    /// Levels of the signaling table.
    #[arg(long, default_value_t = 16)]
    signaling_levels: usize,
    #[arg(long, default_value_t = 0.0)]
    overhead: f64,
    /// Per-slot CSV; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Vary {
    Links,
    Radius,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, value_enum)]
    vary: Vary,
    /// Comma-separated values of the varied parameter.
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<f64>,
    /// Record CSV for all points; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn sink(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn sim(args: SimArgs) -> Result<()> {
    let scenario = args.scenario.resolve()?;
    let cfg = args.run.experiment(scenario.clone());
    let records = run_experiment(&cfg)?;
    write_records(sink(&args.out)?, &records)?;
    let rows = summarize(&records);
    eprint!("{}", format_table(&rows));
    if let Some(path) = &args.run.summary {
        write_summary_csv(File::create(path)?, &rows)?;
    }
    if let Some(path) = &args.trace {
        let real = smallcell_core::channel::generate(&scenario, &mut trial_rng(scenario.rng_seed, 0))?;
        let problem = TsProblem::from_realization(&real, scenario.max_power_mw())?;
        let (outcome, _) = dual::solve(&problem, &cfg.solver)?;
        write_trace(File::create(path)?, &outcome.trace)?;
    }
    if let Some(path) = &args.table_out {
        let Some(levels) = cfg.signaling_levels else { bail!("--table-out needs --signaling-levels") };
        write_table(path, &calibrate_table(&scenario, levels, cfg.calibration_drops)?)?;
    }
    Ok(())
}

fn slots(args: SlotsArgs) -> Result<()> {
    let scenario = args.scenario.resolve()?;
    let cfg = SlotsConfig {
        scenario,
        slot: SlotConfig {
            num_slots: args.slots,
            p_loss: args.loss_prob,
            giveup_probability: args.giveup_prob,
            loss_mode: match args.loss_mode {
                LossArg::Persistent => LossMode::Persistent,
                LossArg::PerSlot => LossMode::PerSlot,
            },
            power_mode: args.power_mode.into(),
            overhead: args.overhead,
            ..SlotConfig::default()
        },
        runs: args.runs,
        table_levels: args.signaling_levels,
        ..SlotsConfig::default()
    };
    let out = run_slots(&cfg)?;
    write_slot_records(sink(&args.out)?, &out.records)?;
    let mean_tp = out.records.iter().map(|r| r.throughput_bps).sum::<f64>() / out.records.len() as f64;
    eprintln!("slots: {}  collisions: {}  mean throughput: {:.4} Mbit/s", out.records.len(), out.total_collisions(), mean_tp / 1e6);
    let unresolved = out.episodes.len() - out.resolved().count();
    match (out.mean_resolution_slots(), out.model_resolution_slots()) {
        (Some(m), Some(e)) => eprintln!(
            "episodes: {}  unresolved: {unresolved}  mean slots to resolve: {m:.4}  model: {e:.4}",
            out.episodes.len()
        ),
        _ => eprintln!("episodes: {}  unresolved: {unresolved}", out.episodes.len()),
    }
    Ok(())
}

fn sweep(args: SweepArgs) -> Result<()> {
    let base = args.scenario.resolve()?;
    let mut all = Vec::new();
    for &v in &args.values {
        let mut scenario = base.clone();
        match args.vary {
            Vary::Links => {
                if v < 1.0 || v.fract() != 0.0 {
                    bail!("link counts must be positive integers, got {v}");
                }
                scenario.num_links = v as usize;
            }
            Vary::Radius => scenario.cell_radius = v,
        }
        scenario.validate()?;
        let records = run_experiment(&args.run.experiment(scenario))?;
        if matches!(args.vary, Vary::Radius) {
            eprintln!("radius = {v} m");
            eprint!("{}", format_table(&summarize(&records)));
        }
        all.extend(records);
    }
    write_records(sink(&args.out)?, &all)?;
    let rows = summarize(&all);
    if matches!(args.vary, Vary::Links) {
        eprint!("{}", format_table(&rows));
    }
    if let Some(path) = &args.run.summary {
        write_summary_csv(File::create(path)?, &rows)?;
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Sim(a) => sim(a),
        Command::Slots(a) => slots(a),
        Command::Sweep(a) => sweep(a),
    }
}
