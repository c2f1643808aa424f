//! Network topologies and channel gains for indoor small-cell scenarios.
//!
//! Links are dropped uniformly in a disk. Every transmitter/receiver pair gets
//! a distance-based pathloss from one of four indoor models, and every
//! (transmitter, receiver, tone) triple gets an independent log-normal
//! shadowing draw. Gains are linear power ratios; the normalized direct gain
//! divides by the noise power over one tone, so `g * p` is an SNR when `p` is
//! in milliwatts.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::{Error, Grid, Result};

/// Distances below this are clamped before evaluating pathloss (meters).
pub const MIN_DISTANCE_M: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ScenarioId {
    UrbanIndoor,
    UrbanOutdoor,
    SuburbanIndoor,
    SuburbanOutdoor,
}

impl ScenarioId {
    pub const ALL: [ScenarioId; 4] = [
        ScenarioId::UrbanIndoor,
        ScenarioId::UrbanOutdoor,
        ScenarioId::SuburbanIndoor,
        ScenarioId::SuburbanOutdoor,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioId::UrbanIndoor => "urban-indoor",
            ScenarioId::UrbanOutdoor => "urban-outdoor",
            ScenarioId::SuburbanIndoor => "suburban-indoor",
            ScenarioId::SuburbanOutdoor => "suburban-outdoor",
        }
    }

    fn has_outdoor_wall(self) -> bool {
        matches!(self, ScenarioId::UrbanOutdoor | ScenarioId::SuburbanOutdoor)
    }

    fn has_inner_walls(self) -> bool {
        matches!(self, ScenarioId::UrbanIndoor | ScenarioId::UrbanOutdoor)
    }
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioId {
    type Err = Error;

    /// Accepts the kebab-case names, the CamelCase variant names and the
    /// table numbers `1`..`4`.
    fn from_str(s: &str) -> Result<Self> {
        let id = match s.trim() {
            "1" | "urban-indoor" | "UrbanIndoor" => ScenarioId::UrbanIndoor,
            "2" | "urban-outdoor" | "UrbanOutdoor" => ScenarioId::UrbanOutdoor,
            "3" | "suburban-indoor" | "SuburbanIndoor" => ScenarioId::SuburbanIndoor,
            "4" | "suburban-outdoor" | "SuburbanOutdoor" => ScenarioId::SuburbanOutdoor,
            _ => return Err(Error::InvalidInput("unknown scenario id")),
        };
        Ok(id)
    }
}

/// Scenario parameters. Power and noise are in dB units here; use
/// [`ScenarioConfig::max_power_mw`] and [`ScenarioConfig::noise_power_mw`]
/// for linear values.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub scenario_id: ScenarioId,
    /// meters
    pub cell_radius: f64,
    pub num_links: usize,
    pub num_tones: usize,
    /// Hz
    pub tone_bandwidth: f64,
    /// dBm/Hz
    pub noise_density: f64,
    /// dBm per link, summed over tones
    pub max_power: f64,
    /// meters
    pub d_indoor: f64,
    pub n_floors: u32,
    pub q_walls: u32,
    /// dB
    pub l_iw: f64,
    /// dB
    pub l_ow: f64,
    /// dB
    pub shadow_sigma: f64,
    pub rng_seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            scenario_id: ScenarioId::UrbanIndoor,
            cell_radius: 25.0,
            num_links: 4,
            num_tones: 10,
            tone_bandwidth: 180e3,
            noise_density: -174.0,
            max_power: 20.0,
            d_indoor: 25.0,
            n_floors: 0,
            q_walls: 1,
            l_iw: 5.0,
            l_ow: 20.0,
            shadow_sigma: 3.0,
            rng_seed: 0,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_links == 0 {
            return Err(Error::InvalidInput("num_links must be at least 1"));
        }
        if self.num_tones == 0 {
            return Err(Error::InvalidInput("num_tones must be at least 1"));
        }
        if !(self.cell_radius > 0.0 && self.cell_radius.is_finite()) {
            return Err(Error::InvalidInput("cell_radius must be positive"));
        }
        if !(self.tone_bandwidth > 0.0 && self.tone_bandwidth.is_finite()) {
            return Err(Error::InvalidInput("tone_bandwidth must be positive"));
        }
        if !(self.shadow_sigma >= 0.0 && self.shadow_sigma.is_finite()) {
            return Err(Error::InvalidInput("shadow_sigma must be non-negative"));
        }
        let finite = [self.noise_density, self.max_power, self.d_indoor, self.l_iw, self.l_ow];
        if finite.iter().any(|v| !v.is_finite()) || self.d_indoor < 0.0 {
            return Err(Error::InvalidInput("dB parameters must be finite, d_indoor >= 0"));
        }
        Ok(())
    }

    pub fn max_power_mw(&self) -> f64 {
        db_to_linear(self.max_power)
    }

    /// Noise power over one tone, `N0 * B`, in milliwatts.
    pub fn noise_power_mw(&self) -> f64 {
        db_to_linear(self.noise_density + 10.0 * libm::log10(self.tone_bandwidth))
    }
}

#[inline]
pub fn db_to_linear(db: f64) -> f64 {
    libm::pow(10.0, db / 10.0)
}

#[inline]
pub fn linear_to_db(x: f64) -> f64 {
    10.0 * libm::log10(x)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn distance(self, other: Point) -> f64 {
        libm::hypot(self.x - other.x, self.y - other.y)
    }

    pub fn norm(self) -> f64 {
        libm::hypot(self.x, self.y)
    }
}

/// Transmitter and receiver positions, one pair per link.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    pub tx: Vec<Point>,
    pub rx: Vec<Point>,
}

fn uniform_in_disk<R: Rng + ?Sized>(radius: f64, rng: &mut R) -> Point {
    let r = radius * libm::sqrt(rng.random::<f64>());
    let phi = 2.0 * core::f64::consts::PI * rng.random::<f64>();
    Point { x: r * libm::cos(phi), y: r * libm::sin(phi) }
}

/// Drops every transmitter and receiver uniformly in the cell disk. Draw
/// order is tx0, rx0, tx1, rx1, ...
pub fn drop_topology<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> Topology {
    let mut tx = Vec::with_capacity(cfg.num_links);
    let mut rx = Vec::with_capacity(cfg.num_links);
    for _ in 0..cfg.num_links {
        tx.push(uniform_in_disk(cfg.cell_radius, rng));
        rx.push(uniform_in_disk(cfg.cell_radius, rng));
    }
    Topology { tx, rx }
}

/// Pathloss in dB at `distance` meters for the configured scenario.
///
/// Distances in `(0, 1)` are evaluated at 1 m.
pub fn pathloss_db(cfg: &ScenarioConfig, distance: f64) -> Result<f64> {
    if !(distance > 0.0) {
        return Err(Error::NonPositiveDistance(distance));
    }
    let d = distance.max(MIN_DISTANCE_M);
    let log_d = libm::log10(d);
    let free_space = 38.46 + 20.0 * log_d;
    let mut pl = if cfg.scenario_id.has_outdoor_wall() {
        free_space.max(15.3 + 37.6 * log_d)
    } else {
        free_space
    };
    pl += 0.7 * cfg.d_indoor + floor_loss_db(cfg.n_floors);
    if cfg.scenario_id.has_inner_walls() {
        pl += f64::from(cfg.q_walls) * cfg.l_iw;
    }
    if cfg.scenario_id.has_outdoor_wall() {
        pl += cfg.l_ow;
    }
    Ok(pl)
}

/// Floor penetration term `18.3 n^((n+2)/(n+1) - 0.46)`.
fn floor_loss_db(n_floors: u32) -> f64 {
    if n_floors == 0 {
        return 0.0;
    }
    let n = f64::from(n_floors);
    18.3 * libm::pow(n, (n + 2.0) / (n + 1.0) - 0.46)
}

/// One draw of every channel gain in the network.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    num_links: usize,
    num_tones: usize,
    /// `cross[(i * I + j) * K + k]` is the gain from transmitter `i` to
    /// receiver `j` on tone `k`.
    cross: Vec<f64>,
    direct_normalized: Grid<f64>,
    noise_power_mw: f64,
    tone_bandwidth: f64,
    pub topology: Topology,
}

impl ChannelRealization {
    /// Builds a realization from an explicit cross-gain tensor laid out as
    /// `[tx][rx][tone]`. Direct gains must be positive; cross gains may be
    /// zero, which hand-built test channels use to decouple links.
    pub fn from_cross_gains(
        num_links: usize,
        num_tones: usize,
        cross: Vec<f64>,
        noise_power_mw: f64,
        tone_bandwidth: f64,
    ) -> Result<Self> {
        if num_links == 0 || num_tones == 0 {
            return Err(Error::InvalidInput("realization needs at least one link and tone"));
        }
        if cross.len() != num_links * num_links * num_tones {
            return Err(Error::InvalidInput("cross-gain tensor has the wrong length"));
        }
        if cross.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
            return Err(Error::InvalidInput("channel gains must be finite and non-negative"));
        }
        if (0..num_links)
            .any(|i| (0..num_tones).any(|k| cross[(i * num_links + i) * num_tones + k] <= 0.0))
        {
            return Err(Error::InvalidInput("direct gains must be positive"));
        }
        if !(noise_power_mw > 0.0 && tone_bandwidth > 0.0) {
            return Err(Error::InvalidInput("noise power and bandwidth must be positive"));
        }
        let direct_normalized = Grid::from_fn(num_links, num_tones, |i, k| {
            cross[(i * num_links + i) * num_tones + k] / noise_power_mw
        });
        Ok(ChannelRealization {
            num_links,
            num_tones,
            cross,
            direct_normalized,
            noise_power_mw,
            tone_bandwidth,
            topology: Topology { tx: Vec::new(), rx: Vec::new() },
        })
    }

    pub fn num_links(&self) -> usize {
        self.num_links
    }

    pub fn num_tones(&self) -> usize {
        self.num_tones
    }

    /// Linear gain from transmitter `tx` to receiver `rx` on `tone`.
    #[inline]
    pub fn cross_gain(&self, tx: usize, rx: usize, tone: usize) -> f64 {
        self.cross[(tx * self.num_links + rx) * self.num_tones + tone]
    }

    /// `G_ii^k / (N0 B)` in 1/mW.
    pub fn direct_gain_normalized(&self) -> &Grid<f64> {
        &self.direct_normalized
    }

    pub fn noise_power_mw(&self) -> f64 {
        self.noise_power_mw
    }

    pub fn tone_bandwidth(&self) -> f64 {
        self.tone_bandwidth
    }
}

/// Realizes pathloss plus shadowing for a fixed topology.
///
/// Shadowing is drawn link by link: when link `n` is reached, the blocks for
/// `(n, j)` and `(j, n)` with `j < n` are drawn, then `(n, n)`, each block
/// holding one value per tone. The first `m` links of a realization therefore
/// do not depend on how many links follow.
pub fn realize_channels<R: Rng + ?Sized>(
    cfg: &ScenarioConfig,
    topology: &Topology,
    rng: &mut R,
) -> Result<ChannelRealization> {
    if topology.tx.len() != cfg.num_links || topology.rx.len() != cfg.num_links {
        return Err(Error::InvalidInput("topology does not match num_links"));
    }
    nested_realization(cfg, Some(topology), rng)
}

/// Drop plus channel draw from one generator. Positions and shadowing are
/// interleaved per link (tx n, rx n, then link n's shadowing blocks) so that
/// a network with `m` links is exactly the first `m` links of a larger one
/// drawn from the same seed.
pub fn generate<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> Result<ChannelRealization> {
    nested_realization(cfg, None, rng)
}

fn nested_realization<R: Rng + ?Sized>(
    cfg: &ScenarioConfig,
    fixed: Option<&Topology>,
    rng: &mut R,
) -> Result<ChannelRealization> {
    cfg.validate()?;
    let links = cfg.num_links;
    let tones = cfg.num_tones;
    let shadow = Normal::new(0.0, cfg.shadow_sigma)
        .map_err(|_| Error::InvalidInput("shadow_sigma must be non-negative"))?;
    let mut topo = Topology { tx: Vec::with_capacity(links), rx: Vec::with_capacity(links) };
    let mut cross = alloc::vec![0.0; links * links * tones];
    let mut fill = |topo: &Topology, i: usize, j: usize, rng: &mut R| -> Result<()> {
        let d = topo.tx[i].distance(topo.rx[j]).max(MIN_DISTANCE_M);
        let pl = pathloss_db(cfg, d)?;
        let block = &mut cross[(i * links + j) * tones..][..tones];
        for g in block {
            let x = if cfg.shadow_sigma > 0.0 { shadow.sample(rng) } else { 0.0 };
            *g = db_to_linear(-(pl + x));
        }
        Ok(())
    };
    for n in 0..links {
        match fixed {
            Some(t) => {
                topo.tx.push(t.tx[n]);
                topo.rx.push(t.rx[n]);
            }
            None => {
                topo.tx.push(uniform_in_disk(cfg.cell_radius, rng));
                topo.rx.push(uniform_in_disk(cfg.cell_radius, rng));
            }
        }
        for j in 0..n {
            fill(&topo, n, j, rng)?;
            fill(&topo, j, n, rng)?;
        }
        fill(&topo, n, n, rng)?;
    }
    let mut real = ChannelRealization::from_cross_gains(
        links,
        tones,
        cross,
        cfg.noise_power_mw(),
        cfg.tone_bandwidth,
    )?;
    real.topology = topo;
    Ok(real)
}

/// Normalized direct gains pooled over `drops` independent realizations;
/// used to calibrate a shared quantization table.
pub fn sample_direct_gains<R: Rng + ?Sized>(
    cfg: &ScenarioConfig,
    drops: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(drops * cfg.num_links * cfg.num_tones);
    for _ in 0..drops {
        let real = generate(cfg, rng)?;
        out.extend_from_slice(real.direct_gain_normalized().as_slice());
    }
    Ok(out)
}
