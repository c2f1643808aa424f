//! Channel-gain exchange through two broadcast power levels.
//!
//! In its sub-slot a link sends one signal at full power `P0` and a second at
//! `P0 * f(g)` on every tone, where `f` is a public monotone table. Any
//! listener divides the two received powers; the unknown cross gain cancels
//! and the ratio indexes back into the table.

use alloc::vec::Vec;

use rand::Rng;

use crate::{ChannelRealization, Error, Grid, Result};

/// Largest accepted `s2 / s1` is `1 + RATIO_TOLERANCE`.
pub const RATIO_TOLERANCE: f64 = 0.05;

/// Public quantization of channel gains and the monotone map `f` onto
/// `(0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizationTable {
    levels: Vec<f64>,
    f_values: Vec<f64>,
}

impl QuantizationTable {
    pub fn new(levels: Vec<f64>, f_values: Vec<f64>) -> Result<Self> {
        if levels.is_empty() || levels.len() != f_values.len() {
            return Err(Error::InvalidInput("table needs matching, non-empty columns"));
        }
        if levels.iter().any(|g| !g.is_finite()) {
            return Err(Error::InvalidInput("gain levels must be finite"));
        }
        for (j, w) in levels.windows(2).enumerate() {
            if w[1] <= w[0] {
                return Err(Error::DuplicateLevel { level: j + 1 });
            }
        }
        if f_values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("f values must be strictly increasing"));
        }
        if f_values.iter().any(|f| !(*f > 0.0 && *f <= 1.0)) {
            return Err(Error::InvalidInput("f values must lie in (0, 1]"));
        }
        Ok(QuantizationTable { levels, f_values })
    }

    /// The toy three-level table: LOW, MIDDLE, HIGH map to 1/3, 2/3, 1.
    pub fn three_level(low: f64, middle: f64, high: f64) -> Result<Self> {
        QuantizationTable::new(alloc::vec![low, middle, high], alloc::vec![
            1.0 / 3.0,
            2.0 / 3.0,
            1.0
        ])
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn f_values(&self) -> &[f64] {
        &self.f_values
    }

    /// Index of the smallest level at or above `g`, clamped to the ends.
    pub fn quantize_index(&self, g: f64) -> usize {
        self.levels.partition_point(|&level| level < g).min(self.levels.len() - 1)
    }

    pub fn quantize(&self, g: f64) -> f64 {
        self.levels[self.quantize_index(g)]
    }

    /// Index whose `f` value is nearest to `ratio`; ties go to the lower level.
    fn nearest_f_index(&self, ratio: f64) -> usize {
        let upper = self.f_values.partition_point(|&f| f < ratio);
        if upper == 0 {
            return 0;
        }
        if upper == self.f_values.len() {
            return upper - 1;
        }
        let below = ratio - self.f_values[upper - 1];
        let above = self.f_values[upper] - ratio;
        if above < below {
            upper
        } else {
            upper - 1
        }
    }
}

/// Empirical-CDF table: level `j` is the `j / m` sample quantile and
/// `f(level_j) = j / m`, for `j = 1..=m`.
pub fn build_cdf_table(samples: &[f64], m: usize) -> Result<QuantizationTable> {
    if m < 2 {
        return Err(Error::InvalidInput("table needs at least two levels"));
    }
    if samples.is_empty() {
        return Err(Error::InvalidInput("no gain samples"));
    }
    if samples.iter().any(|g| !g.is_finite()) {
        return Err(Error::InvalidInput("gain samples must be finite"));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let n = sorted.len();
    let levels: Vec<f64> = (1..=m)
        .map(|j| {
            // ceil(j n / m) as a 1-based order statistic
            let rank = (j * n).div_ceil(m);
            sorted[rank.max(1) - 1]
        })
        .collect();
    let f_values = (1..=m).map(|j| j as f64 / m as f64).collect();
    QuantizationTable::new(levels, f_values)
}

/// Transmit powers `(P0, P0 * f(quantize(g)))` in mW.
pub fn encode(g: f64, table: &QuantizationTable, p0: f64) -> (f64, f64) {
    let f = table.f_values[table.quantize_index(g)];
    (p0, p0 * f)
}

/// Two received powers on one tone from one sender.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalPair {
    /// mW
    pub s1: f64,
    /// mW
    pub s2: f64,
    pub tone: usize,
    pub sender: usize,
}

/// Gain level whose `f` value is nearest to `s2 / s1`.
pub fn decode(sig: &SignalPair, table: &QuantizationTable) -> Result<f64> {
    decode_index(sig, table).map(|j| table.levels[j])
}

pub fn decode_index(sig: &SignalPair, table: &QuantizationTable) -> Result<usize> {
    let ratio = sig.s2 / sig.s1;
    if !(sig.s1 > 0.0 && ratio.is_finite() && ratio > 0.0 && ratio <= 1.0 + RATIO_TOLERANCE) {
        return Err(Error::MalformedSignal { ratio });
    }
    Ok(table.nearest_f_index(ratio))
}

/// Which `(sender, receiver, tone)` signals were lost in a slot.
#[derive(Debug, Clone, PartialEq)]
pub struct Erasures {
    links: usize,
    tones: usize,
    lost: Vec<bool>,
}

impl Erasures {
    pub fn none(links: usize, tones: usize) -> Self {
        Erasures { links, tones, lost: alloc::vec![false; links * links * tones] }
    }

    /// Independent Bernoulli(`p_loss`) erasure of every triple with
    /// sender != receiver. Draw order is sender, receiver, tone.
    pub fn draw<R: Rng + ?Sized>(links: usize, tones: usize, p_loss: f64, rng: &mut R) -> Self {
        let mut e = Erasures::none(links, tones);
        for i in 0..links {
            for j in (0..links).filter(|&j| j != i) {
                for k in 0..tones {
                    e.lost[(i * links + j) * tones + k] = rng.random::<f64>() < p_loss;
                }
            }
        }
        e
    }

    #[inline]
    pub fn is_lost(&self, sender: usize, receiver: usize, tone: usize) -> bool {
        self.lost[(sender * self.links + receiver) * self.tones + tone]
    }
}

/// One receiver's decoded picture of every link's gains.
#[derive(Debug, Clone, PartialEq)]
pub struct GainView {
    pub receiver: usize,
    /// `None` marks a lost signal.
    pub gains: Grid<Option<f64>>,
}

impl GainView {
    /// Decoded gains with lost entries read as zero, i.e. a useless tone.
    pub fn to_gains(&self) -> Grid<f64> {
        Grid::from_fn(self.gains.rows(), self.gains.cols(), |i, k| {
            self.gains[(i, k)].unwrap_or(0.0)
        })
    }

    pub fn missing(&self) -> usize {
        self.gains.as_slice().iter().filter(|g| g.is_none()).count()
    }
}

/// Simulates one signaling slot: link `i` broadcasts in sub-slot `i`, and
/// every other link decodes from its own received powers. A receiver knows
/// its own row and fills it with its quantized gains.
pub fn run_signaling_slot<R: Rng + ?Sized>(
    real: &ChannelRealization,
    table: &QuantizationTable,
    p0: f64,
    p_loss: f64,
    rng: &mut R,
) -> Vec<GainView> {
    let erasures = Erasures::draw(real.num_links(), real.num_tones(), p_loss, rng);
    run_signaling_slot_with(real, table, p0, &erasures)
}

pub fn run_signaling_slot_with(
    real: &ChannelRealization,
    table: &QuantizationTable,
    p0: f64,
    erasures: &Erasures,
) -> Vec<GainView> {
    let links = real.num_links();
    let tones = real.num_tones();
    let direct = real.direct_gain_normalized();
    let mut views: Vec<GainView> = (0..links)
        .map(|j| GainView { receiver: j, gains: Grid::filled(links, tones, None) })
        .collect();
    for sender in 0..links {
        for k in 0..tones {
            let (tx1, tx2) = encode(direct[(sender, k)], table, p0);
            for (receiver, view) in views.iter_mut().enumerate() {
                let decoded = if receiver == sender {
                    Some(table.quantize(direct[(sender, k)]))
                } else if erasures.is_lost(sender, receiver, k) {
                    None
                } else {
                    let g = real.cross_gain(sender, receiver, k);
                    let sig = SignalPair { s1: g * tx1, s2: g * tx2, tone: k, sender };
                    decode(&sig, table).ok()
                };
                view.gains[(sender, k)] = decoded;
            }
        }
    }
    views
}
