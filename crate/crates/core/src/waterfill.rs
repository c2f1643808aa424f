//! Single-link water-filling over parallel tones.

use alloc::vec;
use alloc::vec::Vec;

/// Powers and the water level that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct WaterFill {
    pub powers: Vec<f64>,
    /// Common level `nu` with `p_k = max(nu - 1/g_k, 0)`. Zero when no tone
    /// has a positive gain.
    pub level: f64,
    pub active: usize,
}

/// Maximizes `sum_k log(1 + g_k p_k)` subject to `sum_k p_k = budget`.
///
/// Returns `p_k = [nu - 1/g_k]+`. The active set is found exactly by sorting
/// the gains; zero gains never receive power. If every gain is zero the
/// budget is left unused.
pub fn water_fill(gains: &[f64], budget: f64) -> Vec<f64> {
    water_fill_with_level(gains, budget).powers
}

pub fn water_fill_with_level(gains: &[f64], budget: f64) -> WaterFill {
    debug_assert!(budget >= 0.0, "budget must be non-negative");
    let mut order: Vec<usize> = (0..gains.len()).filter(|&k| gains[k] > 0.0).collect();
    let mut powers = vec![0.0; gains.len()];
    if order.is_empty() {
        return WaterFill { powers, level: 0.0, active: 0 };
    }
    order.sort_unstable_by(|&a, &b| gains[b].total_cmp(&gains[a]).then(a.cmp(&b)));

    // Work with `e_k = 1/g_k - 1/g_top` and `w = nu - 1/g_top`, both bounded
    // by the budget on the active set, so weak tones cost no precision.
    let floor = 1.0 / gains[order[0]];
    let excess = |k: usize| 1.0 / gains[k] - floor;
    let mut excess_sum = 0.0;
    let mut width = 0.0;
    let mut active = 0;
    for (n, &k) in order.iter().enumerate() {
        excess_sum += excess(k);
        active = n + 1;
        width = (budget + excess_sum) / active as f64;
        match order.get(n + 1) {
            Some(&next) if width > excess(next) => continue,
            _ => break,
        }
    }
    for &k in &order[..active] {
        powers[k] = (width - excess(k)).max(0.0);
    }
    let level = floor + width;
    WaterFill { powers, level, active }
}

/// `sum_k log(1 + g_k p_k)` in nats.
pub fn sum_log_rate(gains: &[f64], powers: &[f64]) -> f64 {
    gains.iter().zip(powers).map(|(g, p)| libm::log1p(g * p)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn symmetric_split() {
        assert_eq!(water_fill(&[1.0, 1.0], 2.0), vec![1.0, 1.0]);
    }

    #[test]
    fn weak_tone_is_switched_off() {
        // nu = 2 equals 1/0.5, so the second tone sits exactly at the surface.
        let wf = water_fill_with_level(&[1.0, 0.5], 1.0);
        assert_eq!(wf.powers, vec![1.0, 0.0]);
        assert_relative_eq!(wf.level, 2.0);
        assert_eq!(wf.active, 1);
    }

    #[test]
    fn zero_gains_get_nothing() {
        assert_eq!(water_fill(&[0.0, 2.0, 0.0], 3.0), vec![0.0, 3.0, 0.0]);
        assert_eq!(water_fill(&[0.0, 0.0], 3.0), vec![0.0, 0.0]);
        assert!(water_fill(&[], 3.0).is_empty());
    }

    #[test]
    fn beats_equal_power() {
        let gains = [5.0, 1.0, 0.2, 0.05];
        let wf = water_fill(&gains, 4.0);
        let eq = vec![1.0; 4];
        assert!(sum_log_rate(&gains, &wf) >= sum_log_rate(&gains, &eq));
    }

    proptest! {
        #[test]
        fn kkt_conditions_hold(
            gains in prop::collection::vec(1e-3f64..1e3, 1..12),
            budget in 1e-3f64..1e3,
        ) {
            let wf = water_fill_with_level(&gains, budget);
            let total: f64 = wf.powers.iter().sum();
            prop_assert!((total - budget).abs() <= 1e-12 * budget.max(1.0) * gains.len() as f64);
            for (g, p) in gains.iter().zip(&wf.powers) {
                if *p > 0.0 {
                    prop_assert!(((p + 1.0 / g) - wf.level).abs() <= 1e-12 * wf.level);
                } else {
                    prop_assert!(1.0 / g >= wf.level * (1.0 - 1e-12));
                }
            }
        }
    }
}
