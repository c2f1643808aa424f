mod support;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use smallcell_core::channel::generate;
use smallcell_core::dual::{dual_value, recover_primal, subgradient_solve, SolverConfig};
use smallcell_core::oracle::oracle_orthogonal;
use smallcell_core::{ScenarioConfig, TsProblem};
use support::ts_primal;

fn instance(links: usize, tones: usize, seed: u64) -> TsProblem {
    let cfg = ScenarioConfig { num_links: links, num_tones: tones, ..ScenarioConfig::default() };
    let real = generate(&cfg, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
    TsProblem::from_realization(&real, cfg.max_power_mw()).unwrap()
}

fn full_run() -> SolverConfig {
    SolverConfig { tol: 0.0, ..SolverConfig::default() }
}

#[test]
fn primal_oracle_matches_water_filling_for_one_link() {
    let p = instance(1, 4, 3);
    let primal = ts_primal::solve(&p, 50);
    let wf = smallcell_core::water_fill(p.gains().row(0), p.budgets()[0]);
    let direct = smallcell_core::waterfill::sum_log_rate(p.gains().row(0), &wf);
    assert!((primal.value - direct).abs() <= 1e-12 * direct);
}

#[test]
fn best_dual_meets_time_sharing_optimum_on_three_by_four() {
    for seed in 0..20 {
        let p = instance(3, 4, 100 + seed);
        let out = subgradient_solve(&p, &full_run()).unwrap();
        let primal = ts_primal::solve(&p, 3000);
        let upper = primal.value + primal.gap;
        // weak duality against both primal bounds
        assert!(out.best_dual >= primal.value * (1.0 - 1e-12), "seed {seed}");
        let rel = (out.best_dual - primal.value) / primal.value;
        assert!(rel <= 1e-3, "seed {seed}: dual {} primal {} upper {upper}", out.best_dual, primal.value);
    }
}

#[test]
fn any_multiplier_bounds_feasible_allocations() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for seed in 0..30 {
        let p = instance(1 + seed as usize % 3, 1 + seed as usize % 4, seed);
        let (oracle, _) = oracle_orthogonal(&p).unwrap();
        let primal = ts_primal::solve(&p, 200).value;
        for _ in 0..20 {
            let lambda: Vec<f64> = (0..p.num_links()).map(|_| 10f64.powf(rng.random_range(-4.0..2.0))).collect();
            let d = dual_value(&p, &lambda).value;
            assert!(d >= oracle.objective_nats(&p) * (1.0 - 1e-12));
            assert!(d >= primal * (1.0 - 1e-12));
        }
    }
}

/// Relative spread between the two largest scores on the most contested
/// tone.
fn closest_race(p: &TsProblem, lambda: &[f64]) -> f64 {
    let xi = dual_value(p, lambda).xi;
    (0..p.num_tones())
        .map(|k| {
            let mut col: Vec<f64> = (0..p.num_links()).map(|i| xi[(i, k)]).collect();
            col.sort_by(|a, b| b.total_cmp(a));
            if col.len() < 2 || col[0] <= 0.0 { f64::INFINITY } else { (col[0] - col[1]) / col[0] }
        })
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn recovered_allocation_is_near_the_orthogonal_optimum() {
    let mut contested = 0;
    for seed in 0..300 {
        let p = instance(2, 3, 500 + seed);
        let out = subgradient_solve(&p, &full_run()).unwrap();
        let recovered = recover_primal(&p, &out.best_lambda);
        assert!(recovered.is_feasible(&p, 1e-9));
        assert!(recovered.objective_nats(&p) <= out.best_dual * (1.0 + 1e-12));
        let (_, oracle) = oracle_orthogonal(&p).unwrap();
        let ratio = recovered.objective / oracle;
        // a near tie in the scores means the optimum splits that tone in
        // time, and handing it whole to either side is a coin flip
        if closest_race(&p, &out.best_lambda) < 1e-4 {
            contested += 1;
            assert!(ratio >= 0.95, "seed {seed}: {ratio}");
        } else {
            assert!(ratio >= 0.99, "seed {seed}: {ratio}");
        }
    }
    assert!(contested < 300);
}
