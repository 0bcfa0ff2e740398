//! Grid, Monte Carlo and grid-search references for the closed forms and the
//! capacity optimum.

use fxduo::capacity::CapacityProblem;
use fxduo::oracle::random_markets;
use fxduo::thresholds::capacity_levels;
use fxduo::{
    grid_equilibrium, mc_expected_profit, optimize_capacity, solve_constrained, solve_unconstrained, Gbm, Market,
    Regime,
};

fn baseline() -> Market {
    Market::new(100.0, 120.0, 0.5, 0.5, 20.0, 30.0, 5.0, 10.0).unwrap()
}

fn baseline_rate() -> Gbm {
    Gbm::new(1.0, 0.05, 0.2, 1.0).unwrap()
}

fn gap(a: &fxduo::Outcome, b: &fxduo::Outcome) -> f64 {
    (a.p_ee - b.p_ee).abs().max((a.p_ei - b.p_ei).abs()).max((a.p_ii - b.p_ii).abs())
}

#[test]
fn grid_error_shrinks_with_the_step() {
    let m = baseline();
    let free = solve_unconstrained(&m, 1.0).unwrap();
    let tight = solve_constrained(&m, 1.0, 30.0).unwrap();
    for step in [1e-2, 1e-3, 1e-4] {
        let g = grid_equilibrium(&m, 1.0, None, step).unwrap();
        assert!(gap(&free, &g) <= 2.0 * step, "step {step}: {}", gap(&free, &g));
        let g = grid_equilibrium(&m, 1.0, Some(30.0), step).unwrap();
        assert!(gap(&tight, &g) <= 2.0 * step, "step {step}: {}", gap(&tight, &g));
        assert_eq!(g.regime, Regime::BC);
    }
}

#[test]
fn grid_agrees_on_random_markets() {
    for m in random_markets(20, 99) {
        let k_t = capacity_levels(&m).2;
        for rate in [0.4, 1.3, 4.0] {
            let g = grid_equilibrium(&m, rate, None, 1e-2).unwrap();
            assert!(gap(&solve_unconstrained(&m, rate).unwrap(), &g) <= 2e-2);
            for share in [0.2, 0.7] {
                let g = grid_equilibrium(&m, rate, Some(share * k_t), 1e-2).unwrap();
                assert!(gap(&solve_constrained(&m, rate, share * k_t).unwrap(), &g) <= 2e-2, "{m:?} {rate} {share}");
            }
        }
    }
}

#[test]
fn quadrature_matches_monte_carlo_on_random_configurations() {
    let rates = [
        Gbm::new(1.0, 0.05, 0.2, 1.0).unwrap(),
        Gbm::new(0.8, 0.0, 0.35, 2.0).unwrap(),
        Gbm::new(1.5, -0.1, 0.15, 0.5).unwrap(),
        Gbm::new(1.0, 0.1, 0.5, 1.0).unwrap(),
    ];
    for (i, m) in random_markets(20, 123).into_iter().enumerate() {
        let g = rates[i % rates.len()];
        let k = (0.1 + 0.9 * i as f64 / 19.0) * capacity_levels(&m).2;
        let quad = CapacityProblem::new(m, g).unwrap().expected_profit(k).unwrap();
        let mc = mc_expected_profit(&m, &g, k, 1_000_000, 42 + i as u64).unwrap();
        assert_eq!(mc.failures, 0);
        // a band-free configuration has a constant profit and zero standard error
        assert!((quad - mc.mean).abs() <= 3.0 * mc.std_error + 1e-9 * quad.abs(), "config {i}: quadrature {quad}, Monte Carlo {} +- {}", mc.mean, mc.std_error);
    }
}

#[test]
fn standard_error_scales_with_sample_size() {
    let (m, g) = (baseline(), baseline_rate());
    let small = mc_expected_profit(&m, &g, 30.0, 100_000, 7).unwrap();
    let large = mc_expected_profit(&m, &g, 30.0, 200_000, 7).unwrap();
    let ratio = large.std_error / small.std_error;
    assert!((ratio - std::f64::consts::FRAC_1_SQRT_2).abs() < 0.02, "{ratio}");
}

#[test]
fn optimum_matches_a_coarse_to_fine_grid_search() {
    let problem = CapacityProblem::new(baseline(), baseline_rate()).unwrap();
    let plan = problem.optimize().unwrap();
    let (mut lo, mut hi) = (0.0, problem.k_max());
    for _ in 0..12 {
        let n = 40;
        let ks: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
        let best = ks
            .iter()
            .copied()
            .max_by(|a, b| problem.expected_profit(*a).unwrap().total_cmp(&problem.expected_profit(*b).unwrap()))
            .unwrap();
        let w = (hi - lo) / n as f64;
        lo = (best - 2.0 * w).max(0.0);
        hi = best + 2.0 * w;
    }
    let grid_k = 0.5 * (lo + hi);
    assert!((grid_k - plan.k_star).abs() < 1e-4, "{grid_k} vs {}", plan.k_star);
}

#[test]
fn optimum_against_the_monte_carlo_objective() {
    // common random numbers: one sample set for every capacity
    let (m, g) = (baseline(), baseline_rate());
    let plan = optimize_capacity(&m, &g).unwrap();
    let objective = |k: f64| mc_expected_profit(&m, &g, k, 100_000, 42).unwrap().mean;
    let ks: Vec<f64> = (0..=40).map(|i| plan.k_star - 2.0 + 0.1 * i as f64).collect();
    let best = ks.iter().copied().max_by(|a, b| objective(*a).total_cmp(&objective(*b))).unwrap();
    assert!((best - plan.k_star).abs() <= 0.5, "{best} vs {}", plan.k_star);
}

#[test]
fn capacity_reacts_to_drift_and_volatility() {
    let m = baseline();
    let k = |mu: f64, sigma: f64| optimize_capacity(&m, &Gbm::new(1.0, mu, sigma, 1.0).unwrap()).unwrap().k_star;
    let by_mu: Vec<f64> = [-0.2, -0.1, 0.0, 0.1, 0.2].iter().map(|&mu| k(mu, 0.2)).collect();
    assert!(by_mu.windows(2).all(|w| w[1] >= w[0] - 1e-9), "{by_mu:?}");
    let by_sigma: Vec<f64> = [0.05, 0.1, 0.2, 0.3, 0.4].iter().map(|&s| k(0.05, s)).collect();
    assert!(by_sigma.windows(2).all(|w| w[1] <= w[0] + 1e-9), "{by_sigma:?}");
}

#[test]
fn cost_thresholds_on_random_draws() {
    let g = baseline_rate();
    let mut ordered = 0;
    for m in random_markets(20, 77) {
        let problem = CapacityProblem::new(m, g).unwrap();
        let costs = problem.cost_thresholds().unwrap();
        let (k_q, k_h, _) = capacity_levels(&m);
        match (costs.u_t1, costs.u_t2) {
            (Some(u1), Some(u2)) => {
                // the smaller capacity level is crossed at the higher cost
                if k_q < k_h {
                    assert!(u1 > u2, "{m:?}");
                    ordered += 1;
                } else {
                    assert!(u2 > u1, "{m:?}");
                }
                for (u, level) in [(u1, k_q), (u2, k_h)] {
                    assert!(problem.k_star_at(u - 1e-3).unwrap() >= level);
                    assert!(problem.k_star_at(u + 1e-3).unwrap() < level);
                }
            }
            (u1, None) => {
                assert!(problem.k_star_at(0.0).unwrap() < k_h);
                assert!(u1.is_some());
            }
            (None, _) => assert!(problem.k_star_at(0.0).unwrap() < k_q),
        }
    }
    assert!(ordered >= 5);
}

#[test]
fn optimal_capacity_falls_with_its_cost() {
    for m in random_markets(5, 8) {
        let problem = CapacityProblem::new(m, baseline_rate()).unwrap();
        let ks: Vec<f64> = (0..20).map(|i| problem.k_star_at(3.0 * i as f64).unwrap()).collect();
        assert!(ks.windows(2).all(|w| w[1] <= w[0] + 1e-9), "{ks:?}");
    }
}
