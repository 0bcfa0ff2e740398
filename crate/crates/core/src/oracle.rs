//! Brute-force references: equilibria by alternating exact best responses on
//! a price grid, Monte Carlo expectations over the exchange-rate law, and a
//! seeded generator of admissible markets.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::demand::MarketParams;
use crate::equilibrium::{solve_constrained, EquilibriumOutcome};
use crate::error::{domain, Error, Result};
use crate::exchange_rate::GbmModel;
use crate::scalar::Real;
use crate::thresholds::Regime;

/// Upper bound on the number of grid prices per player.
pub const MAX_GRID_POINTS: usize = 50_000_000;
/// Best-response rounds before giving up without a repeated state.
pub const MAX_ROUNDS: usize = 100_000;

struct Grid<'a, T> {
    p: &'a MarketParams<T>,
    rate: T,
    capacity: Option<T>,
    prices: Vec<T>,
    home_profit: Vec<T>,
    home_qty: Vec<T>,
}

impl<T: Real> Grid<'_, T> {
    fn first_argmax(values: impl Iterator<Item = T>) -> usize {
        let mut best = 0;
        let mut best_v = T::neg_infinity();
        for (k, v) in values.enumerate() {
            if v > best_v {
                best = k;
                best_v = v;
            }
        }
        best
    }

    fn entrant(&self, p_ii: T) -> (usize, usize) {
        let p = self.p;
        let foreign_qty: Vec<T> = self.prices.iter().map(|&x| p.q_ei(x, p_ii)).collect();
        let cost = p.delivered_cost();
        let foreign: Vec<T> = self
            .prices
            .iter()
            .zip(&foreign_qty)
            .map(|(&x, &q)| (self.rate * x - cost) * q)
            .collect();
        let Some(k) = self.capacity else {
            return (
                Self::first_argmax(self.home_profit.iter().copied()),
                Self::first_argmax(foreign.iter().copied()),
            );
        };
        // best foreign price at or above each index, first maximizer on ties
        let n = self.prices.len();
        let mut best_from = vec![(T::neg_infinity(), n); n + 1];
        for i in (0..n).rev() {
            best_from[i] = if foreign[i] >= best_from[i + 1].0 { (foreign[i], i) } else { best_from[i + 1] };
        }
        let slack = T::lit(1e-12) * (T::one() + k);
        let mut best = (T::neg_infinity(), 0, 0);
        let mut t = 0;
        for a in (0..n).rev() {
            let room = k - self.home_qty[a];
            if room < -slack {
                break;
            }
            while t < n && foreign_qty[t] > room + slack {
                t += 1;
            }
            if t == n {
                break;
            }
            let (fv, fi) = best_from[t];
            let v = self.home_profit[a] + fv;
            if v >= best.0 {
                best = (v, a, fi);
            }
        }
        (best.1, best.2)
    }

    fn incumbent(&self, p_ei: T) -> usize {
        let p = self.p;
        Self::first_argmax(self.prices.iter().map(|&x| (x - p.c_i) * p.q_ii(x, p_ei)))
    }
}

/// Equilibrium on the price grid `{0, h, 2h, ..., 2 max(alpha_e, alpha_i)}`.
///
/// The entrant maximizes its profit exactly over the grid (over the feasible
/// price pairs when `capacity` is given), the incumbent then best-responds,
/// and the two alternate until the price triple repeats. Ties go to the
/// lowest price, so a player with no profitable sale posts its choke price.
/// The grid does not estimate the capacity multiplier; `lambda` and
/// `kkt_multiplier` are NaN for constrained solves and zero otherwise.
pub fn grid_equilibrium<T: Real>(
    p: &MarketParams<T>,
    rate: T,
    capacity: Option<T>,
    grid_step: T,
) -> Result<EquilibriumOutcome<T>> {
    p.validate()?;
    if !(rate > T::zero()) || !rate.is_finite() {
        return Err(domain("rate", "positive", rate.to_f64_lossy()));
    }
    if let Some(k) = capacity {
        if !(k >= T::zero()) || !k.is_finite() {
            return Err(domain("capacity", "non-negative", k.to_f64_lossy()));
        }
    }
    if !(grid_step > T::zero()) || !grid_step.is_finite() {
        return Err(domain("grid_step", "positive", grid_step.to_f64_lossy()));
    }
    let top = T::two() * p.alpha_e.max(p.alpha_i);
    let steps = (top / grid_step).ceil().to_f64_lossy();
    if steps + 1.0 > MAX_GRID_POINTS as f64 {
        return Err(domain("grid_step", "coarse enough for the price grid", grid_step.to_f64_lossy()));
    }
    let prices: Vec<T> = (0..=steps as usize).map(|k| T::from_usize(k).unwrap() * grid_step).collect();
    let home_qty: Vec<T> = prices.iter().map(|&x| p.q_ee(x)).collect();
    let home_profit = prices.iter().zip(&home_qty).map(|(&x, &q)| (x - p.c_e) * q).collect();
    let grid = Grid {
        p,
        rate,
        capacity,
        prices,
        home_profit,
        home_qty,
    };

    let start = (p.incumbent_base() + p.c_i) / T::two();
    let mut i = (start / grid_step).round().to_usize().unwrap_or(0).min(grid.prices.len() - 1);
    let mut seen: HashMap<(usize, usize, usize), usize> = HashMap::new();
    let mut history: Vec<(usize, usize, usize)> = Vec::new();
    for round in 0..MAX_ROUNDS {
        let (h, f) = grid.entrant(grid.prices[i]);
        i = grid.incumbent(grid.prices[f]);
        let state = (h, f, i);
        if let Some(&first) = seen.get(&state) {
            if first + 1 == round {
                return Ok(grid_outcome(&grid, state, grid_step));
            }
            let states = history[first..]
                .iter()
                .map(|&(a, b, c)| [grid.prices[a], grid.prices[b], grid.prices[c]].map(|x| x.to_f64_lossy()))
                .collect();
            return Err(Error::Cycle { states });
        }
        seen.insert(state, round);
        history.push(state);
    }
    Err(Error::Convergence {
        iterations: MAX_ROUNDS,
        residual: f64::NAN,
    })
}

fn grid_outcome<T: Real>(grid: &Grid<'_, T>, (h, f, i): (usize, usize, usize), step: T) -> EquilibriumOutcome<T> {
    let p = grid.p;
    let (p_ee, p_ei, p_ii) = (grid.prices[h], grid.prices[f], grid.prices[i]);
    let q_ee = p.q_ee(p_ee);
    let q_ei = p.q_ei(p_ei, p_ii);
    let zero = T::lit(2.0) * step;
    let binding = grid.capacity.is_some_and(|k| k - (q_ee + q_ei) <= T::lit(4.0) * step);
    let regime = match (binding, q_ee > zero, q_ei > zero) {
        (false, _, false) => Regime::EU,
        (false, _, true) => Regime::BU,
        (true, true, false) => Regime::EC,
        (true, false, true) => Regime::IC,
        _ => Regime::BC,
    };
    let multiplier = if binding { T::nan() } else { T::zero() };
    EquilibriumOutcome {
        p_ee,
        p_ei,
        p_ii,
        q_ee,
        q_ei,
        q_ii: p.q_ii(p_ii, p_ei),
        profit_e: p.entrant_profit(grid.rate, p_ee, p_ei, p_ii),
        profit_i: p.incumbent_profit(p_ii, p_ei),
        lambda: multiplier,
        kkt_multiplier: multiplier,
        regime,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate<T> {
    pub mean: T,
    pub std_error: T,
    /// Samples that entered the estimate.
    pub samples: usize,
    /// Samples whose equilibrium solve failed; excluded from the estimate.
    pub failures: usize,
}

/// Monte Carlo estimate of `-u K + E[profit_e(I, K)]` from `n` draws of
/// [`GbmModel::sample`].
pub fn mc_expected_profit<T: Real>(
    p: &MarketParams<T>,
    model: &GbmModel<T>,
    capacity: T,
    n: usize,
    seed: u64,
) -> Result<McEstimate<T>> {
    if n < 1000 {
        return Err(domain("n", "at least 1000", n as f64));
    }
    p.validate()?;
    let cost = p.u * capacity;
    let rates = model.sample(n, seed)?;
    let values: Vec<Option<T>> = rates
        .par_iter()
        .map(|&rate| solve_constrained(p, rate, capacity).ok().map(|eq| eq.profit_e - cost))
        .collect();
    let ok: Vec<T> = values.iter().flatten().copied().collect();
    let failures = n - ok.len();
    if ok.is_empty() {
        return Err(Error::Empty("every Monte Carlo sample failed to solve"));
    }
    // centred accumulation so identical draws reproduce their value exactly
    let pivot = ok[0];
    let m = T::from_usize(ok.len()).unwrap();
    let shift = ok.iter().fold(T::zero(), |acc, &x| acc + (x - pivot)) / m;
    let mean = pivot + shift;
    let ss = ok.iter().fold(T::zero(), |acc, &x| {
        let d = x - pivot - shift;
        acc + d * d
    });
    let std_error = if ok.len() > 1 {
        (ss / (m - T::one())).sqrt() / m.sqrt()
    } else {
        T::zero()
    };
    Ok(McEstimate {
        mean,
        std_error,
        samples: ok.len(),
        failures,
    })
}

/// Admissible market with `theta` in `[0, 0.9]`, `phi` in `[0.1, 0.9]`, and
/// costs strictly inside their viability bounds.
pub fn random_market<R: Rng + ?Sized>(rng: &mut R) -> MarketParams<f64> {
    let alpha_e = rng.random_range(50.0..150.0);
    let alpha_i = rng.random_range(50.0..150.0);
    let phi = rng.random_range(0.1..=0.9);
    let theta = rng.random_range(0.0..=0.9);
    let c_e = rng.random_range(0.0..0.8) * alpha_e;
    let c_i = rng.random_range(0.0..0.8) * phi * alpha_i;
    let s = rng.random_range(0.0..10.0);
    let u = rng.random_range(0.0..0.5) * (alpha_e - c_e);
    MarketParams::new(alpha_e, alpha_i, phi, theta, c_e, c_i, s, u).expect("draw inside the admissible set")
}

/// `n` markets from [`random_market`], reproducible from `seed`.
pub fn random_markets(n: usize, seed: u64) -> Vec<MarketParams<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| random_market(&mut rng)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> MarketParams<f64> {
        MarketParams::new(100.0, 120.0, 0.5, 0.5, 20.0, 30.0, 5.0, 10.0).unwrap()
    }

    #[test]
    fn baseline_unconstrained_grid() {
        let eq = grid_equilibrium(&base(), 1.0, None, 1e-3).unwrap();
        assert!((eq.p_ee - 60.0).abs() <= 2e-3);
        assert!((eq.p_ei - 172.0 / 3.0).abs() <= 2e-3);
        assert!((eq.p_ii - 178.0 / 3.0).abs() <= 2e-3);
        assert_eq!(eq.regime, Regime::BU);
    }

    #[test]
    fn no_interaction_settles_at_once() {
        let p = MarketParams { theta: 0.0, ..base() };
        let eq = grid_equilibrium(&p, 1.0, None, 1e-2).unwrap();
        assert!((eq.p_ii - 45.0).abs() <= 1e-2);
    }

    #[test]
    fn foreign_only_at_strong_rate() {
        let eq = grid_equilibrium(&base(), 4.0, Some(30.0), 1e-2).unwrap();
        assert_eq!(eq.q_ee, 0.0);
        assert!((eq.q_ei - 30.0).abs() < 0.05);
        assert_eq!(eq.regime, Regime::IC);
    }

    #[test]
    fn entrant_out_posts_choke_price() {
        let p = base();
        let eq = grid_equilibrium(&p, 0.2, None, 1e-2).unwrap();
        assert_eq!(eq.q_ei, 0.0);
        assert_eq!(eq.regime, Regime::EU);
        assert!((eq.p_ei - (p.foreign_base() + p.theta * eq.p_ii)).abs() <= 1e-2 + 1e-9);
    }

    #[test]
    fn rejects_bad_step() {
        assert!(grid_equilibrium(&base(), 1.0, None, 0.0).is_err());
        assert!(grid_equilibrium(&base(), 1.0, None, 1e-9).is_err());
    }

    #[test]
    fn deterministic_monte_carlo_is_exact() {
        let flat = GbmModel::new(1.0, 0.0, 0.0, 1.0).unwrap();
        let est = mc_expected_profit(&base(), &flat, 30.0, 1000, 1).unwrap();
        let eq = solve_constrained(&base(), 1.0, 30.0).unwrap();
        assert_eq!(est.mean, eq.profit_e - 300.0);
        assert_eq!(est.std_error, 0.0);
        assert_eq!(est.failures, 0);
    }

    #[test]
    fn monte_carlo_is_seeded() {
        let g = GbmModel::new(1.0, 0.05, 0.2, 1.0).unwrap();
        let a = mc_expected_profit(&base(), &g, 30.0, 5000, 9).unwrap();
        let b = mc_expected_profit(&base(), &g, 30.0, 5000, 9).unwrap();
        assert_eq!(a, b);
        assert!(mc_expected_profit(&base(), &g, 30.0, 999, 9).is_err());
    }

    #[test]
    fn random_markets_are_valid_and_seeded() {
        let a = random_markets(100, 3);
        assert_eq!(a, random_markets(100, 3));
        for m in &a {
            m.validate().unwrap();
            assert!((0.0..=0.9).contains(&m.theta));
            assert!((0.1..=0.9).contains(&m.phi));
        }
    }
}
