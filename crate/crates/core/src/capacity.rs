//! Ex-ante capacity choice: the expected equilibrium profit over the
//! exchange-rate law net of capacity cost, its derivative in capacity, the
//! optimal capacity, and the capacity-cost levels at which the optimum moves
//! between capacity brackets.
//!
//! Expectations are taken in `eps`-space, `I = rate_at(eps)`, on
//! `[-EPS_CUT, EPS_CUT]`. The interval is split at the image of every rate
//! threshold active for the capacity, so each band has a single regime and a
//! smooth closed-form integrand. Mass beyond the cut is added analytically
//! for integrands that are polynomial in `I` (and `1/I`).

use serde::{Deserialize, Serialize};

use crate::demand::MarketParams;
use crate::equilibrium::{regime_marginal_value, regime_profit};
use crate::error::{domain, Result};
use crate::exchange_rate::{standard_normal_pdf, standard_normal_sf, GbmModel};
use crate::quadrature::{integrate, Tolerance};
use crate::scalar::Real;
use crate::thresholds::{capacity_levels, classify_exact, compute_thresholds, Regime};

/// Truncation point of the standard-normal integration domain.
pub const EPS_CUT: f64 = 8.0;
/// Equal cells scanned per capacity bracket before the golden-section search.
pub const SCAN_CELLS: usize = 32;

/// Regimes that can occur, across all rates, at a given capacity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ObjectiveForm {
    /// `K < min(K_Q, K_h)`: EC, BC, IC.
    HomeSplitForeign,
    /// `K_h <= K < K_Q`: EC, BC.
    HomeSplit,
    /// `K_Q <= K < K_h`: EU, BU, BC, IC.
    EntrySplitForeign,
    /// `max(K_Q, K_h) <= K < K_t`: EU, BU, BC.
    EntrySplit,
    /// `K >= K_t`: EU, BU.
    Entry,
}

impl ObjectiveForm {
    pub fn of<T: Real>(p: &MarketParams<T>, capacity: T) -> Self {
        let (k_q, k_h, k_t) = capacity_levels(p);
        if capacity >= k_t {
            ObjectiveForm::Entry
        } else if capacity < k_q {
            if capacity < k_h {
                ObjectiveForm::HomeSplitForeign
            } else {
                ObjectiveForm::HomeSplit
            }
        } else if capacity < k_h {
            ObjectiveForm::EntrySplitForeign
        } else {
            ObjectiveForm::EntrySplit
        }
    }

    pub fn regimes(self) -> &'static [Regime] {
        match self {
            ObjectiveForm::HomeSplitForeign => &[Regime::EC, Regime::BC, Regime::IC],
            ObjectiveForm::HomeSplit => &[Regime::EC, Regime::BC],
            ObjectiveForm::EntrySplitForeign => &[Regime::EU, Regime::BU, Regime::BC, Regime::IC],
            ObjectiveForm::EntrySplit => &[Regime::EU, Regime::BU, Regime::BC],
            ObjectiveForm::Entry => &[Regime::EU, Regime::BU],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacityPlan<T> {
    pub k_star: T,
    pub expected_profit: T,
    /// Derivative of the expected profit at `k_star` (at `0+` when
    /// `k_star = 0`).
    pub foc_residual: T,
    /// Capacity bracket containing `k_star`; the last bracket is `[K_t, K_max]`.
    pub bracket: (T, T),
    /// `k_star` sits on a bracket endpoint rather than at an interior root of
    /// the first-order condition.
    pub at_boundary: bool,
    pub objective_form: ObjectiveForm,
}

/// Capacity-cost levels where the optimal capacity crosses `K_Q` (`u_t1`) and
/// `K_h` (`u_t2`). `None` when the optimum never reaches that level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostThresholds<T> {
    pub u_t1: Option<T>,
    pub u_t2: Option<T>,
}

impl<T: PartialOrd + Copy> CostThresholds<T> {
    pub fn ordered(&self) -> bool {
        matches!((self.u_t1, self.u_t2), (Some(a), Some(b)) if a > b)
    }
}

/// The entrant's capacity problem: market, exchange-rate law, and a
/// multiplier applied to the expected operating profit (1 = undiscounted).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacityProblem<T> {
    pub market: MarketParams<T>,
    pub rate: GbmModel<T>,
    pub discount: T,
    pub quadrature: Tolerance,
}

impl<T: Real> CapacityProblem<T> {
    pub fn new(market: MarketParams<T>, rate: GbmModel<T>) -> Result<Self> {
        market.validate()?;
        rate.validate()?;
        Ok(Self {
            market,
            rate,
            discount: T::one(),
            quadrature: Tolerance::default(),
        })
    }

    pub fn with_discount(mut self, discount: T) -> Result<Self> {
        if !(discount > T::zero()) || !discount.is_finite() {
            return Err(domain("discount", "positive and finite", discount.to_f64_lossy()));
        }
        self.discount = discount;
        Ok(self)
    }

    /// Largest capacity searched: `K_t + K_Q`.
    pub fn k_max(&self) -> T {
        let (k_q, _, k_t) = capacity_levels(&self.market);
        k_t + k_q
    }

    fn check_capacity(&self, capacity: T) -> Result<()> {
        if capacity >= T::zero() && capacity.is_finite() {
            Ok(())
        } else {
            Err(domain("capacity", "non-negative", capacity.to_f64_lossy()))
        }
    }

    /// Band edges in `eps`, including the cuts.
    fn edges(&self, capacity: T) -> Vec<T> {
        let cut = T::lit(EPS_CUT);
        let t = compute_thresholds(&self.market, capacity);
        let mut edges: Vec<T> = [t.i_z, t.i_t, t.i_f, t.i_h]
            .into_iter()
            .flatten()
            .map(|rate| self.rate.epsilon_unchecked(rate))
            .filter(|e| *e > -cut && *e < cut)
            .collect();
        edges.push(-cut);
        edges.push(cut);
        edges.sort_by(|a, b| a.partial_cmp(b).unwrap());
        edges.dedup();
        edges
    }

    fn regime_at_eps(&self, eps: T, capacity: T) -> Regime {
        classify_exact(&self.market, self.rate.rate_unchecked(eps), capacity)
    }

    /// `E[g(I) ; band]` summed over regime bands plus the tails.
    fn expectation(
        &self,
        capacity: T,
        value: impl Fn(T, Regime) -> T,
        tail: impl Fn(Regime, bool) -> Option<T>,
    ) -> Result<T> {
        let cut = T::lit(EPS_CUT);
        let edges = self.edges(capacity);
        let mut total = T::zero();
        for w in edges.windows(2) {
            let regime = self.regime_at_eps((w[0] + w[1]) / T::two(), capacity);
            let integrand = |eps: T| value(self.rate.rate_unchecked(eps), regime) * standard_normal_pdf(eps);
            total = total + integrate(integrand, w[0], w[1], &self.quadrature)?;
        }
        let mass = standard_normal_sf(cut);
        let low = self.regime_at_eps(-cut - T::one(), capacity);
        total = total + tail(low, false).unwrap_or_else(|| value(self.rate.rate_unchecked(-cut), low) * mass);
        let high = self.regime_at_eps(cut + T::one(), capacity);
        total = total + tail(high, true).unwrap_or_else(|| value(self.rate.rate_unchecked(cut), high) * mass);
        Ok(total)
    }

    /// `E[I^k ; tail]` for `k` in {-1, 0, 1}.
    fn tail_moment(&self, power: i32, upper: bool) -> T {
        let cut = T::lit(EPS_CUT);
        if upper {
            self.rate.upper_partial_moment(power, cut)
        } else {
            self.rate.lower_partial_moment(power, -cut)
        }
    }

    /// `-u K + discount * E[profit_e(I, K)]`.
    pub fn expected_profit(&self, capacity: T) -> Result<T> {
        self.check_capacity(capacity)?;
        if capacity == T::zero() {
            return Ok(T::zero());
        }
        let p = &self.market;
        let cost = p.u * capacity;
        if self.rate.is_deterministic() {
            let rate = self.rate.mean();
            let regime = classify_exact(p, rate, capacity);
            return Ok(self.discount * regime_profit(p, rate, capacity, regime) - cost);
        }
        let k = capacity;
        let r = p.reduced_det();
        let j = p.joint_det();
        let m = p.entry_mass();
        let c = p.delivered_cost();
        let hm = p.home_margin();
        let value = |rate: T, regime: Regime| regime_profit(p, rate, k, regime);
        let tail = |regime: Regime, upper: bool| -> Option<T> {
            let q = self.tail_moment(0, upper);
            match regime {
                Regime::EU | Regime::EC => Some(value(T::one(), regime) * q),
                Regime::IC => Some((self.tail_moment(1, upper) * (m - T::two() * k) - c * r * q) * k / r),
                Regime::BU => {
                    let foreign = m * m * self.tail_moment(1, upper) - T::two() * m * c * r * q
                        + c * c * r * r * self.tail_moment(-1, upper);
                    Some(hm * hm / T::four() * q + foreign / (j * j))
                }
                Regime::BC => None,
            }
        };
        Ok(self.discount * self.expectation(k, value, tail)? - cost)
    }

    /// `d/dK` of [`CapacityProblem::expected_profit`]: `-u` plus the
    /// expectation of the equilibrium marginal value of capacity. Band limits
    /// move with `K`, but the profit is continuous across them, so no boundary
    /// terms arise.
    pub fn foc_residual(&self, capacity: T) -> Result<T> {
        if !(capacity > T::zero()) || !capacity.is_finite() {
            return Err(domain("capacity", "positive", capacity.to_f64_lossy()));
        }
        let p = &self.market;
        if self.rate.is_deterministic() {
            let rate = self.rate.mean();
            let regime = classify_exact(p, rate, capacity);
            return Ok(self.discount * regime_marginal_value(p, rate, capacity, regime) - p.u);
        }
        let k = capacity;
        let r = p.reduced_det();
        let m = p.entry_mass();
        let c = p.delivered_cost();
        let value = |rate: T, regime: Regime| regime_marginal_value(p, rate, k, regime);
        let tail = |regime: Regime, upper: bool| -> Option<T> {
            let q = self.tail_moment(0, upper);
            match regime {
                Regime::EU | Regime::BU => Some(T::zero()),
                Regime::EC => Some((p.home_margin() - T::two() * k) * q),
                Regime::IC => Some(self.tail_moment(1, upper) * (m - T::four() * k) / r - c * q),
                Regime::BC => None,
            }
        };
        Ok(self.discount * self.expectation(k, value, tail)? - p.u)
    }

    /// Sorted bracket endpoints `0 < ... < K_max` from `{K_Q, K_h, K_t}`.
    pub fn bracket_edges(&self) -> Vec<T> {
        let (k_q, k_h, k_t) = capacity_levels(&self.market);
        let k_max = self.k_max();
        let mut edges = vec![T::zero(), k_max];
        for k in [k_q, k_h, k_t] {
            if k > T::zero() && k < k_max {
                edges.push(k);
            }
        }
        edges.sort_by(|a, b| a.partial_cmp(b).unwrap());
        edges.dedup();
        edges
    }

    /// Maximizes the expected profit over `[0, K_max]`. Inside each bracket a
    /// coarse scan picks the best of [`SCAN_CELLS`] cells, golden-section
    /// search narrows it, and bisection on the first-order condition polishes
    /// the result; the best bracket wins.
    pub fn optimize(&self) -> Result<CapacityPlan<T>> {
        let edges = self.bracket_edges();
        let mut best: Option<(T, T, (T, T))> = None;
        for w in edges.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let k = self.bracket_argmax(lo, hi)?;
            let v = self.expected_profit(k)?;
            if best.is_none_or(|(_, bv, _)| v > bv) {
                best = Some((k, v, (lo, hi)));
            }
        }
        let (k_star, expected_profit, bracket) = best.expect("at least one bracket");
        let scale = T::one() + bracket.1;
        let near = |a: T, b: T| (a - b).abs() <= T::lit(1e-9) * scale;
        let at_boundary = near(k_star, bracket.0) || near(k_star, bracket.1);
        let probe = if k_star > T::zero() { k_star } else { T::lit(1e-9) * scale };
        Ok(CapacityPlan {
            k_star,
            expected_profit,
            foc_residual: self.foc_residual(probe)?,
            bracket,
            at_boundary,
            objective_form: ObjectiveForm::of(&self.market, probe),
        })
    }

    fn bracket_argmax(&self, lo: T, hi: T) -> Result<T> {
        let f = |k: T| self.expected_profit(k);
        // coarse scan first: the objective can bend upward where the
        // constraint stops binding, so keep the search local to the best cell
        let cells = SCAN_CELLS;
        let at = |i: usize| lo + (hi - lo) * T::from_usize(i).unwrap() / T::from_usize(cells).unwrap();
        let mut best_i = 0;
        let mut best_v = f(lo)?;
        for i in 1..=cells {
            let v = f(at(i))?;
            if v > best_v {
                best_i = i;
                best_v = v;
            }
        }
        let lo = at(best_i.saturating_sub(1));
        let hi = at((best_i + 1).min(cells));
        let inv_phi = T::lit(0.618_033_988_749_894_8);
        let tol = T::lit(1e-7) * (T::one() + hi);
        let (mut a, mut b) = (lo, hi);
        let mut x1 = b - inv_phi * (b - a);
        let mut x2 = a + inv_phi * (b - a);
        let mut f1 = f(x1)?;
        let mut f2 = f(x2)?;
        while b - a > tol {
            if f1 < f2 {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + inv_phi * (b - a);
                f2 = f(x2)?;
            } else {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - inv_phi * (b - a);
                f1 = f(x1)?;
            }
        }
        // refine on the derivative, which is monotone decreasing in the bracket
        let width = (b - a) * T::lit(4.0);
        let mut a = (a - width).max(lo);
        let mut b = (b + width).min(hi);
        let slope = |k: T| if k > T::zero() { self.foc_residual(k) } else { self.foc_residual(T::lit(1e-12) * (T::one() + hi)) };
        let (ga, gb) = (slope(a)?, slope(b)?);
        if ga <= T::zero() && a == lo {
            return Ok(lo);
        }
        if gb > T::zero() && b == hi {
            return Ok(hi);
        }
        // smallest capacity where the slope stops being positive
        if ga > T::zero() && gb <= T::zero() {
            for _ in 0..200 {
                let mid = (a + b) / T::two();
                if mid <= a || mid >= b {
                    break;
                }
                if slope(mid)? > T::zero() {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            return Ok((a + b) / T::two());
        }
        // flat objective or noise at the tolerance level
        let mid = (a + b) / T::two();
        let candidates = [lo, mid, hi];
        let mut best = candidates[0];
        let mut best_v = f(best)?;
        for &k in &candidates[1..] {
            let v = f(k)?;
            if v > best_v {
                best = k;
                best_v = v;
            }
        }
        Ok(best)
    }

    /// Bisection on `u` for the capacity costs at which `k_star` crosses
    /// `K_Q` and `K_h`.
    pub fn cost_thresholds(&self) -> Result<CostThresholds<T>> {
        let (k_q, k_h, _) = capacity_levels(&self.market);
        Ok(CostThresholds {
            u_t1: self.cost_crossing(k_q)?,
            u_t2: self.cost_crossing(k_h)?,
        })
    }

    /// Optimal capacity at capacity cost `u`.
    pub fn k_star_at(&self, u: T) -> Result<T> {
        let mut problem = *self;
        problem.market.u = u;
        Ok(problem.optimize()?.k_star)
    }

    fn cost_crossing(&self, level: T) -> Result<Option<T>> {
        let below = |u: T| -> Result<bool> { Ok(self.k_star_at(u)? < level) };
        let mut lo = T::zero();
        if below(lo)? {
            return Ok(None);
        }
        let mut hi = T::one();
        let mut found = false;
        for _ in 0..80 {
            if below(hi)? {
                found = true;
                break;
            }
            lo = hi;
            hi = hi * T::two();
        }
        if !found {
            return Ok(None);
        }
        let tol = T::lit(1e-9) * (T::one() + hi);
        while hi - lo > tol {
            let mid = (lo + hi) / T::two();
            if below(mid)? {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(Some((lo + hi) / T::two()))
    }
}

pub fn expected_profit<T: Real>(p: &MarketParams<T>, model: &GbmModel<T>, capacity: T) -> Result<T> {
    CapacityProblem::new(*p, *model)?.expected_profit(capacity)
}

pub fn foc_residual<T: Real>(p: &MarketParams<T>, model: &GbmModel<T>, capacity: T) -> Result<T> {
    CapacityProblem::new(*p, *model)?.foc_residual(capacity)
}

pub fn optimize_capacity<T: Real>(p: &MarketParams<T>, model: &GbmModel<T>) -> Result<CapacityPlan<T>> {
    CapacityProblem::new(*p, *model)?.optimize()
}

pub fn capacity_cost_thresholds<T: Real>(p: &MarketParams<T>, model: &GbmModel<T>) -> Result<CostThresholds<T>> {
    CapacityProblem::new(*p, *model)?.cost_thresholds()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::solve_constrained;

    fn market() -> MarketParams<f64> {
        MarketParams::new(100.0, 120.0, 0.5, 0.5, 20.0, 30.0, 5.0, 10.0).unwrap()
    }

    fn gbm() -> GbmModel<f64> {
        GbmModel::new(1.0, 0.05, 0.2, 1.0).unwrap()
    }

    fn problem() -> CapacityProblem<f64> {
        CapacityProblem::new(market(), gbm()).unwrap()
    }

    #[test]
    fn zero_capacity_is_worth_nothing() {
        assert_eq!(problem().expected_profit(0.0).unwrap(), 0.0);
        assert!(problem().expected_profit(-1.0).is_err());
        assert!(problem().foc_residual(0.0).is_err());
    }

    #[test]
    fn deterministic_rate() {
        let flat = GbmModel::new(1.2, 0.1, 0.0, 1.0).unwrap();
        let pr = CapacityProblem::new(market(), flat).unwrap();
        let rate = 1.2 * 0.1f64.exp();
        for k in [10.0, 30.0, 60.0, 100.0] {
            let eq = solve_constrained(&market(), rate, k).unwrap();
            let v = pr.expected_profit(k).unwrap();
            assert!((v - (eq.profit_e - 10.0 * k)).abs() < 1e-8, "K={k}");
        }
    }

    #[test]
    fn foc_matches_finite_difference() {
        let pr = problem();
        for k in [5.0, 20.0, 35.0, 42.0, 50.0, 70.0, 83.0, 90.0] {
            let h = 1e-4 * k;
            let fd = (pr.expected_profit(k + h).unwrap() - pr.expected_profit(k - h).unwrap()) / (2.0 * h);
            let g = pr.foc_residual(k).unwrap();
            assert!((g - fd).abs() <= 1e-5 * fd.abs().max(1.0), "K={k}: {g} vs {fd}");
        }
    }

    #[test]
    fn slack_capacity_marginal_is_cost_only() {
        let pr = problem();
        let g = pr.foc_residual(200.0).unwrap();
        assert!((g + 10.0).abs() < 1e-12);
    }

    #[test]
    fn small_capacity_wanted() {
        let pr = problem();
        assert!(pr.foc_residual(1e-3).unwrap() > 0.0);
    }

    #[test]
    fn prohibitive_capacity_cost() {
        let m = MarketParams { u: 1000.0, ..market() };
        let plan = optimize_capacity(&m, &gbm()).unwrap();
        assert_eq!(plan.k_star, 0.0);
        assert!(plan.at_boundary);
        assert_eq!(plan.expected_profit, 0.0);
    }

    #[test]
    fn free_capacity_without_interaction_builds_the_unconstrained_total() {
        let m = MarketParams { u: 0.0, theta: 0.0, ..market() };
        let flat = GbmModel::new(3.0, 0.0, 0.0, 1.0).unwrap();
        let plan = optimize_capacity(&m, &flat).unwrap();
        let eq = crate::equilibrium::solve_unconstrained(&m, 3.0).unwrap();
        let need = eq.q_ee + eq.q_ei;
        assert!((plan.k_star - need).abs() < 1e-6, "{} vs {need}", plan.k_star);
        assert!((plan.expected_profit - eq.profit_e).abs() < 1e-6);
    }

    #[test]
    fn free_capacity_with_interaction_stops_short() {
        // holding back capacity raises the incumbent's price
        let m = MarketParams { u: 0.0, ..market() };
        let flat = GbmModel::new(3.0, 0.0, 0.0, 1.0).unwrap();
        let plan = optimize_capacity(&m, &flat).unwrap();
        let eq = crate::equilibrium::solve_unconstrained(&m, 3.0).unwrap();
        assert!(plan.k_star < eq.q_ee + eq.q_ei - 1.0);
        assert!(plan.expected_profit > eq.profit_e);
        assert!(solve_constrained(&m, 3.0, plan.k_star).unwrap().lambda.abs() < 1e-6);
    }

    #[test]
    fn baseline_plan_is_interior_optimum() {
        let plan = problem().optimize().unwrap();
        assert!(!plan.at_boundary, "{plan:?}");
        assert!(plan.foc_residual.abs() < 1e-6, "{plan:?}");
        let pr = problem();
        let d = 1e-3 * plan.k_star;
        assert!(plan.expected_profit >= pr.expected_profit(plan.k_star + d).unwrap());
        assert!(plan.expected_profit >= pr.expected_profit(plan.k_star - d).unwrap());
    }

    #[test]
    fn objective_forms() {
        let m = market();
        assert_eq!(ObjectiveForm::of(&m, 30.0), ObjectiveForm::HomeSplitForeign);
        assert_eq!(ObjectiveForm::of(&m, 42.0), ObjectiveForm::EntrySplitForeign);
        assert_eq!(ObjectiveForm::of(&m, 60.0), ObjectiveForm::EntrySplit);
        assert_eq!(ObjectiveForm::of(&m, 84.0), ObjectiveForm::Entry);
        let m2 = MarketParams { alpha_i: 40.0, phi: 0.9, theta: 0.1, ..m };
        assert_eq!(ObjectiveForm::of(&m2, 10.0), ObjectiveForm::HomeSplit);
    }

    #[test]
    fn discount_scales_operating_profit() {
        let pr = problem();
        let half = pr.with_discount(0.5).unwrap();
        let k = 30.0;
        let full = pr.expected_profit(k).unwrap() + 10.0 * k;
        let disc = half.expected_profit(k).unwrap() + 10.0 * k;
        assert!((disc - 0.5 * full).abs() < 1e-9);
        assert!(pr.with_discount(0.0).is_err());
    }
}
