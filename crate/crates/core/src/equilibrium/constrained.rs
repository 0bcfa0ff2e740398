use crate::demand::MarketParams;
use crate::error::{domain, Error, Result};
use crate::scalar::Real;
use crate::thresholds::Regime;

use super::unconstrained::{check_rate, incumbent_br, outcome, solve_unconstrained};
use super::EquilibriumOutcome;

/// Weight on the new best response in each fixed-point step.
pub const DAMPING: f64 = 0.5;
/// Largest best-response price change accepted as converged.
pub const TOLERANCE: f64 = 1e-10;
pub const MAX_ITERATIONS: usize = 100_000;

fn check_capacity<T: Real>(capacity: T) -> Result<()> {
    if capacity >= T::zero() && capacity.is_finite() {
        Ok(())
    } else {
        Err(domain("capacity", "non-negative", capacity.to_f64_lossy()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Branch {
    Slack,
    Split,
    HomeOnly,
    ForeignOnly,
}

#[derive(Debug, Clone, Copy)]
struct EntrantResponse<T> {
    p_ee: T,
    p_ei: T,
    multiplier: T,
    branch: Branch,
}

/// Entrant's capacity-constrained best response to `p_ii`.
///
/// In quantities the entrant maximizes `(hm - q_ee) q_ee + (fm - rate q_ei) q_ei`
/// with `hm = alpha_e - C_e` and `fm = rate * choke - (C_e + s)`, subject to
/// `q_ee + q_ei <= K`; the multiplier equalizes the two marginal revenues.
fn entrant_response<T: Real>(p: &MarketParams<T>, rate: T, p_ii: T, capacity: T) -> EntrantResponse<T> {
    let two = T::two();
    let choke = p.foreign_base() + p.theta * p_ii;
    let hm = p.home_margin();
    let fm = rate * choke - p.delivered_cost();
    let q_home_free = hm / two;
    let q_foreign_free = fm.max(T::zero()) / (two * rate);

    let (q_ee, q_ei, multiplier, branch) = if q_home_free + q_foreign_free <= capacity {
        (q_home_free, q_foreign_free, T::zero(), Branch::Slack)
    } else {
        let lambda = (rate * hm + fm - two * rate * capacity) / (T::one() + rate);
        let q_ee = (hm - lambda) / two;
        let q_ei = (fm - lambda) / (two * rate);
        if q_ee >= T::zero() && q_ei >= T::zero() {
            (q_ee, q_ei, lambda, Branch::Split)
        } else if q_ee < T::zero() {
            (T::zero(), capacity, fm - two * rate * capacity, Branch::ForeignOnly)
        } else {
            (capacity, T::zero(), hm - two * capacity, Branch::HomeOnly)
        }
    };
    EntrantResponse {
        p_ee: p.alpha_e - q_ee,
        p_ei: choke - q_ei,
        multiplier,
        branch,
    }
}

/// Equilibrium when the entrant holds `capacity` units.
///
/// If the unconstrained equilibrium fits within `capacity` it is returned
/// unchanged. Otherwise the entrant's constrained best response and the
/// incumbent's best response are iterated with damping [`DAMPING`] until the
/// largest price change falls below [`TOLERANCE`].
pub fn solve_constrained<T: Real>(
    p: &MarketParams<T>,
    rate: T,
    capacity: T,
) -> Result<EquilibriumOutcome<T>> {
    check_rate(rate)?;
    check_capacity(capacity)?;
    let free = solve_unconstrained(p, rate)?;
    if free.q_ee + free.q_ei <= capacity {
        return Ok(free);
    }

    let damping = T::lit(DAMPING);
    let scale = T::one() + p.alpha_e.max(p.alpha_i);
    let tol = T::lit(TOLERANCE).max(T::epsilon() * T::lit(64.0) * scale);
    let (mut p_ee, mut p_ei, mut p_ii) = (free.p_ee, free.p_ei, free.p_ii);
    let mut residual = T::infinity();
    let mut converged = false;
    for _ in 0..MAX_ITERATIONS {
        let r = entrant_response(p, rate, p_ii, capacity);
        let next_ii = incumbent_br(p, p_ei);
        residual = (r.p_ee - p_ee)
            .abs()
            .max((r.p_ei - p_ei).abs())
            .max((next_ii - p_ii).abs());
        p_ee = p_ee + damping * (r.p_ee - p_ee);
        p_ei = p_ei + damping * (r.p_ei - p_ei);
        p_ii = p_ii + damping * (next_ii - p_ii);
        if residual < tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Convergence {
            iterations: MAX_ITERATIONS,
            residual: residual.to_f64_lossy(),
        });
    }

    let r = entrant_response(p, rate, p_ii, capacity);
    let regime = match r.branch {
        Branch::Split => Regime::BC,
        Branch::HomeOnly => Regime::EC,
        Branch::ForeignOnly => Regime::IC,
        Branch::Slack => return Ok(free),
    };
    let mut out = outcome(p, rate, r.p_ee, r.p_ei, p_ii, T::zero(), r.multiplier, regime);
    out.lambda = marginal_value(p, rate, &out, r);
    Ok(out)
}

/// Envelope derivative of the equilibrium profit in capacity: the multiplier
/// plus the effect of the incumbent's price response, `dp_ii/dK`, on the
/// entrant's foreign demand.
fn marginal_value<T: Real>(
    p: &MarketParams<T>,
    rate: T,
    eq: &EquilibriumOutcome<T>,
    r: EntrantResponse<T>,
) -> T {
    let th = p.theta;
    // slope of p_ei in p_ii and in K for the entrant's active branch
    let (entrant_slope, capacity_slope) = match r.branch {
        Branch::Slack | Branch::HomeOnly => return r.multiplier,
        Branch::Split => (
            th * (T::two() + rate) / (T::two() * (T::one() + rate)),
            -T::one() / (T::one() + rate),
        ),
        Branch::ForeignOnly => (th, -T::one()),
    };
    let incumbent_slope = if eq.q_ii > T::zero() { th / T::two() } else { th };
    let dp_ii = incumbent_slope * capacity_slope / (T::one() - entrant_slope * incumbent_slope);
    // a higher p_ii raises foreign demand, which earns its margin but uses capacity
    let foreign_margin = rate * eq.p_ei - p.delivered_cost() - r.multiplier;
    r.multiplier + th * foreign_margin * dp_ii
}

/// Marginal value of capacity in equilibrium, `d profit_e / dK`; zero when
/// capacity is slack.
pub fn shadow_price<T: Real>(p: &MarketParams<T>, rate: T, capacity: T) -> Result<T> {
    Ok(solve_constrained(p, rate, capacity)?.lambda)
}

/// Entrant profit when all capacity is sold at home: `(alpha_e - C_e - K) K`.
pub fn profit_ec<T: Real>(p: &MarketParams<T>, capacity: T) -> Result<T> {
    if !(capacity >= T::zero() && capacity <= p.home_margin()) {
        return Err(domain("capacity", "within [0, alpha_e - C_e]", capacity.to_f64_lossy()));
    }
    Ok((p.home_margin() - capacity) * capacity)
}

/// Entrant profit when all capacity is sold abroad and the incumbent
/// best-responds:
/// `[rate (M - 2K) - (C_e + s)(2 - theta^2)] K / (2 - theta^2)` with `M` the
/// entry mass.
pub fn profit_ic<T: Real>(p: &MarketParams<T>, rate: T, capacity: T) -> Result<T> {
    check_rate(rate)?;
    check_capacity(capacity)?;
    Ok(ic_profit(p, rate, capacity))
}

fn ic_profit<T: Real>(p: &MarketParams<T>, rate: T, k: T) -> T {
    let r = p.reduced_det();
    (rate * (p.entry_mass() - T::two() * k) - p.delivered_cost() * r) * k / r
}

/// Demand base used in the incumbent's best response for the closed-form
/// split-capacity prices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IncumbentBase {
    /// `phi alpha_i`, the incumbent's own demand potential.
    #[default]
    PhiAlphaI,
    /// `phi alpha_e`; only for measuring the effect of that substitution.
    PhiAlphaE,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BcPrices<T> {
    pub p_ee: T,
    pub p_ei: T,
    pub p_ii: T,
    pub multiplier: T,
}

/// Simultaneous solution of the split-capacity best responses
///
/// ```text
/// p_ee = [rate (2 alpha_e + (1-phi) alpha_i - 2K + theta p_ii) + alpha_e - s] / (2 (1 + rate))
/// p_ei = [rate ((1-phi) alpha_i + theta p_ii) + alpha_e + 2 (1-phi) alpha_i - 2K + 2 theta p_ii + s] / (2 (1 + rate))
/// p_ii = (phi alpha_i + C_i + theta p_ei) / 2
/// ```
///
/// without clamping; meaningful where both entrant quantities are positive.
pub fn bc_prices<T: Real>(p: &MarketParams<T>, rate: T, capacity: T) -> Result<BcPrices<T>> {
    bc_prices_with(p, rate, capacity, IncumbentBase::PhiAlphaI)
}

pub fn bc_prices_with<T: Real>(
    p: &MarketParams<T>,
    rate: T,
    capacity: T,
    base: IncumbentBase,
) -> Result<BcPrices<T>> {
    check_rate(rate)?;
    check_capacity(capacity)?;
    let two = T::two();
    let th = p.theta;
    let a = p.foreign_base();
    let b = match base {
        IncumbentBase::PhiAlphaI => p.incumbent_base(),
        IncumbentBase::PhiAlphaE => p.phi * p.alpha_e,
    };
    let g = a + th * (b + p.c_i) / two;
    let den = T::four() * (T::one() + rate) - (two + rate) * th * th;
    let p_ei = two * ((two + rate) * g + p.alpha_e + p.s - two * capacity) / den;
    let p_ii = (b + p.c_i + th * p_ei) / two;
    let choke = a + th * p_ii;
    let multiplier = (rate * (p.home_margin() + choke - two * capacity) - p.delivered_cost()) / (T::one() + rate);
    let p_ee = (p.alpha_e + p.c_e + multiplier) / two;
    Ok(BcPrices {
        p_ee,
        p_ei,
        p_ii,
        multiplier,
    })
}

/// Entrant profit at the closed-form split-capacity prices, evaluated on the
/// unclamped demand expressions.
pub fn profit_bc<T: Real>(p: &MarketParams<T>, rate: T, capacity: T) -> Result<T> {
    let bc = bc_prices(p, rate, capacity)?;
    Ok(bc_profit(p, rate, &bc))
}

fn bc_profit<T: Real>(p: &MarketParams<T>, rate: T, bc: &BcPrices<T>) -> T {
    let q_ee = p.alpha_e - bc.p_ee;
    let q_ei = p.foreign_base() - bc.p_ei + p.theta * bc.p_ii;
    (bc.p_ee - p.c_e) * q_ee + (rate * bc.p_ei - p.delivered_cost()) * q_ei
}

/// Closed-form entrant profit inside a given regime.
pub fn regime_profit<T: Real>(p: &MarketParams<T>, rate: T, capacity: T, regime: Regime) -> T {
    let hm = p.home_margin();
    let home = hm * hm / T::four();
    match regime {
        Regime::EU => home,
        Regime::BU => {
            let j = p.joint_det();
            let num = rate * p.entry_mass() - p.delivered_cost() * p.reduced_det();
            home + num * num / (rate * j * j)
        }
        Regime::EC => (hm - capacity) * capacity,
        Regime::IC => ic_profit(p, rate, capacity),
        Regime::BC => match bc_prices(p, rate, capacity) {
            Ok(bc) => bc_profit(p, rate, &bc),
            Err(_) => T::nan(),
        },
    }
}

/// Closed-form `d profit_e / dK` inside a given regime.
pub fn regime_marginal_value<T: Real>(p: &MarketParams<T>, rate: T, capacity: T, regime: Regime) -> T {
    let two = T::two();
    let th = p.theta;
    match regime {
        Regime::EU | Regime::BU => T::zero(),
        Regime::EC => p.home_margin() - two * capacity,
        Regime::IC => {
            rate * (p.entry_mass() - T::four() * capacity) / p.reduced_det() - p.delivered_cost()
        }
        Regime::BC => match bc_prices(p, rate, capacity) {
            Ok(bc) => {
                let dp_ii = -two * th / (T::four() * (T::one() + rate) - th * th * (two + rate));
                bc.multiplier + th * (rate * bc.p_ei - p.delivered_cost() - bc.multiplier) * dp_ii
            }
            Err(_) => T::nan(),
        },
    }
}
