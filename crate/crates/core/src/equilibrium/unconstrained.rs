use crate::demand::MarketParams;
use crate::error::{domain, Result};
use crate::scalar::Real;
use crate::thresholds::Regime;

use super::EquilibriumOutcome;

pub(crate) fn check_rate<T: Real>(rate: T) -> Result<()> {
    if rate > T::zero() && rate.is_finite() {
        Ok(())
    } else {
        Err(domain("rate", "positive", rate.to_f64_lossy()))
    }
}

/// Entrant's prices `(p_ee, p_ei)` maximizing its profit against `p_ii` with
/// unlimited capacity. When no foreign price covers the converted cost the
/// foreign price is the choke price.
pub fn entrant_best_response<T: Real>(p: &MarketParams<T>, rate: T, p_ii: T) -> Result<(T, T)> {
    check_rate(rate)?;
    Ok(entrant_br(p, rate, p_ii))
}

pub(crate) fn entrant_br<T: Real>(p: &MarketParams<T>, rate: T, p_ii: T) -> (T, T) {
    let choke = p.foreign_base() + p.theta * p_ii;
    let unit_cost = p.delivered_cost() / rate;
    let p_ei = (choke + unit_cost.min(choke)) / T::two();
    ((p.alpha_e + p.c_e) / T::two(), p_ei)
}

pub fn incumbent_best_response<T: Real>(p: &MarketParams<T>, p_ei: T) -> Result<T> {
    if !(p_ei >= T::zero()) {
        return Err(domain("p_ei", "a non-negative price", p_ei.to_f64_lossy()));
    }
    Ok(incumbent_br(p, p_ei))
}

pub(crate) fn incumbent_br<T: Real>(p: &MarketParams<T>, p_ei: T) -> T {
    let choke = p.incumbent_base() + p.theta * p_ei;
    (choke + p.c_i.min(choke)) / T::two()
}

/// Equilibrium with unlimited entrant capacity.
///
/// Each player is either active (interior best response) or at its choke
/// price; the four combinations are affine systems, and the one whose
/// activity pattern is self-consistent is the equilibrium. At `rate <= I_z`
/// the entrant stays out of the foreign market (regime EU).
pub fn solve_unconstrained<T: Real>(p: &MarketParams<T>, rate: T) -> Result<EquilibriumOutcome<T>> {
    check_rate(rate)?;
    let two = T::two();
    let th = p.theta;
    let a = p.foreign_base();
    let b = p.incumbent_base();
    let cost = p.delivered_cost() / rate;

    let candidates = [(true, true), (false, true), (true, false), (false, false)];
    let mut found = None;
    for (entrant_on, incumbent_on) in candidates {
        let (p_ei, p_ii) = match (entrant_on, incumbent_on) {
            (true, true) => {
                let d = p.joint_det();
                (
                    (two * (cost + a) + th * (p.c_i + b)) / d,
                    (two * (p.c_i + b) + th * (cost + a)) / d,
                )
            }
            (false, true) => {
                let p_ii = (p.c_i + b + th * a) / p.reduced_det();
                (a + th * p_ii, p_ii)
            }
            (true, false) => {
                let p_ei = (cost + a + th * b) / p.reduced_det();
                (p_ei, b + th * p_ei)
            }
            (false, false) => {
                let d = T::one() - th * th;
                ((a + th * b) / d, (b + th * a) / d)
            }
        };
        let entrant_ok = (cost < a + th * p_ii) == entrant_on;
        let incumbent_ok = (p.c_i < b + th * p_ei) == incumbent_on;
        if entrant_ok && incumbent_ok {
            found = Some((p_ei, p_ii, entrant_on));
            break;
        }
    }
    let (p_ei, p_ii, entrant_on) = found.unwrap_or_else(|| {
        // only reachable through rounding exactly at a boundary
        let mut p_ii = incumbent_br(p, a);
        let mut p_ei = entrant_br(p, rate, p_ii).1;
        for _ in 0..10_000 {
            let next_ii = incumbent_br(p, p_ei);
            let next_ei = entrant_br(p, rate, next_ii).1;
            let done = (next_ii - p_ii).abs() + (next_ei - p_ei).abs() == T::zero();
            p_ii = next_ii;
            p_ei = next_ei;
            if done {
                break;
            }
        }
        (p_ei, p_ii, cost < a + th * p_ii)
    });
    let p_ee = (p.alpha_e + p.c_e) / two;
    Ok(outcome(p, rate, p_ee, p_ei, p_ii, T::zero(), T::zero(), if entrant_on { Regime::BU } else { Regime::EU }))
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn outcome<T: Real>(
    p: &MarketParams<T>,
    rate: T,
    p_ee: T,
    p_ei: T,
    p_ii: T,
    lambda: T,
    kkt_multiplier: T,
    regime: Regime,
) -> EquilibriumOutcome<T> {
    // a player at its choke price sells exactly nothing
    let noise = T::lit(64.0) * T::epsilon() * (p.alpha_e + p.alpha_i);
    let snap = |q: T| if q <= noise { T::zero() } else { q };
    let q_ee = snap(p.q_ee(p_ee));
    let q_ei = snap(p.q_ei(p_ei, p_ii));
    let q_ii = snap(p.q_ii(p_ii, p_ei));
    EquilibriumOutcome {
        p_ee,
        p_ei,
        p_ii,
        q_ee,
        q_ei,
        q_ii,
        profit_e: (p_ee - p.c_e) * q_ee + (rate * p_ei - p.delivered_cost()) * q_ei,
        profit_i: (p_ii - p.c_i) * q_ii,
        lambda,
        kkt_multiplier,
        regime,
    }
}
