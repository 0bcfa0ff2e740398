//! Linear additive demand in the entrant's home market and the incumbent's
//! market.
//!
//! ```text
//! D_ee = alpha_e - p_ee
//! D_ei = (1 - phi) alpha_i - p_ei + theta p_ii
//! D_ii = phi alpha_i       - p_ii + theta p_ei
//! ```
//!
//! Quantities are clamped at zero.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::scalar::{Field, Real};

/// Demand, cost and competition constants for both markets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketParams<T> {
    /// Home-market demand potential.
    pub alpha_e: T,
    /// Total demand potential of the incumbent's market.
    pub alpha_i: T,
    /// Share of `alpha_i` attached to the incumbent's product.
    pub phi: T,
    /// Cross-price effect.
    pub theta: T,
    /// Entrant unit production cost, home currency.
    pub c_e: T,
    /// Incumbent unit cost, foreign currency.
    pub c_i: T,
    /// Unit shipping cost to the foreign market, home currency.
    pub s: T,
    /// Unit capacity cost, home currency.
    pub u: T,
}

impl<T: Field> MarketParams<T> {
    /// Entrant's share of foreign demand potential, `(1 - phi) alpha_i`.
    pub fn foreign_base(&self) -> T {
        (T::one() - self.phi) * self.alpha_i
    }

    /// Incumbent's demand potential, `phi alpha_i`.
    pub fn incumbent_base(&self) -> T {
        self.phi * self.alpha_i
    }

    /// Home-currency cost of one unit sold abroad, `C_e + s`.
    pub fn delivered_cost(&self) -> T {
        self.c_e + self.s
    }

    pub fn home_margin(&self) -> T {
        self.alpha_e - self.c_e
    }

    /// `alpha_i (2 - 2 phi + theta phi) + C_i theta`: the foreign demand mass
    /// that every entry and allocation threshold is measured against.
    pub fn entry_mass(&self) -> T {
        self.alpha_i * (T::two() - T::two() * self.phi + self.theta * self.phi) + self.c_i * self.theta
    }

    /// `2 - theta^2`
    pub fn reduced_det(&self) -> T {
        T::two() - self.theta * self.theta
    }

    /// `4 - theta^2`
    pub fn joint_det(&self) -> T {
        T::four() - self.theta * self.theta
    }
}

impl<T: Real> MarketParams<T> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(alpha_e: T, alpha_i: T, phi: T, theta: T, c_e: T, c_i: T, s: T, u: T) -> Result<Self> {
        let p = Self {
            alpha_e,
            alpha_i,
            phi,
            theta,
            c_e,
            c_i,
            s,
            u,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            ("alpha_e", self.alpha_e),
            ("alpha_i", self.alpha_i),
            ("phi", self.phi),
            ("theta", self.theta),
            ("C_e", self.c_e),
            ("C_i", self.c_i),
            ("s", self.s),
            ("u", self.u),
        ];
        for (name, v) in all {
            if !v.is_finite() {
                return Err(domain(name, "finite", v.to_f64_lossy()));
            }
        }
        let z = T::zero();
        if !(self.alpha_e > z) {
            return Err(domain("alpha_e", "positive", self.alpha_e.to_f64_lossy()));
        }
        if !(self.alpha_i > z) {
            return Err(domain("alpha_i", "positive", self.alpha_i.to_f64_lossy()));
        }
        if !(self.phi >= z && self.phi <= T::one()) {
            return Err(domain("phi", "in [0, 1]", self.phi.to_f64_lossy()));
        }
        if !(self.theta >= z && self.theta < T::one()) {
            return Err(domain("theta", "in [0, 1)", self.theta.to_f64_lossy()));
        }
        for (name, v) in [("C_e", self.c_e), ("C_i", self.c_i), ("s", self.s), ("u", self.u)] {
            if !(v >= z) {
                return Err(domain(name, "non-negative", v.to_f64_lossy()));
            }
        }
        if !(self.alpha_e > self.c_e) {
            return Err(domain("C_e", "below alpha_e", self.c_e.to_f64_lossy()));
        }
        if !(self.incumbent_base() > self.c_i) {
            return Err(domain("C_i", "below phi * alpha_i", self.c_i.to_f64_lossy()));
        }
        Ok(())
    }

    pub fn demand_ee(&self, p_ee: T) -> Result<T> {
        check_price("p_ee", p_ee)?;
        Ok(self.q_ee(p_ee))
    }

    pub fn demand_ei(&self, p_ei: T, p_ii: T) -> Result<T> {
        check_price("p_ei", p_ei)?;
        check_price("p_ii", p_ii)?;
        Ok(self.q_ei(p_ei, p_ii))
    }

    pub fn demand_ii(&self, p_ii: T, p_ei: T) -> Result<T> {
        check_price("p_ii", p_ii)?;
        check_price("p_ei", p_ei)?;
        Ok(self.q_ii(p_ii, p_ei))
    }

    pub(crate) fn q_ee(&self, p_ee: T) -> T {
        (self.alpha_e - p_ee).max(T::zero())
    }

    pub(crate) fn q_ei(&self, p_ei: T, p_ii: T) -> T {
        (self.foreign_base() - p_ei + self.theta * p_ii).max(T::zero())
    }

    pub(crate) fn q_ii(&self, p_ii: T, p_ei: T) -> T {
        (self.incumbent_base() - p_ii + self.theta * p_ei).max(T::zero())
    }

    /// Entrant profit in home currency at the given prices; foreign revenue is
    /// converted at `rate`.
    pub fn entrant_profit(&self, rate: T, p_ee: T, p_ei: T, p_ii: T) -> T {
        (p_ee - self.c_e) * self.q_ee(p_ee) + (rate * p_ei - self.delivered_cost()) * self.q_ei(p_ei, p_ii)
    }

    /// Incumbent profit in foreign currency.
    pub fn incumbent_profit(&self, p_ii: T, p_ei: T) -> T {
        (p_ii - self.c_i) * self.q_ii(p_ii, p_ei)
    }
}

fn check_price<T: Real>(name: &'static str, p: T) -> Result<()> {
    if p >= T::zero() && p.is_finite() {
        Ok(())
    } else {
        Err(domain(name, "a non-negative price", p.to_f64_lossy()))
    }
}
