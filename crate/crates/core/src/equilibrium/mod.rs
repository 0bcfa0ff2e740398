//! Simultaneous-pricing Nash equilibria, with and without the entrant's
//! capacity constraint `q_ee + q_ei <= K`.
//!
//! A player that does not sell in the foreign market is represented by its
//! choke price (the lowest price at which its demand is zero), and its rival
//! best-responds to that price. This keeps the equilibrium continuous in the
//! rate and makes the entry and allocation thresholds exact regime boundaries.

mod constrained;
mod unconstrained;

use serde::{Deserialize, Serialize};

use crate::thresholds::Regime;

pub use constrained::{
    bc_prices, bc_prices_with, profit_bc, profit_ec, profit_ic, regime_marginal_value, regime_profit,
    shadow_price, solve_constrained, BcPrices, IncumbentBase, DAMPING, MAX_ITERATIONS, TOLERANCE,
};
pub use unconstrained::{entrant_best_response, incumbent_best_response, solve_unconstrained};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumOutcome<T> {
    pub p_ee: T,
    pub p_ei: T,
    pub p_ii: T,
    pub q_ee: T,
    pub q_ei: T,
    pub q_ii: T,
    /// Entrant profit, home currency.
    pub profit_e: T,
    /// Incumbent profit, foreign currency.
    pub profit_i: T,
    /// Marginal value of capacity to the entrant in equilibrium,
    /// `d profit_e / dK`, including the incumbent's price response. Zero when
    /// capacity is slack.
    pub lambda: T,
    /// Multiplier of the capacity constraint in the entrant's own pricing
    /// problem, holding the incumbent's price fixed.
    pub kkt_multiplier: T,
    pub regime: Regime,
}
