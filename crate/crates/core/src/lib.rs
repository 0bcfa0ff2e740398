//! Price competition between a capacity-holding entrant and a foreign
//! incumbent under a stochastic exchange rate.
//!
//! The entrant sells at home and abroad, the incumbent only abroad. Prices are
//! set simultaneously once the rate `I` is known; capacity `K` is chosen
//! before, against the lognormal law of `I`.
//!
//! Everything is generic over the scalar: [`Field`] for the exact
//! threshold algebra (works with rationals), [`Real`] for solvers and
//! quadrature. `f64` aliases are provided.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod capacity;
pub mod demand;
pub mod equilibrium;
pub mod error;
pub mod exchange_rate;
pub mod oracle;
pub mod quadrature;
pub mod scalar;
pub mod thresholds;

pub use capacity::{
    capacity_cost_thresholds, expected_profit, foc_residual, optimize_capacity, CapacityPlan, CapacityProblem,
    CostThresholds, ObjectiveForm,
};
pub use demand::MarketParams;
pub use equilibrium::{shadow_price, solve_constrained, solve_unconstrained, EquilibriumOutcome};
pub use error::{Error, Result};
pub use exchange_rate::GbmModel;
pub use oracle::{grid_equilibrium, mc_expected_profit, McEstimate};
pub use scalar::{Field, Real};
pub use thresholds::{
    classify_exact, classify_regime, compute_thresholds, numeric_threshold, threshold_ordering_case, Regime,
    ThresholdName, ThresholdSet,
};

pub type Market = MarketParams<f64>;
pub type Gbm = GbmModel<f64>;
pub type Outcome = EquilibriumOutcome<f64>;
pub type Thresholds = ThresholdSet<f64>;
pub type Plan = CapacityPlan<f64>;
