//! Exchange-rate and capacity thresholds, the five-regime classifier, and
//! bisection of every threshold against the equilibrium solvers.
//!
//! Every threshold is a rational function of the parameters, so
//! [`compute_thresholds`] only needs [`Field`] arithmetic and can be run on
//! exact rationals. Regime classification uses the cross-multiplied form of
//! each inequality, which stays well defined when a threshold does not exist.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::demand::MarketParams;
use crate::equilibrium::{solve_constrained, solve_unconstrained};
use crate::error::{domain, Error, Result};
use crate::scalar::{Field, Real};

/// Capacity allocation regime of the entrant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Regime {
    /// Capacity slack, home market only.
    EU,
    /// Capacity slack, both markets.
    BU,
    /// Capacity binding, all of it sold at home.
    EC,
    /// Capacity binding, all of it sold abroad.
    IC,
    /// Capacity binding and split across both markets.
    BC,
}

impl Regime {
    pub const ALL: [Regime; 5] = [Regime::EU, Regime::BU, Regime::EC, Regime::IC, Regime::BC];

    pub fn is_constrained(self) -> bool {
        matches!(self, Regime::EC | Regime::IC | Regime::BC)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Regime::EU => "EU",
            Regime::BU => "BU",
            Regime::EC => "EC",
            Regime::IC => "IC",
            Regime::BC => "BC",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ThresholdName {
    /// Foreign entry under slack capacity.
    Iz,
    /// Incumbent priced out of its own market.
    Iv,
    /// Capacity starts to bind.
    It,
    /// Home sales stop under scarce capacity.
    Ih,
    /// Foreign sales start under scarce capacity.
    If,
}

impl ThresholdName {
    pub const ALL: [ThresholdName; 5] = [
        ThresholdName::Iz,
        ThresholdName::Iv,
        ThresholdName::It,
        ThresholdName::Ih,
        ThresholdName::If,
    ];
}

impl fmt::Display for ThresholdName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ThresholdName::Iz => "I_z",
            ThresholdName::Iv => "I_v",
            ThresholdName::It => "I_t",
            ThresholdName::Ih => "I_h",
            ThresholdName::If => "I_f",
        })
    }
}

/// How the home-exit threshold `I_h` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ThresholdForm {
    /// Denominator `alpha_i (2(1 - phi) + theta phi) + C_i theta - K (4 - theta^2)`,
    /// the form consistent with the equilibrium conditions.
    #[default]
    Consistent,
    /// Same expression with `alpha_e` in place of `alpha_i`. Kept only to
    /// quantify how far that variant is from the bisected boundary.
    AlphaEDenominator,
}

/// Thresholds for one parameter set and capacity.
///
/// Exchange-rate thresholds are `None` when the boundary does not exist at a
/// positive rate (for example `I_h` when `K >= K_h`, or `I_v` when
/// `C_i <= C_v`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSet<T> {
    pub i_z: Option<T>,
    pub i_v: Option<T>,
    pub c_v: T,
    pub i_t: Option<T>,
    pub k_t: T,
    pub i_h: Option<T>,
    pub i_f: Option<T>,
    pub k_h: T,
    pub k_q: T,
}

impl<T: Copy> ThresholdSet<T> {
    pub fn get(&self, which: ThresholdName) -> Option<T> {
        match which {
            ThresholdName::Iz => self.i_z,
            ThresholdName::Iv => self.i_v,
            ThresholdName::It => self.i_t,
            ThresholdName::Ih => self.i_h,
            ThresholdName::If => self.i_f,
        }
    }
}

fn positive_ratio<T: Field>(num: T, den: T) -> Option<T> {
    if den > T::zero() && num > T::zero() {
        Some(num / den)
    } else {
        None
    }
}

/// `(K_Q, K_h, K_t)`.
pub fn capacity_levels<T: Field>(p: &MarketParams<T>) -> (T, T, T) {
    let m = p.entry_mass();
    let k_q = p.home_margin() / T::two();
    let k_h = m / p.joint_det();
    let k_t = (T::two() * m + p.joint_det() * p.home_margin()) / (T::two() * p.joint_det());
    (k_q, k_h, k_t)
}

pub fn compute_thresholds<T: Field>(p: &MarketParams<T>, capacity: T) -> ThresholdSet<T> {
    compute_thresholds_with(p, capacity, ThresholdForm::Consistent)
}

pub fn compute_thresholds_with<T: Field>(
    p: &MarketParams<T>,
    capacity: T,
    form: ThresholdForm,
) -> ThresholdSet<T> {
    let two = T::two();
    let m = p.entry_mass();
    let r = p.reduced_det();
    let j = p.joint_det();
    let c = p.delivered_cost();
    let (k_q, k_h, k_t) = capacity_levels(p);

    let i_z = positive_ratio(c * r, m);

    let v_mass = p.alpha_i * (p.theta * (T::one() - p.phi) + two * p.phi);
    let c_v = v_mass / r;
    let i_v = if p.c_i > c_v {
        positive_ratio(p.theta * c, p.c_i * r - v_mass)
    } else {
        None
    };

    let d_t = two * m + j * (p.home_margin() - two * capacity);
    let i_t = positive_ratio(two * c * r, d_t);

    let h_mass = match form {
        ThresholdForm::Consistent => m,
        ThresholdForm::AlphaEDenominator => {
            p.alpha_e * (two * (T::one() - p.phi) + p.theta * p.phi) + p.c_i * p.theta
        }
    };
    let i_h = positive_ratio(r * (p.alpha_e + p.s), h_mass - capacity * j);
    let i_f = positive_ratio(r * (p.alpha_e + p.s - two * capacity), m);

    ThresholdSet {
        i_z,
        i_v,
        c_v,
        i_t,
        k_t,
        i_h,
        i_f,
        k_h,
        k_q,
    }
}

/// Entrant sells abroad when capacity is slack.
pub(crate) fn enters<T: Field>(p: &MarketParams<T>, rate: T) -> bool {
    rate * p.entry_mass() > p.delivered_cost() * p.reduced_det()
}

/// The slack-capacity equilibrium needs more than `capacity`.
pub(crate) fn binds<T: Field>(p: &MarketParams<T>, rate: T, capacity: T) -> bool {
    let (k_q, _, _) = capacity_levels(p);
    if capacity < k_q {
        return true;
    }
    let d_t = T::two() * p.entry_mass() + p.joint_det() * (p.home_margin() - T::two() * capacity);
    rate * d_t > T::two() * p.delivered_cost() * p.reduced_det()
}

pub(crate) fn home_only<T: Field>(p: &MarketParams<T>, rate: T, capacity: T) -> bool {
    rate * p.entry_mass() < p.reduced_det() * (p.alpha_e + p.s - T::two() * capacity)
}

pub(crate) fn foreign_only<T: Field>(p: &MarketParams<T>, rate: T, capacity: T) -> bool {
    rate * (p.entry_mass() - capacity * p.joint_det()) > p.reduced_det() * (p.alpha_e + p.s)
}

/// Regime of the equilibrium at `(rate, capacity)`, from the thresholds alone.
///
/// Exact threshold ties go to the neighbouring slack or split regime.
pub fn classify_regime<T: Real>(p: &MarketParams<T>, rate: T, capacity: T) -> Result<Regime> {
    if !(rate > T::zero()) {
        return Err(domain("rate", "positive", rate.to_f64_lossy()));
    }
    if !(capacity >= T::zero()) {
        return Err(domain("capacity", "non-negative", capacity.to_f64_lossy()));
    }
    Ok(classify_exact(p, rate, capacity))
}

/// [`classify_regime`] for any ordered field, without domain checks.
pub fn classify_exact<T: Field>(p: &MarketParams<T>, rate: T, capacity: T) -> Regime {
    if !binds(p, rate, capacity) {
        if enters(p, rate) {
            Regime::BU
        } else {
            Regime::EU
        }
    } else if home_only(p, rate, capacity) {
        Regime::EC
    } else if foreign_only(p, rate, capacity) {
        Regime::IC
    } else {
        Regime::BC
    }
}

/// Locates a threshold by bisecting the rate until the solver's defining event
/// flips, to `1e-13` relative.
pub fn numeric_threshold<T: Real>(p: &MarketParams<T>, capacity: T, which: ThresholdName) -> Result<T> {
    let event = |rate: T| -> Result<bool> {
        Ok(match which {
            ThresholdName::Iz => solve_unconstrained(p, rate)?.regime == Regime::BU,
            ThresholdName::Iv => solve_unconstrained(p, rate)?.q_ii <= T::zero(),
            ThresholdName::It => solve_constrained(p, rate, capacity)?.regime.is_constrained(),
            ThresholdName::If => solve_constrained(p, rate, capacity)?.regime != Regime::EC,
            ThresholdName::Ih => solve_constrained(p, rate, capacity)?.regime == Regime::IC,
        })
    };
    let mut lo = T::lit(1e-8);
    let mut hi = T::lit(1e8);
    if event(lo)? || !event(hi)? {
        return Err(Error::BoundaryNotFound {
            which,
            lo: lo.to_f64_lossy(),
            hi: hi.to_f64_lossy(),
        });
    }
    let tol = T::lit(1e-13).max(T::epsilon() * T::lit(4.0));
    for _ in 0..400 {
        if hi / lo - T::one() <= tol {
            break;
        }
        let mid = (lo * hi).sqrt();
        let mid = if mid > lo && mid < hi { mid } else { (lo + hi) / T::two() };
        if event(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((lo + hi) / T::two())
}

/// Relative order of `K_Q`, `K_h` and `K_t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OrderingCase {
    /// `K_Q < K_h < K_t`
    HomeFirst,
    /// `K_h < K_Q < K_t`
    ForeignFirst,
    Unclassified,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    IhAboveIf,
    IfAboveIz,
    ItAboveIz,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::IhAboveIf => "I_h > I_f",
            Relation::IfAboveIz => "I_f > I_z",
            Relation::ItAboveIz => "I_t > I_z",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalCheck<T> {
    pub lo: T,
    pub hi: T,
    pub relation: Relation,
    pub points: usize,
    pub violations: usize,
    /// Smallest `lhs - rhs` seen on the grid (negative when violated).
    pub min_margin: T,
}

impl<T> IntervalCheck<T> {
    pub fn holds(&self) -> bool {
        self.violations == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderingReport<T> {
    pub case: OrderingCase,
    pub k_q: T,
    pub k_h: T,
    pub k_t: T,
    pub checks: Vec<IntervalCheck<T>>,
}

impl<T> OrderingReport<T> {
    pub fn all_hold(&self) -> bool {
        self.checks.iter().all(IntervalCheck::holds)
    }
}

/// Rate thresholds extended to the whole capacity axis: a boundary that does
/// not exist is `+inf` when the regime above it never occurs, and the raw
/// (possibly non-positive) value otherwise.
fn extended<T: Real>(p: &MarketParams<T>, capacity: T, which: Relation) -> (T, T) {
    let two = T::two();
    let m = p.entry_mass();
    let r = p.reduced_det();
    let j = p.joint_det();
    let c = p.delivered_cost();
    let ratio = |num: T, den: T| if den > T::zero() { num / den } else { T::infinity() };
    let i_z = ratio(c * r, m);
    let i_f = ratio(r * (p.alpha_e + p.s - two * capacity), m);
    let i_h = ratio(r * (p.alpha_e + p.s), m - capacity * j);
    let i_t = ratio(two * c * r, two * m + j * (p.home_margin() - two * capacity));
    match which {
        Relation::IhAboveIf => (i_h, i_f),
        Relation::IfAboveIz => (i_f, i_z),
        Relation::ItAboveIz => (i_t, i_z),
    }
}

fn check_interval<T: Real>(p: &MarketParams<T>, lo: T, hi: T, relation: Relation, points: usize) -> IntervalCheck<T> {
    let mut violations = 0;
    let mut min_margin = T::infinity();
    for i in 0..points {
        // cell midpoints, so the shared endpoints of adjacent intervals are not sampled
        let frac = (T::from_usize(i).unwrap() + T::lit(0.5)) / T::from_usize(points).unwrap();
        let k = lo + (hi - lo) * frac;
        let (lhs, rhs) = extended(p, k, relation);
        let margin = if lhs.is_infinite() && rhs.is_finite() { T::infinity() } else { lhs - rhs };
        if !(lhs > rhs) {
            violations += 1;
        }
        if margin.is_nan() || margin < min_margin {
            min_margin = margin;
        }
    }
    IntervalCheck {
        lo,
        hi,
        relation,
        points,
        violations,
        min_margin,
    }
}

/// Determines which ordering of capacity levels holds and checks, on a grid of
/// `points` capacities per interval, the threshold inequalities associated
/// with that ordering:
///
/// * `K_Q < K_h < K_t`: `I_h > I_f` on `[0, K_Q]`; `I_h > I_f` and
///   `I_f > I_z` on `[K_Q, K_h]`; `I_t > I_z` on `[K_h, K_t]`.
/// * `K_h < K_Q < K_t`: `I_h > I_f` on `[0, K_h]`; `I_t > I_z` on `[K_Q, K_t]`.
pub fn threshold_ordering_case<T: Real>(p: &MarketParams<T>, points: usize) -> OrderingReport<T> {
    let (k_q, k_h, k_t) = capacity_levels(p);
    let z = T::zero();
    let (case, intervals): (OrderingCase, Vec<(T, T, Relation)>) = if k_q < k_h && k_h < k_t {
        (
            OrderingCase::HomeFirst,
            vec![
                (z, k_q, Relation::IhAboveIf),
                (k_q, k_h, Relation::IhAboveIf),
                (k_q, k_h, Relation::IfAboveIz),
                (k_h, k_t, Relation::ItAboveIz),
            ],
        )
    } else if k_h < k_q && k_q < k_t {
        (
            OrderingCase::ForeignFirst,
            vec![(z, k_h, Relation::IhAboveIf), (k_q, k_t, Relation::ItAboveIz)],
        )
    } else {
        (OrderingCase::Unclassified, Vec::new())
    };
    let checks = intervals
        .into_iter()
        .map(|(lo, hi, rel)| check_interval(p, lo, hi, rel, points))
        .collect();
    OrderingReport {
        case,
        k_q,
        k_h,
        k_t,
        checks,
    }
}
