//! Cross-checks of the closed forms against the brute-force references.

use fxduo::capacity::CapacityProblem;
use fxduo::equilibrium::{bc_prices_with, IncumbentBase};
use fxduo::quadrature::{integrate, Tolerance};
use fxduo::thresholds::{capacity_levels, compute_thresholds_with, ThresholdForm};
use fxduo::{
    compute_thresholds, grid_equilibrium, mc_expected_profit, numeric_threshold, solve_constrained,
    solve_unconstrained, ThresholdName,
};

use crate::error::CliError;
use crate::fmt::num;
use crate::scenario::Scenario;

pub const GRID_STEP: f64 = 1e-3;
pub const PRICE_TOL: f64 = 2e-3;
pub const DERIVATIVE_TOL: f64 = 1e-5;
pub const THRESHOLD_TOL: f64 = 1e-6;
pub const FOC_TOL: f64 = 1e-6;
pub const DENSITY_TOL: f64 = 1e-8;
pub const ROUND_TRIP_TOL: f64 = 1e-12;
pub const RATES: [f64; 3] = [0.3, 1.0, 3.0];
pub const CAPACITY_SHARES: [f64; 3] = [0.3, 0.6, 0.9];

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub delta: f64,
    pub tol: f64,
}

impl Check {
    pub fn pass(&self) -> bool {
        self.delta <= self.tol
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
}

impl Report {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(Check::pass)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let tag = if c.pass() { "PASS" } else { "FAIL" };
            out.push_str(&format!("{tag} {} delta={} tol={}\n", c.name, num(c.delta), num(c.tol)));
        }
        for n in &self.notes {
            out.push_str(&format!("NOTE {n}\n"));
        }
        let failed = self.checks.iter().filter(|c| !c.pass()).count();
        out.push_str(&format!("{} checks, {failed} failed\n", self.checks.len()));
        out
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

fn price_gap(a: &fxduo::Outcome, b: &fxduo::Outcome) -> f64 {
    (a.p_ee - b.p_ee).abs().max((a.p_ei - b.p_ei).abs()).max((a.p_ii - b.p_ii).abs())
}

/// Runs every check at `capacity` (default: three quarters of the smaller of
/// `K_Q` and `K_h`).
pub fn run(s: &Scenario, capacity: Option<f64>, seed: u64, samples: usize) -> Result<Report, CliError> {
    let p = &s.market;
    let (k_q, k_h, k_t) = capacity_levels(p);
    let k = capacity.unwrap_or(0.75 * k_q.min(k_h));
    let mut checks = Vec::new();
    let mut notes = Vec::new();
    let mut push = |name: String, delta: f64, tol: f64| checks.push(Check { name, delta, tol });

    for rate in RATES {
        let closed = solve_unconstrained(p, rate)?;
        let grid = grid_equilibrium(p, rate, None, GRID_STEP)?;
        push(format!("unconstrained_vs_grid I={}", num(rate)), price_gap(&closed, &grid), PRICE_TOL);
        for share in CAPACITY_SHARES {
            let cap = share * k_t;
            let closed = solve_constrained(p, rate, cap)?;
            let grid = grid_equilibrium(p, rate, Some(cap), GRID_STEP)?;
            push(
                format!("constrained_vs_grid I={} K={}", num(rate), num(cap)),
                price_gap(&closed, &grid),
                PRICE_TOL,
            );
        }
    }

    for rate in RATES {
        let h = 1e-4 * k;
        let up = solve_constrained(p, rate, k + h)?.profit_e;
        let dn = solve_constrained(p, rate, k - h)?.profit_e;
        let lambda = solve_constrained(p, rate, k)?.lambda;
        push(
            format!("shadow_price_vs_difference I={} K={}", num(rate), num(k)),
            rel(lambda, (up - dn) / (2.0 * h)),
            DERIVATIVE_TOL,
        );
    }

    let analytic = compute_thresholds(p, k);
    // the binding boundary only exists once home demand alone fits
    let k_bind = if k >= k_q { k } else { 0.5 * (k_q.max(k_h) + k_t) };
    for (which, cap) in [
        (ThresholdName::Iz, 0.0),
        (ThresholdName::It, k_bind),
        (ThresholdName::If, k),
        (ThresholdName::Ih, k),
    ] {
        match compute_thresholds(p, cap).get(which) {
            Some(value) => {
                let bisected = numeric_threshold(p, cap, which)?;
                push(format!("threshold_{which} K={}", num(cap)), (bisected - value).abs() / value, THRESHOLD_TOL);
            }
            None => notes.push(format!("{which} does not exist at K={}", num(cap))),
        }
    }

    let problem = CapacityProblem::new(*p, s.rate)?.with_discount(s.discount)?;
    let quad = problem.expected_profit(k)?;
    let mc = if s.discount == 1.0 {
        Some(mc_expected_profit(p, &s.rate, k, samples, seed)?)
    } else {
        notes.push("Monte Carlo comparison skipped for a discounted scenario".into());
        None
    };
    if let Some(mc) = mc {
        push(
            format!("quadrature_vs_monte_carlo K={} se={}", num(k), num(mc.std_error)),
            (quad - mc.mean).abs(),
            3.0 * mc.std_error,
        );
        if mc.failures > 0 {
            notes.push(format!("{} Monte Carlo samples failed to solve", mc.failures));
        }
    }

    let plan = problem.optimize()?;
    for cap in [k, 0.5 * (k_q + k_h).min(k_t), plan.k_star] {
        if cap <= 0.0 {
            continue;
        }
        let h = 1e-4 * cap;
        let fd = (problem.expected_profit(cap + h)? - problem.expected_profit(cap - h)?) / (2.0 * h);
        push(
            format!("foc_vs_difference K={}", num(cap)),
            rel(problem.foc_residual(cap)?, fd),
            DERIVATIVE_TOL,
        );
    }
    if !plan.at_boundary {
        push(format!("foc_at_optimum K={}", num(plan.k_star)), plan.foc_residual.abs(), FOC_TOL);
    }

    if !s.rate.is_deterministic() {
        let draws = s.rate.sample(samples, seed)?;
        let n = draws.len() as f64;
        let mean = draws.iter().sum::<f64>() / n;
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        push(
            format!("rate_sample_mean n={samples}"),
            (mean - s.rate.mean()).abs(),
            3.0 * (var / n).sqrt(),
        );
        let g = s.rate;
        let scale = g.sigma * g.t.sqrt();
        let mass = integrate(
            |eps: f64| {
                let rate = g.rate_at(eps).unwrap_or(f64::NAN);
                g.density(rate).unwrap_or(f64::NAN) * rate * scale
            },
            -12.0,
            12.0,
            &Tolerance::default(),
        )?;
        push("rate_density_mass".into(), (mass - 1.0).abs(), DENSITY_TOL);
        let mut worst: f64 = 0.0;
        for i in 0..=160 {
            let eps = -8.0 + 0.1 * i as f64;
            worst = worst.max((g.epsilon_for_rate(g.rate_at(eps)?)? - eps).abs());
        }
        push("rate_round_trip".into(), worst, ROUND_TRIP_TOL);
    }

    // variants of the closed forms that do not match the solver
    if let Some(ih) = analytic.i_h {
        let variant = compute_thresholds_with(p, k, ThresholdForm::AlphaEDenominator).i_h;
        notes.push(match variant {
            Some(v) => format!("I_h with alpha_e mass = {} vs {} (gap {})", num(v), num(ih), num(rel(v, ih))),
            None => format!("I_h with alpha_e mass does not exist; consistent form gives {}", num(ih)),
        });
    }
    let (lo, hi) = (analytic.i_f, analytic.i_h);
    if let (Some(lo), Some(hi)) = (lo, hi) {
        let rate = (lo * hi).sqrt();
        let solved = solve_constrained(p, rate, k)?;
        let variant = bc_prices_with(p, rate, k, IncumbentBase::PhiAlphaE)?;
        notes.push(format!(
            "BC p_ii with phi*alpha_e base at I={} = {} vs {} (gap {})",
            num(rate),
            num(variant.p_ii),
            num(solved.p_ii),
            num((variant.p_ii - solved.p_ii).abs())
        ));
    }
    if let Some(ih) = analytic.i_h {
        let rate = 1.5 * ih;
        let r = p.reduced_det();
        let base = rate * (p.entry_mass() - 4.0 * k) / r;
        let h = 1e-4 * k;
        let fd = (solve_constrained(p, rate, k + h)?.profit_e - solve_constrained(p, rate, k - h)?.profit_e) / (2.0 * h);
        let sign_variant = base - (p.s - p.c_e);
        let consistent = base - (p.c_e + p.s);
        notes.push(format!(
            "IC dprofit/dK at I={}: cost -(C_e+s) gives {}, cost -C_e+s gives {}, difference quotient {}",
            num(rate),
            num(consistent),
            num(sign_variant),
            num(fd)
        ));
    }

    Ok(Report { checks, notes })
}
