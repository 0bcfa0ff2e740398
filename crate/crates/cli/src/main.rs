#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fxduo::capacity::CapacityProblem;
use fxduo::thresholds::capacity_levels;
use fxduo::{classify_regime, compute_thresholds, solve_constrained, solve_unconstrained, threshold_ordering_case};
use rayon::prelude::*;

mod error;
mod fmt;
mod scenario;
mod validate;

use error::CliError;
use fmt::{num, opt};
use scenario::Scenario;

#[derive(Parser)]
#[command(name = "fxd", version, about = "Entry, pricing and capacity under exchange-rate risk")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct ScenarioArg {
    /// Scenario file (`key = value` lines)
    #[arg(long)]
    scenario: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Equilibrium at one exchange rate, with or without a capacity limit
    Eq {
        #[command(flatten)]
        scenario: ScenarioArg,
        #[arg(long, allow_negative_numbers = true)]
        rate: f64,
        #[arg(long, allow_negative_numbers = true)]
        capacity: Option<f64>,
    },
    /// Regime thresholds for a capacity (default 0)
    Thresholds {
        #[command(flatten)]
        scenario: ScenarioArg,
        #[arg(long, allow_negative_numbers = true)]
        capacity: Option<f64>,
    },
    /// Regime at one (rate, capacity) point
    Classify {
        #[command(flatten)]
        scenario: ScenarioArg,
        #[arg(long, allow_negative_numbers = true)]
        rate: f64,
        #[arg(long, allow_negative_numbers = true)]
        capacity: f64,
    },
    /// CSV regime map over a rate x capacity grid
    Regions {
        #[command(flatten)]
        scenario: ScenarioArg,
        #[arg(long, default_value_t = 0.05, allow_negative_numbers = true)]
        imin: f64,
        #[arg(long, default_value_t = 5.0, allow_negative_numbers = true)]
        imax: f64,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        kmin: f64,
        #[arg(long, default_value_t = 100.0, allow_negative_numbers = true)]
        kmax: f64,
        /// Points per axis
        #[arg(long, default_value_t = 100)]
        resolution: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Optimal capacity and the capacity-cost thresholds
    Optimize {
        #[command(flatten)]
        scenario: ScenarioArg,
    },
    /// Closed forms against grid, Monte Carlo and bisection references
    Validate {
        #[command(flatten)]
        scenario: ScenarioArg,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 200_000)]
        samples: usize,
        #[arg(long, allow_negative_numbers = true)]
        capacity: Option<f64>,
    },
    /// Draws of the exchange rate, one per line
    Sample {
        #[command(flatten)]
        scenario: ScenarioArg,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn emit(out: Option<&PathBuf>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Io(e.to_string())),
    }
}

fn json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("plain data serializes")
}

fn run(command: Command) -> Result<u8, CliError> {
    match command {
        Command::Eq { scenario, rate, capacity } => {
            let s = Scenario::load(&scenario.scenario)?;
            let eq = match capacity {
                Some(k) => solve_constrained(&s.market, rate, k)?,
                None => solve_unconstrained(&s.market, rate)?,
            };
            let mut text = format!("regime   {}\n", eq.regime);
            for (name, v) in [
                ("p_ee", eq.p_ee),
                ("p_ei", eq.p_ei),
                ("p_ii", eq.p_ii),
                ("q_ee", eq.q_ee),
                ("q_ei", eq.q_ei),
                ("q_ii", eq.q_ii),
                ("profit_e", eq.profit_e),
                ("profit_i", eq.profit_i),
                ("lambda", eq.lambda),
                ("kkt", eq.kkt_multiplier),
            ] {
                text.push_str(&format!("{name:<8} {}\n", num(v)));
            }
            text.push_str(&json(&eq));
            text.push('\n');
            emit(None, &text)?;
        }
        Command::Thresholds { scenario, capacity } => {
            let s = Scenario::load(&scenario.scenario)?;
            let k = capacity.unwrap_or(0.0);
            if !(k >= 0.0) || !k.is_finite() {
                return Err(CliError::Usage(format!("capacity must be non-negative (got {k})")));
            }
            let t = compute_thresholds(&s.market, k);
            let order = threshold_ordering_case(&s.market, 50);
            let mut text = String::new();
            for (name, v) in [
                ("I_z", t.i_z),
                ("I_v", t.i_v),
                ("I_t", t.i_t),
                ("I_f", t.i_f),
                ("I_h", t.i_h),
                ("C_v", Some(t.c_v)),
                ("K_Q", Some(t.k_q)),
                ("K_h", Some(t.k_h)),
                ("K_t", Some(t.k_t)),
            ] {
                text.push_str(&format!("{name:<4} {}\n", v.map(num).unwrap_or_else(|| "n/a".into())));
            }
            text.push_str(&format!("case {:?}\n", order.case));
            for c in &order.checks {
                text.push_str(&format!(
                    "{} on [{}, {}]: {} of {} points violate, min margin {}\n",
                    c.relation,
                    num(c.lo),
                    num(c.hi),
                    c.violations,
                    c.points,
                    num(c.min_margin)
                ));
            }
            text.push_str(&json(&t));
            text.push('\n');
            emit(None, &text)?;
        }
        Command::Classify { scenario, rate, capacity } => {
            let s = Scenario::load(&scenario.scenario)?;
            emit(None, &format!("{}\n", classify_regime(&s.market, rate, capacity)?))?;
        }
        Command::Regions {
            scenario,
            imin,
            imax,
            kmin,
            kmax,
            resolution,
            out,
        } => {
            let s = Scenario::load(&scenario.scenario)?;
            if !(imin > 0.0 && imax > imin && kmin >= 0.0 && kmax > kmin) || !(imax.is_finite() && kmax.is_finite()) {
                return Err(CliError::Usage("ranges must satisfy 0 < imin < imax and 0 <= kmin < kmax".into()));
            }
            if resolution < 2 {
                return Err(CliError::Usage("resolution must be at least 2".into()));
            }
            let axis = |lo: f64, hi: f64, i: usize| lo + (hi - lo) * i as f64 / (resolution - 1) as f64;
            let rows: Vec<String> = (0..resolution)
                .into_par_iter()
                .map(|ki| -> Result<String, CliError> {
                    let k = axis(kmin, kmax, ki);
                    let t = compute_thresholds(&s.market, k);
                    let tail = format!("{},{},{},{}", opt(t.i_z), opt(t.i_t), opt(t.i_f), opt(t.i_h));
                    let mut block = String::new();
                    for ii in 0..resolution {
                        let rate = axis(imin, imax, ii);
                        let regime = classify_regime(&s.market, rate, k)?;
                        block.push_str(&format!("{},{},{regime},{tail}\n", num(rate), num(k)));
                    }
                    Ok(block)
                })
                .collect::<Result<_, _>>()?;
            let mut text = String::from("I,K,regime,I_z,I_t,I_f,I_h\n");
            text.extend(rows);
            emit(out.as_ref(), &text)?;
        }
        Command::Optimize { scenario } => {
            let s = Scenario::load(&scenario.scenario)?;
            let problem = CapacityProblem::new(s.market, s.rate)?.with_discount(s.discount)?;
            let plan = problem.optimize()?;
            let costs = problem.cost_thresholds()?;
            let (k_q, k_h, k_t) = capacity_levels(&s.market);
            let mut text = String::new();
            for (name, v) in [
                ("k_star", num(plan.k_star)),
                ("expected_profit", num(plan.expected_profit)),
                ("foc_residual", num(plan.foc_residual)),
                ("bracket", format!("[{}, {}]", num(plan.bracket.0), num(plan.bracket.1))),
                ("at_boundary", plan.at_boundary.to_string()),
                ("objective_form", format!("{:?}", plan.objective_form)),
                ("K_Q", num(k_q)),
                ("K_h", num(k_h)),
                ("K_t", num(k_t)),
                ("u_t1", costs.u_t1.map(num).unwrap_or_else(|| "out of range".into())),
                ("u_t2", costs.u_t2.map(num).unwrap_or_else(|| "out of range".into())),
                ("u_t1 > u_t2", costs.ordered().to_string()),
            ] {
                text.push_str(&format!("{name:<16} {v}\n"));
            }
            text.push_str(&json(&plan));
            text.push('\n');
            emit(None, &text)?;
        }
        Command::Validate {
            scenario,
            seed,
            samples,
            capacity,
        } => {
            let s = Scenario::load(&scenario.scenario)?;
            if samples < 1000 {
                return Err(CliError::Usage(format!("samples must be at least 1000 (got {samples})")));
            }
            let report = validate::run(&s, capacity, seed, samples)?;
            emit(None, &report.render())?;
            return Ok(if report.all_pass() { 0 } else { 1 });
        }
        Command::Sample {
            scenario,
            seed,
            samples,
            out,
        } => {
            let s = Scenario::load(&scenario.scenario)?;
            let draws = s.rate.sample(samples, seed)?;
            let mut text = String::with_capacity(draws.len() * 16);
            for x in draws {
                text.push_str(&num(x));
                text.push('\n');
            }
            emit(out.as_ref(), &text)?;
        }
    }
    Ok(0)
}
