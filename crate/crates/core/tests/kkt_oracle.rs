//! Equilibria checked against the first-order systems solved directly by
//! Gaussian elimination.

use fxduo::equilibrium::{bc_prices, regime_profit};
use fxduo::oracle::random_markets;
use fxduo::thresholds::capacity_levels;
use fxduo::{classify_exact, solve_constrained, solve_unconstrained, Market, Regime};

fn solve_linear<const N: usize>(mut a: [[f64; N]; N], mut b: [f64; N]) -> [f64; N] {
    for col in 0..N {
        let pivot = (col..N).max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap()).unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..N {
            let f = a[row][col] / a[col][col];
            let pivot_row = a[col];
            for (x, p) in a[row].iter_mut().zip(pivot_row).skip(col) {
                *x -= f * p;
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; N];
    for row in (0..N).rev() {
        let tail: f64 = (row + 1..N).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    x
}

/// Both players active, capacity slack: `(p_ei, p_ii)`.
fn interior_unconstrained(m: &Market, rate: f64) -> [f64; 2] {
    let a = (1.0 - m.phi) * m.alpha_i;
    let b = m.phi * m.alpha_i;
    let c = m.c_e + m.s;
    // d/dp_ei: rate (a - 2 p_ei + theta p_ii) + c = 0; d/dp_ii: b - 2 p_ii + theta p_ei + C_i = 0
    solve_linear(
        [[2.0 * rate, -rate * m.theta], [-m.theta, 2.0]],
        [rate * a + c, b + m.c_i],
    )
}

/// Binding capacity with both markets served: `(p_ee, p_ei, p_ii, multiplier)`.
fn interior_binding(m: &Market, rate: f64, k: f64) -> [f64; 4] {
    let a = (1.0 - m.phi) * m.alpha_i;
    let b = m.phi * m.alpha_i;
    let c = m.c_e + m.s;
    let th = m.theta;
    solve_linear(
        [
            [2.0, 0.0, 0.0, -1.0],
            [0.0, 2.0 * rate, -rate * th, -1.0],
            [0.0, -th, 2.0, 0.0],
            [1.0, 1.0, -th, 0.0],
        ],
        [m.alpha_e + m.c_e, rate * a + c, b + m.c_i, m.alpha_e + a - k],
    )
}

/// Binding capacity with everything shipped abroad: `(p_ei, p_ii)`.
fn foreign_only(m: &Market, k: f64) -> [f64; 2] {
    let a = (1.0 - m.phi) * m.alpha_i;
    let b = m.phi * m.alpha_i;
    solve_linear([[1.0, -m.theta], [-m.theta, 2.0]], [a - k, b + m.c_i])
}

fn profit_at(m: &Market, rate: f64, p_ee: f64, p_ei: f64, p_ii: f64) -> f64 {
    let q_ee = m.alpha_e - p_ee;
    let q_ei = (1.0 - m.phi) * m.alpha_i - p_ei + m.theta * p_ii;
    (p_ee - m.c_e) * q_ee + (rate * p_ei - m.c_e - m.s) * q_ei
}

fn baseline() -> Market {
    Market::new(100.0, 120.0, 0.5, 0.5, 20.0, 30.0, 5.0, 10.0).unwrap()
}

#[test]
fn baseline_prices_from_linear_systems() {
    let m = baseline();
    let [p_ei, p_ii] = interior_unconstrained(&m, 1.0);
    let eq = solve_unconstrained(&m, 1.0).unwrap();
    assert!((eq.p_ei - p_ei).abs() < 1e-10 && (eq.p_ii - p_ii).abs() < 1e-10);
    assert!((p_ei - 172.0 / 3.0).abs() < 1e-10);

    let [p_ee, p_ei, p_ii, mult] = interior_binding(&m, 1.0, 30.0);
    let eq = solve_constrained(&m, 1.0, 30.0).unwrap();
    assert_eq!(eq.regime, Regime::BC);
    for (x, y) in [(eq.p_ee, p_ee), (eq.p_ei, p_ei), (eq.p_ii, p_ii), (eq.kkt_multiplier, mult)] {
        assert!((x - y).abs() < 1e-8, "{x} vs {y}");
    }
}

#[test]
fn random_markets_match_the_active_system() {
    for m in random_markets(200, 11) {
        let (_, _, k_t) = capacity_levels(&m);
        for rate in [0.3, 0.7, 1.0, 2.0, 5.0] {
            let free = solve_unconstrained(&m, rate).unwrap();
            if free.regime == Regime::BU && free.q_ii > 0.0 {
                let [p_ei, p_ii] = interior_unconstrained(&m, rate);
                assert!((free.p_ei - p_ei).abs() < 1e-8 && (free.p_ii - p_ii).abs() < 1e-8);
            }
            for share in [0.1, 0.3, 0.6, 0.9] {
                let k = share * k_t;
                let eq = solve_constrained(&m, rate, k).unwrap();
                assert_eq!(eq.regime, classify_exact(&m, rate, k), "{m:?} I={rate} K={k}");
                let (expected, p_ee) = match eq.regime {
                    Regime::BC => {
                        let [p_ee, p_ei, p_ii, mult] = interior_binding(&m, rate, k);
                        assert!((eq.kkt_multiplier - mult).abs() < 1e-7 * (1.0 + mult.abs()));
                        ([p_ei, p_ii], p_ee)
                    }
                    Regime::IC => (foreign_only(&m, k), m.alpha_e),
                    _ => continue,
                };
                assert!((eq.p_ee - p_ee).abs() < 1e-7, "{m:?} I={rate} K={k}");
                assert!((eq.p_ei - expected[0]).abs() < 1e-7, "{m:?} I={rate} K={k}");
                assert!((eq.p_ii - expected[1]).abs() < 1e-7, "{m:?} I={rate} K={k}");
            }
        }
    }
}

#[test]
fn shadow_price_is_the_derivative_of_the_solved_system() {
    for m in random_markets(100, 5) {
        let (_, _, k_t) = capacity_levels(&m);
        for rate in [0.5, 1.0, 3.0] {
            let k = 0.5 * k_t;
            if classify_exact(&m, rate, k) != Regime::BC {
                continue;
            }
            let value = |k: f64| {
                let [p_ee, p_ei, p_ii, _] = interior_binding(&m, rate, k);
                profit_at(&m, rate, p_ee, p_ei, p_ii)
            };
            let h = 1e-3;
            let fd = (value(k + h) - value(k - h)) / (2.0 * h);
            let eq = solve_constrained(&m, rate, k).unwrap();
            assert!((eq.lambda - fd).abs() <= 1e-6 * fd.abs().max(1.0), "{} vs {fd}", eq.lambda);
            let bc = bc_prices(&m, rate, k).unwrap();
            assert!((bc.p_ei - eq.p_ei).abs() < 1e-8);
            assert!((regime_profit(&m, rate, k, Regime::BC) - value(k)).abs() < 1e-7 * value(k).abs().max(1.0));
        }
    }
}

#[test]
fn incumbent_profit_example() {
    let eq = solve_unconstrained(&baseline(), 1.0).unwrap();
    assert!((eq.profit_i - 860.444_444_444).abs() < 1e-6);
    assert!((eq.profit_e - 2_645.444_444_444).abs() < 1e-6);
}

#[test]
fn foreign_only_profit_example() {
    let m = baseline();
    let eq = solve_constrained(&m, 4.0, 30.0).unwrap();
    assert_eq!(eq.regime, Regime::IC);
    assert_eq!(eq.q_ee, 0.0);
    assert!((eq.q_ei - 30.0).abs() < 1e-9);
    let [p_ei, p_ii] = foreign_only(&m, 30.0);
    let direct = profit_at(&m, 4.0, m.alpha_e, p_ei, p_ii);
    assert!((eq.profit_e - direct).abs() < 1e-8);
    assert!((direct - 6450.0).abs() < 1e-8);
}
