//! Exchange rate as geometric Brownian motion observed at a single horizon.
//!
//! With `B(t) = eps * sqrt(t)` the rate at the horizon is
//! `I(t) = I0 * exp((mu - sigma^2 / 2) t + sigma * eps * sqrt(t))`, so `I(t)` is
//! lognormal and every expectation over the rate can be taken in `eps`-space
//! against the standard normal density.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::scalar::Real;

/// Draws per independently seeded substream.
const SUBSTREAM_LEN: usize = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbmModel<T> {
    /// Initial rate, home currency per unit of foreign currency.
    pub i0: T,
    /// Drift per unit time.
    pub mu: T,
    /// Volatility per square-root time.
    pub sigma: T,
    /// Horizon.
    pub t: T,
}

impl<T: Real> GbmModel<T> {
    pub fn new(i0: T, mu: T, sigma: T, t: T) -> Result<Self> {
        let model = Self { i0, mu, sigma, t };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.i0 > T::zero()) || !self.i0.is_finite() {
            return Err(domain("I0", "positive and finite", self.i0.to_f64_lossy()));
        }
        if !(self.t > T::zero()) || !self.t.is_finite() {
            return Err(domain("t", "positive and finite", self.t.to_f64_lossy()));
        }
        if !(self.sigma >= T::zero()) || !self.sigma.is_finite() {
            return Err(domain("sigma", "non-negative and finite", self.sigma.to_f64_lossy()));
        }
        if !self.mu.is_finite() {
            return Err(domain("mu", "finite", self.mu.to_f64_lossy()));
        }
        Ok(())
    }

    pub fn is_deterministic(&self) -> bool {
        self.sigma == T::zero()
    }

    /// Mean of `ln I(t)`.
    pub fn log_mean(&self) -> T {
        self.i0.ln() + (self.mu - self.sigma * self.sigma / T::two()) * self.t
    }

    /// Standard deviation of `ln I(t)`.
    pub fn log_sd(&self) -> T {
        self.sigma * self.t.sqrt()
    }

    /// `E[I(t)] = I0 e^(mu t)`; also the rate itself when `sigma = 0`.
    pub fn mean(&self) -> T {
        self.i0 * (self.mu * self.t).exp()
    }

    pub fn rate_at(&self, epsilon: T) -> Result<T> {
        self.validate()?;
        Ok(self.rate_unchecked(epsilon))
    }

    pub(crate) fn rate_unchecked(&self, epsilon: T) -> T {
        (self.log_mean() + self.log_sd() * epsilon).exp()
    }

    /// Lognormal density of `I(t)` at `rate`.
    pub fn density(&self, rate: T) -> Result<T> {
        self.validate()?;
        if !(rate > T::zero()) {
            return Err(domain("rate", "positive", rate.to_f64_lossy()));
        }
        if self.is_deterministic() {
            return Err(Error::Degenerate(
                "sigma = 0 has no density; use the deterministic rate",
            ));
        }
        let sd = self.log_sd();
        let z = (rate.ln() - self.log_mean()) / sd;
        Ok(standard_normal_pdf(z) / (rate * sd))
    }

    /// Inverse of [`GbmModel::rate_at`].
    pub fn epsilon_for_rate(&self, rate: T) -> Result<T> {
        self.validate()?;
        if !(rate > T::zero()) {
            return Err(domain("rate", "positive", rate.to_f64_lossy()));
        }
        if self.is_deterministic() {
            return Err(Error::Degenerate("sigma = 0 has no inverse rate map"));
        }
        Ok(self.epsilon_unchecked(rate))
    }

    pub(crate) fn epsilon_unchecked(&self, rate: T) -> T {
        (rate.ln() - self.log_mean()) / self.log_sd()
    }

    /// `n` reproducible draws of `I(t)`.
    ///
    /// Draw `k` comes from substream `k / 16384` of a ChaCha8 generator keyed
    /// by `seed`, so the sequence does not depend on how the work is split
    /// across threads.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<T>> {
        self.validate()?;
        if n == 0 {
            return Err(Error::Empty("sample size must be at least 1"));
        }
        if self.is_deterministic() {
            return Ok(vec![self.mean(); n]);
        }
        let chunks = n.div_ceil(SUBSTREAM_LEN);
        let out: Vec<Vec<T>> = (0..chunks)
            .into_par_iter()
            .map(|chunk| {
                let len = SUBSTREAM_LEN.min(n - chunk * SUBSTREAM_LEN);
                standard_normals(seed, chunk as u64, len)
                    .into_iter()
                    .map(|eps| self.rate_unchecked(T::lit(eps)))
                    .collect()
            })
            .collect();
        Ok(out.into_iter().flatten().collect())
    }

    /// `E[I(t)^power ; eps > eps_lo]`, the partial moment above a cut.
    pub(crate) fn upper_partial_moment(&self, power: i32, eps_lo: T) -> T {
        let k = T::from_i32(power).unwrap();
        let a = k * self.log_sd();
        let scale = (k * self.log_mean() + a * a / T::two()).exp();
        scale * standard_normal_sf(eps_lo - a)
    }

    /// `E[I(t)^power ; eps < eps_hi]`.
    pub(crate) fn lower_partial_moment(&self, power: i32, eps_hi: T) -> T {
        let k = T::from_i32(power).unwrap();
        let a = k * self.log_sd();
        let scale = (k * self.log_mean() + a * a / T::two()).exp();
        scale * standard_normal_sf(a - eps_hi)
    }
}

pub(crate) fn standard_normals(seed: u64, stream: u64, len: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    (0..len).map(|_| StandardNormal.sample(&mut rng)).collect()
}

pub fn standard_normal_pdf<T: Real>(x: T) -> T {
    let inv_sqrt_2pi = T::lit(0.398_942_280_401_432_7);
    inv_sqrt_2pi * (-x * x / T::two()).exp()
}

/// `P(Z > x)` for standard normal `Z`.
pub fn standard_normal_sf<T: Real>(x: T) -> T {
    let v = x.to_f64_lossy() / std::f64::consts::SQRT_2;
    T::lit(0.5 * statrs::function::erf::erfc(v))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> GbmModel<f64> {
        GbmModel::new(1.0, 0.05, 0.2, 1.0).unwrap()
    }

    #[test]
    fn rate_examples() {
        let m = base();
        assert!((m.rate_at(0.0).unwrap() - 0.03f64.exp()).abs() < 1e-15);
        assert!((m.rate_at(0.0).unwrap() - 1.030455).abs() < 1e-6);
        assert!((m.rate_at(1.0).unwrap() - 1.258600).abs() < 1e-6);
        let flat = GbmModel::new(1.0, 0.0, 0.0, 5.0).unwrap();
        assert_eq!(flat.rate_at(3.7).unwrap(), 1.0);
    }

    #[test]
    fn invalid_models_rejected() {
        assert!(GbmModel::new(0.0, 0.0, 0.1, 1.0).is_err());
        assert!(GbmModel::new(1.0, 0.0, -0.1, 1.0).is_err());
        assert!(GbmModel::new(1.0, 0.0, 0.1, 0.0).is_err());
        let bad = GbmModel {
            i0: -1.0,
            mu: 0.0,
            sigma: 0.1,
            t: 1.0,
        };
        assert!(matches!(bad.rate_at(0.0), Err(Error::Domain { name: "I0", .. })));
    }

    #[test]
    fn density_at_median() {
        let m = base();
        let d = m.density(0.03f64.exp()).unwrap();
        assert!((d - 1.9358).abs() < 1e-4, "{d}");
        let m2 = GbmModel::new(2.0, 0.0, 0.3, 1.0).unwrap();
        assert!(m2.density(1e-12).unwrap() < 1e-100);
        assert!(m.density(0.0).is_err());
        let flat = GbmModel::new(1.0, 0.0, 0.0, 1.0).unwrap();
        assert!(matches!(flat.density(1.0), Err(Error::Degenerate(_))));
    }

    #[test]
    fn epsilon_inverts_rate() {
        let m = base();
        assert!(m.epsilon_for_rate(0.03f64.exp()).unwrap().abs() < 1e-12);
        assert!((m.epsilon_for_rate(0.23f64.exp()).unwrap() - 1.0).abs() < 1e-12);
        let flat = GbmModel::new(1.0, 0.0, 0.0, 1.0).unwrap();
        assert!(flat.epsilon_for_rate(1.0).is_err());
    }

    #[test]
    fn sampling_contract() {
        let m = base();
        let a = m.sample(50_000, 7).unwrap();
        let b = m.sample(50_000, 7).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, m.sample(50_000, 8).unwrap());
        // prefix stability across sizes
        assert_eq!(&a[..1000], &m.sample(1000, 7).unwrap()[..]);
        assert!(matches!(m.sample(0, 1), Err(Error::Empty(_))));
        let flat = GbmModel::new(1.5, 0.1, 0.0, 2.0).unwrap();
        let s = flat.sample(10, 3).unwrap();
        assert!(s.iter().all(|&r| r == 1.5 * 0.2f64.exp()));
    }

    #[test]
    fn partial_moments_match_full_moments() {
        let m = base();
        let full = m.upper_partial_moment(1, -40.0);
        assert!((full - m.mean()).abs() < 1e-12);
        let zeroth = m.upper_partial_moment(0, 0.0);
        assert!((zeroth - 0.5).abs() < 1e-15);
        let inv = m.upper_partial_moment(-1, -40.0);
        let expect = (-m.log_mean() + m.log_sd().powi(2) / 2.0).exp();
        assert!((inv - expect).abs() < 1e-12);
    }

    #[test]
    fn works_in_single_precision() {
        let m = GbmModel::<f32>::new(1.0, 0.05, 0.2, 1.0).unwrap();
        assert!((m.rate_at(1.0).unwrap() - 1.2586).abs() < 1e-4);
    }
}
