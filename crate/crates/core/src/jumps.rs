//! The mark law H of the unnormalized jumps and its transforms.
//!
//! Jumps are Gamma(shape, rate); this keeps every tilted quantity in closed
//! form: the Laplace transform psi(u), the tilted moments
//! kappa(u, n) = int e^{-us} s^n H(ds), and exponentially tilted sampling,
//! which is again Gamma by conjugacy. Non-Gamma jump laws would plug in here
//! as an alternative implementation of the same accessors, but none is
//! provided.

use crate::{Error, Result};
use rand::Rng;
use rand_distr::{Distribution, Gamma};
use statrs::function::gamma::ln_gamma;

/// Gamma(shape `alpha`, rate `theta`) law of the i.i.d. jumps.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct JumpModel {
    pub shape: f64,
    pub rate: f64,
}

impl JumpModel {
    pub fn new(shape: f64, rate: f64) -> Result<Self> {
        if !(shape > 0.0 && shape.is_finite()) || !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "JumpModel: shape and rate must be positive, got ({shape}, {rate})"
            )));
        }
        Ok(Self { shape, rate })
    }

    /// E[S] = shape / rate.
    pub fn mean(&self) -> f64 {
        self.shape / self.rate
    }

    /// E[S^2].
    pub fn second_moment(&self) -> f64 {
        let m = self.mean();
        m * m + self.shape / (self.rate * self.rate)
    }

    /// Laplace transform psi(u) = E[e^{-uS}] = (1 + u/rate)^{-shape}.
    pub fn psi(&self, u: f64) -> Result<f64> {
        Ok(self.log_psi(u)?.exp())
    }

    /// log psi(u); preferred in products over many atoms.
    pub fn log_psi(&self, u: f64) -> Result<f64> {
        if u < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "psi: u must be nonnegative, got {u}"
            )));
        }
        Ok(-self.shape * (u / self.rate).ln_1p())
    }

    /// kappa(u, n) = int e^{-us} s^n H(ds)
    ///             = (shape)_n rate^shape / (rate + u)^{shape + n}.
    pub fn kappa(&self, u: f64, n: usize) -> Result<f64> {
        Ok(self.log_kappa(u, n)?.exp())
    }

    /// log kappa(u, n) in overflow-safe form; kappa(u, 0) = psi(u).
    pub fn log_kappa(&self, u: f64, n: usize) -> Result<f64> {
        if u < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "kappa: u must be nonnegative, got {u}"
            )));
        }
        let a = self.shape;
        let t = self.rate;
        let log_poch = ln_gamma(a + n as f64) - ln_gamma(a);
        Ok(log_poch + a * t.ln() - (a + n as f64) * (t + u).ln())
    }

    /// kappa(u, n + 1) / kappa(u, n) = (shape + n) / (rate + u), exact.
    ///
    /// Exposed separately so predictive weights never form the ratio of two
    /// nearly-cancelling kappa values.
    pub fn kappa_ratio(&self, u: f64, n: usize) -> f64 {
        (self.shape + n as f64) / (self.rate + u)
    }

    /// A draw from the density proportional to e^{-us} s^n h(s), i.e.,
    /// Gamma(shape + n, rate + u). With n = 0 this is the exponential
    /// tilting of S; with u = 0, n = 0 the prior itself.
    pub fn sample_jump<R: Rng + ?Sized>(&self, u: f64, n: usize, rng: &mut R) -> Result<f64> {
        if u < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "sample_jump: u must be nonnegative, got {u}"
            )));
        }
        let g = Gamma::new(self.shape + n as f64, 1.0 / (self.rate + u))
            .map_err(|e| Error::InvalidParameter(format!("sample_jump: {e}")))?;
        Ok(g.sample(rng).max(f64::MIN_POSITIVE))
    }
}
