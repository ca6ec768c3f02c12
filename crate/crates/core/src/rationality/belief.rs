//! What a bidder believes about winning with a given bid.
//!
//! Builders only need two numbers per observation: the log probability of
//! winning with the observed bid, and the slope of that log probability,
//! which becomes the supergradient of log utility at the optimum.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::sync::Arc;

use statrs::function::erf::erfc;

use crate::dist::ValueDistribution;
use crate::equilibrium::fp_bid;
use crate::error::{Error, Result};

pub trait WinBelief: Send + Sync {
    /// `ln P(b)` at an observation. May be `-inf` when winning is impossible.
    fn log_win_prob(&self, theta: f64, bid: f64) -> f64;

    /// `P'(b) / P(b)` at an observation. Non-finite when undefined.
    fn supergradient(&self, theta: f64, bid: f64) -> f64;
}

/// Belief that every rival plays a symmetric increasing equilibrium, so a
/// type-`θ` bidder wins with probability `F^{n-1}(θ)`.
#[derive(Clone)]
pub struct EquilibriumBelief {
    dist: Arc<dyn ValueDistribution>,
    n: usize,
    jacobian: bool,
}

impl std::fmt::Debug for EquilibriumBelief {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EquilibriumBelief")
            .field("support", &(self.dist.lower(), self.dist.upper()))
            .field("n", &self.n)
            .field("jacobian", &self.jacobian)
            .finish()
    }
}

impl EquilibriumBelief {
    /// Supergradient `(n-1) f(θ)/F(θ)`.
    pub fn new(dist: Arc<dyn ValueDistribution>, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Domain(format!("need at least 2 bidders, got {n}")));
        }
        Ok(EquilibriumBelief {
            dist,
            n,
            jacobian: false,
        })
    }

    /// Variant whose supergradient carries the factor `dθ/db` of the
    /// risk-neutral first-price equilibrium, i.e. the slope of `ln P` in the
    /// bid rather than in the value.
    pub fn with_jacobian(mut self, on: bool) -> Self {
        self.jacobian = on;
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn bid_slope(&self, theta: f64) -> f64 {
        let (lo, hi) = (self.dist.lower(), self.dist.upper());
        let h = 1e-4 * (hi - lo);
        let a = (theta - h).max(lo);
        let b = (theta + h).min(hi);
        match (
            fp_bid(a, &*self.dist, self.n),
            fp_bid(b, &*self.dist, self.n),
        ) {
            (Ok(x), Ok(y)) => (y - x) / (b - a),
            _ => f64::NAN,
        }
    }
}

impl WinBelief for EquilibriumBelief {
    fn log_win_prob(&self, theta: f64, _bid: f64) -> f64 {
        (self.n - 1) as f64 * self.dist.cdf_clamped(theta).ln()
    }

    fn supergradient(&self, theta: f64, _bid: f64) -> f64 {
        let big_f = self.dist.cdf_clamped(theta);
        let rho = (self.n - 1) as f64 * self.dist.pdf(theta) / big_f;
        if self.jacobian {
            rho / self.bid_slope(theta)
        } else {
            rho
        }
    }
}

/// Belief that each rival bid is an independent draw from the population of
/// observed bids, smoothed with a Gaussian kernel.
#[derive(Debug, Clone)]
pub struct PopulationBelief {
    sample: Vec<f64>,
    bandwidth: f64,
    n: usize,
}

impl PopulationBelief {
    pub fn new(sample: Vec<f64>, bandwidth: f64, n: usize) -> Result<Self> {
        if sample.is_empty() {
            return Err(Error::Domain("empty pooled bid sample".into()));
        }
        if sample.iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain("non-finite pooled bid".into()));
        }
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(Error::Domain(format!(
                "bandwidth must be positive, got {bandwidth}"
            )));
        }
        if n < 2 {
            return Err(Error::Domain(format!("need at least 2 bidders, got {n}")));
        }
        Ok(PopulationBelief {
            sample,
            bandwidth,
            n,
        })
    }

    /// Kernel estimate with Silverman's bandwidth.
    pub fn silverman(sample: Vec<f64>, n: usize) -> Result<Self> {
        let h = silverman_bandwidth(&sample)?;
        Self::new(sample, h, n)
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    /// Smoothed cdf of a rival's bid.
    pub fn cdf(&self, b: f64) -> f64 {
        let s: f64 = self
            .sample
            .iter()
            .map(|x| 0.5 * erfc(-(b - x) / self.bandwidth * FRAC_1_SQRT_2))
            .sum();
        (s / self.sample.len() as f64).min(1.0)
    }

    pub fn pdf(&self, b: f64) -> f64 {
        let norm = 1.0 / ((2.0 * PI).sqrt() * self.bandwidth * self.sample.len() as f64);
        self.sample
            .iter()
            .map(|x| {
                let z = (b - x) / self.bandwidth;
                (-0.5 * z * z).exp()
            })
            .sum::<f64>()
            * norm
    }
}

impl WinBelief for PopulationBelief {
    fn log_win_prob(&self, _theta: f64, bid: f64) -> f64 {
        (self.n - 1) as f64 * self.cdf(bid).ln()
    }

    fn supergradient(&self, _theta: f64, bid: f64) -> f64 {
        (self.n - 1) as f64 * self.pdf(bid) / self.cdf(bid)
    }
}

/// `1.06 σ̂ m^{-1/5}`.
pub fn silverman_bandwidth(sample: &[f64]) -> Result<f64> {
    let m = sample.len();
    if m < 2 {
        return Err(Error::UndefinedStatistic(
            "bandwidth needs at least two pooled bids".into(),
        ));
    }
    let mean = sample.iter().sum::<f64>() / m as f64;
    let var = sample.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1) as f64;
    let h = 1.06 * var.sqrt() * (m as f64).powf(-0.2);
    if !(h > 0.0) {
        return Err(Error::UndefinedStatistic(
            "pooled bids have zero spread".into(),
        ));
    }
    Ok(h)
}
