//! The commonly known law of private values.
//!
//! Equilibrium math works with the continuous cdf/density; simulation draws
//! integer values, one per grid point, with equal probability.

use rand::Rng;

use crate::error::{Error, Result};

pub trait ValueDistribution: Send + Sync {
    fn lower(&self) -> f64;
    fn upper(&self) -> f64;

    /// Cdf clamped to `[0, 1]` outside the support.
    fn cdf_clamped(&self, theta: f64) -> f64;

    /// Density, zero outside the support.
    fn pdf(&self, theta: f64) -> f64;

    /// Draws one integer value from `{lower, ..., upper}`.
    fn sample_integer<R: Rng + ?Sized>(&self, rng: &mut R) -> u32
    where
        Self: Sized;

    fn cdf(&self, theta: f64) -> Result<f64> {
        self.check(theta)?;
        Ok(self.cdf_clamped(theta))
    }

    fn check(&self, theta: f64) -> Result<()> {
        if !(theta >= self.lower() && theta <= self.upper()) {
            return Err(Error::Domain(format!(
                "value {theta} outside [{}, {}]",
                self.lower(),
                self.upper()
            )));
        }
        Ok(())
    }

    /// Closed form for `E[max of n-1 rivals | max < theta]`, if the law has one.
    fn fp_bid_closed_form(&self, _theta: f64, _n: usize) -> Option<f64> {
        None
    }
}

/// Uniform values on `[lower, upper]` with integer endpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Uniform {
    lower: u32,
    upper: u32,
}

impl Uniform {
    pub fn new(lower: u32, upper: u32) -> Result<Self> {
        if upper <= lower {
            return Err(Error::Domain(format!(
                "uniform support needs lower < upper, got [{lower}, {upper}]"
            )));
        }
        Ok(Uniform { lower, upper })
    }

    /// Uniform on `[0, 100]`.
    pub const fn standard() -> Self {
        Uniform {
            lower: 0,
            upper: 100,
        }
    }

    fn width(&self) -> f64 {
        f64::from(self.upper - self.lower)
    }
}

impl Default for Uniform {
    fn default() -> Self {
        Self::standard()
    }
}

impl ValueDistribution for Uniform {
    fn lower(&self) -> f64 {
        f64::from(self.lower)
    }

    fn upper(&self) -> f64 {
        f64::from(self.upper)
    }

    fn cdf_clamped(&self, theta: f64) -> f64 {
        ((theta - self.lower()) / self.width()).clamp(0.0, 1.0)
    }

    fn pdf(&self, theta: f64) -> f64 {
        if theta < self.lower() || theta > self.upper() {
            0.0
        } else {
            1.0 / self.width()
        }
    }

    fn sample_integer<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        rng.gen_range(self.lower..=self.upper)
    }

    fn fp_bid_closed_form(&self, theta: f64, n: usize) -> Option<f64> {
        let m = (n - 1) as f64;
        Some(self.lower() + m / (m + 1.0) * (theta - self.lower()))
    }
}
