//! Revealed-preference tests of expected-utility bidding.
//!
//! A subject's observations are turned into a linear system over latent
//! log-utility levels ([`builders`]); its feasibility is decided by [`lp`].
//! [`hmi`] measures how much of a subject's data survives the test, [`power`]
//! calibrates pass thresholds against random bidders and [`report`] aggregates
//! the verdicts.

pub mod belief;
pub mod builders;
pub mod hmi;
pub mod lp;
pub mod power;
pub mod report;

pub use belief::{silverman_bandwidth, EquilibriumBelief, PopulationBelief, WinBelief};
pub use builders::{
    build_fp_constraints, build_ncsp_constraints, kde_population_constraints, ConstraintBuilder,
    FpBuilder, NcspBuilder,
};
pub use hmi::{hmi, hmi_learning, HMIResult, HmiOptions, EXHAUSTIVE_LIMIT, LEARNING_LIMIT};
pub use lp::{check_feasible, FeasibilityOptions, LPSystem};
pub use power::{bronars_power, threshold_for, HmiMode, PowerCalibration};
pub use report::{pass_rate_report, PassRateRow, PassRateTable, SubjectOutcome};

use crate::data::BidRecord;
use crate::error::{Error, Result};

/// Largest number of observations a subject may carry.
pub const MAX_OBSERVATIONS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub theta: f64,
    pub bid: f64,
}

impl Observation {
    pub fn new(theta: f64, bid: f64) -> Self {
        Observation { theta, bid }
    }

    pub fn surplus(&self) -> f64 {
        self.theta - self.bid
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObsStatus {
    Usable,
    /// `b = θ`: log utility undefined, always dropped.
    ZeroSurplus,
    /// `b > θ`: a dominated bid, always dropped.
    Dominated,
    /// `θ = b = 0`: nothing can be won, so the round says nothing about
    /// preferences. Left out of the test and of the index's denominator.
    ZeroValue,
}

/// One subject's observations in the order the rounds were played.
#[derive(Debug, Clone, PartialEq)]
pub struct SubjectData {
    obs: Vec<Observation>,
}

impl SubjectData {
    pub fn new(obs: Vec<Observation>) -> Result<Self> {
        if obs.len() > MAX_OBSERVATIONS {
            return Err(Error::Size {
                what: "observations per subject",
                actual: obs.len(),
                limit: MAX_OBSERVATIONS,
            });
        }
        for (index, o) in obs.iter().enumerate() {
            if !o.theta.is_finite() || !o.bid.is_finite() || o.theta < 0.0 || o.bid < 0.0 {
                return Err(Error::DegenerateObservation {
                    index,
                    reason: format!(
                        "value {} / bid {} not a finite non-negative pair",
                        o.theta, o.bid
                    ),
                });
            }
        }
        Ok(SubjectData { obs })
    }

    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        Self::new(pairs.iter().map(|&(t, b)| Observation::new(t, b)).collect())
    }

    /// Builds a subject from bid records, sorting them by round.
    pub fn from_records<'a>(records: impl IntoIterator<Item = &'a BidRecord>) -> Result<Self> {
        let mut recs: Vec<&BidRecord> = records.into_iter().collect();
        recs.sort_by_key(|r| r.round);
        Self::new(
            recs.iter()
                .map(|r| Observation::new(r.value, r.bid))
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.obs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.obs.is_empty()
    }

    pub fn observations(&self) -> &[Observation] {
        &self.obs
    }

    pub fn status(&self, i: usize) -> ObsStatus {
        let o = self.obs[i];
        if o.bid > o.theta {
            ObsStatus::Dominated
        } else if o.theta == 0.0 {
            ObsStatus::ZeroValue
        } else if o.bid == o.theta {
            ObsStatus::ZeroSurplus
        } else {
            ObsStatus::Usable
        }
    }

    /// Every observation except zero-value rounds.
    pub fn testable_indices(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| self.status(i) != ObsStatus::ZeroValue)
            .collect()
    }

    pub fn usable_indices(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| self.status(i) == ObsStatus::Usable)
            .collect()
    }

    /// Observations at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Vec<Observation> {
        indices.iter().map(|&i| self.obs[i]).collect()
    }
}
