//! Pass thresholds calibrated against subjects who bid uniformly at random
//! below their values.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use super::builders::ConstraintBuilder;
use super::hmi::{hmi, hmi_learning, HmiOptions};
use super::{Observation, SubjectData};
use crate::dist::{Uniform, ValueDistribution};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HmiMode {
    Standard,
    Learning,
}

impl HmiMode {
    pub fn index(
        self,
        s: &SubjectData,
        builder: &dyn ConstraintBuilder,
        opts: HmiOptions,
    ) -> Result<f64> {
        match self {
            HmiMode::Standard => hmi(s, builder, opts).map(|r| r.hmi),
            HmiMode::Learning => hmi_learning(s, builder, opts).map(|r| r.hmi),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerCalibration {
    pub mode: HmiMode,
    /// HMI of every synthetic subject with a testable round, in subject order.
    pub sample: Vec<f64>,
    /// Minimal HMI counted as a pass at p = 0.10.
    pub threshold_p10: f64,
    /// Minimal HMI counted as a pass at p = 0.05.
    pub threshold_p05: f64,
}

impl PowerCalibration {
    pub fn from_sample(mode: HmiMode, sample: Vec<f64>) -> Result<Self> {
        Ok(PowerCalibration {
            mode,
            threshold_p10: threshold_for(&sample, 0.10)?,
            threshold_p05: threshold_for(&sample, 0.05)?,
            sample,
        })
    }

    pub fn threshold(&self, p: f64) -> Result<f64> {
        threshold_for(&self.sample, p)
    }
}

/// Smallest threshold `t` such that at most a share `p` of the sample has
/// HMI `>= t`. Candidates are 0 and the sample values; `+inf` (no one
/// passes) when even the maximum is reached by more than `p`.
pub fn threshold_for(sample: &[f64], p: f64) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::UndefinedStatistic("empty calibration sample".into()));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!(
            "significance level {p} outside [0, 1]"
        )));
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut candidates = vec![0.0];
    candidates.extend(sorted.iter().copied());
    candidates.dedup();
    for t in candidates {
        let at_or_above = sorted.len() - sorted.partition_point(|&x| x < t);
        if at_or_above as f64 <= p * n {
            return Ok(t);
        }
    }
    Ok(f64::INFINITY)
}

/// Synthetic subject `index`: integer values uniform on `[0, 100]` and bids
/// uniform on `[0, θ]`, one pair per round. Each index has its own stream.
pub fn random_subject(seed: u64, index: u64, rounds: usize) -> Result<SubjectData> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let dist = Uniform::standard();
    let obs = (0..rounds)
        .map(|_| {
            let theta = f64::from(dist.sample_integer(&mut rng));
            Observation::new(theta, theta * rng.gen::<f64>())
        })
        .collect();
    SubjectData::new(obs)
}

/// HMI distribution of `n_synthetic` random subjects and the thresholds it
/// implies. Deterministic in `seed`; subjects are scored in parallel.
pub fn bronars_power(
    n_synthetic: usize,
    rounds_per_subject: usize,
    builder: &dyn ConstraintBuilder,
    seed: u64,
    mode: HmiMode,
    opts: HmiOptions,
) -> Result<PowerCalibration> {
    if n_synthetic == 0 {
        return Err(Error::Domain("need at least one synthetic subject".into()));
    }
    // A subject whose every value is zero has no index and is left out.
    let sample: Vec<f64> = (0..n_synthetic as u64)
        .into_par_iter()
        .map(|i| {
            let s = random_subject(seed, i, rounds_per_subject)?;
            if s.testable_indices().is_empty() {
                return Ok(None);
            }
            mode.index(&s, builder, opts).map(Some)
        })
        .collect::<Result<Vec<Option<f64>>>>()?
        .into_iter()
        .flatten()
        .collect();
    PowerCalibration::from_sample(mode, sample)
}
