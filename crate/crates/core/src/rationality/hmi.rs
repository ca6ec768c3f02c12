//! Houtman–Maks index: the share of a subject's observations in the largest
//! subset that passes a test.
//!
//! Zero-surplus and dominated observations can never be rationalized, so
//! they are always dropped and still count in the denominator. Zero-value
//! rounds are left out altogether.

use super::builders::ConstraintBuilder;
use super::lp::{check_feasible, FeasibilityOptions};
use super::SubjectData;
use crate::error::{Error, Result};

/// Largest subject the exhaustive search accepts.
pub const EXHAUSTIVE_LIMIT: usize = 20;
/// Largest subject the learning-weighted index accepts.
pub const LEARNING_LIMIT: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HmiOptions {
    pub feasibility: FeasibilityOptions,
    /// Skip subsets containing a pair that already fails on its own.
    pub prune_pairs: bool,
}

impl Default for HmiOptions {
    fn default() -> Self {
        HmiOptions {
            feasibility: FeasibilityOptions::default(),
            prune_pairs: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HMIResult {
    pub total: usize,
    pub max_consistent_size: usize,
    pub hmi: f64,
    /// Indices into the subject's observations, ascending.
    pub kept: Vec<usize>,
    /// Learning variant only: `Σ |J|^p` over dropped round positions `p`.
    pub weighted_cost: Option<u64>,
}

impl HMIResult {
    pub fn passes_exact(&self) -> bool {
        self.max_consistent_size == self.total
    }
}

/// Whether the observations at `subset` pass the builder's test.
pub fn subset_feasible(
    s: &SubjectData,
    subset: &[usize],
    builder: &dyn ConstraintBuilder,
    opts: FeasibilityOptions,
) -> Result<bool> {
    if subset.is_empty() {
        return Ok(true);
    }
    let lp = builder.build(&s.select(subset))?;
    check_feasible(&lp, opts)
}

/// Number of testable observations, checked against `limit`.
fn require_size(s: &SubjectData, limit: usize, what: &'static str) -> Result<usize> {
    let total = s.testable_indices().len();
    if total == 0 {
        return Err(Error::UndefinedStatistic(
            "index undefined for a subject without testable observations".into(),
        ));
    }
    if total > limit {
        return Err(Error::Size {
            what,
            actual: total,
            limit,
        });
    }
    Ok(total)
}

/// Exact maximum-cardinality consistent subset, searched by decreasing size.
/// Among subsets of the maximal size the lexicographically first is kept.
pub fn hmi(
    s: &SubjectData,
    builder: &dyn ConstraintBuilder,
    opts: HmiOptions,
) -> Result<HMIResult> {
    let total = require_size(s, EXHAUSTIVE_LIMIT, "observations for exhaustive search")?;
    let usable = s.usable_indices();
    let m = usable.len();

    // conflicts[a] has bit b set when usable a and b fail together.
    let mut conflicts = vec![0u32; m];
    let mut solo_bad = 0u32;
    if opts.prune_pairs {
        for a in 0..m {
            if !subset_feasible(s, &[usable[a]], builder, opts.feasibility)? {
                solo_bad |= 1 << a;
            }
        }
        for a in 0..m {
            for b in a + 1..m {
                if (solo_bad >> a) & 1 == 1 || (solo_bad >> b) & 1 == 1 {
                    continue;
                }
                if !subset_feasible(s, &[usable[a], usable[b]], builder, opts.feasibility)? {
                    conflicts[a] |= 1 << b;
                    conflicts[b] |= 1 << a;
                }
            }
        }
    }

    for size in (0..=m).rev() {
        let mut combo: Vec<usize> = (0..size).collect();
        loop {
            let mask: u32 = combo.iter().fold(0, |acc, &i| acc | (1 << i));
            let pruned = mask & solo_bad != 0 || combo.iter().any(|&i| conflicts[i] & mask != 0);
            if !pruned {
                let subset: Vec<usize> = combo.iter().map(|&i| usable[i]).collect();
                if subset_feasible(s, &subset, builder, opts.feasibility)? {
                    return Ok(HMIResult {
                        total,
                        max_consistent_size: size,
                        hmi: size as f64 / total as f64,
                        kept: subset,
                        weighted_cost: None,
                    });
                }
            }
            if !next_combination(&mut combo, m) {
                break;
            }
        }
    }
    unreachable!("the empty subset is always consistent")
}

/// Advances `combo` to the next `k`-subset of `0..n` in lexicographic order.
fn next_combination(combo: &mut [usize], n: usize) -> bool {
    let k = combo.len();
    for i in (0..k).rev() {
        if combo[i] < n - k + i {
            combo[i] += 1;
            for t in i + 1..k {
                combo[t] = combo[t - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Cost `Σ |J|^p` of dropping the positions in `0..total` not in `kept`,
/// where `p` is the 1-based position.
pub fn learning_cost(total: usize, kept: &[usize]) -> Result<u64> {
    let base = total as u64;
    let overflow = || Error::Size {
        what: "learning-weighted cost",
        actual: total,
        limit: LEARNING_LIMIT,
    };
    let mut cost = 0u64;
    for p in 0..total {
        if !kept.contains(&p) {
            let w = base.checked_pow(p as u32 + 1).ok_or_else(overflow)?;
            cost = cost.checked_add(w).ok_or_else(overflow)?;
        }
    }
    Ok(cost)
}

/// Learning-weighted index: dropping the observation of round `p` costs
/// `|J|^p`, so a later round outweighs all earlier rounds together. Because
/// the tests are hereditary, the cheapest consistent subset is found by
/// keeping rounds greedily from the last to the first.
pub fn hmi_learning(
    s: &SubjectData,
    builder: &dyn ConstraintBuilder,
    opts: HmiOptions,
) -> Result<HMIResult> {
    let total = require_size(
        s,
        LEARNING_LIMIT,
        "observations for learning-weighted index",
    )?;
    let mut kept: Vec<usize> = Vec::new();
    for i in s.usable_indices().into_iter().rev() {
        let mut trial = Vec::with_capacity(kept.len() + 1);
        trial.push(i);
        trial.extend_from_slice(&kept);
        if subset_feasible(s, &trial, builder, opts.feasibility)? {
            kept = trial;
        }
    }
    let testable = s.testable_indices();
    let positions: Vec<usize> = kept
        .iter()
        .map(|k| {
            testable
                .iter()
                .position(|t| t == k)
                .expect("kept observations are testable")
        })
        .collect();
    let cost = learning_cost(total, &positions)?;
    Ok(HMIResult {
        total,
        max_consistent_size: kept.len(),
        hmi: kept.len() as f64 / total as f64,
        kept,
        weighted_cost: Some(cost),
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::dist::Uniform;
    use crate::rationality::builders::FpBuilder;

    fn fp() -> FpBuilder {
        FpBuilder::equilibrium(Arc::new(Uniform::standard()), 2).unwrap()
    }

    #[test]
    fn combinations_enumerate_binomial_count() {
        let mut count = 0;
        let mut c: Vec<usize> = (0..3).collect();
        loop {
            count += 1;
            if !next_combination(&mut c, 6) {
                break;
            }
        }
        assert_eq!(count, 20);
        let mut empty: Vec<usize> = vec![];
        assert!(!next_combination(&mut empty, 4));
    }

    #[test]
    fn consistent_subject_scores_one() {
        let s = SubjectData::from_pairs(
            &[15.0, 27.0, 44.0, 58.0, 63.0, 71.0, 86.0, 97.0].map(|t| (t, 0.5 * t)),
        )
        .unwrap();
        let r = hmi(&s, &fp(), HmiOptions::default()).unwrap();
        assert_eq!(r.hmi, 1.0);
        assert!(r.passes_exact());
        let l = hmi_learning(&s, &fp(), HmiOptions::default()).unwrap();
        assert_eq!(l.weighted_cost, Some(0));
        assert_eq!(l.kept, (0..8).collect::<Vec<_>>());
    }

    #[test]
    fn planted_violation_costs_one_observation() {
        let mut pairs: Vec<(f64, f64)> = [15.0, 27.0, 44.0, 58.0, 63.0, 71.0, 86.0, 97.0, 35.0]
            .map(|t| (t, 0.5 * t))
            .to_vec();
        // High value, tiny surplus: conflicts with every half-value bid.
        pairs.push((90.0, 89.0));
        let s = SubjectData::from_pairs(&pairs).unwrap();
        let r = hmi(&s, &fp(), HmiOptions::default()).unwrap();
        assert_eq!(r.max_consistent_size, 9);
        assert!((r.hmi - 0.9).abs() < 1e-15);
        assert!(!r.kept.contains(&9));
        let unpruned = hmi(
            &s,
            &fp(),
            HmiOptions {
                prune_pairs: false,
                ..HmiOptions::default()
            },
        )
        .unwrap();
        assert_eq!(unpruned, r);
    }

    #[test]
    fn zero_surplus_counts_in_denominator() {
        let s = SubjectData::from_pairs(&[(40.0, 20.0), (50.0, 50.0), (60.0, 30.0), (10.0, 12.0)])
            .unwrap();
        let r = hmi(&s, &fp(), HmiOptions::default()).unwrap();
        assert_eq!(r.kept, vec![0, 2]);
        assert_eq!(r.hmi, 0.5);
        let l = hmi_learning(&s, &fp(), HmiOptions::default()).unwrap();
        assert_eq!(l.kept, vec![0, 2]);
        assert_eq!(l.weighted_cost, Some(4u64.pow(2) + 4u64.pow(4)));
    }

    #[test]
    fn zero_value_rounds_leave_the_denominator() {
        let s = SubjectData::from_pairs(&[
            (0.0, 0.0),
            (40.0, 20.0),
            (0.0, 0.0),
            (60.0, 30.0),
            (50.0, 50.0),
        ])
        .unwrap();
        let r = hmi(&s, &fp(), HmiOptions::default()).unwrap();
        assert_eq!(r.total, 3);
        assert_eq!(r.kept, vec![1, 3]);
        assert!((r.hmi - 2.0 / 3.0).abs() < 1e-15);
        let l = hmi_learning(&s, &fp(), HmiOptions::default()).unwrap();
        // Positions among testable rounds: 1, 3 kept at positions 1 and 2; 4 dropped at 3.
        assert_eq!(l.weighted_cost, Some(27));
        let only_zero = SubjectData::from_pairs(&[(0.0, 0.0)]).unwrap();
        assert!(matches!(
            hmi(&only_zero, &fp(), HmiOptions::default()),
            Err(Error::UndefinedStatistic(_))
        ));
    }

    #[test]
    fn size_limits() {
        let s = SubjectData::from_pairs(&vec![(50.0, 25.0); 21]).unwrap();
        assert!(matches!(
            hmi(&s, &fp(), HmiOptions::default()),
            Err(Error::Size { .. })
        ));
        let s = SubjectData::from_pairs(&vec![(50.0, 25.0); 13]).unwrap();
        assert!(matches!(
            hmi_learning(&s, &fp(), HmiOptions::default()),
            Err(Error::Size { .. })
        ));
        let empty = SubjectData::from_pairs(&[]).unwrap();
        assert!(hmi(&empty, &fp(), HmiOptions::default()).is_err());
    }

    #[test]
    fn learning_cost_geometric_dominance() {
        // Dropping rounds 1-8 of 10 is cheaper than dropping round 9.
        let keep_late: Vec<usize> = vec![8, 9];
        let keep_early: Vec<usize> = (0..8).chain([9]).collect();
        assert_eq!(learning_cost(10, &keep_late).unwrap(), 111_111_110);
        assert_eq!(learning_cost(10, &keep_early).unwrap(), 1_000_000_000);
        assert_eq!(
            learning_cost(12, &[]).unwrap(),
            (1..=12).map(|p| 12u64.pow(p)).sum()
        );
    }
}
