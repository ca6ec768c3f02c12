//! Linear systems whose feasibility is implied by expected-utility bidding.
//!
//! The first-price system is necessary and sufficient for rationalization
//! by a log-concave utility. The NCSP system is only necessary: a feasible
//! NCSP system means "not rejected", never "rationalized".

use std::sync::Arc;

use super::belief::{EquilibriumBelief, PopulationBelief, WinBelief};
use super::lp::{Family, LPSystem, Relation, VarKind};
use super::{Observation, SubjectData};
use crate::dist::ValueDistribution;
use crate::error::{Error, Result};

/// Turns a set of observations into a linear system. Implementations must be
/// hereditary: the system for a subset is implied by the system for the
/// whole set, so dropping observations never destroys feasibility.
pub trait ConstraintBuilder: Send + Sync {
    fn build(&self, obs: &[Observation]) -> Result<LPSystem>;

    fn label(&self) -> &'static str;
}

fn degenerate(index: usize, reason: impl Into<String>) -> Error {
    Error::DegenerateObservation {
        index,
        reason: reason.into(),
    }
}

fn require_interior(obs: &[Observation]) -> Result<()> {
    for (i, o) in obs.iter().enumerate() {
        if o.theta <= 0.0 {
            return Err(degenerate(i, "zero value has no winning probability"));
        }
        if o.bid >= o.theta {
            return Err(degenerate(
                i,
                format!(
                    "bid {} not below value {}; drop it before testing",
                    o.bid, o.theta
                ),
            ));
        }
    }
    Ok(())
}

/// Afriat-style system for the first-price auction:
///
/// * `ν^j <= 0`
/// * `ν^k - ν^j <= ρ_j (s^k - s^j)` for `j != k`, with `ρ_j` the belief's
///   supergradient at observation `j` and `s` the surplus `θ - b`
/// * `ν` ordered like `s`: strictly where surpluses differ, equal on ties.
#[derive(Clone)]
pub struct FpBuilder {
    belief: Arc<dyn WinBelief>,
}

impl FpBuilder {
    pub fn new(belief: Arc<dyn WinBelief>) -> Self {
        FpBuilder { belief }
    }

    pub fn equilibrium(dist: Arc<dyn ValueDistribution>, n: usize) -> Result<Self> {
        Ok(Self::new(Arc::new(EquilibriumBelief::new(dist, n)?)))
    }
}

impl ConstraintBuilder for FpBuilder {
    fn label(&self) -> &'static str {
        "FP"
    }

    fn build(&self, obs: &[Observation]) -> Result<LPSystem> {
        require_interior(obs)?;
        let mut rho = Vec::with_capacity(obs.len());
        for (i, o) in obs.iter().enumerate() {
            let r = self.belief.supergradient(o.theta, o.bid);
            if !(r.is_finite() && r >= 0.0) {
                return Err(degenerate(i, format!("supergradient undefined ({r})")));
            }
            rho.push(r);
        }

        let mut lp = LPSystem::new();
        let nu: Vec<usize> = (0..obs.len())
            .map(|j| lp.var(VarKind::Utility { obs: j }))
            .collect();
        for j in 0..obs.len() {
            lp.nonpositive(VarKind::Utility { obs: j })?;
        }
        for j in 0..obs.len() {
            for k in 0..obs.len() {
                if j == k {
                    continue;
                }
                let rhs = rho[j] * (obs[k].surplus() - obs[j].surplus());
                lp.push(
                    Family::Concavity,
                    vec![(nu[k], 1.0), (nu[j], -1.0)],
                    Relation::Le,
                    rhs,
                    false,
                )?;
            }
        }
        for j in 0..obs.len() {
            for k in j + 1..obs.len() {
                let (sj, sk) = (obs[j].surplus(), obs[k].surplus());
                let (lo, hi) = if sk < sj { (k, j) } else { (j, k) };
                lp.push(
                    Family::Ordering,
                    vec![(nu[lo], 1.0), (nu[hi], -1.0)],
                    if sj == sk { Relation::Eq } else { Relation::Le },
                    0.0,
                    sj != sk,
                )?;
            }
        }
        Ok(lp)
    }
}

/// Necessary conditions for NCSP bidding against a seller who overcharges
/// the second-highest bid by at most `γ`.
///
/// For every pair `(k, j)` with `b^j <= θ^k`:
///
/// 1. `ν^{k,k} - ν^{k,j} <= λ^{k,j} (b^j - b^k)`
/// 2. `ν^k_γ - ν^{k,j} <= λ^{k,j} (b^j - γ)` if `γ <= θ^j`
/// 3. `ln P_k + ν^{k,k} >= ln P_j + ν^{k,j}` if `γ >= b^k`
/// 4. `ln P_k + ν^k_γ >= ln P_j + ν^{k,j}` if `γ < b^k`
///
/// with `ν <= 0`, `λ > 0`. The log-concavity rows 1-2 compare utility at
/// surplus `θ^k - b^k` (resp. `θ^k - γ`) with utility at `θ^k - b^j`, so the
/// supergradient multiplies the difference of those surpluses.
/// [`NcspBuilder::printed_signs`] flips that difference to `b^k - b^j`
/// (resp. `γ - b^j`).
#[derive(Clone)]
pub struct NcspBuilder {
    belief: Arc<dyn WinBelief>,
    gamma: f64,
    printed_signs: bool,
}

impl NcspBuilder {
    pub fn new(belief: Arc<dyn WinBelief>, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::Domain(format!(
                "gamma must be positive, got {gamma}"
            )));
        }
        Ok(NcspBuilder {
            belief,
            gamma,
            printed_signs: false,
        })
    }

    pub fn equilibrium(dist: Arc<dyn ValueDistribution>, n: usize, gamma: f64) -> Result<Self> {
        Self::new(Arc::new(EquilibriumBelief::new(dist, n)?), gamma)
    }

    pub fn printed_signs(mut self, on: bool) -> Self {
        self.printed_signs = on;
        self
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }
}

impl ConstraintBuilder for NcspBuilder {
    fn label(&self) -> &'static str {
        "NCSP"
    }

    fn build(&self, obs: &[Observation]) -> Result<LPSystem> {
        require_interior(obs)?;
        let mut logp = Vec::with_capacity(obs.len());
        for (i, o) in obs.iter().enumerate() {
            let l = self.belief.log_win_prob(o.theta, o.bid);
            if !l.is_finite() {
                return Err(degenerate(i, "zero winning probability"));
            }
            logp.push(l);
        }
        let g = self.gamma;
        let sign = if self.printed_signs { -1.0 } else { 1.0 };

        let mut lp = LPSystem::new();
        for k in 0..obs.len() {
            let kk = lp.var(VarKind::CrossUtility { k, j: k });
            lp.nonpositive(VarKind::CrossUtility { k, j: k })?;
            for j in 0..obs.len() {
                if obs[j].bid > obs[k].theta {
                    continue;
                }
                let kj = lp.var(VarKind::CrossUtility { k, j });
                if j != k {
                    lp.nonpositive(VarKind::CrossUtility { k, j })?;
                }
                let lambda = |lp: &mut LPSystem| -> Result<usize> {
                    let kind = VarKind::Supergradient { k, j };
                    if let Some(v) = lp.lookup(kind) {
                        return Ok(v);
                    }
                    lp.positive(kind)?;
                    Ok(lp.var(kind))
                };
                let gamma_var = |lp: &mut LPSystem| -> Result<usize> {
                    let kind = VarKind::GammaUtility { k };
                    if let Some(v) = lp.lookup(kind) {
                        return Ok(v);
                    }
                    lp.nonpositive(kind)?;
                    Ok(lp.var(kind))
                };

                if j != k {
                    let l = lambda(&mut lp)?;
                    let c = sign * (obs[j].bid - obs[k].bid);
                    lp.push(
                        Family::CrossConcavity,
                        vec![(kk, 1.0), (kj, -1.0), (l, -c)],
                        Relation::Le,
                        0.0,
                        false,
                    )?;
                }
                if g <= obs[j].theta {
                    let l = lambda(&mut lp)?;
                    let kg = gamma_var(&mut lp)?;
                    let c = sign * (obs[j].bid - g);
                    lp.push(
                        Family::GammaConcavity,
                        vec![(kg, 1.0), (kj, -1.0), (l, -c)],
                        Relation::Le,
                        0.0,
                        false,
                    )?;
                }
                if g >= obs[k].bid {
                    if j != k {
                        lp.push(
                            Family::FirstPriceResponse,
                            vec![(kk, 1.0), (kj, -1.0)],
                            Relation::Ge,
                            logp[j] - logp[k],
                            false,
                        )?;
                    }
                } else {
                    let kg = gamma_var(&mut lp)?;
                    lp.push(
                        Family::OverchargeResponse,
                        vec![(kg, 1.0), (kj, -1.0)],
                        Relation::Ge,
                        logp[j] - logp[k],
                        false,
                    )?;
                }
            }
        }
        Ok(lp)
    }
}

fn all_observations(s: &SubjectData) -> Vec<Observation> {
    s.observations().to_vec()
}

/// First-price system under the equilibrium belief, over every observation.
pub fn build_fp_constraints(
    s: &SubjectData,
    dist: Arc<dyn ValueDistribution>,
    n: usize,
) -> Result<LPSystem> {
    FpBuilder::equilibrium(dist, n)?.build(&all_observations(s))
}

/// NCSP system under the equilibrium belief, over every observation.
pub fn build_ncsp_constraints(
    s: &SubjectData,
    dist: Arc<dyn ValueDistribution>,
    n: usize,
    gamma: f64,
) -> Result<LPSystem> {
    NcspBuilder::equilibrium(dist, n, gamma)?.build(&all_observations(s))
}

/// First-price system with winning probabilities from a kernel estimate of
/// the other subjects' bids. `pooled_bids` must exclude the tested subject.
pub fn kde_population_constraints(
    s: &SubjectData,
    pooled_bids: &[f64],
    bandwidth: f64,
    n: usize,
) -> Result<LPSystem> {
    let belief = PopulationBelief::new(pooled_bids.to_vec(), bandwidth, n)?;
    FpBuilder::new(Arc::new(belief)).build(&all_observations(s))
}
