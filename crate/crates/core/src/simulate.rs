//! Seeded Monte Carlo auction sessions with behavioural bidder and seller types.
//!
//! Randomness is split by round: round `r` draws matching, values and bids from
//! ChaCha20 stream `2r` of the master seed and seller noise from stream `2r + 1`.
//! Rounds are therefore independent and can run in any order or concurrently;
//! the output is assembled by round index.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::data::{Dataset, RoundRecord, SessionMeta, Treatment, VALUE_MAX, VALUE_MIN};
use crate::dist::{Uniform, ValueDistribution};
use crate::equilibrium::BidFunction;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum BidderStrategy {
    Equilibrium(Arc<BidFunction>),
    /// Bid a fixed multiple of value, capped at the maximum bid.
    Linear(f64),
    Truthful,
    /// Bid uniformly on `[0, value]`.
    RandomUniform,
    Table(Arc<BidFunction>),
}

impl BidderStrategy {
    pub fn validate(&self) -> Result<()> {
        match self {
            BidderStrategy::Linear(c) if !(0.0..=1.5).contains(c) => Err(Error::Domain(format!(
                "linear coefficient {c} outside [0, 1.5]"
            ))),
            _ => Ok(()),
        }
    }

    pub fn bid<R: Rng + ?Sized>(&self, value: f64, rng: &mut R) -> f64 {
        let b = match self {
            BidderStrategy::Equilibrium(f) | BidderStrategy::Table(f) => f.eval(value),
            BidderStrategy::Linear(c) => c * value,
            BidderStrategy::Truthful => value,
            BidderStrategy::RandomUniform => rng.gen::<f64>() * value,
        };
        b.clamp(VALUE_MIN, VALUE_MAX)
    }

    /// Strictly increasing and deterministic in value.
    pub fn is_monotone(&self) -> bool {
        match self {
            BidderStrategy::Equilibrium(f) | BidderStrategy::Table(f) => f.is_strictly_increasing(),
            BidderStrategy::Linear(c) => *c > 0.0,
            BidderStrategy::Truthful => true,
            BidderStrategy::RandomUniform => false,
        }
    }
}

/// Seller behaviour in the NCSP format. Ignored by FP and CSP.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SellerStrategy {
    RuleFollowing,
    /// Price `b_min + γ + σ·Z`, clamped to `[b_min, b_max]`.
    GammaOvercharger {
        gamma: f64,
        sigma: f64,
    },
    /// Extract a fixed share `s` of the bid spread.
    RatioType {
        s: f64,
    },
    AlwaysMax,
    /// Allocate to a uniformly drawn bidder at the lower bid.
    RandomWinner,
}

impl SellerStrategy {
    pub fn validate(&self) -> Result<()> {
        match *self {
            SellerStrategy::GammaOvercharger { gamma, sigma } => {
                if !(gamma > 0.0 && gamma.is_finite()) || !(sigma >= 0.0 && sigma.is_finite()) {
                    return Err(Error::Domain(format!(
                        "gamma_overcharger needs gamma > 0 and sigma >= 0 (got {gamma}, {sigma})"
                    )));
                }
                Ok(())
            }
            SellerStrategy::RatioType { s } if !(0.0..=1.0).contains(&s) => Err(Error::Domain(
                format!("ratio_type share {s} outside [0, 1]"),
            )),
            _ => Ok(()),
        }
    }

    /// Winner slot and price for the bid pair. Highest-bid ties go to slot 0.
    pub fn decide<R: Rng + ?Sized>(&self, bids: [f64; 2], rng: &mut R) -> (usize, f64) {
        let hi = usize::from(bids[1] > bids[0]);
        let (b_max, b_min) = (bids[hi], bids[1 - hi]);
        match *self {
            SellerStrategy::RuleFollowing => (hi, b_min),
            SellerStrategy::GammaOvercharger { gamma, sigma } => {
                let noise = if sigma > 0.0 {
                    sigma * rng.sample::<f64, _>(StandardNormal)
                } else {
                    0.0
                };
                (hi, (b_min + gamma + noise).clamp(b_min, b_max))
            }
            SellerStrategy::RatioType { s } => (hi, b_min + s * (b_max - b_min)),
            SellerStrategy::AlwaysMax => (hi, b_max),
            SellerStrategy::RandomWinner => (rng.gen_range(0..2), b_min),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuctionOutcome {
    pub bids: [f64; 2],
    pub winner_slot: usize,
    pub price: f64,
}

/// Plays one auction. `bid_rng` drives bidder randomness, `seller_rng` the
/// seller's.
pub fn run_auction<R: Rng + ?Sized>(
    values: [f64; 2],
    strategies: [&BidderStrategy; 2],
    treatment: Treatment,
    seller: &SellerStrategy,
    round_bids: bool,
    bid_rng: &mut R,
    seller_rng: &mut R,
) -> AuctionOutcome {
    let mut bids = [
        strategies[0].bid(values[0], bid_rng),
        strategies[1].bid(values[1], bid_rng),
    ];
    if round_bids {
        bids = bids.map(f64::round);
    }
    let hi = usize::from(bids[1] > bids[0]);
    let (winner_slot, price) = match treatment {
        Treatment::Fp => (hi, bids[hi]),
        Treatment::Csp => (hi, bids[1 - hi]),
        Treatment::Ncsp => seller.decide(bids, seller_rng),
    };
    AuctionOutcome {
        bids,
        winner_slot,
        price,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub treatment: Treatment,
    pub n_rounds: u32,
    /// Auction groups per round; bidders and sellers are re-matched each round.
    pub groups: u32,
    /// Strategies of odd- and even-numbered bidders respectively.
    pub bidders: [BidderStrategy; 2],
    pub seller: SellerStrategy,
    pub seed: u64,
    pub session_id: u32,
    pub dist: Uniform,
    pub round_bids: bool,
}

impl SimConfig {
    pub fn new(treatment: Treatment, bidders: [BidderStrategy; 2], seed: u64) -> Self {
        SimConfig {
            treatment,
            n_rounds: 1,
            groups: 1,
            bidders,
            seller: SellerStrategy::RuleFollowing,
            seed,
            session_id: 1,
            dist: Uniform::standard(),
            round_bids: false,
        }
    }

    /// Ten rounds, eight groups of two bidders and one seller (24 subjects).
    pub fn lab_session(treatment: Treatment, bidders: [BidderStrategy; 2], seed: u64) -> Self {
        SimConfig {
            n_rounds: 10,
            groups: 8,
            round_bids: true,
            ..Self::new(treatment, bidders, seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_rounds < 1 {
            return Err(Error::Domain("n_rounds must be at least 1".into()));
        }
        if self.groups < 1 {
            return Err(Error::Domain("groups must be at least 1".into()));
        }
        for b in &self.bidders {
            b.validate()?;
        }
        self.seller.validate()
    }

    pub fn bidder_ids(&self) -> impl Iterator<Item = u32> {
        1..=2 * self.groups
    }

    pub fn seller_ids(&self) -> impl Iterator<Item = u32> {
        2 * self.groups + 1..=3 * self.groups
    }
}

fn round_rngs(seed: u64, round: u32) -> (ChaCha20Rng, ChaCha20Rng) {
    let mut draws = ChaCha20Rng::seed_from_u64(seed);
    draws.set_stream(2 * u64::from(round));
    let mut seller = ChaCha20Rng::seed_from_u64(seed);
    seller.set_stream(2 * u64::from(round) + 1);
    (draws, seller)
}

fn simulate_round(cfg: &SimConfig, round: u32) -> Vec<RoundRecord> {
    let (mut rng, mut seller_rng) = round_rngs(cfg.seed, round);
    let mut bidders: Vec<u32> = cfg.bidder_ids().collect();
    let mut sellers: Vec<u32> = cfg.seller_ids().collect();
    if cfg.groups > 1 {
        bidders.shuffle(&mut rng);
        sellers.shuffle(&mut rng);
    }
    (0..cfg.groups as usize)
        .map(|g| {
            let ids = [bidders[2 * g], bidders[2 * g + 1]];
            let values = [
                f64::from(cfg.dist.sample_integer(&mut rng)),
                f64::from(cfg.dist.sample_integer(&mut rng)),
            ];
            let strategy = |id: u32| &cfg.bidders[((id - 1) % 2) as usize];
            let out = run_auction(
                values,
                [strategy(ids[0]), strategy(ids[1])],
                cfg.treatment,
                &cfg.seller,
                cfg.round_bids,
                &mut rng,
                &mut seller_rng,
            );
            RoundRecord {
                session_id: cfg.session_id,
                round,
                treatment: cfg.treatment,
                bidder_ids: ids,
                values,
                bids: out.bids,
                seller_id: sellers[g],
                winner_id: ids[out.winner_slot],
                price: out.price,
            }
        })
        .collect()
}

/// Simulates a full session. Identical configurations give identical output.
pub fn run_session(cfg: &SimConfig) -> Result<Dataset> {
    cfg.validate()?;
    let rounds: Vec<RoundRecord> = (1..=cfg.n_rounds)
        .into_par_iter()
        .map(|r| simulate_round(cfg, r))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    Ok(Dataset::from_rounds(
        vec![SessionMeta {
            session_id: cfg.session_id,
            seed: Some(cfg.seed),
        }],
        rounds,
    ))
}

fn require_rounds(d: &Dataset) -> Result<()> {
    if d.rounds.is_empty() {
        Err(Error::UndefinedStatistic("dataset has no rounds".into()))
    } else {
        Ok(())
    }
}

/// Share of rounds won by a bidder with the (weakly) highest value.
pub fn efficiency(d: &Dataset) -> Result<f64> {
    require_rounds(d)?;
    let efficient = d
        .rounds
        .iter()
        .filter(|r| match r.winner_slot() {
            Some(s) => r.values[s] >= r.values[1 - s],
            None => false,
        })
        .count();
    Ok(efficient as f64 / d.rounds.len() as f64)
}

/// `(price - b_min) / (b_max - b_min)`; `None` when the bids are equal.
pub fn overcharging_ratio(r: &RoundRecord) -> Option<f64> {
    let (hi, lo) = (r.max_bid(), r.min_bid());
    if hi == lo {
        None
    } else {
        Some((r.price - lo) / (hi - lo))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RevenueStats {
    pub mean: f64,
    /// Standard error of the mean clustered by session; the i.i.d. formula is
    /// used when there is a single session.
    pub std_error: f64,
    pub n_rounds: usize,
    pub n_clusters: usize,
}

pub fn revenue_stats(d: &Dataset) -> Result<RevenueStats> {
    require_rounds(d)?;
    let prices: Vec<f64> = d.rounds.iter().map(|r| r.price).collect();
    let clusters: Vec<u32> = d.rounds.iter().map(|r| r.session_id).collect();
    let (mean, std_error, n_clusters) = clustered_mean(&prices, &clusters);
    Ok(RevenueStats {
        mean,
        std_error,
        n_rounds: prices.len(),
        n_clusters,
    })
}

/// Mean with cluster-robust standard error (small-sample factor `G/(G-1)`;
/// the `(N-1)/(N-K)` term is one for a mean). Falls back to `s/√N` for a
/// single cluster.
pub(crate) fn clustered_mean(xs: &[f64], clusters: &[u32]) -> (f64, f64, usize) {
    let n = xs.len();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let mut sums: std::collections::BTreeMap<u32, f64> = Default::default();
    for (x, c) in xs.iter().zip(clusters) {
        *sums.entry(*c).or_insert(0.0) += x - mean;
    }
    let g = sums.len();
    if n < 2 {
        return (mean, f64::NAN, g);
    }
    let se = if g < 2 {
        let ss: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
        (ss / (n * (n - 1)) as f64).sqrt()
    } else {
        let meat: f64 = sums.values().map(|s| s * s).sum();
        let factor = g as f64 / (g - 1) as f64;
        (factor * meat).sqrt() / n as f64
    };
    (mean, se, g)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverchargeStats {
    pub defined_rounds: usize,
    pub undefined_rounds: usize,
    pub mean_ratio: Option<f64>,
    pub overcharging_rounds: usize,
}

pub fn overcharge_stats(d: &Dataset) -> OverchargeStats {
    let ratios: Vec<f64> = d
        .rounds
        .iter()
        .filter(|r| r.treatment == Treatment::Ncsp)
        .filter_map(overcharging_ratio)
        .collect();
    let undefined = d
        .rounds
        .iter()
        .filter(|r| r.treatment == Treatment::Ncsp)
        .count()
        - ratios.len();
    OverchargeStats {
        defined_rounds: ratios.len(),
        undefined_rounds: undefined,
        mean_ratio: (!ratios.is_empty()).then(|| ratios.iter().sum::<f64>() / ratios.len() as f64),
        overcharging_rounds: ratios.iter().filter(|&&s| s > 0.0).count(),
    }
}
