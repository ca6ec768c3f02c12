//! Flat `key = value` simulation configuration.
//!
//! ```text
//! # CSP lab preset
//! treatment = csp
//! rounds = 10
//! groups = 8
//! bidders = equilibrium
//! round_bids = true
//! ```
//!
//! Unknown keys, repeated keys and malformed values are errors carrying the
//! line number.

use std::fmt::Write as _;
use std::sync::Arc;

use crate::data::Treatment;
use crate::dist::Uniform;
use crate::equilibrium::{
    csp_bid_function, fp_bid_function, solve_ncsp_equilibrium, NcspSolverOptions, SellerParams,
};
use crate::error::{Error, Result};
use crate::simulate::{BidderStrategy, SellerStrategy, SimConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BidderSpec {
    Equilibrium,
    Truthful,
    Random,
    Linear(f64),
}

impl BidderSpec {
    fn parse(s: &str) -> std::result::Result<Self, String> {
        match s {
            "equilibrium" => Ok(BidderSpec::Equilibrium),
            "truthful" => Ok(BidderSpec::Truthful),
            "random" => Ok(BidderSpec::Random),
            _ => match s.strip_prefix("linear:") {
                Some(c) => c
                    .trim()
                    .parse()
                    .map(BidderSpec::Linear)
                    .map_err(|_| format!("bad linear coefficient '{c}'")),
                None => Err(format!(
                    "unknown bidder strategy '{s}' (equilibrium, truthful, random, linear:<c>)"
                )),
            },
        }
    }

    fn render(&self) -> String {
        match self {
            BidderSpec::Equilibrium => "equilibrium".into(),
            BidderSpec::Truthful => "truthful".into(),
            BidderSpec::Random => "random".into(),
            BidderSpec::Linear(c) => format!("linear:{c}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SellerSpec {
    Rule,
    Overcharger,
    Ratio,
    Max,
    RandomWinner,
}

impl SellerSpec {
    fn parse(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "rule" => SellerSpec::Rule,
            "overcharger" => SellerSpec::Overcharger,
            "ratio" => SellerSpec::Ratio,
            "max" => SellerSpec::Max,
            "random-winner" => SellerSpec::RandomWinner,
            _ => {
                return Err(format!(
                    "unknown seller '{s}' (rule, overcharger, ratio, max, random-winner)"
                ))
            }
        })
    }

    fn as_str(self) -> &'static str {
        match self {
            SellerSpec::Rule => "rule",
            SellerSpec::Overcharger => "overcharger",
            SellerSpec::Ratio => "ratio",
            SellerSpec::Max => "max",
            SellerSpec::RandomWinner => "random-winner",
        }
    }
}

/// A parsed configuration. `to_text` renders it canonically; parsing that
/// text gives back an equal value.
#[derive(Debug, Clone, PartialEq)]
pub struct SimSpec {
    pub treatment: Treatment,
    pub rounds: u32,
    pub groups: u32,
    pub sessions: u32,
    pub seed: u64,
    pub session_id: u32,
    pub bidders: [BidderSpec; 2],
    pub seller: SellerSpec,
    pub gamma: Option<f64>,
    pub sigma: f64,
    pub ratio: Option<f64>,
    pub round_bids: bool,
    /// Grid size for a numerically solved equilibrium strategy.
    pub grid: usize,
}

impl Default for SimSpec {
    fn default() -> Self {
        SimSpec {
            treatment: Treatment::Csp,
            rounds: 1,
            groups: 1,
            sessions: 1,
            seed: 0,
            session_id: 1,
            bidders: [BidderSpec::Equilibrium; 2],
            seller: SellerSpec::Rule,
            gamma: None,
            sigma: 0.0,
            ratio: None,
            round_bids: false,
            grid: 1001,
        }
    }
}

fn bad(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn num<T: std::str::FromStr>(line: usize, key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| bad(line, format!("{key}: cannot parse '{v}'")))
}

fn finite(line: usize, key: &str, v: &str) -> Result<f64> {
    let x: f64 = num(line, key, v)?;
    if !x.is_finite() {
        return Err(bad(line, format!("{key}: '{v}' is not finite")));
    }
    Ok(x)
}

pub fn parse_config(text: &str) -> Result<SimSpec> {
    let mut spec = SimSpec::default();
    let mut seen: Vec<&str> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| bad(line, format!("expected 'key = value', found '{content}'")))?;
        let (key, value) = (key.trim(), value.trim());
        if value.is_empty() {
            return Err(bad(line, format!("{key}: missing value")));
        }
        if seen.contains(&key)
            || (key == "bidders" && seen.iter().any(|k| k.starts_with("bidder")))
            || (key.starts_with("bidder") && seen.contains(&"bidders"))
        {
            return Err(bad(line, format!("{key} given more than once")));
        }
        match key {
            "treatment" => {
                spec.treatment = value.parse().map_err(|e: Error| bad(line, e.to_string()))?
            }
            "rounds" => spec.rounds = num(line, key, value)?,
            "groups" => spec.groups = num(line, key, value)?,
            "sessions" => spec.sessions = num(line, key, value)?,
            "seed" => spec.seed = num(line, key, value)?,
            "session_id" => spec.session_id = num(line, key, value)?,
            "bidders" => {
                let b = BidderSpec::parse(value).map_err(|m| bad(line, m))?;
                spec.bidders = [b, b];
            }
            "bidder1" => spec.bidders[0] = BidderSpec::parse(value).map_err(|m| bad(line, m))?,
            "bidder2" => spec.bidders[1] = BidderSpec::parse(value).map_err(|m| bad(line, m))?,
            "seller" => spec.seller = SellerSpec::parse(value).map_err(|m| bad(line, m))?,
            "gamma" => spec.gamma = Some(finite(line, key, value)?),
            "sigma" => spec.sigma = finite(line, key, value)?,
            "ratio" => spec.ratio = Some(finite(line, key, value)?),
            "round_bids" => {
                spec.round_bids = match value {
                    "true" => true,
                    "false" => false,
                    _ => {
                        return Err(bad(
                            line,
                            format!("round_bids: expected true or false, found '{value}'"),
                        ))
                    }
                }
            }
            "grid" => spec.grid = num(line, key, value)?,
            _ => return Err(bad(line, format!("unknown key '{key}'"))),
        }
        seen.push(key);
    }
    spec.check()?;
    Ok(spec)
}

impl SimSpec {
    /// Cross-field checks that do not depend on a single line.
    pub fn check(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Domain(m));
        if self.rounds < 1 {
            return fail("rounds must be at least 1".into());
        }
        if self.groups < 1 || self.sessions < 1 {
            return fail("groups and sessions must be at least 1".into());
        }
        if let Some(g) = self.gamma {
            if !(g > 0.0) {
                return fail(format!("gamma must be positive, got {g}"));
            }
        }
        if self.sigma < 0.0 {
            return fail(format!("sigma must be non-negative, got {}", self.sigma));
        }
        let ncsp = self.treatment == Treatment::Ncsp;
        if ncsp && self.gamma.is_none() {
            let needs = self.seller == SellerSpec::Overcharger
                || self.bidders.contains(&BidderSpec::Equilibrium);
            if needs {
                return fail(
                    "NCSP equilibrium bidders and the overcharger seller need gamma".into(),
                );
            }
        }
        if ncsp && self.seller == SellerSpec::Ratio && self.ratio.is_none() {
            return fail("seller = ratio needs ratio".into());
        }
        if self.session_id.checked_add(self.sessions - 1).is_none() {
            return fail("session ids overflow".into());
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "treatment = {}",
            self.treatment.as_str().to_ascii_lowercase()
        );
        let _ = writeln!(s, "rounds = {}", self.rounds);
        let _ = writeln!(s, "groups = {}", self.groups);
        let _ = writeln!(s, "sessions = {}", self.sessions);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "session_id = {}", self.session_id);
        let _ = writeln!(s, "bidder1 = {}", self.bidders[0].render());
        let _ = writeln!(s, "bidder2 = {}", self.bidders[1].render());
        let _ = writeln!(s, "seller = {}", self.seller.as_str());
        if let Some(g) = self.gamma {
            let _ = writeln!(s, "gamma = {g}");
        }
        let _ = writeln!(s, "sigma = {}", self.sigma);
        if let Some(r) = self.ratio {
            let _ = writeln!(s, "ratio = {r}");
        }
        let _ = writeln!(s, "round_bids = {}", self.round_bids);
        let _ = writeln!(s, "grid = {}", self.grid);
        s
    }

    /// Seed of session `i`; session 0 uses the master seed itself.
    pub fn session_seed(&self, i: u32) -> u64 {
        self.seed
            .wrapping_add(u64::from(i).wrapping_mul(0x9E37_79B9_7F4A_7C15))
    }

    fn strategy(
        &self,
        b: BidderSpec,
        eq: &mut Option<Arc<crate::equilibrium::BidFunction>>,
    ) -> Result<BidderStrategy> {
        Ok(match b {
            BidderSpec::Truthful => BidderStrategy::Truthful,
            BidderSpec::Random => BidderStrategy::RandomUniform,
            BidderSpec::Linear(c) => BidderStrategy::Linear(c),
            BidderSpec::Equilibrium => {
                if eq.is_none() {
                    let dist = Uniform::standard();
                    let f = match self.treatment {
                        Treatment::Fp => fp_bid_function(&dist, 2, self.grid)?,
                        Treatment::Csp => csp_bid_function(&dist, self.grid)?,
                        Treatment::Ncsp => {
                            let gamma = self.gamma.ok_or_else(|| {
                                Error::Domain("NCSP equilibrium bidders need gamma".into())
                            })?;
                            solve_ncsp_equilibrium(
                                &dist,
                                2,
                                SellerParams::new(gamma)?,
                                NcspSolverOptions {
                                    grid_size: self.grid,
                                    ..NcspSolverOptions::default()
                                },
                            )?
                        }
                    };
                    *eq = Some(Arc::new(f));
                }
                BidderStrategy::Equilibrium(eq.clone().expect("set above"))
            }
        })
    }

    fn seller_strategy(&self) -> Result<SellerStrategy> {
        Ok(match self.seller {
            SellerSpec::Rule => SellerStrategy::RuleFollowing,
            SellerSpec::Max => SellerStrategy::AlwaysMax,
            SellerSpec::RandomWinner => SellerStrategy::RandomWinner,
            SellerSpec::Ratio => SellerStrategy::RatioType {
                s: self
                    .ratio
                    .ok_or_else(|| Error::Domain("seller = ratio needs ratio".into()))?,
            },
            SellerSpec::Overcharger => SellerStrategy::GammaOvercharger {
                gamma: self
                    .gamma
                    .ok_or_else(|| Error::Domain("seller = overcharger needs gamma".into()))?,
                sigma: self.sigma,
            },
        })
    }

    /// One simulator configuration per session.
    pub fn sim_configs(&self) -> Result<Vec<SimConfig>> {
        self.check()?;
        let mut eq = None;
        let bidders = [
            self.strategy(self.bidders[0], &mut eq)?,
            self.strategy(self.bidders[1], &mut eq)?,
        ];
        let seller = self.seller_strategy()?;
        (0..self.sessions)
            .map(|i| {
                let cfg = SimConfig {
                    treatment: self.treatment,
                    n_rounds: self.rounds,
                    groups: self.groups,
                    bidders: bidders.clone(),
                    seller,
                    seed: self.session_seed(i),
                    session_id: self.session_id + i,
                    dist: Uniform::standard(),
                    round_bids: self.round_bids,
                };
                cfg.validate()?;
                Ok(cfg)
            })
            .collect()
    }
}
