//! Per-subject bid panels, per-round auction outcomes and the checks that
//! apply to them before any test or estimator runs.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use crate::error::Error;

pub const VALUE_MIN: f64 = 0.0;
pub const VALUE_MAX: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Treatment {
    /// First-price sealed bid.
    Fp,
    /// Credible second-price sealed bid.
    Csp,
    /// Second-price sealed bid where the seller may deviate from the rules.
    Ncsp,
}

impl Treatment {
    pub const ALL: [Treatment; 3] = [Treatment::Fp, Treatment::Csp, Treatment::Ncsp];

    pub fn as_str(self) -> &'static str {
        match self {
            Treatment::Fp => "FP",
            Treatment::Csp => "CSP",
            Treatment::Ncsp => "NCSP",
        }
    }
}

impl fmt::Display for Treatment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Treatment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fp" => Ok(Treatment::Fp),
            "csp" => Ok(Treatment::Csp),
            "ncsp" => Ok(Treatment::Ncsp),
            other => Err(Error::Domain(format!(
                "unknown treatment '{other}' (expected fp, csp or ncsp)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Bidder,
    Seller,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Bidder => "bidder",
            Role::Seller => "seller",
        }
    }
}

impl FromStr for Role {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bidder" => Ok(Role::Bidder),
            "seller" => Ok(Role::Seller),
            other => Err(Error::Domain(format!("unknown role '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BidRecord {
    pub session_id: u32,
    pub subject_id: u32,
    pub role: Role,
    pub round: u32,
    pub treatment: Treatment,
    pub value: f64,
    pub bid: f64,
}

impl BidRecord {
    pub fn surplus(&self) -> f64 {
        self.value - self.bid
    }

    pub fn is_regular(&self) -> bool {
        self.bid <= self.value
    }
}

/// One auction: two bidders, one seller, the allocation and the price.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub session_id: u32,
    pub round: u32,
    pub treatment: Treatment,
    pub bidder_ids: [u32; 2],
    pub values: [f64; 2],
    pub bids: [f64; 2],
    pub seller_id: u32,
    pub winner_id: u32,
    pub price: f64,
}

impl RoundRecord {
    /// Position (0 or 1) of the winner among the two bidders.
    pub fn winner_slot(&self) -> Option<usize> {
        self.bidder_ids.iter().position(|&id| id == self.winner_id)
    }

    pub fn max_bid(&self) -> f64 {
        self.bids[0].max(self.bids[1])
    }

    pub fn min_bid(&self) -> f64 {
        self.bids[0].min(self.bids[1])
    }

    pub fn winner_bid(&self) -> Option<f64> {
        self.winner_slot().map(|s| self.bids[s])
    }

    pub fn winner_value(&self) -> Option<f64> {
        self.winner_slot().map(|s| self.values[s])
    }

    /// The two bid records implied by this round.
    pub fn bid_records(&self) -> [BidRecord; 2] {
        let rec = |slot: usize| BidRecord {
            session_id: self.session_id,
            subject_id: self.bidder_ids[slot],
            role: Role::Bidder,
            round: self.round,
            treatment: self.treatment,
            value: self.values[slot],
            bid: self.bids[slot],
        };
        [rec(0), rec(1)]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionMeta {
    pub session_id: u32,
    /// Master seed when the session was simulated.
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub sessions: Vec<SessionMeta>,
    pub bids: Vec<BidRecord>,
    pub rounds: Vec<RoundRecord>,
}

pub type SubjectKey = (u32, u32);

impl Dataset {
    pub fn from_rounds(sessions: Vec<SessionMeta>, rounds: Vec<RoundRecord>) -> Self {
        let bids = rounds.iter().flat_map(RoundRecord::bid_records).collect();
        Dataset {
            sessions,
            bids,
            rounds,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.bids.is_empty() && self.rounds.is_empty()
    }

    /// Bidder records grouped by `(session_id, subject_id)`, each sorted by round.
    pub fn bidder_panels(&self) -> BTreeMap<SubjectKey, Vec<&BidRecord>> {
        let mut out: BTreeMap<SubjectKey, Vec<&BidRecord>> = BTreeMap::new();
        for r in self.bids.iter().filter(|r| r.role == Role::Bidder) {
            out.entry((r.session_id, r.subject_id)).or_default().push(r);
        }
        for panel in out.values_mut() {
            panel.sort_by_key(|r| r.round);
        }
        out
    }

    pub fn with_treatment(&self, treatment: Treatment) -> Dataset {
        Dataset {
            sessions: self.sessions.clone(),
            bids: self
                .bids
                .iter()
                .filter(|r| r.treatment == treatment)
                .cloned()
                .collect(),
            rounds: self
                .rounds
                .iter()
                .filter(|r| r.treatment == treatment)
                .cloned()
                .collect(),
        }
    }
}

/// Result of dropping dominated (bid above value) bidder observations.
#[derive(Debug, Clone, PartialEq)]
pub struct RegularFiltered {
    pub dataset: Dataset,
    pub dropped: BTreeMap<SubjectKey, usize>,
    /// Indices into `dataset.bids` of kept records with zero surplus.
    pub zero_surplus: Vec<usize>,
}

impl RegularFiltered {
    pub fn dropped_count(&self) -> usize {
        self.dropped.values().sum()
    }
}

/// Keeps the bidder records with `bid <= value`. Round records and seller
/// records pass through untouched.
pub fn regular_filter(d: &Dataset) -> RegularFiltered {
    let mut dropped = BTreeMap::new();
    let mut bids = Vec::with_capacity(d.bids.len());
    let mut zero_surplus = Vec::new();
    for r in &d.bids {
        if r.role == Role::Bidder && !r.is_regular() {
            *dropped.entry((r.session_id, r.subject_id)).or_insert(0) += 1;
            continue;
        }
        if r.role == Role::Bidder && r.bid == r.value {
            zero_surplus.push(bids.len());
        }
        bids.push(r.clone());
    }
    RegularFiltered {
        dataset: Dataset {
            sessions: d.sessions.clone(),
            bids,
            rounds: d.rounds.clone(),
        },
        dropped,
        zero_surplus,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Range {
        session_id: u32,
        subject_id: u32,
        round: u32,
        field: &'static str,
        value: f64,
    },
    DuplicateKey {
        session_id: u32,
        subject_id: u32,
        round: u32,
    },
    RoundSequence {
        session_id: u32,
        subject_id: u32,
        rounds: Vec<u32>,
    },
    RoundGroup {
        session_id: u32,
        round: u32,
        reason: String,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Range {
                session_id,
                subject_id,
                round,
                field,
                value,
            } => write!(
                f,
                "session {session_id} subject {subject_id} round {round}: {field} = {value} outside [{VALUE_MIN}, {VALUE_MAX}]"
            ),
            Violation::DuplicateKey {
                session_id,
                subject_id,
                round,
            } => write!(
                f,
                "session {session_id} subject {subject_id}: duplicate record for round {round}"
            ),
            Violation::RoundSequence {
                session_id,
                subject_id,
                rounds,
            } => write!(
                f,
                "session {session_id} subject {subject_id}: rounds {rounds:?} are not 1..=n"
            ),
            Violation::RoundGroup {
                session_id,
                round,
                reason,
            } => write!(f, "session {session_id} round {round}: {reason}"),
        }
    }
}

fn in_range(x: f64) -> bool {
    (VALUE_MIN..=VALUE_MAX).contains(&x)
}

/// Reports every problem found; an empty list means the dataset is valid.
pub fn validate_dataset(d: &Dataset) -> Vec<Violation> {
    let mut out = Vec::new();

    let mut keys: HashSet<(u32, u32, u32)> = HashSet::new();
    let mut rounds_by_subject: BTreeMap<SubjectKey, Vec<u32>> = BTreeMap::new();
    for r in &d.bids {
        for (field, value) in [("value", r.value), ("bid", r.bid)] {
            if !in_range(value) {
                out.push(Violation::Range {
                    session_id: r.session_id,
                    subject_id: r.subject_id,
                    round: r.round,
                    field,
                    value,
                });
            }
        }
        if !keys.insert((r.session_id, r.subject_id, r.round)) {
            out.push(Violation::DuplicateKey {
                session_id: r.session_id,
                subject_id: r.subject_id,
                round: r.round,
            });
        }
        rounds_by_subject
            .entry((r.session_id, r.subject_id))
            .or_default()
            .push(r.round);
    }
    for ((session_id, subject_id), rounds) in rounds_by_subject {
        let distinct: BTreeSet<u32> = rounds.iter().copied().collect();
        let expected = 1..=distinct.len() as u32;
        if !distinct.iter().copied().eq(expected) {
            out.push(Violation::RoundSequence {
                session_id,
                subject_id,
                rounds: distinct.into_iter().collect(),
            });
        }
    }

    let mut seen_in_round: HashSet<(u32, u32, u32)> = HashSet::new();
    for r in &d.rounds {
        let mut group = |reason: String| {
            out.push(Violation::RoundGroup {
                session_id: r.session_id,
                round: r.round,
                reason,
            })
        };
        if r.round == 0 {
            group("round numbers start at 1".into());
        }
        for x in r.values.iter().chain(r.bids.iter()).chain([&r.price]) {
            if !in_range(*x) {
                group(format!("quantity {x} outside [{VALUE_MIN}, {VALUE_MAX}]"));
            }
        }
        if r.bidder_ids[0] == r.bidder_ids[1] {
            group(format!("bidder {} appears twice", r.bidder_ids[0]));
        }
        if r.bidder_ids.contains(&r.seller_id) {
            group(format!("seller {} is also a bidder", r.seller_id));
        }
        for id in r.bidder_ids.iter().chain([&r.seller_id]) {
            if !seen_in_round.insert((r.session_id, r.round, *id)) {
                group(format!("subject {id} is in more than one group"));
            }
        }
        let Some(slot) = r.winner_slot() else {
            group(format!("winner {} is not one of the bidders", r.winner_id));
            continue;
        };
        let win_bid = r.bids[slot];
        let ok = match r.treatment {
            Treatment::Fp => r.price == win_bid,
            Treatment::Csp => r.price == r.bids[1 - slot],
            Treatment::Ncsp => r.price <= win_bid,
        };
        if !ok {
            group(format!(
                "price {} inconsistent with {} rules (winning bid {win_bid})",
                r.price, r.treatment
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(subject: u32, round: u32, value: f64, bid: f64) -> BidRecord {
        BidRecord {
            session_id: 1,
            subject_id: subject,
            role: Role::Bidder,
            round,
            treatment: Treatment::Fp,
            value,
            bid,
        }
    }

    fn round(r: u32, bids: [f64; 2], price: f64) -> RoundRecord {
        RoundRecord {
            session_id: 1,
            round: r,
            treatment: Treatment::Csp,
            bidder_ids: [1, 2],
            values: bids,
            bids,
            seller_id: 3,
            winner_id: if bids[0] >= bids[1] { 1 } else { 2 },
            price,
        }
    }

    #[test]
    fn regular_filter_drops_overbids() {
        let d = Dataset {
            bids: vec![rec(1, 1, 50.0, 40.0), rec(1, 2, 30.0, 35.0)],
            ..Default::default()
        };
        let f = regular_filter(&d);
        assert_eq!(f.dataset.bids, vec![rec(1, 1, 50.0, 40.0)]);
        assert_eq!(f.dropped_count(), 1);
        assert_eq!(f.dropped.get(&(1, 1)), Some(&1));
    }

    #[test]
    fn regular_filter_identity_and_zero_surplus_flag() {
        let d = Dataset {
            bids: vec![rec(1, 1, 50.0, 40.0), rec(1, 2, 30.0, 30.0)],
            ..Default::default()
        };
        let f = regular_filter(&d);
        assert_eq!(f.dataset, d);
        assert_eq!(f.dropped_count(), 0);
        assert_eq!(f.zero_surplus, vec![1]);
        let twice = regular_filter(&f.dataset);
        assert_eq!(twice.dataset, f.dataset);
    }

    #[test]
    fn well_formed_session_is_valid() {
        let rounds = vec![round(1, [47.0, 25.0], 25.0), round(2, [10.0, 60.0], 10.0)];
        let d = Dataset::from_rounds(vec![], rounds);
        assert!(
            validate_dataset(&d).is_empty(),
            "{:?}",
            validate_dataset(&d)
        );
    }

    #[test]
    fn out_of_range_bid_reported_once() {
        let d = Dataset {
            bids: vec![rec(1, 1, 50.0, 120.0)],
            ..Default::default()
        };
        let v = validate_dataset(&d);
        assert_eq!(v.len(), 1);
        assert!(matches!(v[0], Violation::Range { field: "bid", .. }));
    }

    #[test]
    fn duplicate_key_reported_once() {
        let d = Dataset {
            bids: vec![rec(1, 1, 50.0, 10.0), rec(1, 1, 40.0, 10.0)],
            ..Default::default()
        };
        let v = validate_dataset(&d);
        assert_eq!(v.len(), 1);
        assert!(matches!(v[0], Violation::DuplicateKey { round: 1, .. }));
    }

    #[test]
    fn gap_in_rounds_reported() {
        let d = Dataset {
            bids: vec![rec(1, 1, 50.0, 10.0), rec(1, 3, 40.0, 10.0)],
            ..Default::default()
        };
        let v = validate_dataset(&d);
        assert!(matches!(v.as_slice(), [Violation::RoundSequence { .. }]));
    }

    #[test]
    fn malformed_group_reported() {
        let mut r = round(1, [47.0, 25.0], 47.0);
        let d = Dataset::from_rounds(vec![], vec![r.clone()]);
        assert_eq!(validate_dataset(&d).len(), 1);
        r.price = 25.0;
        r.winner_id = 9;
        let d = Dataset::from_rounds(vec![], vec![r]);
        let v = validate_dataset(&d);
        assert!(v.iter().any(
            |x| matches!(x, Violation::RoundGroup { reason, .. } if reason.contains("winner"))
        ));
    }
}
