//! Seller types from their overcharging ratios.

use std::collections::BTreeMap;
use std::fmt;

use crate::data::{Dataset, Treatment};
use crate::simulate::overcharging_ratio;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SellerType {
    Never,
    Sometimes,
    Always,
}

impl SellerType {
    pub fn as_str(self) -> &'static str {
        match self {
            SellerType::Never => "never",
            SellerType::Sometimes => "sometimes",
            SellerType::Always => "always",
        }
    }
}

impl fmt::Display for SellerType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SellerRow {
    pub session_id: u32,
    pub seller_id: u32,
    pub defined_rounds: usize,
    pub overcharging_rounds: usize,
    /// Mean overcharging ratio over defined rounds.
    pub coefficient: f64,
    pub kind: SellerType,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SellerTypeTable {
    pub rows: Vec<SellerRow>,
    /// Sellers whose every round had equal bids.
    pub excluded: Vec<(u32, u32)>,
}

impl SellerTypeTable {
    pub fn count(&self, kind: SellerType) -> usize {
        self.rows.iter().filter(|r| r.kind == kind).count()
    }

    /// Mean coefficient of the sellers of one type.
    pub fn mean_coefficient(&self, kind: SellerType) -> Option<f64> {
        let xs: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.kind == kind)
            .map(|r| r.coefficient)
            .collect();
        (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
    }
}

/// Classifies every NCSP seller. A round overcharges when its ratio is
/// positive; rounds with equal bids have no ratio and are skipped.
pub fn classify_sellers(d: &Dataset) -> SellerTypeTable {
    let mut per: BTreeMap<(u32, u32), Vec<Option<f64>>> = BTreeMap::new();
    for r in d.rounds.iter().filter(|r| r.treatment == Treatment::Ncsp) {
        per.entry((r.session_id, r.seller_id))
            .or_default()
            .push(overcharging_ratio(r));
    }
    let mut table = SellerTypeTable::default();
    for ((session_id, seller_id), ratios) in per {
        let defined: Vec<f64> = ratios.into_iter().flatten().collect();
        if defined.is_empty() {
            table.excluded.push((session_id, seller_id));
            continue;
        }
        let over = defined.iter().filter(|&&s| s > 0.0).count();
        let kind = if over == 0 {
            SellerType::Never
        } else if over == defined.len() {
            SellerType::Always
        } else {
            SellerType::Sometimes
        };
        table.rows.push(SellerRow {
            session_id,
            seller_id,
            defined_rounds: defined.len(),
            overcharging_rounds: over,
            coefficient: defined.iter().sum::<f64>() / defined.len() as f64,
            kind,
        });
    }
    table
}
