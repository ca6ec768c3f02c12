//! Auction equilibria under a rule-breaking-averse seller, a seeded auction
//! simulator, revealed-preference consistency tests for observed bids, and
//! the estimators used to summarise experimental auction data.

pub mod cli;
pub mod data;
pub mod dist;
pub mod equilibrium;
pub mod error;
pub mod estimate;
pub mod io;
pub mod rationality;
pub mod simulate;

pub use error::{Error, Result};
