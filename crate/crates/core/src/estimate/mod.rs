//! Estimators and tests run on lab or simulated data.

pub mod ols;
pub mod sellers;
pub mod stats;
pub mod tobit;

pub use ols::{bid_value_coefficient, bidding_regression, ols_origin, RegressionResult};
pub use sellers::{classify_sellers, SellerRow, SellerType, SellerTypeTable};
pub use stats::{ks_two_sample, t_test_two_sided, two_proportion_z_test, KsResult};
pub use tobit::{censored_sample, estimate_gamma, CensoredObs, CensoredSample, GammaEstimate};
