//! Optimal expectations: anticipatory utility, endogenous beliefs, and their
//! consequences for information timing, portfolio choice and asset prices.

pub mod beliefs;
pub mod continuous;
pub mod equilibrium;
pub mod error;
pub mod lottery;
mod optimize;
pub mod oracles;
pub mod portfolio;
pub mod preferences;
pub mod quadrature;
pub mod timing;
pub mod utility;

pub use error::{Error, Result};
pub use lottery::DiscreteLottery;
pub use preferences::{cutoff_probability, eta_for_cutoff, gain_loss, GainLossSpec, Preferences};
pub use utility::ConsumptionUtility;
