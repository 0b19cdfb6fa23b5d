//! Discrete lotteries: sorted, merged payoff states with objective
//! probabilities and a consumption utility.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::utility::ConsumptionUtility;

/// Probabilities must sum to one within this tolerance.
pub const PROB_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLottery")]
pub struct DiscreteLottery {
    payoffs: Vec<f64>,
    probs: Vec<f64>,
    utility: ConsumptionUtility,
    #[serde(skip)]
    utils: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLottery {
    payoffs: Vec<f64>,
    probs: Vec<f64>,
    #[serde(default)]
    utility: ConsumptionUtility,
}

impl TryFrom<RawLottery> for DiscreteLottery {
    type Error = Error;

    fn try_from(raw: RawLottery) -> Result<Self> {
        DiscreteLottery::with_utility(raw.payoffs, raw.probs, raw.utility)
    }
}

impl DiscreteLottery {
    /// Lottery with linear consumption utility.
    pub fn new(payoffs: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        Self::with_utility(payoffs, probs, ConsumptionUtility::Linear)
    }

    pub fn with_utility(payoffs: Vec<f64>, probs: Vec<f64>, utility: ConsumptionUtility) -> Result<Self> {
        utility.validate()?;
        if payoffs.len() != probs.len() {
            return Err(Error::LengthMismatch {
                expected: payoffs.len(),
                actual: probs.len(),
            });
        }
        if payoffs.is_empty() {
            return Err(Error::InvalidLottery("at least one state is required".into()));
        }
        if let Some(z) = payoffs.iter().find(|z| !z.is_finite()) {
            return Err(Error::InvalidLottery(format!("payoff {z} is not finite")));
        }
        if let Some(p) = probs.iter().find(|p| !(**p > 0.0) || !p.is_finite()) {
            return Err(Error::InvalidLottery(format!("probability {p} is not strictly positive")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::InvalidLottery(format!("probabilities sum to {total}, not 1")));
        }

        let mut states: Vec<(f64, f64)> = payoffs.into_iter().zip(probs).collect();
        states.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(states.len());
        for (z, p) in states {
            match merged.last_mut() {
                Some(last) if last.0 == z => last.1 += p,
                _ => merged.push((z, p)),
            }
        }
        let (payoffs, mut probs): (Vec<f64>, Vec<f64>) = merged.into_iter().unzip();
        for p in &mut probs {
            *p /= total;
        }
        let utils = payoffs
            .iter()
            .map(|&z| utility.eval_checked(z))
            .collect::<Result<Vec<_>>>()?;
        Ok(DiscreteLottery {
            payoffs,
            probs,
            utility,
            utils,
        })
    }

    pub fn payoffs(&self) -> &[f64] {
        &self.payoffs
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Consumption utilities `u(Z_s)`, ascending.
    pub fn utilities(&self) -> &[f64] {
        &self.utils
    }

    pub fn utility(&self) -> ConsumptionUtility {
        self.utility
    }

    pub fn len(&self) -> usize {
        self.payoffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.payoffs.is_empty()
    }

    /// Objective expectation of consumption utility.
    pub fn rational_expectation(&self) -> f64 {
        self.probs.iter().zip(&self.utils).map(|(p, u)| p * u).sum()
    }

    pub fn min_utility(&self) -> f64 {
        self.utils[0]
    }

    pub fn max_utility(&self) -> f64 {
        self.utils[self.utils.len() - 1]
    }
}
