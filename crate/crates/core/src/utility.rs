//! Reference-independent consumption utility `u(.)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Consumption utility family.
///
/// `Power { rho }` is CRRA: `x^(1-rho) / (1-rho)`, falling back to `ln x`
/// at `rho = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ConsumptionUtility {
    #[default]
    Linear,
    Power { rho: f64 },
    Log,
}

impl ConsumptionUtility {
    pub fn validate(&self) -> Result<()> {
        if let ConsumptionUtility::Power { rho } = *self {
            if !(rho >= 0.0) || !rho.is_finite() {
                return Err(Error::param("rho", format!("must be finite and >= 0, got {rho}")));
            }
        }
        Ok(())
    }

    fn is_log(&self) -> bool {
        match *self {
            ConsumptionUtility::Log => true,
            ConsumptionUtility::Power { rho } => rho == 1.0,
            ConsumptionUtility::Linear => false,
        }
    }

    /// Smallest wealth at which `u` is finite: `None` for unrestricted
    /// (linear), `Some((bound, inclusive))` otherwise.
    pub fn domain_floor(&self) -> Option<(f64, bool)> {
        match *self {
            ConsumptionUtility::Linear => None,
            ConsumptionUtility::Power { rho } if rho == 0.0 => None,
            ConsumptionUtility::Power { rho } if rho < 1.0 => Some((0.0, true)),
            _ => Some((0.0, false)),
        }
    }

    /// `u(x)`; NaN or -inf outside the domain.
    pub fn eval(&self, x: f64) -> f64 {
        if self.is_log() {
            return if x > 0.0 { x.ln() } else if x == 0.0 { f64::NEG_INFINITY } else { f64::NAN };
        }
        match *self {
            ConsumptionUtility::Linear => x,
            ConsumptionUtility::Power { rho } => {
                if rho == 0.0 {
                    return x;
                }
                let k = 1.0 - rho;
                if x < 0.0 {
                    f64::NAN
                } else if x == 0.0 {
                    if k > 0.0 { 0.0 } else { f64::NEG_INFINITY }
                } else {
                    x.powf(k) / k
                }
            }
            ConsumptionUtility::Log => unreachable!(),
        }
    }

    /// `u'(x)`.
    pub fn marginal(&self, x: f64) -> f64 {
        match *self {
            ConsumptionUtility::Linear => 1.0,
            ConsumptionUtility::Log => 1.0 / x,
            ConsumptionUtility::Power { rho } => {
                if rho == 0.0 {
                    1.0
                } else {
                    x.powf(-rho)
                }
            }
        }
    }

    /// `u^{-1}(v)`.
    pub fn inverse(&self, v: f64) -> f64 {
        if self.is_log() {
            return v.exp();
        }
        match *self {
            ConsumptionUtility::Linear => v,
            ConsumptionUtility::Power { rho } => {
                if rho == 0.0 {
                    return v;
                }
                let k = 1.0 - rho;
                (k * v).powf(1.0 / k)
            }
            ConsumptionUtility::Log => unreachable!(),
        }
    }

    pub fn eval_checked(&self, x: f64) -> Result<f64> {
        let v = self.eval(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Domain(format!("consumption utility is not finite at {x}")))
        }
    }
}
