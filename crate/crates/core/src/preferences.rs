//! Agent parameters and the universal gain-loss function.
//!
//! An agent is described by the weight `eta` on gain-loss utility, the
//! loss-aversion coefficient `lambda0`, the weight `gamma` on period-1
//! prospective gain-loss utility (only used for information timing), and the
//! shape of the gain-loss function itself.
//!
//! Two gain-loss families are supported:
//!
//! * [`GainLossSpec::Linear`]: `mu(x) = x` on gains, `lambda0 * x` on losses.
//! * [`GainLossSpec::General`]: constant marginal utility `beta` on gains and
//!   `beta * lambda(x)` on a loss of size `x`, with
//!   `lambda(x) = 1 + (lambda0 - 1)(1 - exp(-kappa x))`. The loss-aversion
//!   factor starts at 1 for infinitesimal losses and saturates at `lambda0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GainLossSpec {
    Linear,
    /// Constant marginal utility `beta` on gains, saturating loss aversion on
    /// losses. `kappa` is the saturation rate per payoff unit.
    General { beta: f64, kappa: f64 },
}

impl Default for GainLossSpec {
    fn default() -> Self {
        GainLossSpec::Linear
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPreferences")]
pub struct Preferences {
    pub eta: f64,
    #[serde(rename = "lambda")]
    pub lambda0: f64,
    pub gamma: f64,
    pub gain_loss: GainLossSpec,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPreferences {
    eta: f64,
    lambda: f64,
    #[serde(default = "default_gamma")]
    gamma: f64,
    #[serde(default)]
    gain_loss: GainLossSpec,
}

fn default_gamma() -> f64 {
    1.0
}

impl TryFrom<RawPreferences> for Preferences {
    type Error = Error;

    fn try_from(raw: RawPreferences) -> Result<Self> {
        Preferences::with_spec(raw.eta, raw.lambda, raw.gamma, raw.gain_loss)
    }
}

impl Preferences {
    /// Linear gain-loss agent with `gamma = 1`.
    pub fn new(eta: f64, lambda0: f64) -> Result<Self> {
        Self::with_spec(eta, lambda0, 1.0, GainLossSpec::Linear)
    }

    pub fn general(eta: f64, lambda0: f64, beta: f64, kappa: f64) -> Result<Self> {
        Self::with_spec(eta, lambda0, 1.0, GainLossSpec::General { beta, kappa })
    }

    pub fn with_spec(eta: f64, lambda0: f64, gamma: f64, gain_loss: GainLossSpec) -> Result<Self> {
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::param("eta", format!("must lie in (0, 1], got {eta}")));
        }
        if !(lambda0 > 1.0) || !lambda0.is_finite() {
            return Err(Error::param("lambda", format!("must be a finite value > 1, got {lambda0}")));
        }
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::param("gamma", format!("must lie in [0, 1], got {gamma}")));
        }
        if let GainLossSpec::General { beta, kappa } = gain_loss {
            if !(beta > 0.0) || !beta.is_finite() {
                return Err(Error::param("beta", format!("must be positive, got {beta}")));
            }
            if !(kappa > 0.0) {
                return Err(Error::param("kappa", format!("must be positive, got {kappa}")));
            }
            if !(eta * beta < 1.0) {
                return Err(Error::param(
                    "beta",
                    format!("eta * beta must be < 1, got {}", eta * beta),
                ));
            }
        }
        Ok(Preferences {
            eta,
            lambda0,
            gamma,
            gain_loss,
        })
    }

    pub fn with_gamma(self, gamma: f64) -> Result<Self> {
        Self::with_spec(self.eta, self.lambda0, gamma, self.gain_loss)
    }

    pub fn cutoff_probability(&self) -> f64 {
        cutoff_probability(self)
    }

    pub fn is_linear(&self) -> bool {
        matches!(self.gain_loss, GainLossSpec::Linear)
    }
}

/// Cutoff gain probability `(eta*lambda - 1) / (eta*(lambda - 1))`.
///
/// Returned unclamped: a negative value means the agent is optimistic for
/// every lottery (`eta < 1/lambda`).
pub fn cutoff_probability(prefs: &Preferences) -> f64 {
    let Preferences { eta, lambda0, .. } = *prefs;
    (eta * lambda0 - 1.0) / (eta * (lambda0 - 1.0))
}

/// The weight `eta` that produces cutoff `p_star` at loss aversion `lambda0`.
pub fn eta_for_cutoff(p_star: f64, lambda0: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p_star) {
        return Err(Error::param("p_star", format!("must lie in [0, 1], got {p_star}")));
    }
    if !(lambda0 > 1.0) || !lambda0.is_finite() {
        return Err(Error::param("lambda", format!("must be a finite value > 1, got {lambda0}")));
    }
    Ok(1.0 / (lambda0 - p_star * (lambda0 - 1.0)))
}

impl GainLossSpec {
    /// Loss-aversion factor applied to a loss of size `x >= 0`.
    pub fn loss_aversion_at(&self, x: f64, lambda0: f64) -> f64 {
        match *self {
            GainLossSpec::Linear => lambda0,
            GainLossSpec::General { kappa, .. } => {
                1.0 - (lambda0 - 1.0) * libm::expm1(-kappa * x.max(0.0))
            }
        }
    }

    /// Marginal utility of gains.
    pub fn gain_slope(&self) -> f64 {
        match *self {
            GainLossSpec::Linear => 1.0,
            GainLossSpec::General { beta, .. } => beta,
        }
    }
}

/// Universal gain-loss function `mu(x)`.
pub fn gain_loss(x: f64, prefs: &Preferences) -> f64 {
    if x >= 0.0 {
        return prefs.gain_loss.gain_slope() * x;
    }
    match prefs.gain_loss {
        GainLossSpec::Linear => prefs.lambda0 * x,
        GainLossSpec::General { beta, kappa } => {
            // -beta * integral_0^y lambda(t) dt with y = -x
            let y = -x;
            let saturation = -libm::expm1(-kappa * y) / kappa;
            -beta * (y + (prefs.lambda0 - 1.0) * (y - saturation))
        }
    }
}

/// Two-state cutoff for the general family: with payoffs `(u1, u2)` and
/// `distance = u2 - u1`, the corner belief on the top state is optimal iff the
/// top-state probability exceeds this value.
///
/// For the linear family this is [`cutoff_probability`].
pub fn two_state_cutoff(prefs: &Preferences, distance: f64) -> f64 {
    let eb = prefs.eta * prefs.gain_loss.gain_slope();
    let lam = prefs.gain_loss.loss_aversion_at(distance, prefs.lambda0);
    (eb * lam - 1.0) / (eb * (lam - 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn cutoff_examples() {
        let p = Preferences::new(1.0, 2.25).unwrap();
        assert_abs_diff_eq!(cutoff_probability(&p), 1.0, epsilon = 1e-12);
        let p = Preferences::new(0.8, 2.25).unwrap();
        assert_abs_diff_eq!(cutoff_probability(&p), 0.8, epsilon = 1e-12);
        let p = Preferences::new(1.0 / 2.25, 2.25).unwrap();
        assert_abs_diff_eq!(cutoff_probability(&p), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn cutoff_is_unclamped_for_small_eta() {
        let p = Preferences::new(0.3, 2.25).unwrap();
        assert!(cutoff_probability(&p) < 0.0);
    }

    #[test]
    fn eta_inverse_examples() {
        assert_abs_diff_eq!(eta_for_cutoff(1.0, 2.25).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(eta_for_cutoff(0.0, 2.25).unwrap(), 1.0 / 2.25, epsilon = 1e-15);
        let eta = eta_for_cutoff(0.5, 2.25).unwrap();
        assert_abs_diff_eq!(eta, 1.0 / 1.625, epsilon = 1e-15);
        let p = Preferences::new(eta, 2.25).unwrap();
        assert_abs_diff_eq!(cutoff_probability(&p), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn eta_inverse_rejects_bad_inputs() {
        assert!(eta_for_cutoff(1.2, 2.25).is_err());
        assert!(eta_for_cutoff(0.5, 1.0).is_err());
    }

    #[test]
    fn gain_loss_linear_examples() {
        let p = Preferences::new(0.8, 2.25).unwrap();
        assert_eq!(gain_loss(0.0, &p), 0.0);
        assert_abs_diff_eq!(gain_loss(-2.0, &p), -4.5, epsilon = 1e-15);
        assert_eq!(gain_loss(1.5, &p), 1.5);
    }

    #[test]
    fn gain_loss_general_closed_form_matches_integral() {
        let p = Preferences::general(0.5, 2.25, 1.3, 0.7).unwrap();
        let x = 2.4;
        // midpoint rule on beta * lambda(t)
        let n = 200_000;
        let h = x / n as f64;
        let integral: f64 = (0..n)
            .map(|i| 1.3 * p.gain_loss.loss_aversion_at((i as f64 + 0.5) * h, 2.25) * h)
            .sum();
        assert_abs_diff_eq!(gain_loss(-x, &p), -integral, epsilon = 1e-9);
        assert_abs_diff_eq!(gain_loss(x, &p), 1.3 * x, epsilon = 1e-15);
        assert_eq!(gain_loss(0.0, &p), 0.0);
    }

    #[test]
    fn loss_aversion_family_limits() {
        let spec = GainLossSpec::General { beta: 1.0, kappa: 3.0 };
        assert_abs_diff_eq!(spec.loss_aversion_at(0.0, 2.25), 1.0, epsilon = 1e-15);
        assert!(spec.loss_aversion_at(1e-3, 2.25) > 1.0);
        assert_abs_diff_eq!(spec.loss_aversion_at(50.0, 2.25), 2.25, epsilon = 1e-12);
    }

    #[test]
    fn validation() {
        assert!(Preferences::new(0.0, 2.0).is_err());
        assert!(Preferences::new(1.1, 2.0).is_err());
        assert!(Preferences::new(0.5, 1.0).is_err());
        assert!(Preferences::new(0.5, 2.0).unwrap().with_gamma(1.5).is_err());
        assert!(Preferences::general(0.8, 2.0, 1.3, 1.0).is_err());
        assert!(Preferences::general(0.8, 2.0, 1.0, 0.0).is_err());
        assert!(Preferences::general(0.8, 2.0, 1.0, 1.0).is_ok());
    }

    #[test]
    fn json_round_trip_and_defaults() {
        let p: Preferences = serde_json::from_str(r#"{"eta":0.8,"lambda":2.25}"#).unwrap();
        assert_eq!(p.gamma, 1.0);
        assert_eq!(p.gain_loss, GainLossSpec::Linear);
        let json = serde_json::to_string(&p).unwrap();
        let back: Preferences = serde_json::from_str(&json).unwrap();
        assert_eq!(back, p);

        let g: Preferences = serde_json::from_str(
            r#"{"eta":0.5,"lambda":2.0,"gamma":0.5,"gain_loss":{"kind":"general","beta":1.0,"kappa":4.0}}"#,
        )
        .unwrap();
        assert_eq!(g.gain_loss, GainLossSpec::General { beta: 1.0, kappa: 4.0 });

        let bad = serde_json::from_str::<Preferences>(r#"{"eta":2.0,"lambda":2.25}"#);
        assert!(bad.unwrap_err().to_string().contains("eta"));
    }
}
