//! Preference over the timing of a fully informative signal.

use serde::{Deserialize, Serialize};

use crate::beliefs::{canonical_beliefs, optimal_expectation_interval, solve_optimal_beliefs, total_utility};
use crate::error::Result;
use crate::lottery::DiscreteLottery;
use crate::preferences::{gain_loss, Preferences};

/// Utility differences within this tolerance are reported as indifference.
pub const TIMING_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Early,
    Wait,
    Indifferent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingVerdict {
    pub u_early: f64,
    pub u_wait: f64,
    pub verdict: Verdict,
}

/// Utility when the outcome is revealed before period 2: anticipation of the
/// subjective mean plus `gamma`-weighted prospective gain-loss utility, taken
/// under the agent's own beliefs.
pub fn utility_early(lottery: &DiscreteLottery, q: &[f64], prefs: &Preferences) -> Result<f64> {
    let e = crate::beliefs::subjective_expectation(lottery, q)?;
    let prospective: f64 = q
        .iter()
        .zip(lottery.utilities())
        .map(|(q, u)| q * gain_loss(u - e, prefs))
        .sum();
    Ok(e + prefs.gamma * prefs.eta * prospective)
}

/// Utility when the outcome is learnt only at consumption.
pub fn utility_wait(lottery: &DiscreteLottery, q: &[f64], prefs: &Preferences) -> Result<f64> {
    total_utility(lottery, q, prefs)
}

fn optimal_q(lottery: &DiscreteLottery, prefs: &Preferences) -> Result<Vec<f64>> {
    if lottery.len() < 2 {
        return Ok(vec![1.0]);
    }
    // When rational beliefs are themselves optimal the agent has no reason to
    // distort, so the comparison is made at q = p.
    if prefs.is_linear() {
        let interval = optimal_expectation_interval(lottery, prefs)?;
        let e_p = lottery.rational_expectation();
        if interval.contains(e_p, 1e-12) {
            return Ok(lottery.probs().to_vec());
        }
        return canonical_beliefs(lottery, interval.lo);
    }
    Ok(solve_optimal_beliefs(lottery, prefs)?.q)
}

pub fn classify(u_early: f64, u_wait: f64) -> Verdict {
    let d = u_early - u_wait;
    if d > TIMING_TOL {
        Verdict::Early
    } else if d < -TIMING_TOL {
        Verdict::Wait
    } else {
        Verdict::Indifferent
    }
}

/// Timing preference evaluated at the agent's optimal beliefs.
pub fn timing_preference(lottery: &DiscreteLottery, prefs: &Preferences) -> Result<TimingVerdict> {
    let q = optimal_q(lottery, prefs)?;
    let u_early = utility_early(lottery, &q, prefs)?;
    let u_wait = utility_wait(lottery, &q, prefs)?;
    Ok(TimingVerdict {
        u_early,
        u_wait,
        verdict: classify(u_early, u_wait),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn two_state(p_gain: f64) -> DiscreteLottery {
        DiscreteLottery::new(vec![0.0, 1.0], vec![1.0 - p_gain, p_gain]).unwrap()
    }

    #[test]
    fn early_examples() {
        let prefs = Preferences::new(0.8, 2.25).unwrap();
        let l = two_state(0.9);
        assert_abs_diff_eq!(utility_early(&l, &[0.0, 1.0], &prefs).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(utility_early(&l, &[0.5, 0.5], &prefs).unwrap(), 0.25, epsilon = 1e-12);
        let half = prefs.with_gamma(0.5).unwrap();
        assert_abs_diff_eq!(utility_early(&l, &[1.0, 0.0], &half).unwrap(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn wait_examples() {
        let prefs = Preferences::new(0.8, 2.25).unwrap();
        let l = two_state(0.9);
        assert_abs_diff_eq!(utility_wait(&l, &[0.0, 1.0], &prefs).unwrap(), 0.82, epsilon = 1e-12);
        assert_abs_diff_eq!(utility_wait(&l, &[1.0, 0.0], &prefs).unwrap(), 0.8 * 0.9, epsilon = 1e-12);
    }

    #[test]
    fn verdicts() {
        let prefs = Preferences::new(0.8, 2.25).unwrap();
        let v = timing_preference(&two_state(0.9), &prefs).unwrap();
        assert_eq!(v.verdict, Verdict::Early);
        assert_abs_diff_eq!(v.u_early, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(v.u_wait, 0.82, epsilon = 1e-12);

        assert_eq!(timing_preference(&two_state(0.5), &prefs).unwrap().verdict, Verdict::Wait);

        let eta = crate::preferences::eta_for_cutoff(0.5, 2.25).unwrap();
        let knife = Preferences::new(eta, 2.25).unwrap();
        assert_eq!(timing_preference(&two_state(0.5), &knife).unwrap().verdict, Verdict::Indifferent);
    }

    #[test]
    fn serializes_lowercase() {
        let v = TimingVerdict {
            u_early: 1.0,
            u_wait: 0.5,
            verdict: Verdict::Early,
        };
        assert!(serde_json::to_string(&v).unwrap().contains("\"early\""));
    }
}
