//! Optimal subjective beliefs over a discrete lottery.
//!
//! Total utility for subjective beliefs `q` is
//!
//! ```text
//! U(q) = sum_s q_s u_s + eta * sum_s p_s mu(u_s - E_q),   E_q = sum_s q_s u_s
//! ```
//!
//! and depends on `q` only through `E_q`. With the linear gain-loss function,
//! `U` is concave and piecewise linear in `E_q`, with kinks at the payoff
//! utilities and slope `eta (lambda - 1) (P+ - P*)` on each open segment,
//! where `P+` is the objective mass of the states at or above the
//! expectation. The exact optimiser only has to inspect the segment slopes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lottery::DiscreteLottery;
use crate::preferences::{cutoff_probability, gain_loss, GainLossSpec, Preferences};

/// Slopes whose gain mass is within this distance of the cutoff are treated
/// as flat.
pub const PLATEAU_TOL: f64 = 1e-12;

const BELIEF_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpectationInterval {
    pub lo: f64,
    pub hi: f64,
}

impl ExpectationInterval {
    pub fn point(x: f64) -> Self {
        ExpectationInterval { lo: x, hi: x }
    }

    pub fn contains(&self, x: f64, tol: f64) -> bool {
        x >= self.lo - tol && x <= self.hi + tol
    }

    /// Distance from `x` to the interval (0 inside).
    pub fn distance(&self, x: f64) -> f64 {
        if x < self.lo {
            self.lo - x
        } else if x > self.hi {
            x - self.hi
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeliefSolution {
    pub q: Vec<f64>,
    pub subjective_expectation: f64,
    pub gain_mass: f64,
    pub total_utility: f64,
    pub expectation_interval: ExpectationInterval,
}

fn check_beliefs(lottery: &DiscreteLottery, q: &[f64]) -> Result<()> {
    if q.len() != lottery.len() {
        return Err(Error::LengthMismatch {
            expected: lottery.len(),
            actual: q.len(),
        });
    }
    if let Some(x) = q.iter().find(|x| !(**x >= 0.0) || !x.is_finite()) {
        return Err(Error::InvalidBeliefs(format!("entry {x} is negative or not finite")));
    }
    let total: f64 = q.iter().sum();
    if (total - 1.0).abs() > BELIEF_SUM_TOL {
        return Err(Error::InvalidBeliefs(format!("entries sum to {total}, not 1")));
    }
    Ok(())
}

/// Subjective expectation `sum_s q_s u_s`.
pub fn subjective_expectation(lottery: &DiscreteLottery, q: &[f64]) -> Result<f64> {
    check_beliefs(lottery, q)?;
    Ok(q.iter().zip(lottery.utilities()).map(|(q, u)| q * u).sum())
}

/// Total utility as a function of the subjective expectation alone.
pub fn utility_at_expectation(lottery: &DiscreteLottery, expectation: f64, prefs: &Preferences) -> f64 {
    let gain_loss_term: f64 = lottery
        .probs()
        .iter()
        .zip(lottery.utilities())
        .map(|(p, u)| p * gain_loss(u - expectation, prefs))
        .sum();
    expectation + prefs.eta * gain_loss_term
}

/// Anticipatory plus prospective gain-loss utility of beliefs `q`.
pub fn total_utility(lottery: &DiscreteLottery, q: &[f64], prefs: &Preferences) -> Result<f64> {
    let e = subjective_expectation(lottery, q)?;
    Ok(utility_at_expectation(lottery, e, prefs))
}

/// Total utility under rational beliefs `q = p`.
pub fn rational_utility(lottery: &DiscreteLottery, prefs: &Preferences) -> f64 {
    utility_at_expectation(lottery, lottery.rational_expectation(), prefs)
}

/// Objective mass of states whose utility is at or above `expectation`.
pub fn gain_probability(lottery: &DiscreteLottery, expectation: f64) -> f64 {
    lottery
        .probs()
        .iter()
        .zip(lottery.utilities())
        .filter(|(_, u)| **u >= expectation)
        .map(|(p, _)| p)
        .sum()
}

/// Gain probability at the rational expectation.
pub fn rational_gain_probability(lottery: &DiscreteLottery) -> f64 {
    gain_probability(lottery, lottery.rational_expectation())
}

/// A belief vector with the given subjective expectation.
///
/// Scales objective probabilities by one factor on the gain set
/// `{u_s >= target}` and another on the loss set so that mass and mean
/// constraints hold; degenerate cases fall back to a blend of the lowest and
/// highest states.
pub fn canonical_beliefs(lottery: &DiscreteLottery, target: f64) -> Result<Vec<f64>> {
    let u = lottery.utilities();
    let p = lottery.probs();
    let (lo, hi) = (lottery.min_utility(), lottery.max_utility());
    let slack = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
    if !(target >= lo - slack && target <= hi + slack) {
        return Err(Error::TargetOutOfRange { target, lo, hi });
    }
    let target = target.clamp(lo, hi);
    let n = u.len();
    if n == 1 {
        return Ok(vec![1.0]);
    }
    if target == hi || target == lo {
        let mut q = vec![0.0; n];
        q[if target == hi { n - 1 } else { 0 }] = 1.0;
        return Ok(q);
    }

    let (mut pg, mut mg, mut pl, mut ml) = (0.0, 0.0, 0.0, 0.0);
    for (ps, us) in p.iter().zip(u) {
        if *us >= target {
            pg += ps;
            mg += ps * us;
        } else {
            pl += ps;
            ml += ps * us;
        }
    }
    if pg > 0.0 && pl > 0.0 {
        let mean_g = mg / pg;
        let mean_l = ml / pl;
        let spread = mean_g - mean_l;
        if spread > 0.0 {
            let c_gain = (target - mean_l) / (pg * spread);
            let c_loss = (mean_g - target) / (pl * spread);
            if c_gain >= 0.0 && c_loss >= 0.0 {
                return Ok(p
                    .iter()
                    .zip(u)
                    .map(|(ps, us)| if *us >= target { c_gain * ps } else { c_loss * ps })
                    .collect());
            }
        }
    }

    let mut q = vec![0.0; n];
    if target == lottery.rational_expectation() {
        q.copy_from_slice(p);
        return Ok(q);
    }
    let theta = (target - lo) / (hi - lo);
    q[n - 1] += theta;
    q[0] += 1.0 - theta;
    Ok(q)
}

fn solution_at(lottery: &DiscreteLottery, interval: ExpectationInterval, prefs: &Preferences) -> Result<BeliefSolution> {
    let e = interval.lo;
    let q = canonical_beliefs(lottery, e)?;
    let total = total_utility(lottery, &q, prefs)?;
    Ok(BeliefSolution {
        subjective_expectation: e,
        gain_mass: gain_probability(lottery, e),
        q,
        total_utility: total,
        expectation_interval: interval,
    })
}

/// Optimal expectation set for the linear gain-loss function.
///
/// The slope on segment `(u_k, u_{k+1})` has the sign of `tail_k - P*`,
/// where `tail_k` is the mass strictly above `u_k`. Tails shrink with `k`, so
/// the leftmost optimum is the first kink whose right slope is not positive.
pub fn optimal_expectation_interval(lottery: &DiscreteLottery, prefs: &Preferences) -> Result<ExpectationInterval> {
    if !prefs.is_linear() {
        return Err(Error::UnsupportedGainLoss { expected: "linear" });
    }
    let u = lottery.utilities();
    let p = lottery.probs();
    let n = u.len();
    if n < 2 {
        return Err(Error::TooFewStates(n));
    }
    let p_star = cutoff_probability(prefs);
    for k in 0..n - 1 {
        let tail: f64 = p[k + 1..].iter().sum();
        if tail < p_star + PLATEAU_TOL {
            let hi = if (tail - p_star).abs() <= PLATEAU_TOL { u[k + 1] } else { u[k] };
            return Ok(ExpectationInterval { lo: u[k], hi });
        }
    }
    Ok(ExpectationInterval::point(u[n - 1]))
}

/// Exact optimal beliefs.
///
/// Returns the leftmost optimal expectation with its canonical belief vector.
/// Lotteries configured with the general gain-loss family are routed to
/// [`general_residual_solve`].
pub fn solve_optimal_beliefs(lottery: &DiscreteLottery, prefs: &Preferences) -> Result<BeliefSolution> {
    match prefs.gain_loss {
        GainLossSpec::Linear => {
            let interval = optimal_expectation_interval(lottery, prefs)?;
            solution_at(lottery, interval, prefs)
        }
        GainLossSpec::General { .. } => general_residual_solve(lottery, prefs),
    }
}

/// First-order residual for the constant-marginal general family:
/// `sum_{loss} p_s [lambda(E - u_s) - 1] - (1 - eta beta) / (eta beta)`.
///
/// Total utility increases in `E` where the residual is negative.
pub fn residual(lottery: &DiscreteLottery, expectation: f64, prefs: &Preferences) -> Result<f64> {
    let GainLossSpec::General { beta, .. } = prefs.gain_loss else {
        return Err(Error::UnsupportedGainLoss { expected: "general" });
    };
    let eb = prefs.eta * beta;
    let loss_term: f64 = lottery
        .probs()
        .iter()
        .zip(lottery.utilities())
        .filter(|(_, u)| **u < expectation)
        .map(|(p, u)| p * (prefs.gain_loss.loss_aversion_at(expectation - u, prefs.lambda0) - 1.0))
        .sum();
    Ok(loss_term - (1.0 - eb) / eb)
}

/// Bisection for a root of an increasing function with `f(lo) < 0 <= f(hi)`.
/// Runs until the bracket cannot shrink further in floating point.
fn bisect_increasing(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = f(mid);
        if v == 0.0 {
            return mid;
        }
        if v < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if f(lo).abs() <= f(hi).abs() {
        lo
    } else {
        hi
    }
}

/// Optimal beliefs for the general gain-loss family.
///
/// Scans every inter-payoff segment for a residual sign change from negative
/// to non-negative (a local maximum of total utility), bisects it, and keeps
/// the best candidate among the roots and the two corners.
pub fn general_residual_solve(lottery: &DiscreteLottery, prefs: &Preferences) -> Result<BeliefSolution> {
    if !matches!(prefs.gain_loss, GainLossSpec::General { .. }) {
        return Err(Error::UnsupportedGainLoss { expected: "general" });
    }
    let u = lottery.utilities();
    let n = u.len();
    if n < 2 {
        return Err(Error::TooFewStates(n));
    }
    let r = |e: f64| residual(lottery, e, prefs).expect("general family checked above");

    let mut candidates = vec![u[0], u[n - 1]];
    for w in u.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (ra, rb) = (r(a), r(b));
        if ra < 0.0 && rb >= 0.0 {
            candidates.push(bisect_increasing(a, b, r));
        }
    }
    candidates.sort_by(|a, b| a.total_cmp(b));

    let mut best = candidates[0];
    let mut best_value = utility_at_expectation(lottery, best, prefs);
    for &e in &candidates[1..] {
        let v = utility_at_expectation(lottery, e, prefs);
        if v > best_value {
            best = e;
            best_value = v;
        }
    }
    solution_at(lottery, ExpectationInterval::point(best), prefs)
}
