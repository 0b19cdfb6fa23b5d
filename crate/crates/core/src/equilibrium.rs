//! Homogeneous-investor equilibrium prices of a risky asset under a
//! short-sale constraint, linear utility and a zero risk-free return.
//!
//! The loss-aversion coefficient is held fixed and `eta` is backed out from
//! the cutoff probability, so sweeping `P*` over `(0, 1)` moves investors from
//! optimism to pessimism.

use serde::{Deserialize, Serialize};

use crate::continuous::{partial_expectation, subjective_expectation, ContinuousDistribution};
use crate::error::{Error, Result};
use crate::preferences::{eta_for_cutoff, gain_loss, Preferences};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumPoint {
    pub p_star: f64,
    pub eta: f64,
    pub pi_rational: f64,
    pub pi_naive: f64,
    pub pi_sophisticated: f64,
}

/// Landmarks of a sweep, each located by bisection in `P*`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// Cutoff at which the optimal subjective expectation crosses zero.
    pub naive_zero: Option<f64>,
    /// Cutoff at which the loss-region partial expectation crosses zero;
    /// the sophisticated and rational prices cross here.
    pub loss_integral_zero: Option<f64>,
    /// Minimiser of the sophisticated price.
    pub turning_point: Option<f64>,
}

fn check_cutoff(prefs: &Preferences) -> Result<f64> {
    let p = prefs.cutoff_probability();
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::UnboundedExpectation(p));
    }
    Ok(p)
}

/// `eta * E_f(R)`.
pub fn rational_price(dist: &ContinuousDistribution, prefs: &Preferences) -> f64 {
    prefs.eta * dist.mean()
}

/// `eta * a`, with `a` the optimal subjective expectation of `R`.
pub fn naive_price(dist: &ContinuousDistribution, prefs: &Preferences) -> Result<f64> {
    let p = check_cutoff(prefs)?;
    Ok(prefs.eta * subjective_expectation(dist, p)?)
}

/// `eta E_f(R) + eta (lambda - 1) int_{-inf}^{a} f(R) R dR`.
pub fn sophisticated_price(dist: &ContinuousDistribution, prefs: &Preferences) -> Result<f64> {
    let p = check_cutoff(prefs)?;
    let a = subjective_expectation(dist, p)?;
    Ok(prefs.eta * dist.mean() + prefs.eta * (prefs.lambda0 - 1.0) * partial_expectation(dist, a))
}

/// Total utility of a sophisticated investor holding `alpha` units bought at
/// `price`, evaluated directly from the anticipatory plus gain-loss
/// functional at optimal beliefs. At the equilibrium price it does not depend
/// on `alpha`.
pub fn sophisticated_holding_value(
    dist: &ContinuousDistribution,
    prefs: &Preferences,
    price: f64,
    alpha: f64,
) -> Result<f64> {
    let p = check_cutoff(prefs)?;
    if alpha < 0.0 {
        return Err(Error::param("alpha", format!("short positions are not allowed, got {alpha}")));
    }
    let a = subjective_expectation(dist, p)?;
    let reference = alpha * a;
    let gl = dist.expect(|r| gain_loss(alpha * r - reference, prefs));
    Ok(reference + prefs.eta * gl - alpha * price)
}

fn bisect_sign_change(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> Result<f64>) -> Result<Option<f64>> {
    let (flo, fhi) = (f(lo)?, f(hi)?);
    if flo == 0.0 {
        return Ok(Some(lo));
    }
    if fhi == 0.0 {
        return Ok(Some(hi));
    }
    if flo.signum() == fhi.signum() {
        return Ok(None);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid)?;
        if fm == 0.0 {
            return Ok(Some(mid));
        }
        if fm.signum() == flo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

fn prefs_at(p_star: f64, lambda0: f64) -> Result<Preferences> {
    Preferences::new(eta_for_cutoff(p_star, lambda0)?, lambda0)
}

/// Locate the sweep landmarks inside `[lo, hi]`.
pub fn thresholds(dist: &ContinuousDistribution, lambda0: f64, lo: f64, hi: f64) -> Result<Thresholds> {
    let a = |p: f64| subjective_expectation(dist, p);
    let naive_zero = bisect_sign_change(lo, hi, a)?;
    let loss_integral_zero = bisect_sign_change(lo, hi, |p| Ok(partial_expectation(dist, a(p)?)))?;
    // d pi_S / d P* has the sign of pi_S - a
    let turning_point = bisect_sign_change(lo, hi, |p| Ok(sophisticated_price(dist, &prefs_at(p, lambda0)?)? - a(p)?))?;
    Ok(Thresholds {
        naive_zero,
        loss_integral_zero,
        turning_point,
    })
}

pub fn point(dist: &ContinuousDistribution, lambda0: f64, p_star: f64) -> Result<EquilibriumPoint> {
    let prefs = prefs_at(p_star, lambda0)?;
    Ok(EquilibriumPoint {
        p_star,
        eta: prefs.eta,
        pi_rational: rational_price(dist, &prefs),
        pi_naive: naive_price(dist, &prefs)?,
        pi_sophisticated: sophisticated_price(dist, &prefs)?,
    })
}

/// Prices at each cutoff in `grid`, in grid order.
pub fn sweep(dist: &ContinuousDistribution, lambda0: f64, grid: &[f64]) -> Result<Vec<EquilibriumPoint>> {
    grid.iter().map(|&p| point(dist, lambda0, p)).collect()
}

/// `{0.05, 0.06, ..., 0.95}`.
pub fn default_grid() -> Vec<f64> {
    (5..=95).map(|k| k as f64 / 100.0).collect()
}
