//! One risky asset and one risk-free asset.
//!
//! Terminal wealth is `W = R_f + alpha R`, with `R` the excess return of the
//! risky asset. Three agents are solved:
//!
//! * rational: maximises `E_f u(W)`;
//! * naive: forms optimal beliefs `g` about `u(W)` for the current `alpha`,
//!   then maximises `E_g u(W)` taking `g` as given; the pair is iterated to a
//!   fixed point;
//! * sophisticated: maximises total utility at optimal beliefs, which reduces
//!   to `V(alpha) = eta E_f u(W) + eta (lambda - 1) int_{loss} f u(W)`, the
//!   loss region being the lower `1 - P*` quantile region of `u(W)`.

use serde::{Deserialize, Serialize};

use crate::continuous::{subjective_expectation, ContinuousDistribution};
use crate::error::{Error, Result};
use crate::optimize::golden_max;
use crate::preferences::Preferences;
use crate::utility::ConsumptionUtility;

pub const ALPHA_TOL: f64 = 1e-10;
pub const FIXED_POINT_TOL: f64 = 1e-8;
pub const MAX_ITERATIONS: usize = 200;
pub const DAMPING: f64 = 0.5;

/// Relative distance kept from a wealth level where utility is infinite.
const DOMAIN_MARGIN: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Asset {
    pub r_f: f64,
    pub excess: ContinuousDistribution,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lo: f64,
    pub hi: f64,
}

impl Bounds {
    pub const DEFAULT: Bounds = Bounds { lo: -10.0, hi: 10.0 };
    pub const LONG_ONLY: Bounds = Bounds { lo: 0.0, hi: 1.0 };

    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::param("bounds", format!("need finite lo <= hi, got [{lo}, {hi}]")));
        }
        Ok(Bounds { lo, hi })
    }
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds::DEFAULT
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PortfolioSolution {
    pub alpha: f64,
    /// Subjective (or, for the rational agent, objective) expected utility of
    /// terminal wealth.
    pub belief_expectation: f64,
    /// Certainty-equivalent excess return; `None` at `alpha = 0`.
    pub r_ce: Option<f64>,
    pub value: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl Asset {
    pub fn new(r_f: f64, excess: ContinuousDistribution) -> Result<Self> {
        if !r_f.is_finite() {
            return Err(Error::param("r_f", format!("must be finite, got {r_f}")));
        }
        Ok(Asset { r_f, excess })
    }

    fn wealth(&self, alpha: f64, r: f64) -> f64 {
        self.r_f + alpha * r
    }
}

/// Intersection of `bounds` with the shares that keep utility finite on the
/// whole (truncated) support of the excess return.
pub fn feasible_bounds(asset: &Asset, utility: &ConsumptionUtility, bounds: Bounds) -> Result<Bounds> {
    utility.validate()?;
    let Some((floor, inclusive)) = utility.domain_floor() else {
        return Ok(bounds);
    };
    let room = asset.r_f - floor;
    if room < 0.0 || (room == 0.0 && !inclusive) {
        return Err(Error::Domain(format!("utility is not finite at the risk-free return {}", asset.r_f)));
    }
    let shrink = if inclusive { 1.0 } else { 1.0 - DOMAIN_MARGIN };
    let (r_lo, r_hi) = asset.excess.support();
    let mut lo = bounds.lo;
    let mut hi = bounds.hi;
    if r_lo < 0.0 {
        hi = hi.min(shrink * room / -r_lo);
    }
    if r_hi > 0.0 {
        lo = lo.max(-shrink * room / r_hi);
    }
    if lo > hi {
        return Err(Error::Domain(format!(
            "no share in [{}, {}] keeps wealth inside the utility domain",
            bounds.lo, bounds.hi
        )));
    }
    Ok(Bounds { lo, hi })
}

/// `E_f u(R_f + alpha R)`.
pub fn expected_utility(asset: &Asset, utility: &ConsumptionUtility, alpha: f64) -> f64 {
    asset.excess.expect(|r| utility.eval(asset.wealth(alpha, r)))
}

/// Excess return separating the loss and gain regions of `u(W)` under
/// optimal beliefs. For `alpha > 0` losses are returns below it, for
/// `alpha < 0` returns above it.
fn loss_boundary(asset: &Asset, p_star: f64, alpha: f64) -> Result<f64> {
    if alpha >= 0.0 {
        subjective_expectation(&asset.excess, p_star)
    } else {
        subjective_expectation(&asset.excess, 1.0 - p_star)
    }
}

fn interior_cutoff(prefs: &Preferences) -> Result<f64> {
    let p = prefs.cutoff_probability();
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::param("p_star", format!("cutoff probability must lie in (0, 1), got {p}")));
    }
    Ok(p)
}

/// Integrals of `f u(W)` over the loss and gain regions at share `alpha`.
fn region_integrals(asset: &Asset, utility: &ConsumptionUtility, alpha: f64, boundary: f64) -> (f64, f64) {
    let (lo, hi) = asset.excess.support();
    let u = |r: f64| utility.eval(asset.wealth(alpha, r));
    let below = asset.excess.expect_between(lo, boundary, u);
    let above = asset.excess.expect_between(boundary, hi, u);
    if alpha >= 0.0 {
        (below, above)
    } else {
        (above, below)
    }
}

/// Total utility at optimal beliefs as a function of the share.
pub fn sophisticated_objective(asset: &Asset, prefs: &Preferences, utility: &ConsumptionUtility, alpha: f64) -> Result<f64> {
    let p_star = interior_cutoff(prefs)?;
    if alpha == 0.0 {
        return utility.eval_checked(asset.r_f);
    }
    let b = loss_boundary(asset, p_star, alpha)?;
    let (loss, gain) = region_integrals(asset, utility, alpha, b);
    Ok(prefs.eta * (loss + gain) + prefs.eta * (prefs.lambda0 - 1.0) * loss)
}

/// Optimal subjective expectation of `u(W)`: the utility of the wealth level
/// above which `u(W)` has objective mass `P*`.
pub fn belief_expectation(asset: &Asset, prefs: &Preferences, utility: &ConsumptionUtility, alpha: f64) -> Result<f64> {
    let p_star = interior_cutoff(prefs)?;
    let b = if alpha == 0.0 { 0.0 } else { loss_boundary(asset, p_star, alpha)? };
    utility.eval_checked(asset.wealth(alpha, b))
}

/// `R_CE` solving `u(R_f + alpha R_CE) = E_g u(R_f + alpha R)`.
pub fn certainty_equivalent_excess(
    asset: &Asset,
    alpha: f64,
    prefs: &Preferences,
    utility: &ConsumptionUtility,
) -> Result<f64> {
    if alpha == 0.0 {
        return Err(Error::UndefinedCertaintyEquivalent);
    }
    let e = belief_expectation(asset, prefs, utility, alpha)?;
    Ok((utility.inverse(e) - asset.r_f) / alpha)
}

/// Objective probability that `u(W)` is at or above `E_f u(W)`.
pub fn rational_gain_probability(asset: &Asset, utility: &ConsumptionUtility, alpha: f64) -> f64 {
    if alpha == 0.0 {
        return 1.0;
    }
    let e = expected_utility(asset, utility, alpha);
    let r = (utility.inverse(e) - asset.r_f) / alpha;
    if alpha > 0.0 {
        asset.excess.upper_tail(r)
    } else {
        asset.excess.cdf(r)
    }
}

/// `int_{loss} f(R) u'(R_f + alpha R) R dR` with the loss region taken under
/// optimal beliefs at `alpha`. At the rational share its sign decides whether
/// the sophisticated agent holds more or less of the risky asset.
pub fn loss_region_weighted_return(
    asset: &Asset,
    prefs: &Preferences,
    utility: &ConsumptionUtility,
    alpha: f64,
) -> Result<f64> {
    let p_star = interior_cutoff(prefs)?;
    let (lo, hi) = asset.excess.support();
    let g = |r: f64| utility.marginal(asset.wealth(alpha, r)) * r;
    let b = loss_boundary(asset, p_star, alpha)?;
    Ok(if alpha >= 0.0 {
        asset.excess.expect_between(lo, b, g)
    } else {
        asset.excess.expect_between(b, hi, g)
    })
}

fn finite_or_domain(v: f64, what: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Domain(format!("{what} is not finite")))
    }
}

pub fn rational_alpha(asset: &Asset, utility: &ConsumptionUtility, bounds: Bounds) -> Result<PortfolioSolution> {
    let b = feasible_bounds(asset, utility, bounds)?;
    let (alpha, value) = golden_max(|a| expected_utility(asset, utility, a), b.lo, b.hi, ALPHA_TOL);
    let value = finite_or_domain(value, "expected utility")?;
    let r_ce = (alpha != 0.0).then(|| (utility.inverse(value) - asset.r_f) / alpha);
    Ok(PortfolioSolution {
        alpha,
        belief_expectation: value,
        r_ce,
        value,
        converged: true,
        iterations: 0,
    })
}

fn solution_at(
    asset: &Asset,
    prefs: &Preferences,
    utility: &ConsumptionUtility,
    alpha: f64,
    converged: bool,
    iterations: usize,
) -> Result<PortfolioSolution> {
    let value = finite_or_domain(sophisticated_objective(asset, prefs, utility, alpha)?, "total utility")?;
    let r_ce = if alpha == 0.0 {
        None
    } else {
        Some(certainty_equivalent_excess(asset, alpha, prefs, utility)?)
    };
    Ok(PortfolioSolution {
        alpha,
        belief_expectation: belief_expectation(asset, prefs, utility, alpha)?,
        r_ce,
        value,
        converged,
        iterations,
    })
}

/// Sophisticated share: `V` is concave on each side of zero, so each side is
/// searched separately and the better optimum kept.
pub fn sophisticated_alpha(
    asset: &Asset,
    prefs: &Preferences,
    utility: &ConsumptionUtility,
    bounds: Bounds,
) -> Result<PortfolioSolution> {
    interior_cutoff(prefs)?;
    let b = feasible_bounds(asset, utility, bounds)?;
    let v = |a: f64| sophisticated_objective(asset, prefs, utility, a).unwrap_or(f64::NAN);
    let mut sides = Vec::new();
    if b.lo < 0.0 {
        sides.push((b.lo, b.hi.min(0.0)));
    }
    if b.hi > 0.0 {
        sides.push((b.lo.max(0.0), b.hi));
    }
    if sides.is_empty() {
        sides.push((b.lo, b.hi));
    }
    let mut best: Option<(f64, f64)> = None;
    for (lo, hi) in sides {
        let (a, val) = golden_max(v, lo, hi, ALPHA_TOL);
        let better = match best {
            None => true,
            Some((ba, bv)) => val > bv || (val == bv && a < ba),
        };
        if better {
            best = Some((a, val));
        }
    }
    let (alpha, _) = best.expect("at least one side");
    solution_at(asset, prefs, utility, alpha, true, 0)
}

/// Optimal beliefs at a given share, as density weights on either side of
/// the loss boundary.
#[derive(Debug, Clone, Copy)]
struct Tilt {
    boundary: f64,
    below: f64,
    above: f64,
}

impl Tilt {
    const NONE: Tilt = Tilt {
        boundary: 0.0,
        below: 1.0,
        above: 1.0,
    };
}

/// Two-region proportional tilt of `f` whose subjective expectation of
/// `u(W)` is the optimal one.
fn tilt_at(asset: &Asset, p_star: f64, utility: &ConsumptionUtility, alpha: f64) -> Result<Tilt> {
    if alpha == 0.0 {
        return Ok(Tilt::NONE);
    }
    let b = loss_boundary(asset, p_star, alpha)?;
    let target = utility.eval(asset.wealth(alpha, b));
    let (loss, gain) = region_integrals(asset, utility, alpha, b);
    let (p_gain, p_loss) = (p_star, 1.0 - p_star);
    let mean_g = gain / p_gain;
    let mean_l = loss / p_loss;
    let spread = mean_g - mean_l;
    if !(spread > 0.0) {
        return Ok(Tilt::NONE);
    }
    let c_gain = ((target - mean_l) / (p_gain * spread)).max(0.0);
    let c_loss = ((mean_g - target) / (p_loss * spread)).max(0.0);
    Ok(if alpha > 0.0 {
        Tilt {
            boundary: b,
            below: c_loss,
            above: c_gain,
        }
    } else {
        Tilt {
            boundary: b,
            below: c_gain,
            above: c_loss,
        }
    })
}

fn subjective_expected_utility(asset: &Asset, utility: &ConsumptionUtility, tilt: Tilt, alpha: f64) -> f64 {
    let (lo, hi) = asset.excess.support();
    let u = |r: f64| utility.eval(asset.wealth(alpha, r));
    if tilt.below == tilt.above {
        return tilt.below * asset.excess.expect(u);
    }
    tilt.below * asset.excess.expect_between(lo, tilt.boundary, u)
        + tilt.above * asset.excess.expect_between(tilt.boundary, hi, u)
}

struct FixedPoint {
    alpha: f64,
    converged: bool,
    iterations: usize,
}

fn iterate_naive(
    asset: &Asset,
    p_star: f64,
    utility: &ConsumptionUtility,
    b: Bounds,
    start: f64,
) -> Result<FixedPoint> {
    let mut alpha = start;
    for it in 1..=MAX_ITERATIONS {
        let tilt = tilt_at(asset, p_star, utility, alpha)?;
        let (best, _) = golden_max(|a| subjective_expected_utility(asset, utility, tilt, a), b.lo, b.hi, ALPHA_TOL);
        let next = alpha + DAMPING * (best - alpha);
        if (next - alpha).abs() <= FIXED_POINT_TOL {
            return Ok(FixedPoint {
                alpha: next,
                converged: true,
                iterations: it,
            });
        }
        alpha = next;
    }
    Ok(FixedPoint {
        alpha,
        converged: false,
        iterations: MAX_ITERATIONS,
    })
}

/// Naive share by damped fixed-point iteration from several starts.
///
/// Among converged fixed points the one with the highest total utility is
/// returned (lowest share on ties). If no start converges the last iterate of
/// the first start is returned with `converged = false`.
pub fn naive_alpha(
    asset: &Asset,
    prefs: &Preferences,
    utility: &ConsumptionUtility,
    bounds: Bounds,
) -> Result<PortfolioSolution> {
    let p_star = interior_cutoff(prefs)?;
    let b = feasible_bounds(asset, utility, bounds)?;
    let rational = rational_alpha(asset, utility, b)?.alpha;
    let mut starts = vec![rational, (-rational).clamp(b.lo, b.hi), b.lo, b.hi];
    starts.dedup();

    let mut best: Option<(FixedPoint, f64)> = None;
    let mut fallback: Option<FixedPoint> = None;
    for s in starts {
        let fp = iterate_naive(asset, p_star, utility, b, s)?;
        if !fp.converged {
            fallback.get_or_insert(fp);
            continue;
        }
        let v = sophisticated_objective(asset, prefs, utility, fp.alpha)?;
        let better = match &best {
            None => true,
            Some((bf, bv)) => v > *bv || (v == *bv && fp.alpha < bf.alpha),
        };
        if better {
            best = Some((fp, v));
        }
    }
    let fp = match best {
        Some((fp, _)) => fp,
        None => fallback.expect("at least one start"),
    };
    solution_at(asset, prefs, utility, fp.alpha, fp.converged, fp.iterations)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preferences::eta_for_cutoff;
    use approx::assert_abs_diff_eq;

    fn prefs_at(p_star: f64) -> Preferences {
        Preferences::new(eta_for_cutoff(p_star, 2.25).unwrap(), 2.25).unwrap()
    }

    fn normal_asset(mean: f64, sd: f64) -> Asset {
        Asset::new(1.0, ContinuousDistribution::normal(mean, sd).unwrap()).unwrap()
    }

    #[test]
    fn feasibility_clips_to_domain() {
        let asset = normal_asset(0.05, 0.2);
        let b = feasible_bounds(&asset, &ConsumptionUtility::Power { rho: 2.0 }, Bounds::DEFAULT).unwrap();
        assert_abs_diff_eq!(b.hi, (1.0 - DOMAIN_MARGIN) / 1.55, epsilon = 1e-12);
        assert_abs_diff_eq!(b.lo, -(1.0 - DOMAIN_MARGIN) / 1.65, epsilon = 1e-12);
        assert_eq!(feasible_bounds(&asset, &ConsumptionUtility::Linear, Bounds::DEFAULT).unwrap(), Bounds::DEFAULT);
        let bad = feasible_bounds(&asset, &ConsumptionUtility::Log, Bounds::new(5.0, 6.0).unwrap());
        assert!(matches!(bad, Err(Error::Domain(_))));
    }

    #[test]
    fn rational_corner_and_symmetry() {
        let s = rational_alpha(&normal_asset(0.05, 0.2), &ConsumptionUtility::Linear, Bounds::LONG_ONLY).unwrap();
        assert_eq!(s.alpha, 1.0);
        let s = rational_alpha(
            &normal_asset(0.0, 0.2),
            &ConsumptionUtility::Power { rho: 2.0 },
            Bounds::new(-1.0, 1.0).unwrap(),
        )
        .unwrap();
        assert_abs_diff_eq!(s.alpha, 0.0, epsilon = 1e-7);
    }

    #[test]
    fn sophisticated_objective_continuous_at_zero() {
        let asset = normal_asset(0.05, 0.2);
        let u = ConsumptionUtility::Power { rho: 2.0 };
        let p = prefs_at(0.6);
        let v0 = sophisticated_objective(&asset, &p, &u, 0.0).unwrap();
        assert_abs_diff_eq!(v0, u.eval(1.0), epsilon = 1e-15);
        let right = sophisticated_objective(&asset, &p, &u, 1e-6).unwrap();
        let left = sophisticated_objective(&asset, &p, &u, -1e-6).unwrap();
        assert!((right - left).abs() <= 1e-6);
        assert!((right - v0).abs() <= 1e-6);
    }

    #[test]
    fn sophisticated_near_unit_loss_aversion_is_rational() {
        let asset = normal_asset(0.05, 0.2);
        let u = ConsumptionUtility::Power { rho: 2.0 };
        let lam = 1.0 + 1e-9;
        let p = Preferences::new(eta_for_cutoff(0.6, lam).unwrap(), lam).unwrap();
        let soph = sophisticated_alpha(&asset, &p, &u, Bounds::DEFAULT).unwrap();
        let rat = rational_alpha(&asset, &u, Bounds::DEFAULT).unwrap();
        assert_abs_diff_eq!(soph.alpha, rat.alpha, epsilon = 1e-4);
    }

    #[test]
    fn certainty_equivalent_examples() {
        let asset = normal_asset(1.0, 1.0);
        let p = prefs_at(0.5);
        let r = certainty_equivalent_excess(&asset, 0.7, &p, &ConsumptionUtility::Linear).unwrap();
        assert_abs_diff_eq!(r, 1.0, epsilon = 1e-10);
        assert_eq!(
            certainty_equivalent_excess(&asset, 0.0, &p, &ConsumptionUtility::Linear),
            Err(Error::UndefinedCertaintyEquivalent)
        );

        let asset = normal_asset(0.05, 0.2);
        let u = ConsumptionUtility::Power { rho: 2.0 };
        let p = prefs_at(0.3);
        let alpha = 0.4;
        let r = certainty_equivalent_excess(&asset, alpha, &p, &u).unwrap();
        let e = belief_expectation(&asset, &p, &u, alpha).unwrap();
        assert_abs_diff_eq!(u.eval(1.0 + alpha * r), e, epsilon = 1e-9);
    }

    #[test]
    fn naive_tilt_reproduces_optimal_expectation() {
        let asset = normal_asset(0.05, 0.2);
        let u = ConsumptionUtility::Power { rho: 2.0 };
        for (p_star, alpha) in [(0.3, 0.5), (0.7, -0.4)] {
            let t = tilt_at(&asset, p_star, &u, alpha).unwrap();
            let mass = {
                let (lo, hi) = asset.excess.support();
                t.below * asset.excess.expect_between(lo, t.boundary, |_| 1.0)
                    + t.above * asset.excess.expect_between(t.boundary, hi, |_| 1.0)
            };
            assert_abs_diff_eq!(mass, 1.0, epsilon = 1e-9);
            let e = subjective_expected_utility(&asset, &u, t, alpha);
            let target = belief_expectation(&asset, &prefs_at(p_star), &u, alpha).unwrap();
            assert_abs_diff_eq!(e, target, epsilon = 1e-9);
        }
    }
}
