//! Brute-force reference computations for checking the solvers.
//!
//! Nothing here calls into the solver modules: utility is re-summed from
//! scratch, integrals use composite Simpson instead of Gauss–Legendre, and
//! optima come from exhaustive grids.

use crate::error::{Error, Result};
use crate::lottery::DiscreteLottery;
use crate::preferences::{GainLossSpec, Preferences};

pub const MAX_GRID_STATES: usize = 4;
pub const MIN_BELIEF_STEP: f64 = 0.01;
pub const MIN_ALPHA_POINTS: usize = 2001;

fn mu(x: f64, prefs: &Preferences) -> f64 {
    match prefs.gain_loss {
        GainLossSpec::Linear => {
            if x < 0.0 {
                prefs.lambda0 * x
            } else {
                x
            }
        }
        GainLossSpec::General { beta, kappa } => {
            if x >= 0.0 {
                return beta * x;
            }
            let y = -x;
            // beta * int_0^y [lambda0 - (lambda0 - 1) e^{-kappa t}] dt
            let decay = if kappa * y > 1e-8 {
                (1.0 - (-kappa * y).exp()) / kappa
            } else {
                y - 0.5 * kappa * y * y
            };
            -beta * (prefs.lambda0 * y - (prefs.lambda0 - 1.0) * decay)
        }
    }
}

/// Anticipatory plus gain-loss utility by direct summation.
pub fn eq1_utility(utils: &[f64], probs: &[f64], q: &[f64], prefs: &Preferences) -> f64 {
    let mut e = 0.0;
    for (qs, us) in q.iter().zip(utils) {
        e += qs * us;
    }
    let mut gl = 0.0;
    for (ps, us) in probs.iter().zip(utils) {
        gl += ps * mu(us - e, prefs);
    }
    e + prefs.eta * gl
}

/// Every composition of `n` into `parts` non-negative integers.
fn compositions(n: usize, parts: usize, visit: &mut impl FnMut(&[usize])) {
    fn rec(left: usize, slot: usize, buf: &mut Vec<usize>, visit: &mut impl FnMut(&[usize])) {
        if slot + 1 == buf.len() {
            buf[slot] = left;
            visit(buf);
            return;
        }
        for k in 0..=left {
            buf[slot] = k;
            rec(left - k, slot + 1, buf, visit);
        }
    }
    let mut buf = vec![0; parts];
    rec(n, 0, &mut buf, visit);
}

/// Maximum of total utility over the probability simplex sampled at `step`.
///
/// The grid has `round(1/step)` divisions per axis and always contains the
/// vertices. Refuses lotteries with more than four states.
pub fn grid_search_beliefs(lottery: &DiscreteLottery, prefs: &Preferences, step: f64) -> Result<(Vec<f64>, f64)> {
    let s = lottery.len();
    if s > MAX_GRID_STATES {
        return Err(Error::OracleRefused(format!("{s} states exceeds the grid limit of {MAX_GRID_STATES}")));
    }
    if !(step >= MIN_BELIEF_STEP) || step > 1.0 {
        return Err(Error::OracleRefused(format!("step must lie in [{MIN_BELIEF_STEP}, 1], got {step}")));
    }
    let n = (1.0 / step).round() as usize;
    let (u, p) = (lottery.utilities(), lottery.probs());
    let mut best_q = vec![0.0; s];
    let mut best_v = f64::NEG_INFINITY;
    let mut q = vec![0.0; s];
    compositions(n, s, &mut |c| {
        for (qi, ci) in q.iter_mut().zip(c) {
            *qi = *ci as f64 / n as f64;
        }
        let v = eq1_utility(u, p, &q, prefs);
        if v > best_v {
            best_v = v;
            best_q.copy_from_slice(&q);
        }
    });
    Ok((best_q, best_v))
}

/// Dense scan of `objective` on `[lo, hi]` with a three-point parabolic
/// refinement around the best grid point. Non-finite values are skipped.
pub fn grid_search_alpha(objective: impl Fn(f64) -> f64, lo: f64, hi: f64, n_points: usize) -> Result<(f64, f64)> {
    if n_points < MIN_ALPHA_POINTS {
        return Err(Error::OracleRefused(format!("need at least {MIN_ALPHA_POINTS} points, got {n_points}")));
    }
    if !(hi > lo) {
        return Err(Error::OracleRefused(format!("empty interval [{lo}, {hi}]")));
    }
    let h = (hi - lo) / (n_points - 1) as f64;
    let xs: Vec<f64> = (0..n_points).map(|i| if i + 1 == n_points { hi } else { lo + i as f64 * h }).collect();
    let vs: Vec<f64> = xs.iter().map(|&x| objective(x)).collect();
    let Some(k) = (0..n_points).filter(|&i| vs[i].is_finite()).max_by(|&i, &j| vs[i].total_cmp(&vs[j]).then(j.cmp(&i)))
    else {
        return Err(Error::OracleRefused("objective is not finite anywhere on the grid".into()));
    };
    let (mut x_best, mut v_best) = (xs[k], vs[k]);
    if k > 0 && k + 1 < n_points && vs[k - 1].is_finite() && vs[k + 1].is_finite() {
        let (a, b, c) = (vs[k - 1], vs[k], vs[k + 1]);
        let denom = a - 2.0 * b + c;
        if denom < 0.0 {
            let x = xs[k] + 0.5 * h * (a - c) / denom;
            let v = objective(x);
            if v.is_finite() && v >= v_best {
                x_best = x;
                v_best = v;
            }
        }
    }
    Ok((x_best, v_best))
}

/// Composite Simpson rule with `n` (rounded up to even) intervals.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    if !(b > a) {
        return 0.0;
    }
    let n = (n.max(2) + 1) & !1;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}
