//! One-dimensional maximisation helpers.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for the maximum of a unimodal `f` on `[a, b]`.
///
/// The endpoints are compared against the interior estimate so that corner
/// optima are returned exactly.
pub fn golden_max(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> (f64, f64) {
    if !(b > a) {
        return (a, f(a));
    }
    let (mut lo, mut hi) = (a, b);
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        }
    }
    let mid = 0.5 * (lo + hi);
    let mut best = (mid, f(mid));
    for x in [a, b] {
        let v = f(x);
        if v > best.1 {
            best = (x, v);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn interior_and_corner() {
        let (x, v) = golden_max(|x| -(x - 0.3) * (x - 0.3), 0.0, 1.0, 1e-10);
        assert_abs_diff_eq!(x, 0.3, epsilon = 1e-9);
        assert_abs_diff_eq!(v, 0.0, epsilon = 1e-15);
        let (x, _) = golden_max(|x| x, -1.0, 2.0, 1e-10);
        assert_eq!(x, 2.0);
        let (x, _) = golden_max(|x| -x, -1.0, 2.0, 1e-10);
        assert_eq!(x, -1.0);
    }
}
