use bbl_core::continuous::{partial_expectation, subjective_expectation, ContinuousDistribution};
use bbl_core::equilibrium::{default_grid, naive_price, sophisticated_holding_value, sophisticated_price, sweep};
use bbl_core::oracles::simpson;
use bbl_core::{eta_for_cutoff, gain_loss, Preferences};

fn calibration() -> ContinuousDistribution {
    ContinuousDistribution::normal(1.0, 1.0).unwrap()
}

#[test]
fn sweep_points_are_consistent() {
    let d = calibration();
    for p in sweep(&d, 2.25, &default_grid()).unwrap() {
        assert!((p.eta - eta_for_cutoff(p.p_star, 2.25).unwrap()).abs() <= 1e-12);
        assert!((p.pi_rational - p.eta).abs() <= 1e-10);
        let a = subjective_expectation(&d, p.p_star).unwrap();
        assert!((p.pi_naive / p.eta - a).abs() <= 1e-12);
        assert!(p.pi_sophisticated <= 1.0 + 1e-6);
        let gap = p.pi_sophisticated - p.pi_rational;
        assert_eq!(gap > 0.0, partial_expectation(&d, a) > 0.0, "P* = {}", p.p_star);
    }
}

/// Direct Simpson evaluation of a sophisticated holder's utility.
fn holding_value_oracle(d: &ContinuousDistribution, prefs: &Preferences, price: f64, alpha: f64) -> f64 {
    let a = subjective_expectation(d, prefs.cutoff_probability()).unwrap();
    let (lo, hi) = d.support();
    let reference = alpha * a;
    // split at the kink of the gain-loss function
    let g = |r: f64| d.pdf(r) * gain_loss(alpha * r - reference, prefs);
    let gl = simpson(g, lo, a, 20_000) + simpson(g, a, hi, 20_000);
    reference + prefs.eta * gl - alpha * price
}

#[test]
fn sophisticated_investor_is_indifferent_at_the_equilibrium_price() {
    let d = calibration();
    for p in [0.1, 0.35, 0.6, 0.85] {
        let prefs = Preferences::new(eta_for_cutoff(p, 2.25).unwrap(), 2.25).unwrap();
        let pi = sophisticated_price(&d, &prefs).unwrap();
        for k in 0..=10 {
            let alpha = k as f64 / 10.0;
            let v = sophisticated_holding_value(&d, &prefs, pi, alpha).unwrap();
            let oracle = holding_value_oracle(&d, &prefs, pi, alpha);
            assert!(v.abs() <= 1e-8, "P* = {p}, alpha = {alpha}: {v}");
            assert!(oracle.abs() <= 1e-8, "oracle P* = {p}, alpha = {alpha}: {oracle}");
        }
        // a lower price makes holding strictly attractive
        assert!(sophisticated_holding_value(&d, &prefs, pi - 0.01, 1.0).unwrap() > 0.0);
    }
}

#[test]
fn naive_price_round_trip() {
    let d = calibration();
    for p in [0.05, 0.5, 0.95] {
        let prefs = Preferences::new(eta_for_cutoff(p, 2.25).unwrap(), 2.25).unwrap();
        let pi = naive_price(&d, &prefs).unwrap();
        let a = subjective_expectation(&d, p).unwrap();
        assert!((prefs.eta * (a - pi / prefs.eta)).abs() <= 1e-12);
    }
}
