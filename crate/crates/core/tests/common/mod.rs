#![allow(dead_code)]

use bbl_core::continuous::{Component, ContinuousDistribution};
use bbl_core::portfolio::Asset;
use bbl_core::{eta_for_cutoff, DiscreteLottery, Preferences};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const SEED: u64 = 0x5eed_2024;

pub fn rng(salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(SEED ^ salt)
}

/// Lottery with `states` payoffs in [0, 10] and probabilities >= 0.01.
pub fn random_lottery(rng: &mut impl Rng, states: usize) -> DiscreteLottery {
    let payoffs: Vec<f64> = (0..states).map(|_| rng.gen_range(0.0..10.0)).collect();
    let raw: Vec<f64> = (0..states).map(|_| rng.gen_range(0.01..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut probs: Vec<f64> = raw.iter().map(|p| p / total).collect();
    let rest: f64 = probs[1..].iter().sum();
    probs[0] = 1.0 - rest;
    DiscreteLottery::new(payoffs, probs).unwrap()
}

/// `lambda` in [1.2, 4], `eta` in [1/lambda, 1].
pub fn random_prefs(rng: &mut impl Rng) -> Preferences {
    let lambda = rng.gen_range(1.2..4.0);
    let eta = rng.gen_range(1.0 / lambda..=1.0);
    Preferences::new(eta, lambda).unwrap()
}

/// The shared corpus: `n` lotteries with 2 to 4 states and matching prefs.
pub fn corpus(n: usize, salt: u64) -> Vec<(DiscreteLottery, Preferences)> {
    let mut r = rng(salt);
    (0..n)
        .map(|_| {
            let s = r.gen_range(2..=4);
            (random_lottery(&mut r, s), random_prefs(&mut r))
        })
        .collect()
}

pub fn prefs_at(p_star: f64) -> Preferences {
    Preferences::new(eta_for_cutoff(p_star, 2.25).unwrap(), 2.25).unwrap()
}

/// Excess return with a thin crash tail: most mass sits just above zero,
/// with a right-skewed upside component.
pub fn calibrated_asset() -> Asset {
    let excess = ContinuousDistribution::mixture(vec![
        Component { w: 0.75, mean: 0.04, sd: 0.015 },
        Component { w: 0.05, mean: -0.4, sd: 0.05 },
        Component { w: 0.2, mean: 0.3, sd: 0.1 },
    ])
    .unwrap();
    Asset::new(1.0, excess).unwrap()
}

pub fn normal_asset(mean: f64, sd: f64) -> Asset {
    Asset::new(1.0, ContinuousDistribution::normal(mean, sd).unwrap()).unwrap()
}

/// `∫ f(R) g(R) dR` over the support by composite Simpson.
pub fn simpson_expect(asset: &Asset, g: impl Fn(f64) -> f64) -> f64 {
    let (lo, hi) = asset.excess.support();
    bbl_core::oracles::simpson(|r| asset.excess.pdf(r) * g(r), lo, hi, 6000)
}
