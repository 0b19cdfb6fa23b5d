//! Composite Gauss–Legendre quadrature.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

/// Nodes per panel.
pub const ORDER: usize = 20;
const MAX_PANELS: usize = 1 << 14;

/// Environment variable that overrides the default absolute tolerance.
pub const TOL_ENV: &str = "BBL_QUAD_TOL";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    /// Initial panel count; doubled until successive estimates agree.
    pub panels: usize,
    pub abs_tol: f64,
}

impl QuadratureConfig {
    pub const DEFAULT_TOL: f64 = 1e-10;

    /// Default configuration, honouring `BBL_QUAD_TOL` when it parses as a
    /// positive number.
    pub fn from_env() -> Self {
        let abs_tol = std::env::var(TOL_ENV)
            .ok()
            .and_then(|s| s.trim().parse::<f64>().ok())
            .filter(|t| *t > 0.0 && t.is_finite())
            .unwrap_or(Self::DEFAULT_TOL);
        QuadratureConfig { panels: 8, abs_tol }
    }
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self::from_env()
    }
}

/// Legendre nodes and weights on [-1, 1] by Newton iteration on `P_n`.
fn rule() -> &'static ([f64; ORDER], [f64; ORDER]) {
    static RULE: OnceLock<([f64; ORDER], [f64; ORDER])> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = ORDER;
        let mut x = [0.0; ORDER];
        let mut w = [0.0; ORDER];
        for i in 0..n {
            let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, z);
                for k in 2..=n {
                    let k = k as f64;
                    let p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
                let dz = p1 / dp;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            x[i] = z;
            w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        }
        (x, w)
    })
}

fn fixed(f: &impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let (x, w) = rule();
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for k in 0..panels {
        let lo = a + k as f64 * h;
        let mid = lo + 0.5 * h;
        let half = 0.5 * h;
        let mut s = 0.0;
        for (xi, wi) in x.iter().zip(w) {
            s += wi * f(mid + half * xi);
        }
        total += s * half;
    }
    total
}

/// `∫_a^b f`, doubling the panel count until two successive estimates agree
/// to the configured tolerance (or a relative 1e-13 for large integrals).
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, cfg: &QuadratureConfig) -> f64 {
    if !(b > a) {
        return 0.0;
    }
    let mut panels = cfg.panels.max(1);
    let mut prev = fixed(&f, a, b, panels);
    while panels < MAX_PANELS {
        panels *= 2;
        let next = fixed(&f, a, b, panels);
        if (next - prev).abs() <= cfg.abs_tol.max(1e-13 * next.abs()) {
            return next;
        }
        prev = next;
    }
    prev
}
