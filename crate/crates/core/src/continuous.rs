//! Continuous payoff distributions and the naive/sophisticated valuation of
//! continuous lotteries under linear consumption utility.
//!
//! Under optimal beliefs the subjective expectation of a continuous lottery
//! is the point `a` above which the objective distribution carries mass
//! `P*`. A naive agent ranks lotteries by `a`; a sophisticated agent ranks
//! them by `eta E_f(Z) + eta (lambda - 1) * int_{-inf}^{a} f(Z) Z dZ`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preferences::Preferences;
use crate::quadrature::{integrate, QuadratureConfig};

/// Half-width of the truncated support, in standard deviations.
pub const SUPPORT_SDS: f64 = 8.0;
const NORMALISATION_TOL: f64 = 1e-8;

/// Verdict tolerance for lottery comparisons.
pub const COMPARE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Component {
    pub w: f64,
    pub mean: f64,
    pub sd: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormalSpec {
    pub mean: f64,
    pub sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TabulatedSpec {
    pub z: Vec<f64>,
    pub f: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistSpec {
    Normal(NormalSpec),
    Mixture(Vec<Component>),
    Tabulated(TabulatedSpec),
}

/// A validated density with its effective support and quadrature settings.
///
/// Normal and mixture densities are truncated to `mean ± 8 sd` (outermost
/// component envelope). Tabulated densities interpolate linearly between
/// grid points and are rescaled to unit mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DistSpec", into = "DistSpec")]
pub struct ContinuousDistribution {
    spec: DistSpec,
    lo: f64,
    hi: f64,
    quad: QuadratureConfig,
}

impl TryFrom<DistSpec> for ContinuousDistribution {
    type Error = Error;

    fn try_from(spec: DistSpec) -> Result<Self> {
        ContinuousDistribution::from_spec(spec)
    }
}

impl From<ContinuousDistribution> for DistSpec {
    fn from(d: ContinuousDistribution) -> Self {
        d.spec
    }
}

fn std_pdf(t: f64) -> f64 {
    (-0.5 * t * t).exp() / (2.0 * PI).sqrt()
}

fn std_cdf(t: f64) -> f64 {
    0.5 * libm::erfc(-t * FRAC_1_SQRT_2)
}

fn std_upper(t: f64) -> f64 {
    0.5 * libm::erfc(t * FRAC_1_SQRT_2)
}

fn check_component(mean: f64, sd: f64) -> Result<()> {
    if !mean.is_finite() {
        return Err(Error::InvalidDistribution(format!("mean {mean} is not finite")));
    }
    if !(sd > 0.0) || !sd.is_finite() {
        return Err(Error::InvalidDistribution(format!("sd must be positive, got {sd}")));
    }
    Ok(())
}

impl ContinuousDistribution {
    pub fn normal(mean: f64, sd: f64) -> Result<Self> {
        Self::from_spec(DistSpec::Normal(NormalSpec { mean, sd }))
    }

    pub fn mixture(components: Vec<Component>) -> Result<Self> {
        Self::from_spec(DistSpec::Mixture(components))
    }

    pub fn tabulated(z: Vec<f64>, f: Vec<f64>) -> Result<Self> {
        Self::from_spec(DistSpec::Tabulated(TabulatedSpec { z, f }))
    }

    pub fn from_spec(spec: DistSpec) -> Result<Self> {
        let (spec, lo, hi) = match spec {
            DistSpec::Normal(n) => {
                check_component(n.mean, n.sd)?;
                let half = SUPPORT_SDS * n.sd;
                (DistSpec::Normal(n), n.mean - half, n.mean + half)
            }
            DistSpec::Mixture(comps) => {
                if comps.is_empty() {
                    return Err(Error::InvalidDistribution("mixture has no components".into()));
                }
                let mut total = 0.0;
                for c in &comps {
                    check_component(c.mean, c.sd)?;
                    if !(c.w > 0.0) || !c.w.is_finite() {
                        return Err(Error::InvalidDistribution(format!("weight must be positive, got {}", c.w)));
                    }
                    total += c.w;
                }
                if (total - 1.0).abs() > NORMALISATION_TOL {
                    return Err(Error::InvalidDistribution(format!("mixture weights sum to {total}, not 1")));
                }
                let lo = comps.iter().map(|c| c.mean - SUPPORT_SDS * c.sd).fold(f64::INFINITY, f64::min);
                let hi = comps.iter().map(|c| c.mean + SUPPORT_SDS * c.sd).fold(f64::NEG_INFINITY, f64::max);
                (DistSpec::Mixture(comps), lo, hi)
            }
            DistSpec::Tabulated(t) => {
                let t = normalise_table(t)?;
                let (lo, hi) = (t.z[0], t.z[t.z.len() - 1]);
                (DistSpec::Tabulated(t), lo, hi)
            }
        };
        Ok(ContinuousDistribution {
            spec,
            lo,
            hi,
            quad: QuadratureConfig::from_env(),
        })
    }

    pub fn with_quadrature(mut self, quad: QuadratureConfig) -> Self {
        self.quad = quad;
        self
    }

    pub fn spec(&self) -> &DistSpec {
        &self.spec
    }

    pub fn quadrature(&self) -> &QuadratureConfig {
        &self.quad
    }

    /// Effective (truncated) support.
    pub fn support(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    /// Whether the untruncated distribution has unbounded support.
    pub fn is_unbounded(&self) -> bool {
        !matches!(self.spec, DistSpec::Tabulated(_))
    }

    pub fn pdf(&self, z: f64) -> f64 {
        match &self.spec {
            DistSpec::Normal(n) => std_pdf((z - n.mean) / n.sd) / n.sd,
            DistSpec::Mixture(c) => c.iter().map(|c| c.w * std_pdf((z - c.mean) / c.sd) / c.sd).sum(),
            DistSpec::Tabulated(t) => table_pdf(t, z),
        }
    }

    pub fn cdf(&self, z: f64) -> f64 {
        match &self.spec {
            DistSpec::Normal(n) => std_cdf((z - n.mean) / n.sd),
            DistSpec::Mixture(c) => c.iter().map(|c| c.w * std_cdf((z - c.mean) / c.sd)).sum(),
            DistSpec::Tabulated(t) => table_cdf(t, z),
        }
    }

    /// `1 - F(z)`, computed without cancellation for analytic families.
    pub fn upper_tail(&self, z: f64) -> f64 {
        match &self.spec {
            DistSpec::Normal(n) => std_upper((z - n.mean) / n.sd),
            DistSpec::Mixture(c) => c.iter().map(|c| c.w * std_upper((z - c.mean) / c.sd)).sum(),
            DistSpec::Tabulated(t) => 1.0 - table_cdf(t, z),
        }
    }

    pub fn mean(&self) -> f64 {
        match &self.spec {
            DistSpec::Normal(n) => n.mean,
            DistSpec::Mixture(c) => c.iter().map(|c| c.w * c.mean).sum(),
            DistSpec::Tabulated(_) => self.expect_between(self.lo, self.hi, |z| z),
        }
    }

    /// Breakpoints that panelled integration should not straddle.
    fn breakpoints(&self, a: f64, b: f64) -> Vec<f64> {
        let mut pts = vec![a];
        if let DistSpec::Tabulated(t) = &self.spec {
            pts.extend(t.z.iter().copied().filter(|z| *z > a && *z < b));
        }
        pts.push(b);
        pts
    }

    /// `∫_a^b f(z) g(z) dz`, clipped to the effective support.
    pub fn expect_between(&self, a: f64, b: f64, g: impl Fn(f64) -> f64) -> f64 {
        let a = a.max(self.lo);
        let b = b.min(self.hi);
        if !(b > a) {
            return 0.0;
        }
        let pts = self.breakpoints(a, b);
        pts.windows(2)
            .map(|w| integrate(|z| self.pdf(z) * g(z), w[0], w[1], &self.quad))
            .sum()
    }

    /// `∫ f(z) g(z) dz` over the effective support.
    pub fn expect(&self, g: impl Fn(f64) -> f64) -> f64 {
        self.expect_between(self.lo, self.hi, g)
    }
}

fn normalise_table(t: TabulatedSpec) -> Result<TabulatedSpec> {
    let TabulatedSpec { z, f } = t;
    if z.len() != f.len() {
        return Err(Error::LengthMismatch {
            expected: z.len(),
            actual: f.len(),
        });
    }
    if z.len() < 2 {
        return Err(Error::InvalidDistribution("tabulated density needs at least 2 points".into()));
    }
    if z.iter().any(|x| !x.is_finite()) || z.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidDistribution("grid must be finite and strictly increasing".into()));
    }
    if f.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
        return Err(Error::InvalidDistribution("density values must be finite and >= 0".into()));
    }
    let mass: f64 = z
        .windows(2)
        .zip(f.windows(2))
        .map(|(zw, fw)| 0.5 * (fw[0] + fw[1]) * (zw[1] - zw[0]))
        .sum();
    if !(mass > 0.0) {
        return Err(Error::InvalidDistribution("density has zero mass".into()));
    }
    let f = f.into_iter().map(|x| x / mass).collect();
    Ok(TabulatedSpec { z, f })
}

fn table_cell(t: &TabulatedSpec, z: f64) -> Option<usize> {
    if z < t.z[0] || z > t.z[t.z.len() - 1] {
        return None;
    }
    let i = t.z.partition_point(|x| *x <= z);
    Some(i.clamp(1, t.z.len() - 1) - 1)
}

fn table_pdf(t: &TabulatedSpec, z: f64) -> f64 {
    match table_cell(t, z) {
        None => 0.0,
        Some(i) => {
            let s = (z - t.z[i]) / (t.z[i + 1] - t.z[i]);
            t.f[i] + s * (t.f[i + 1] - t.f[i])
        }
    }
}

fn table_cdf(t: &TabulatedSpec, z: f64) -> f64 {
    if z <= t.z[0] {
        return 0.0;
    }
    if z >= t.z[t.z.len() - 1] {
        return 1.0;
    }
    let i = table_cell(t, z).expect("z inside grid");
    let full: f64 = (0..i).map(|k| 0.5 * (t.f[k] + t.f[k + 1]) * (t.z[k + 1] - t.z[k])).sum();
    let h = z - t.z[i];
    let fz = table_pdf(t, z);
    (full + 0.5 * (t.f[i] + fz) * h).min(1.0)
}

/// The point `a` whose upper-tail mass is `p_star`.
///
/// Found by bisection on the upper tail over the effective support, until the
/// bracket stops shrinking or 200 iterations.
pub fn subjective_expectation(dist: &ContinuousDistribution, p_star: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p_star) {
        return Err(Error::param("p_star", format!("must lie in (0, 1), got {p_star}")));
    }
    let (mut lo, mut hi) = dist.support();
    if p_star == 0.0 || p_star == 1.0 {
        if dist.is_unbounded() {
            return Err(Error::UnboundedExpectation(p_star));
        }
        return Ok(if p_star == 0.0 { hi } else { lo });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if dist.upper_tail(mid) > p_star {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `∫_{-inf}^{a} f(z) z dz` by quadrature.
pub fn partial_expectation(dist: &ContinuousDistribution, a: f64) -> f64 {
    let (lo, _) = dist.support();
    dist.expect_between(lo, a, |z| z)
}

/// Closed-form partial expectation for normal and mixture densities:
/// `mu Phi(t) - sigma phi(t)` per component. `None` for tabulated densities.
pub fn partial_expectation_closed_form(dist: &ContinuousDistribution, a: f64) -> Option<f64> {
    let one = |mean: f64, sd: f64| {
        let t = (a - mean) / sd;
        mean * std_cdf(t) - sd * std_pdf(t)
    };
    match dist.spec() {
        DistSpec::Normal(n) => Some(one(n.mean, n.sd)),
        DistSpec::Mixture(c) => Some(c.iter().map(|c| c.w * one(c.mean, c.sd)).sum()),
        DistSpec::Tabulated(_) => None,
    }
}

/// Naive ranking statistic: the optimal subjective expectation.
pub fn naive_value(dist: &ContinuousDistribution, prefs: &Preferences) -> Result<f64> {
    subjective_expectation(dist, prefs.cutoff_probability())
}

/// Sophisticated ranking statistic: total utility at optimal beliefs.
pub fn sophisticated_value(dist: &ContinuousDistribution, prefs: &Preferences) -> Result<f64> {
    let a = subjective_expectation(dist, prefs.cutoff_probability())?;
    Ok(prefs.eta * dist.mean() + prefs.eta * (prefs.lambda0 - 1.0) * partial_expectation(dist, a))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgentKind {
    Naive,
    Sophisticated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preference {
    PreferA,
    PreferB,
    Indifferent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub value_a: f64,
    pub value_b: f64,
    pub verdict: Preference,
}

pub fn compare(
    a: &ContinuousDistribution,
    b: &ContinuousDistribution,
    prefs: &Preferences,
    kind: AgentKind,
) -> Result<Comparison> {
    let value = |d| match kind {
        AgentKind::Naive => naive_value(d, prefs),
        AgentKind::Sophisticated => sophisticated_value(d, prefs),
    };
    let (value_a, value_b) = (value(a)?, value(b)?);
    let d = value_a - value_b;
    let verdict = if d > COMPARE_TOL {
        Preference::PreferA
    } else if d < -COMPARE_TOL {
        Preference::PreferB
    } else {
        Preference::Indifferent
    };
    Ok(Comparison {
        value_a,
        value_b,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn n(mean: f64, sd: f64) -> ContinuousDistribution {
        ContinuousDistribution::normal(mean, sd).unwrap()
    }

    #[test]
    fn quantile_examples() {
        assert_abs_diff_eq!(subjective_expectation(&n(1.0, 1.0), 0.5).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(subjective_expectation(&n(1.0, 1.0), 0.8).unwrap(), 0.158_378_766_4, epsilon = 1e-9);
        assert_abs_diff_eq!(subjective_expectation(&n(0.0, 2.0), 0.2).unwrap(), 1.683_242_467_1, epsilon = 1e-9);
        assert!(matches!(subjective_expectation(&n(0.0, 1.0), 0.0), Err(Error::UnboundedExpectation(_))));
        assert!(subjective_expectation(&n(0.0, 1.0), 1.5).is_err());
    }

    #[test]
    fn partial_expectation_examples() {
        assert_abs_diff_eq!(partial_expectation(&n(0.0, 1.0), 0.0), -0.398_942_280_4, epsilon = 1e-9);
        assert_abs_diff_eq!(partial_expectation(&n(1.0, 1.0), 1.0), 0.101_057_719_6, epsilon = 1e-9);
        assert_abs_diff_eq!(partial_expectation(&n(0.0, 1.0), 8.0), 0.0, epsilon = 1e-6);
        for a in [-3.0, -0.5, 0.2, 2.5] {
            let d = n(0.3, 1.7);
            assert_abs_diff_eq!(
                partial_expectation(&d, a),
                partial_expectation_closed_form(&d, a).unwrap(),
                epsilon = 1e-9
            );
        }
    }

    #[test]
    fn tabulated_triangle() {
        // unnormalised triangle on [0, 2] peaked at 1
        let d = ContinuousDistribution::tabulated(vec![0.0, 1.0, 2.0], vec![0.0, 2.0, 0.0]).unwrap();
        assert_abs_diff_eq!(d.pdf(1.0), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(d.cdf(0.5), 0.125, epsilon = 1e-15);
        assert_abs_diff_eq!(d.mean(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d.expect(|_| 1.0), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(subjective_expectation(&d, 0.5).unwrap(), 1.0, epsilon = 1e-12);
        assert_eq!(subjective_expectation(&d, 0.0).unwrap(), 2.0);
        assert!(partial_expectation_closed_form(&d, 1.0).is_none());
    }

    #[test]
    fn mixture_moments() {
        let d = ContinuousDistribution::mixture(vec![
            Component { w: 0.3, mean: -1.0, sd: 0.5 },
            Component { w: 0.7, mean: 2.0, sd: 1.0 },
        ])
        .unwrap();
        assert_abs_diff_eq!(d.mean(), 1.1, epsilon = 1e-15);
        assert_abs_diff_eq!(d.expect(|z| z), 1.1, epsilon = 1e-9);
        assert_abs_diff_eq!(d.cdf(0.7) + d.upper_tail(0.7), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn rejects_bad_distributions() {
        assert!(ContinuousDistribution::normal(0.0, 0.0).is_err());
        assert!(ContinuousDistribution::mixture(vec![]).is_err());
        assert!(ContinuousDistribution::mixture(vec![Component { w: 0.5, mean: 0.0, sd: 1.0 }]).is_err());
        assert!(ContinuousDistribution::tabulated(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
        assert!(ContinuousDistribution::tabulated(vec![0.0, 1.0], vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn valuations() {
        let half = Preferences::new(crate::preferences::eta_for_cutoff(0.5, 2.25).unwrap(), 2.25).unwrap();
        assert_abs_diff_eq!(naive_value(&n(0.0, 1.0), &half).unwrap(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sophisticated_value(&n(1.0, 1.0), &half).unwrap(), 0.693_121_3, epsilon = 1e-7);

        let lam = 1.0 + 1e-9;
        let eta = crate::preferences::eta_for_cutoff(0.4, lam).unwrap();
        let near_one = Preferences::new(eta, lam).unwrap();
        let d = n(0.4, 1.3);
        assert_abs_diff_eq!(sophisticated_value(&d, &near_one).unwrap(), eta * 0.4, epsilon = 1e-6);
    }

    #[test]
    fn compare_normals() {
        let wide = n(0.0, 2.0);
        let narrow = n(0.0, 1.0);
        let at = |p: f64| Preferences::new(crate::preferences::eta_for_cutoff(p, 2.25).unwrap(), 2.25).unwrap();
        let c = compare(&wide, &narrow, &at(0.3), AgentKind::Naive).unwrap();
        assert_eq!(c.verdict, Preference::PreferA);
        assert_abs_diff_eq!(c.value_a, 1.048_801_02, epsilon = 1e-7);
        assert_eq!(compare(&wide, &narrow, &at(0.7), AgentKind::Naive).unwrap().verdict, Preference::PreferB);
        assert_eq!(compare(&wide, &wide, &at(0.7), AgentKind::Sophisticated).unwrap().verdict, Preference::Indifferent);
    }

    #[test]
    fn json_shapes() {
        let d: ContinuousDistribution = serde_json::from_str(r#"{"normal":{"mean":1,"sd":1}}"#).unwrap();
        assert_eq!(d.support(), (-7.0, 9.0));
        let m: ContinuousDistribution =
            serde_json::from_str(r#"{"mixture":[{"w":0.5,"mean":0,"sd":1},{"w":0.5,"mean":1,"sd":2}]}"#).unwrap();
        assert_abs_diff_eq!(m.mean(), 0.5, epsilon = 1e-15);
        let t: ContinuousDistribution = serde_json::from_str(r#"{"tabulated":{"z":[0,1],"f":[1,1]}}"#).unwrap();
        assert_abs_diff_eq!(t.mean(), 0.5, epsilon = 1e-12);
        let back: ContinuousDistribution = serde_json::from_str(&serde_json::to_string(&d).unwrap()).unwrap();
        assert_eq!(back.spec(), d.spec());
        assert!(serde_json::from_str::<ContinuousDistribution>(r#"{"normal":{"mean":1,"sd":-1}}"#).is_err());
    }
}
