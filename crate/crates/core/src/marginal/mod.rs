//! One-dimensional marginals and their normal-space representation.

mod beta;
mod projection;
mod spec;

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::special::{ppnd, std_normal_cdf, std_normal_sf, upper_quantile};

pub(crate) use beta::BetaDist;
pub use projection::{hermite_coefficients, quadrature_projections, HermiteCoefficients};
pub use spec::MarginalSpec;

/// Cumulative (or survival) mass at or beyond which a cut point is +∞.
const CLAMP_MASS: f64 = 1e-15;
/// Infinite-support discrete marginals are cut at this cumulative mass.
const TRUNCATION_MASS: f64 = 1.0 - 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarginalKind {
    Continuous,
    Discrete,
}

/// Named constructors for the distributions the library knows about.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Builtin {
    Uniform01,
    BernoulliHalf,
    Normal01,
    LogNormal { mu: f64, sigma: f64 },
    Beta { alpha: f64, beta: f64 },
    Binomial { n: u32, p: f64 },
    Poisson { lambda: f64 },
}

#[derive(Clone)]
pub enum Marginal {
    Continuous(ContinuousMarginal),
    Discrete(DiscreteMarginal),
}

impl Marginal {
    pub fn kind(&self) -> MarginalKind {
        match self {
            Marginal::Continuous(_) => MarginalKind::Continuous,
            Marginal::Discrete(_) => MarginalKind::Discrete,
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Marginal::Continuous(m) => &m.name,
            Marginal::Discrete(m) => &m.name,
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            Marginal::Continuous(m) => m.mean,
            Marginal::Discrete(m) => m.mean,
        }
    }

    pub fn std(&self) -> f64 {
        match self {
            Marginal::Continuous(m) => m.std,
            Marginal::Discrete(m) => m.std,
        }
    }

    /// x = F⁻¹(Φ(z)).
    pub fn transform(&self, z: f64) -> f64 {
        match self {
            Marginal::Continuous(m) => m.transform(z),
            Marginal::Discrete(m) => m.transform(z),
        }
    }

    pub fn as_continuous(&self) -> Option<&ContinuousMarginal> {
        match self {
            Marginal::Continuous(m) => Some(m),
            Marginal::Discrete(_) => None,
        }
    }

    pub fn as_discrete(&self) -> Option<&DiscreteMarginal> {
        match self {
            Marginal::Discrete(m) => Some(m),
            Marginal::Continuous(_) => None,
        }
    }
}

impl fmt::Debug for Marginal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Marginal::Continuous(m) => m.fmt(f),
            Marginal::Discrete(m) => m.fmt(f),
        }
    }
}

impl From<ContinuousMarginal> for Marginal {
    fn from(m: ContinuousMarginal) -> Self {
        Marginal::Continuous(m)
    }
}

impl From<DiscreteMarginal> for Marginal {
    fn from(m: DiscreteMarginal) -> Self {
        Marginal::Discrete(m)
    }
}

pub type QuantileFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum ContinuousFamily {
    Uniform01,
    Normal01,
    LogNormal { mu: f64, sigma: f64 },
    Beta { alpha: f64, beta: f64 },
    Custom(QuantileFn),
}

impl fmt::Debug for ContinuousFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Uniform01 => f.write_str("Uniform01"),
            Self::Normal01 => f.write_str("Normal01"),
            Self::LogNormal { mu, sigma } => write!(f, "LogNormal {{ mu: {mu}, sigma: {sigma} }}"),
            Self::Beta { alpha, beta } => write!(f, "Beta {{ alpha: {alpha}, beta: {beta} }}"),
            Self::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ContinuousMarginal {
    name: String,
    mean: f64,
    std: f64,
    family: ContinuousFamily,
    beta: Option<BetaDist>,
}

impl ContinuousMarginal {
    /// User-defined marginal from a quantile function and its first two
    /// moments. The quantile must be nondecreasing on (0, 1).
    pub fn from_quantile(
        name: impl Into<String>,
        quantile: impl Fn(f64) -> f64 + Send + Sync + 'static,
        mean: f64,
        std: f64,
    ) -> Result<Self> {
        let name = name.into();
        check_moments(&name, mean, std)?;
        let mut prev = f64::NEG_INFINITY;
        for i in 1..100 {
            let p = i as f64 / 100.0;
            let x = quantile(p);
            if !x.is_finite() || x < prev {
                return Err(Error::domain(format!(
                    "quantile of '{name}' is not finite and nondecreasing at p = {p}"
                )));
            }
            prev = x;
        }
        Ok(Self {
            name,
            mean,
            std,
            family: ContinuousFamily::Custom(Arc::new(quantile)),
            beta: None,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn std(&self) -> f64 {
        self.std
    }

    pub fn family(&self) -> &ContinuousFamily {
        &self.family
    }

    pub fn quantile(&self, p: f64) -> f64 {
        match &self.family {
            ContinuousFamily::Uniform01 => p,
            ContinuousFamily::Normal01 => ppnd(p),
            ContinuousFamily::LogNormal { mu, sigma } => (mu + sigma * ppnd(p)).exp(),
            ContinuousFamily::Beta { .. } => self.beta.as_ref().unwrap().quantile(p),
            ContinuousFamily::Custom(q) => q(p),
        }
    }

    /// x = F⁻¹(Φ(z)), using upper-tail forms for z > 0 where the family allows.
    pub fn transform(&self, z: f64) -> f64 {
        match &self.family {
            ContinuousFamily::Uniform01 => std_normal_cdf(z),
            ContinuousFamily::Normal01 => z,
            ContinuousFamily::LogNormal { mu, sigma } => (mu + sigma * z).exp(),
            ContinuousFamily::Beta { .. } => {
                let d = self.beta.as_ref().unwrap();
                if z > 0.0 {
                    d.upper_quantile(std_normal_sf(z))
                } else {
                    d.quantile(std_normal_cdf(z))
                }
            }
            ContinuousFamily::Custom(q) => q(std_normal_cdf(z)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdSet {
    pub z_cuts: Vec<f64>,
}

impl ThresholdSet {
    /// Number of support points N (the set holds N + 1 cuts).
    pub fn support_len(&self) -> usize {
        self.z_cuts.len() - 1
    }

    /// The finite-or-not interior cuts Z_1..Z_{N−1}.
    pub fn interior(&self) -> &[f64] {
        &self.z_cuts[1..self.z_cuts.len() - 1]
    }
}

#[derive(Debug, Clone)]
pub struct DiscreteMarginal {
    name: String,
    support: Vec<f64>,
    probs: Vec<f64>,
    mean: f64,
    std: f64,
    thresholds: ThresholdSet,
}

impl DiscreteMarginal {
    pub fn new(name: impl Into<String>, support: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        let name = name.into();
        if support.len() != probs.len() {
            return Err(Error::domain(format!(
                "'{name}': support has {} points but probs has {}",
                support.len(),
                probs.len()
            )));
        }
        if support.len() < 2 {
            return Err(Error::domain(format!(
                "'{name}': at least two support points are required"
            )));
        }
        if support.iter().any(|x| !x.is_finite()) || support.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::domain(format!(
                "'{name}': support must be finite and strictly increasing"
            )));
        }
        if probs.iter().any(|&p| !(p > 0.0 && p.is_finite())) {
            return Err(Error::domain(format!(
                "'{name}': probabilities must be positive"
            )));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::domain(format!(
                "'{name}': probabilities sum to {total}, not 1"
            )));
        }
        let mean: f64 = support.iter().zip(&probs).map(|(x, p)| x * p).sum();
        let var: f64 = support
            .iter()
            .zip(&probs)
            .map(|(x, p)| p * (x - mean).powi(2))
            .sum();
        let std = var.sqrt();
        check_moments(&name, mean, std)?;
        let thresholds = thresholds_from_probs(&probs);
        Ok(Self {
            name,
            support,
            probs,
            mean,
            std,
            thresholds,
        })
    }

    /// Like [`DiscreteMarginal::new`] but rescales the probabilities to sum to one.
    pub fn normalized(name: impl Into<String>, support: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        let total: f64 = probs.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::domain(
                "probabilities must have a positive finite sum",
            ));
        }
        Self::new(
            name,
            support,
            probs.into_iter().map(|p| p / total).collect(),
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn std(&self) -> f64 {
        self.std
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn thresholds(&self) -> &ThresholdSet {
        &self.thresholds
    }

    /// Support point X_k with Z_{k−1} < z ≤ Z_k.
    pub fn transform(&self, z: f64) -> f64 {
        let k = self.thresholds.interior().partition_point(|&c| c < z);
        self.support[k]
    }
}

/// Normal-space cut points of a discrete marginal.
pub fn discrete_thresholds(m: &DiscreteMarginal) -> ThresholdSet {
    m.thresholds.clone()
}

/// Cut k is Φ⁻¹ of the mass of the first k points; past the median it is
/// taken from the remaining (survival) mass instead, which is not eroded by
/// cancellation against 1.
fn thresholds_from_probs(probs: &[f64]) -> ThresholdSet {
    let n = probs.len();
    let mut survival = vec![0.0; n + 1];
    for k in (0..n).rev() {
        survival[k] = survival[k + 1] + probs[k];
    }
    let mut cuts = Vec::with_capacity(n + 1);
    cuts.push(f64::NEG_INFINITY);
    let mut cum = 0.0;
    for k in 1..n {
        cum += probs[k - 1];
        let tail = survival[k];
        let z = if tail <= CLAMP_MASS || cum >= 1.0 - CLAMP_MASS {
            f64::INFINITY
        } else if cum <= 0.5 {
            ppnd(cum)
        } else {
            upper_quantile(tail)
        };
        cuts.push(z);
    }
    cuts.push(f64::INFINITY);
    ThresholdSet { z_cuts: cuts }
}

fn check_moments(name: &str, mean: f64, std: f64) -> Result<()> {
    if !mean.is_finite() {
        return Err(Error::domain(format!("'{name}': mean must be finite")));
    }
    if !(std > 0.0 && std.is_finite()) {
        return Err(Error::domain(format!(
            "'{name}': standard deviation must be positive"
        )));
    }
    Ok(())
}

pub fn make_builtin(which: Builtin) -> Result<Marginal> {
    let continuous = |name: String, mean, std, family| -> Marginal {
        Marginal::Continuous(ContinuousMarginal {
            name,
            mean,
            std,
            family,
            beta: None,
        })
    };
    Ok(match which {
        Builtin::Uniform01 => continuous(
            "uniform01".into(),
            0.5,
            0.5 / 3f64.sqrt(),
            ContinuousFamily::Uniform01,
        ),
        Builtin::Normal01 => continuous("normal01".into(), 0.0, 1.0, ContinuousFamily::Normal01),
        Builtin::LogNormal { mu, sigma } => {
            if !(sigma > 0.0 && sigma.is_finite() && mu.is_finite()) {
                return Err(Error::domain(format!(
                    "lognormal needs finite mu and sigma > 0, got ({mu}, {sigma})"
                )));
            }
            let mean = (mu + 0.5 * sigma * sigma).exp();
            let std = (sigma * sigma).exp_m1().sqrt() * mean;
            continuous(
                format!("lognormal({mu},{sigma})"),
                mean,
                std,
                ContinuousFamily::LogNormal { mu, sigma },
            )
        }
        Builtin::Beta { alpha, beta } => {
            let d = BetaDist::new(alpha, beta)?;
            Marginal::Continuous(ContinuousMarginal {
                name: format!("beta({alpha},{beta})"),
                mean: d.mean(),
                std: d.std(),
                family: ContinuousFamily::Beta { alpha, beta },
                beta: Some(d),
            })
        }
        Builtin::BernoulliHalf => Marginal::Discrete(DiscreteMarginal::new(
            "bernoulli_half",
            vec![0.0, 1.0],
            vec![0.5, 0.5],
        )?),
        Builtin::Binomial { n, p } => {
            if n == 0 || !(p > 0.0 && p < 1.0) {
                return Err(Error::domain(format!(
                    "binomial needs n ≥ 1 and 0 < p < 1, got ({n}, {p})"
                )));
            }
            let (support, probs) = binomial_pmf(n, p);
            Marginal::Discrete(DiscreteMarginal::normalized(
                format!("binomial({n},{p})"),
                support,
                probs,
            )?)
        }
        Builtin::Poisson { lambda } => {
            if !(lambda > 0.0 && lambda.is_finite()) {
                return Err(Error::domain(format!(
                    "poisson needs lambda > 0, got {lambda}"
                )));
            }
            let (support, probs) = poisson_pmf(lambda);
            Marginal::Discrete(DiscreteMarginal::normalized(
                format!("poisson({lambda})"),
                support,
                probs,
            )?)
        }
    })
}

/// Points whose mass underflows to zero are dropped.
fn binomial_pmf(n: u32, p: f64) -> (Vec<f64>, Vec<f64>) {
    use statrs::function::gamma::ln_gamma;
    let nf = n as f64;
    let ln_n = ln_gamma(nf + 1.0);
    let (lp, lq) = (p.ln(), (-p).ln_1p());
    (0..=n)
        .map(|k| {
            let k = k as f64;
            let ln_pmf = ln_n - ln_gamma(k + 1.0) - ln_gamma(nf - k + 1.0) + k * lp + (nf - k) * lq;
            // Exact for small n; the log form only guards against overflow.
            (
                k,
                if n <= 60 {
                    exact_binomial(n, k as u32, p)
                } else {
                    ln_pmf.exp()
                },
            )
        })
        .filter(|&(_, q)| q > 0.0)
        .unzip()
}

fn exact_binomial(n: u32, k: u32, p: f64) -> f64 {
    let kk = k.min(n - k);
    let choose: f64 = (0..kk).fold(1.0, |c, i| c * (n - i) as f64 / (i + 1) as f64);
    choose.round() * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32)
}

fn poisson_pmf(lambda: f64) -> (Vec<f64>, Vec<f64>) {
    use statrs::function::gamma::ln_gamma;
    let (mut support, mut probs) = (Vec::new(), Vec::new());
    let mut cum = 0.0;
    let mut k = 0u64;
    while cum < TRUNCATION_MASS || support.len() < 2 {
        let kf = k as f64;
        let pk = (kf * lambda.ln() - lambda - ln_gamma(kf + 1.0)).exp();
        if pk > 0.0 {
            support.push(kf);
            probs.push(pk);
            cum += pk;
        }
        k += 1;
    }
    (support, probs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn discrete(b: Builtin) -> DiscreteMarginal {
        make_builtin(b).unwrap().as_discrete().unwrap().clone()
    }

    #[test]
    fn builtin_moments() {
        let u = make_builtin(Builtin::Uniform01).unwrap();
        assert_eq!(u.mean(), 0.5);
        assert!((u.std() - 1.0 / (2.0 * 3f64.sqrt())).abs() < 1e-16);

        let ln = make_builtin(Builtin::LogNormal {
            mu: 0.0,
            sigma: 1.0,
        })
        .unwrap();
        let e = std::f64::consts::E;
        assert!((ln.mean() - e.sqrt()).abs() < 1e-15);
        assert!((ln.std() - (e - 1.0).sqrt() * e.sqrt()).abs() < 1e-14);

        let b = discrete(Builtin::Binomial { n: 2, p: 0.2 });
        assert_eq!(b.support(), &[0.0, 1.0, 2.0]);
        for (got, want) in b.probs().iter().zip([0.64, 0.32, 0.04]) {
            assert!((got - want).abs() < 1e-15);
        }
        assert!((b.mean() - 0.4).abs() < 1e-15);
        assert!((b.std() - 0.32f64.sqrt()).abs() < 1e-15);

        let bern = discrete(Builtin::BernoulliHalf);
        assert_eq!((bern.mean(), bern.std()), (0.5, 0.5));
    }

    #[test]
    fn threshold_examples() {
        let t = discrete(Builtin::BernoulliHalf).thresholds().clone();
        assert_eq!(t.z_cuts, vec![f64::NEG_INFINITY, 0.0, f64::INFINITY]);

        let t = discrete(Builtin::Binomial { n: 2, p: 0.2 })
            .thresholds()
            .clone();
        assert_eq!(t.z_cuts.len(), 4);
        assert!((t.z_cuts[1] - 0.358_458_793_251_193_8).abs() < 1e-9);
        assert!((t.z_cuts[2] - 1.750_686_071_252_169_2).abs() < 1e-9);

        let b20 = discrete(Builtin::Binomial { n: 20, p: 0.2 });
        let t = b20.thresholds();
        assert_eq!(t.z_cuts.len(), 22);
        assert!((t.z_cuts[1] - ppnd(0.8f64.powi(20))).abs() < 1e-12);
    }

    #[test]
    fn thresholds_reproduce_cumulative_mass() {
        for b in [
            Builtin::BernoulliHalf,
            Builtin::Binomial { n: 2, p: 0.2 },
            Builtin::Binomial { n: 20, p: 0.2 },
            Builtin::Binomial { n: 7, p: 0.9 },
            Builtin::Poisson { lambda: 3.5 },
        ] {
            let m = discrete(b);
            let mut cum = 0.0;
            for (k, &z) in m.thresholds().z_cuts.iter().enumerate() {
                if k > 0 {
                    cum += m.probs()[k - 1];
                }
                assert!((std_normal_cdf(z) - cum).abs() <= 1e-12, "{b:?} k = {k}");
            }
            assert!(m
                .thresholds()
                .z_cuts
                .windows(2)
                .all(|w| w[0] < w[1] || w[0] == f64::INFINITY));
        }
    }

    #[test]
    fn discrete_transform_picks_segment() {
        let m = discrete(Builtin::Binomial { n: 2, p: 0.2 });
        assert_eq!(m.transform(f64::NEG_INFINITY), 0.0);
        assert_eq!(m.transform(0.0), 0.0);
        assert_eq!(m.transform(0.36), 1.0);
        assert_eq!(m.transform(1.75), 1.0);
        assert_eq!(m.transform(1.8), 2.0);
        assert_eq!(m.transform(f64::INFINITY), 2.0);
    }

    #[test]
    fn poisson_is_truncated_and_renormalized() {
        let m = discrete(Builtin::Poisson { lambda: 2.0 });
        assert!((m.probs().iter().sum::<f64>() - 1.0).abs() < 1e-14);
        assert!((m.mean() - 2.0).abs() < 1e-8);
        assert!((m.std() - 2f64.sqrt()).abs() < 1e-7);
    }

    #[test]
    fn invalid_parameters() {
        assert!(matches!(
            make_builtin(Builtin::Beta {
                alpha: -1.0,
                beta: 2.0
            }),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            make_builtin(Builtin::Binomial { n: 0, p: 0.5 }),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            make_builtin(Builtin::Binomial { n: 3, p: 1.0 }),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            make_builtin(Builtin::LogNormal {
                mu: 0.0,
                sigma: 0.0
            }),
            Err(Error::Domain(_))
        ));
        assert!(DiscreteMarginal::new("x", vec![1.0, 1.0], vec![0.5, 0.5]).is_err());
        assert!(DiscreteMarginal::new("x", vec![1.0, 2.0], vec![0.5, 0.6]).is_err());
        assert!(DiscreteMarginal::new("x", vec![1.0], vec![1.0]).is_err());
        assert!(ContinuousMarginal::from_quantile("dec", |p| -p, 0.0, 1.0).is_err());
        assert!(ContinuousMarginal::from_quantile("flat", |p| p, 0.5, 0.0).is_err());
    }

    #[test]
    fn beta_transform_is_tail_accurate() {
        let m = make_builtin(Builtin::Beta {
            alpha: 2.0,
            beta: 3.0,
        })
        .unwrap();
        let m = m.as_continuous().unwrap();
        for i in -80..=80 {
            let z = i as f64 / 10.0;
            let x = m.transform(z);
            let d = BetaDist::new(2.0, 3.0).unwrap();
            if z <= 0.0 {
                assert!((d.cdf(x) / std_normal_cdf(z) - 1.0).abs() < 1e-9, "z = {z}");
            } else {
                let upper = BetaDist::new(3.0, 2.0).unwrap().cdf(1.0 - x);
                assert!((upper / std_normal_sf(z) - 1.0).abs() < 1e-6, "z = {z}");
            }
        }
    }
}
