//! The link polynomial ρ_x ≈ Σ b_k ρ_z^k and the routes that build it.
//!
//! Every route reduces to the same product formula. With the raw
//! projections S_k = ∫ x(z)·He_k(z)·φ(z) dz of the two marginal transforms,
//! Mehler's expansion of the bivariate normal density gives
//!
//! ```text
//! E[x_i x_j] = Σ_k S_{i,k}·S_{j,k}·ρ_z^k / k!
//! ```
//!
//! so b_k = S_{i,k}·S_{j,k} / (k!·σ_i·σ_j) for k ≥ 1. A continuous marginal
//! gets S_k from Gauss-Hermite quadrature (S_k = k!·a_k); a discrete one from
//! the telescoped corner sum over its thresholds, which is the k-th
//! derivative of the Green's-theorem representation at ρ_z = 0.

mod closed_form;
mod degree;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::marginal::{ContinuousMarginal, DiscreteMarginal, Marginal, MarginalKind};

pub use closed_form::{closed_form, ClosedFormCase, Direction};
pub(crate) use degree::rho_grid;
pub use degree::{delta_p, select_degree, DegreeOptions, DegreeSelection, DEFAULT_DEGREE_CAP};

/// Gauss-Hermite points used for Hermite projections unless the degree
/// needs more.
pub const DEFAULT_QUADRATURE_FLOOR: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    ContinuousContinuous,
    DiscreteDiscrete,
    Mixed,
    ClosedForm,
    /// Coefficients handed in directly.
    Supplied,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LinkMeta {
    pub labels: Vec<String>,
    /// Gauss-Hermite points per continuous marginal; `None` when no
    /// quadrature was needed.
    pub quadrature_points: Option<usize>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkPolynomial {
    /// b_0..b_n, ascending powers of ρ_z.
    pub b: Vec<f64>,
    pub route: Route,
    pub meta: LinkMeta,
}

impl LinkPolynomial {
    pub fn from_coefficients(b: Vec<f64>) -> Result<Self> {
        if b.is_empty() || b.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input(
                "link coefficients must be a non-empty list of finite numbers".into(),
            ));
        }
        Ok(Self::checked(b, Route::Supplied, LinkMeta::default()))
    }

    /// Attaches invariant warnings: b_0 away from 0, overshoot past ±1 at
    /// the ends, and a non-increasing stretch inside (−1, 1).
    pub(crate) fn checked(b: Vec<f64>, route: Route, mut meta: LinkMeta) -> Self {
        let mut p = Self {
            b,
            route,
            meta: LinkMeta::default(),
        };
        if p.b[0].abs() > 1e-8 {
            meta.warnings.push(format!(
                "b_0 = {:e} is not ~0; projections may be inaccurate",
                p.b[0]
            ));
        }
        let (lo, hi) = (p.evaluate(-1.0), p.evaluate(1.0));
        if hi > 1.05 || lo < -1.05 {
            meta.warnings.push(format!(
                "link overshoots at the ends: P(-1) = {lo:.4}, P(1) = {hi:.4}"
            ));
        }
        let bad: Vec<f64> = (-99..=99)
            .map(|i| i as f64 / 100.0)
            .filter(|&r| p.derivative(r) <= 0.0)
            .collect();
        if let (Some(first), Some(last)) = (bad.first(), bad.last()) {
            meta.warnings.push(format!(
                "link is not increasing at {} grid points in [{first:.2}, {last:.2}]",
                bad.len()
            ));
        }
        p.meta = meta;
        p
    }

    pub fn degree(&self) -> usize {
        self.b.len() - 1
    }

    pub fn evaluate(&self, rho_z: f64) -> f64 {
        self.b.iter().rev().fold(0.0, |acc, &c| acc * rho_z + c)
    }

    pub fn derivative(&self, rho_z: f64) -> f64 {
        self.b
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |acc, (k, &c)| acc * rho_z + k as f64 * c)
    }

    pub fn warnings(&self) -> &[String] {
        &self.meta.warnings
    }
}

/// How many Gauss-Hermite points a degree-n projection uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadraturePolicy {
    /// max(n + 1, floor).
    Floor(usize),
    /// n + 1: exact for polynomial transforms of degree ≤ n + 1.
    DegreePlusOne,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildOptions {
    pub quadrature: QuadraturePolicy,
    /// Use the exact expansions of uniform, normal and lognormal transforms.
    pub analytic: bool,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            quadrature: QuadraturePolicy::Floor(DEFAULT_QUADRATURE_FLOOR),
            analytic: true,
        }
    }
}

impl BuildOptions {
    /// (n + 1)-point quadrature for every transform, no analytic shortcuts.
    pub fn n_plus_one() -> Self {
        Self {
            quadrature: QuadraturePolicy::DegreePlusOne,
            analytic: false,
        }
    }

    pub fn points(&self, n: usize) -> usize {
        match self.quadrature {
            QuadraturePolicy::Floor(floor) => (n + 1).max(floor),
            QuadraturePolicy::DegreePlusOne => n + 1,
        }
    }
}

/// S_0..S_n for either kind of marginal. For a continuous marginal,
/// S_k = k!·a_k; for a discrete one S_k is the corner sum D(k).
pub fn projections(m: &Marginal, n: usize, opts: &BuildOptions) -> Result<Vec<f64>> {
    match m {
        Marginal::Continuous(c) => continuous_projections(c, n, opts),
        Marginal::Discrete(d) => d.projections(n),
    }
}

fn continuous_projections(
    m: &ContinuousMarginal,
    n: usize,
    opts: &BuildOptions,
) -> Result<Vec<f64>> {
    if opts.analytic {
        if let Some(s) = m.analytic_projections(n)? {
            return Ok(s);
        }
    }
    m.quadrature_projections(n, opts.points(n))
}

/// b_k from two projection sequences of equal length.
pub(crate) fn link_from_projections(
    si: &[f64],
    sj: &[f64],
    (mu_i, sigma_i): (f64, f64),
    (mu_j, sigma_j): (f64, f64),
    route: Route,
    meta: LinkMeta,
) -> LinkPolynomial {
    let scale = 1.0 / (sigma_i * sigma_j);
    let mut b = Vec::with_capacity(si.len());
    b.push((si[0] * sj[0] - mu_i * mu_j) * scale);
    let mut inv_fact = 1.0;
    for k in 1..si.len() {
        inv_fact /= k as f64;
        b.push(si[k] * sj[k] * inv_fact * scale);
    }
    LinkPolynomial::checked(b, route, meta)
}

fn quadrature_meta(opts: &BuildOptions, n: usize, uses_quadrature: bool) -> Option<usize> {
    uses_quadrature.then(|| opts.points(n))
}

fn needs_quadrature(m: &ContinuousMarginal, opts: &BuildOptions) -> bool {
    !(opts.analytic && matches!(m.analytic_projections(0), Ok(Some(_))))
}

pub fn build_continuous(
    mi: &ContinuousMarginal,
    mj: &ContinuousMarginal,
    n: usize,
    opts: &BuildOptions,
) -> Result<LinkPolynomial> {
    let si = continuous_projections(mi, n, opts)?;
    let sj = continuous_projections(mj, n, opts)?;
    let meta = LinkMeta {
        labels: vec![mi.name().to_string(), mj.name().to_string()],
        quadrature_points: quadrature_meta(
            opts,
            n,
            needs_quadrature(mi, opts) || needs_quadrature(mj, opts),
        ),
        warnings: Vec::new(),
    };
    Ok(link_from_projections(
        &si,
        &sj,
        (mi.mean(), mi.std()),
        (mj.mean(), mj.std()),
        Route::ContinuousContinuous,
        meta,
    ))
}

pub fn build_discrete(
    mi: &DiscreteMarginal,
    mj: &DiscreteMarginal,
    n: usize,
) -> Result<LinkPolynomial> {
    let si = mi.projections(n)?;
    let sj = mj.projections(n)?;
    let meta = LinkMeta {
        labels: vec![mi.name().to_string(), mj.name().to_string()],
        quadrature_points: None,
        warnings: Vec::new(),
    };
    Ok(link_from_projections(
        &si,
        &sj,
        (mi.mean(), mi.std()),
        (mj.mean(), mj.std()),
        Route::DiscreteDiscrete,
        meta,
    ))
}

/// One discrete and one continuous marginal, in either order.
pub fn build_mixed(
    a: &Marginal,
    b: &Marginal,
    n: usize,
    opts: &BuildOptions,
) -> Result<LinkPolynomial> {
    let (d, c) = match (a, b) {
        (Marginal::Discrete(d), Marginal::Continuous(c))
        | (Marginal::Continuous(c), Marginal::Discrete(d)) => (d, c),
        _ => {
            return Err(Error::Input(
                "the mixed route needs one discrete and one continuous marginal".into(),
            ))
        }
    };
    let si = d.projections(n)?;
    let sj = continuous_projections(c, n, opts)?;
    let meta = LinkMeta {
        labels: vec![d.name().to_string(), c.name().to_string()],
        quadrature_points: quadrature_meta(opts, n, needs_quadrature(c, opts)),
        warnings: Vec::new(),
    };
    Ok(link_from_projections(
        &si,
        &sj,
        (d.mean(), d.std()),
        (c.mean(), c.std()),
        Route::Mixed,
        meta,
    ))
}

/// Dispatches on the marginal kinds.
pub fn build_link(
    mi: &Marginal,
    mj: &Marginal,
    n: usize,
    opts: &BuildOptions,
) -> Result<LinkPolynomial> {
    match (mi, mj) {
        (Marginal::Continuous(a), Marginal::Continuous(b)) => build_continuous(a, b, n, opts),
        (Marginal::Discrete(a), Marginal::Discrete(b)) => build_discrete(a, b, n),
        _ => build_mixed(mi, mj, n, opts),
    }
}

pub fn route_for(mi: &Marginal, mj: &Marginal) -> Route {
    match (mi.kind(), mj.kind()) {
        (MarginalKind::Continuous, MarginalKind::Continuous) => Route::ContinuousContinuous,
        (MarginalKind::Discrete, MarginalKind::Discrete) => Route::DiscreteDiscrete,
        _ => Route::Mixed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::marginal::{make_builtin, Builtin};
    use std::f64::consts::{E, PI};

    fn m(b: Builtin) -> Marginal {
        make_builtin(b).unwrap()
    }

    #[test]
    fn evaluate_and_derivative() {
        let id = LinkPolynomial::from_coefficients(vec![0.0, 1.0]).unwrap();
        assert_eq!(id.evaluate(0.3), 0.3);
        assert_eq!(id.derivative(-0.7), 1.0);
        let p = LinkPolynomial::from_coefficients(vec![0.5, 0.0, 2.0, -1.0]).unwrap();
        assert!((p.evaluate(0.5) - (0.5 + 0.5 - 0.125)).abs() < 1e-15);
        assert!((p.derivative(0.5) - (2.0 - 0.75)).abs() < 1e-15);
        assert!(p.warnings().iter().any(|w| w.contains("b_0")));
        assert!(LinkPolynomial::from_coefficients(vec![]).is_err());
    }

    #[test]
    fn normal_pair_is_identity() {
        let n = m(Builtin::Normal01);
        let p = build_link(&n, &n, 5, &BuildOptions::default()).unwrap();
        assert_eq!(p.b, vec![0.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(p.route, Route::ContinuousContinuous);
        assert!(p.warnings().is_empty());
    }

    #[test]
    fn lognormal_pair_taylor_coefficients() {
        let ln = m(Builtin::LogNormal {
            mu: 0.0,
            sigma: 1.0,
        });
        for opts in [
            BuildOptions::default(),
            BuildOptions {
                analytic: false,
                ..Default::default()
            },
        ] {
            let p = build_link(&ln, &ln, 6, &opts).unwrap();
            let mut fact = 1.0;
            for k in 1..=6 {
                fact *= k as f64;
                let want = 1.0 / (fact * (E - 1.0));
                assert!((p.b[k] - want).abs() < 1e-10, "k = {k}");
            }
        }
    }

    #[test]
    fn uniform_pair_low_order() {
        let u = m(Builtin::Uniform01);
        let p = build_link(&u, &u, 3, &BuildOptions::default()).unwrap();
        assert!((p.b[1] - 3.0 / PI).abs() < 1e-14);
        assert!((p.b[3] - 1.0 / (8.0 * PI)).abs() < 1e-14);
        assert!((p.b[3] - 0.039_788_7).abs() < 1e-7);
        assert!(p.b[0].abs() < 1e-15 && p.b[2].abs() < 1e-15);
    }

    #[test]
    fn bernoulli_routes() {
        let b = m(Builtin::BernoulliHalf);
        let p = build_link(&b, &b, 6, &BuildOptions::default()).unwrap();
        assert_eq!(p.route, Route::DiscreteDiscrete);
        assert!((p.b[1] - 2.0 / PI).abs() < 1e-15);
        for k in [2, 4, 6] {
            assert_eq!(p.b[k], 0.0);
        }
        // (2/π)·arcsin: third-order coefficient (2/π)/6
        assert!((p.b[3] - 1.0 / (3.0 * PI)).abs() < 1e-15);

        let n = m(Builtin::Normal01);
        let mixed = build_link(&n, &b, 3, &BuildOptions::default()).unwrap();
        assert_eq!(mixed.route, Route::Mixed);
        assert!((mixed.b[1] - (2.0 / PI).sqrt()).abs() < 1e-15);
        assert_eq!(
            mixed.meta.labels,
            vec!["bernoulli_half".to_string(), "normal01".to_string()]
        );
        assert!(mixed.meta.quadrature_points.is_none());
    }

    #[test]
    fn argument_order_does_not_matter() {
        let pairs = [
            (
                m(Builtin::Beta {
                    alpha: 2.0,
                    beta: 3.0,
                }),
                m(Builtin::LogNormal {
                    mu: 0.1,
                    sigma: 0.6,
                }),
            ),
            (
                m(Builtin::Binomial { n: 2, p: 0.2 }),
                m(Builtin::Binomial { n: 5, p: 0.7 }),
            ),
            (
                m(Builtin::Binomial { n: 20, p: 0.2 }),
                m(Builtin::Beta {
                    alpha: 2.0,
                    beta: 3.0,
                }),
            ),
        ];
        for (a, b) in &pairs {
            let ab = build_link(a, b, 9, &BuildOptions::default()).unwrap();
            let ba = build_link(b, a, 9, &BuildOptions::default()).unwrap();
            for (x, y) in ab.b.iter().zip(&ba.b) {
                assert!((x - y).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn policies() {
        assert_eq!(BuildOptions::default().points(3), 40);
        assert_eq!(BuildOptions::default().points(45), 46);
        assert_eq!(BuildOptions::n_plus_one().points(3), 4);
    }
}
