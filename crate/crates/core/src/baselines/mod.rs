//! Direct-integration references: bisection on the link integral for each
//! marginal combination, a Monte-Carlo estimate of ρ_x, and the evaluation
//! counters used to compare costs with the polynomial route.

mod mc;

use std::cell::Cell;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::link::{
    link_from_projections, projections, route_for, BuildOptions, LinkMeta, LinkPolynomial,
};
use crate::marginal::{quadrature_projections, ContinuousMarginal, DiscreteMarginal, Marginal};
use crate::special::{bvn_cdf, cached_gauss_hermite, gauss_legendre_rule, std_normal_cdf};

pub use mc::{mc_estimate, McEstimate};

/// Bisection bracket ends: [1e−12, 1 − 1e−9] or its mirror.
const INNER: f64 = 1e-12;
const OUTER: f64 = 1.0 - 1e-9;
/// Unbounded threshold segments are cut here for the mixed inner rule.
pub const SEGMENT_TRUNCATION: f64 = 8.5;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalCounters {
    /// Evaluations of F⁻¹(Φ(·)).
    pub quantile_calls: u64,
    pub bivariate_cdf_calls: u64,
    /// Rows of He_k(z)·φ(z) values, one per threshold point and order.
    pub hermite_and_pdf_calls: u64,
}

impl std::ops::AddAssign for EvalCounters {
    fn add_assign(&mut self, o: Self) {
        self.quantile_calls += o.quantile_calls;
        self.bivariate_cdf_calls += o.bivariate_cdf_calls;
        self.hermite_and_pdf_calls += o.hermite_and_pdf_calls;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BisectionResult {
    pub rho_z: f64,
    pub iterations: u32,
    pub counters: EvalCounters,
}

/// T = ⌈1 − log₂ ε⌉, the number of halvings that brings a unit bracket
/// below ε.
pub fn bisection_t(epsilon: f64) -> Result<u32> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::domain(format!(
            "epsilon = {epsilon} must lie in (0, 1)"
        )));
    }
    Ok((1.0 - epsilon.log2()).ceil() as u32)
}

/// T halvings of the sign-matched bracket. The far end is evaluated only if
/// every step moved outward, so interior targets cost exactly T evaluations.
fn bisect(rho_x: f64, epsilon: f64, mut g: impl FnMut(f64) -> f64) -> Result<(f64, u32)> {
    if !(-1.0..=1.0).contains(&rho_x) {
        return Err(Error::domain(format!(
            "rho_x = {rho_x} is not a correlation"
        )));
    }
    let t = bisection_t(epsilon)?;
    if rho_x == 0.0 {
        return Ok((0.0, 0));
    }
    let sign = rho_x.signum();
    // Work on |ρ| with the sign folded into g.
    let (mut lo, mut hi) = (INNER, OUTER);
    let mut always_outward = true;
    for _ in 0..t {
        let mid = 0.5 * (lo + hi);
        if sign * g(sign * mid) < sign * rho_x {
            lo = mid;
        } else {
            hi = mid;
            always_outward = false;
        }
    }
    if always_outward {
        let edge = g(sign * OUTER);
        // A target equal to the attainable bound up to rounding is accepted.
        if sign * edge < sign * rho_x - 1e-12 {
            let other = g(-sign * OUTER);
            let (lo, hi) = if sign > 0.0 {
                (other, edge)
            } else {
                (edge, other)
            };
            return Err(Error::Infeasible { rho_x, lo, hi });
        }
    }
    Ok((sign * 0.5 * (lo + hi), t))
}

/// ρ_x(ρ_z) by an m×m Gauss-Hermite rule under u_j ↦ ρu_i + √(1−ρ²)u_j.
/// The outer transform values are computed once and reused.
pub struct ContinuousLinkIntegral<'a> {
    mj: &'a ContinuousMarginal,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    xi: Vec<f64>,
    scale: f64,
    offset: f64,
    calls: Cell<u64>,
}

impl<'a> ContinuousLinkIntegral<'a> {
    pub fn new(mi: &'a ContinuousMarginal, mj: &'a ContinuousMarginal, m: usize) -> Result<Self> {
        let rule = cached_gauss_hermite(m)?;
        let xi: Vec<f64> = rule.nodes().iter().map(|&u| mi.transform(u)).collect();
        Ok(Self {
            mj,
            nodes: rule.nodes().to_vec(),
            weights: rule.weights().to_vec(),
            xi,
            scale: 1.0 / (mi.std() * mj.std()),
            offset: mi.mean() * mj.mean(),
            calls: Cell::new(m as u64),
        })
    }

    pub fn evaluate(&self, rho: f64) -> f64 {
        let c = (1.0 - rho * rho).sqrt();
        let mut e = 0.0;
        for (a, (&ua, &wa)) in self.nodes.iter().zip(&self.weights).enumerate() {
            let inner: f64 = self
                .nodes
                .iter()
                .zip(&self.weights)
                .map(|(&ub, &wb)| wb * self.mj.transform(rho * ua + c * ub))
                .sum();
            e += wa * self.xi[a] * inner;
        }
        self.calls
            .set(self.calls.get() + (self.nodes.len() * self.nodes.len()) as u64);
        (e - self.offset) * self.scale
    }

    pub fn quantile_calls(&self) -> u64 {
        self.calls.get()
    }
}

pub fn bisection_continuous(
    mi: &ContinuousMarginal,
    mj: &ContinuousMarginal,
    rho_x: f64,
    m: usize,
    epsilon: f64,
) -> Result<BisectionResult> {
    let integral = ContinuousLinkIntegral::new(mi, mj, m)?;
    let (rho_z, iterations) = bisect(rho_x, epsilon, |r| integral.evaluate(r))?;
    let counters = EvalCounters {
        quantile_calls: integral.quantile_calls(),
        ..Default::default()
    };
    Ok(BisectionResult {
        rho_z,
        iterations,
        counters,
    })
}

/// ρ_x(ρ_z) for two discrete marginals as the four-corner sum of
/// bivariate normal CDF values over every pair of threshold cells. Corner
/// values are tabulated once per ρ_z; only finite corners call the CDF.
pub struct DiscreteLinkSum<'a> {
    mi: &'a DiscreteMarginal,
    mj: &'a DiscreteMarginal,
    calls: Cell<u64>,
}

impl<'a> DiscreteLinkSum<'a> {
    pub fn new(mi: &'a DiscreteMarginal, mj: &'a DiscreteMarginal) -> Self {
        Self {
            mi,
            mj,
            calls: Cell::new(0),
        }
    }

    fn corner(&self, a: f64, b: f64, rho: f64) -> f64 {
        match (a, b) {
            (f64::NEG_INFINITY, _) | (_, f64::NEG_INFINITY) => 0.0,
            (f64::INFINITY, f64::INFINITY) => 1.0,
            (f64::INFINITY, b) => std_normal_cdf(b),
            (a, f64::INFINITY) => std_normal_cdf(a),
            (a, b) => {
                self.calls.set(self.calls.get() + 1);
                bvn_cdf(a, b, rho)
            }
        }
    }

    pub fn evaluate(&self, rho: f64) -> f64 {
        let zi = &self.mi.thresholds().z_cuts;
        let zj = &self.mj.thresholds().z_cuts;
        let table: Vec<Vec<f64>> = zi
            .iter()
            .map(|&a| zj.iter().map(|&b| self.corner(a, b, rho)).collect())
            .collect();
        let mut e = 0.0;
        for (k, &x) in self.mi.support().iter().enumerate() {
            for (l, &y) in self.mj.support().iter().enumerate() {
                let p = table[k + 1][l + 1] - table[k][l + 1] - table[k + 1][l] + table[k][l];
                e += x * y * p;
            }
        }
        (e - self.mi.mean() * self.mj.mean()) / (self.mi.std() * self.mj.std())
    }

    pub fn bivariate_cdf_calls(&self) -> u64 {
        self.calls.get()
    }
}

pub fn bisection_discrete(
    mi: &DiscreteMarginal,
    mj: &DiscreteMarginal,
    rho_x: f64,
    epsilon: f64,
) -> Result<BisectionResult> {
    let sum = DiscreteLinkSum::new(mi, mj);
    let (rho_z, iterations) = bisect(rho_x, epsilon, |r| sum.evaluate(r))?;
    let counters = EvalCounters {
        bivariate_cdf_calls: sum.bivariate_cdf_calls(),
        ..Default::default()
    };
    Ok(BisectionResult {
        rho_z,
        iterations,
        counters,
    })
}

/// ρ_x(ρ_z) for a discrete i and continuous j:
/// Σ_k X_k ∫ φ(u_j) ∫_{Z_{k−1}}^{Z_k} x_j(ρu_i + √(1−ρ²)u_j) φ(u_i) du_i du_j,
/// outer m1-point Gauss-Hermite, inner m2-point Gauss-Legendre per segment.
pub struct MixedLinkIntegral<'a> {
    d: &'a DiscreteMarginal,
    c: &'a ContinuousMarginal,
    outer: (Vec<f64>, Vec<f64>),
    /// Per support point: the Legendre nodes and φ-weighted weights of its segment.
    segments: Vec<(f64, Vec<(f64, f64)>)>,
    calls: Cell<u64>,
}

impl<'a> MixedLinkIntegral<'a> {
    pub fn new(
        d: &'a DiscreteMarginal,
        c: &'a ContinuousMarginal,
        m1: usize,
        m2: usize,
    ) -> Result<Self> {
        let rule = cached_gauss_hermite(m1)?;
        let cuts = &d.thresholds().z_cuts;
        let mut segments = Vec::new();
        for (k, &x) in d.support().iter().enumerate() {
            let a = cuts[k].max(-SEGMENT_TRUNCATION);
            let b = cuts[k + 1].min(SEGMENT_TRUNCATION);
            if !(a < b) {
                continue;
            }
            let gl = gauss_legendre_rule(m2, a, b)?;
            let pts = gl
                .iter()
                .map(|(t, w)| (t, w * crate::special::std_normal_pdf(t)))
                .collect();
            segments.push((x, pts));
        }
        Ok(Self {
            d,
            c,
            outer: (rule.nodes().to_vec(), rule.weights().to_vec()),
            segments,
            calls: Cell::new(0),
        })
    }

    pub fn evaluate(&self, rho: f64) -> f64 {
        let s = (1.0 - rho * rho).sqrt();
        let mut e = 0.0;
        let mut calls = 0u64;
        for (x, pts) in &self.segments {
            let mut seg = 0.0;
            for (&uj, &wj) in self.outer.0.iter().zip(&self.outer.1) {
                let inner: f64 = pts
                    .iter()
                    .map(|&(t, w)| w * self.c.transform(rho * t + s * uj))
                    .sum();
                seg += wj * inner;
                calls += pts.len() as u64;
            }
            e += x * seg;
        }
        self.calls.set(self.calls.get() + calls);
        (e - self.d.mean() * self.c.mean()) / (self.d.std() * self.c.std())
    }

    pub fn quantile_calls(&self) -> u64 {
        self.calls.get()
    }
}

/// One discrete and one continuous marginal, in either order.
pub fn bisection_mixed(
    a: &Marginal,
    b: &Marginal,
    rho_x: f64,
    m1: usize,
    m2: usize,
    epsilon: f64,
) -> Result<BisectionResult> {
    let (d, c) = match (a, b) {
        (Marginal::Discrete(d), Marginal::Continuous(c))
        | (Marginal::Continuous(c), Marginal::Discrete(d)) => (d, c),
        _ => {
            return Err(Error::Input(
                "the mixed bisection needs one discrete and one continuous marginal".into(),
            ))
        }
    };
    let integral = MixedLinkIntegral::new(d, c, m1, m2)?;
    let (rho_z, iterations) = bisect(rho_x, epsilon, |r| integral.evaluate(r))?;
    let counters = EvalCounters {
        quantile_calls: integral.quantile_calls(),
        ..Default::default()
    };
    Ok(BisectionResult {
        rho_z,
        iterations,
        counters,
    })
}

/// Bisection with the baseline matching the marginal kinds, using the
/// reference rule sizes (m = m1 = m2 = 11).
pub fn bisection_auto(
    mi: &Marginal,
    mj: &Marginal,
    rho_x: f64,
    epsilon: f64,
) -> Result<BisectionResult> {
    match (mi, mj) {
        (Marginal::Continuous(a), Marginal::Continuous(b)) => {
            bisection_continuous(a, b, rho_x, 11, epsilon)
        }
        (Marginal::Discrete(a), Marginal::Discrete(b)) => bisection_discrete(a, b, rho_x, epsilon),
        _ => bisection_mixed(mi, mj, rho_x, 11, 11, epsilon),
    }
}

/// Builds the degree-n link while counting work: every transform
/// evaluation for continuous marginals and every He·φ row for discrete
/// thresholds. Analytic expansions are bypassed when counting quantiles.
pub fn polynomial_route_counted(
    mi: &Marginal,
    mj: &Marginal,
    n: usize,
    opts: &BuildOptions,
) -> Result<(LinkPolynomial, EvalCounters)> {
    let mut counters = EvalCounters::default();
    let proj = |m: &Marginal, counters: &mut EvalCounters| -> Result<Vec<f64>> {
        match m {
            Marginal::Continuous(c) => {
                let mut calls = 0u64;
                let s = quadrature_projections(
                    c.name(),
                    |z| {
                        calls += 1;
                        c.transform(z)
                    },
                    n,
                    opts.points(n),
                )?;
                counters.quantile_calls += calls;
                Ok(s)
            }
            Marginal::Discrete(d) => {
                let finite = d
                    .thresholds()
                    .interior()
                    .iter()
                    .filter(|z| z.is_finite())
                    .count() as u64;
                counters.hermite_and_pdf_calls += finite * n as u64;
                projections(m, n, opts)
            }
        }
    };
    let si = proj(mi, &mut counters)?;
    let sj = proj(mj, &mut counters)?;
    let meta = LinkMeta {
        labels: vec![mi.name().to_string(), mj.name().to_string()],
        quadrature_points: Some(opts.points(n)),
        warnings: Vec::new(),
    };
    let p = link_from_projections(
        &si,
        &sj,
        (mi.mean(), mi.std()),
        (mj.mean(), mj.std()),
        route_for(mi, mj),
        meta,
    );
    Ok((p, counters))
}
