use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use serde::{Deserialize, Serialize};

use super::{LinkMeta, LinkPolynomial, Route};
use crate::error::{Error, Result};
use crate::marginal::{ContinuousFamily, Marginal};
use crate::special::{std_normal_cdf, std_normal_pdf};

/// Marginal pairs whose link has an elementary closed form. Lognormal
/// cases carry the log-scale σ; the location μ does not affect the link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "case", rename_all = "snake_case")]
pub enum ClosedFormCase {
    /// I: ρ_x = (6/π)·asin(ρ_z/2)
    UniformUniform,
    /// II: ρ_x = (2√3/π)·asin(ρ_z/√2)
    UniformBernoulli,
    /// III: ρ_x = √(3/π)·ρ_z
    UniformNormal,
    /// IV: ρ_x = (2√3·Φ(σρ_z/√2) − √3) / √(e^{σ²} − 1)
    UniformLognormal { sigma: f64 },
    /// V: ρ_x = (2/π)·asin(ρ_z)
    BernoulliBernoulli,
    /// VI: ρ_x = √(2/π)·ρ_z
    BernoulliNormal,
    /// VII: ρ_x = (2Φ(σρ_z) − 1) / √(e^{σ²} − 1)
    BernoulliLognormal { sigma: f64 },
    /// VIII: ρ_x = σρ_z / √(e^{σ²} − 1)
    NormalLognormal { sigma: f64 },
    /// IX: ρ_x = (e^{σ₁σ₂ρ_z} − 1) / √((e^{σ₁²} − 1)(e^{σ₂²} − 1))
    LognormalLognormal { sigma1: f64, sigma2: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    XToZ,
    ZToX,
}

#[derive(Clone, Copy)]
enum Shape {
    Uniform,
    Bernoulli,
    Normal,
    Lognormal(f64),
}

fn shape(m: &Marginal) -> Option<Shape> {
    match m {
        Marginal::Continuous(c) => match c.family() {
            ContinuousFamily::Uniform01 => Some(Shape::Uniform),
            ContinuousFamily::Normal01 => Some(Shape::Normal),
            ContinuousFamily::LogNormal { sigma, .. } => Some(Shape::Lognormal(*sigma)),
            _ => None,
        },
        // Any symmetric two-point law is an affine image of Bernoulli(1/2).
        Marginal::Discrete(d) => {
            (d.probs().len() == 2 && (d.probs()[0] - 0.5).abs() < 1e-12).then_some(Shape::Bernoulli)
        }
    }
}

fn em1(s: f64) -> f64 {
    (s * s).exp_m1()
}

/// Σ_n t_n c^{2n+1} ρ^{2n+1} with t_n = (2n)!/(4^n (n!)² (2n+1)): the series of asin(cρ).
fn asin_series(c: f64, scale: f64, b: &mut [f64]) {
    let mut t = 1.0;
    let mut n = 0;
    while 2 * n + 1 < b.len() {
        let k = 2 * n + 1;
        b[k] = scale * t / k as f64 * c.powi(k as i32);
        t *= (2 * n + 1) as f64 / (2 * n + 2) as f64;
        n += 1;
    }
}

/// Series of Φ(aρ) − 1/2 = φ(0)·Σ (−1)^n a^{2n+1} ρ^{2n+1} / (2^n n! (2n+1)).
fn cdf_series(a: f64, scale: f64, b: &mut [f64]) {
    let mut t = std_normal_pdf(0.0);
    let mut n = 0;
    while 2 * n + 1 < b.len() {
        let k = 2 * n + 1;
        b[k] = scale * t / k as f64 * a.powi(k as i32);
        n += 1;
        t *= -1.0 / (2.0 * n as f64);
    }
}

impl ClosedFormCase {
    /// Recognizes a closed-form pair in either order.
    pub fn detect(mi: &Marginal, mj: &Marginal) -> Option<Self> {
        use Shape::*;
        Some(match (shape(mi)?, shape(mj)?) {
            (Uniform, Uniform) => Self::UniformUniform,
            (Uniform, Bernoulli) | (Bernoulli, Uniform) => Self::UniformBernoulli,
            (Uniform, Normal) | (Normal, Uniform) => Self::UniformNormal,
            (Uniform, Lognormal(sigma)) | (Lognormal(sigma), Uniform) => {
                Self::UniformLognormal { sigma }
            }
            (Bernoulli, Bernoulli) => Self::BernoulliBernoulli,
            (Bernoulli, Normal) | (Normal, Bernoulli) => Self::BernoulliNormal,
            (Bernoulli, Lognormal(sigma)) | (Lognormal(sigma), Bernoulli) => {
                Self::BernoulliLognormal { sigma }
            }
            (Normal, Lognormal(sigma)) | (Lognormal(sigma), Normal) => {
                Self::NormalLognormal { sigma }
            }
            (Lognormal(sigma1), Lognormal(sigma2)) => Self::LognormalLognormal { sigma1, sigma2 },
            // Gaussian copula with normal margins: the identity, not one of the nine cases.
            (Normal, Normal) => return None,
        })
    }

    /// ρ_x = f(ρ_z).
    pub fn z_to_x(&self, rho_z: f64) -> f64 {
        match *self {
            Self::UniformUniform => 6.0 / PI * (rho_z / 2.0).asin(),
            Self::UniformBernoulli => 2.0 * 3f64.sqrt() / PI * (rho_z * FRAC_1_SQRT_2).asin(),
            Self::UniformNormal => (3.0 / PI).sqrt() * rho_z,
            Self::UniformLognormal { sigma } => {
                3f64.sqrt() * (2.0 * std_normal_cdf(sigma * rho_z * FRAC_1_SQRT_2) - 1.0)
                    / em1(sigma).sqrt()
            }
            Self::BernoulliBernoulli => 2.0 / PI * rho_z.asin(),
            Self::BernoulliNormal => (2.0 / PI).sqrt() * rho_z,
            Self::BernoulliLognormal { sigma } => {
                (2.0 * std_normal_cdf(sigma * rho_z) - 1.0) / em1(sigma).sqrt()
            }
            Self::NormalLognormal { sigma } => sigma * rho_z / em1(sigma).sqrt(),
            Self::LognormalLognormal { sigma1, sigma2 } => {
                (sigma1 * sigma2 * rho_z).exp_m1() / (em1(sigma1) * em1(sigma2)).sqrt()
            }
        }
    }

    /// ρ_z for a target ρ_x: explicit inverses where the link is an arcsine
    /// or linear, monotone bisection to 1e−12 otherwise.
    pub fn x_to_z(&self, rho_x: f64) -> Result<f64> {
        if !(-1.0..=1.0).contains(&rho_x) {
            return Err(Error::domain(format!(
                "rho_x = {rho_x} is not a correlation"
            )));
        }
        let (lo, hi) = (self.z_to_x(-1.0), self.z_to_x(1.0));
        if rho_x < lo || rho_x > hi {
            return Err(Error::Infeasible { rho_x, lo, hi });
        }
        let z = match *self {
            Self::UniformUniform => 2.0 * (PI / 6.0 * rho_x).sin(),
            Self::UniformBernoulli => SQRT_2 * (PI / (2.0 * 3f64.sqrt()) * rho_x).sin(),
            Self::UniformNormal => (PI / 3.0).sqrt() * rho_x,
            Self::BernoulliBernoulli => (PI / 2.0 * rho_x).sin(),
            Self::BernoulliNormal => (PI / 2.0).sqrt() * rho_x,
            _ => {
                let (mut a, mut b) = (-1.0_f64, 1.0_f64);
                while b - a > 1e-12 {
                    let mid = 0.5 * (a + b);
                    if self.z_to_x(mid) < rho_x {
                        a = mid;
                    } else {
                        b = mid;
                    }
                }
                0.5 * (a + b)
            }
        };
        Ok(z.clamp(-1.0, 1.0))
    }

    /// Taylor coefficients b_0..b_n of f around ρ_z = 0.
    pub fn taylor(&self, n: usize) -> Vec<f64> {
        let mut b = vec![0.0; n + 1];
        let linear = |b: &mut [f64], c: f64| {
            if b.len() > 1 {
                b[1] = c;
            }
        };
        match *self {
            Self::UniformUniform => asin_series(0.5, 6.0 / PI, &mut b),
            Self::UniformBernoulli => asin_series(FRAC_1_SQRT_2, 2.0 * 3f64.sqrt() / PI, &mut b),
            Self::UniformNormal => linear(&mut b, (3.0 / PI).sqrt()),
            Self::UniformLognormal { sigma } => cdf_series(
                sigma * FRAC_1_SQRT_2,
                2.0 * 3f64.sqrt() / em1(sigma).sqrt(),
                &mut b,
            ),
            Self::BernoulliBernoulli => asin_series(1.0, 2.0 / PI, &mut b),
            Self::BernoulliNormal => linear(&mut b, (2.0 / PI).sqrt()),
            Self::BernoulliLognormal { sigma } => {
                cdf_series(sigma, 2.0 / em1(sigma).sqrt(), &mut b)
            }
            Self::NormalLognormal { sigma } => linear(&mut b, sigma / em1(sigma).sqrt()),
            Self::LognormalLognormal { sigma1, sigma2 } => {
                let c = sigma1 * sigma2;
                let mut t = 1.0 / (em1(sigma1) * em1(sigma2)).sqrt();
                for (k, bk) in b.iter_mut().enumerate().skip(1) {
                    t *= c / k as f64;
                    *bk = t;
                }
            }
        }
        b
    }

    /// The degree-n Taylor truncation as a link polynomial.
    pub fn polynomial(&self, n: usize) -> LinkPolynomial {
        let meta = LinkMeta {
            labels: vec![format!("{self:?}")],
            ..Default::default()
        };
        LinkPolynomial::checked(self.taylor(n), Route::ClosedForm, meta)
    }

    pub fn all_with_sigma(sigma: f64) -> [Self; 9] {
        [
            Self::UniformUniform,
            Self::UniformBernoulli,
            Self::UniformNormal,
            Self::UniformLognormal { sigma },
            Self::BernoulliBernoulli,
            Self::BernoulliNormal,
            Self::BernoulliLognormal { sigma },
            Self::NormalLognormal { sigma },
            Self::LognormalLognormal {
                sigma1: sigma,
                sigma2: sigma,
            },
        ]
    }
}

pub fn closed_form(case: ClosedFormCase, direction: Direction, value: f64) -> Result<f64> {
    match direction {
        Direction::ZToX => {
            if !(-1.0..=1.0).contains(&value) {
                return Err(Error::domain(format!(
                    "rho_z = {value} is not a correlation"
                )));
            }
            Ok(case.z_to_x(value))
        }
        Direction::XToZ => case.x_to_z(value),
    }
}
