use super::{ContinuousFamily, ContinuousMarginal, DiscreteMarginal};
use crate::error::{Error, Result};
use crate::special::{cached_gauss_hermite, hermite_phi_row, hermite_values, MAX_HERMITE_DEGREE};

/// Coefficients a_k of x(z) = Σ a_k He_k(z).
#[derive(Debug, Clone, PartialEq)]
pub struct HermiteCoefficients {
    pub a: Vec<f64>,
    /// Gauss-Hermite points used; 0 when the analytic expansion was taken.
    pub quadrature_points: usize,
}

impl HermiteCoefficients {
    pub fn degree(&self) -> usize {
        self.a.len() - 1
    }

    /// Σ_{k≥1} k!·a_k², the variance captured by the truncated series.
    pub fn captured_variance(&self) -> f64 {
        let mut fact = 1.0;
        let mut total = 0.0;
        for (k, a) in self.a.iter().enumerate().skip(1) {
            fact *= k as f64;
            total += fact * a * a;
        }
        total
    }
}

/// a_k = (1/k!)·∫ He_k(z)·F⁻¹(Φ(z))·φ(z) dz for k = 0..=n. Uniform, normal
/// and lognormal marginals use their exact expansions; everything else an
/// m-point Gauss-Hermite rule with m > n.
pub fn hermite_coefficients(
    m: &ContinuousMarginal,
    n: usize,
    rule_points: usize,
) -> Result<HermiteCoefficients> {
    if rule_points <= n {
        return Err(Error::config(format!(
            "{rule_points} quadrature points cannot resolve degree {n}; need more than {n}"
        )));
    }
    let (raw, quadrature_points) = match m.analytic_projections(n)? {
        Some(raw) => (raw, 0),
        None => (m.quadrature_projections(n, rule_points)?, rule_points),
    };
    Ok(HermiteCoefficients {
        a: divide_factorials(raw),
        quadrature_points,
    })
}

fn divide_factorials(mut raw: Vec<f64>) -> Vec<f64> {
    let mut inv_fact = 1.0;
    for (k, v) in raw.iter_mut().enumerate().skip(1) {
        inv_fact /= k as f64;
        *v *= inv_fact;
    }
    raw
}

fn check_degree(n: usize) -> Result<()> {
    if n > MAX_HERMITE_DEGREE {
        return Err(Error::config(format!(
            "degree {n} exceeds the Hermite cap {MAX_HERMITE_DEGREE}"
        )));
    }
    Ok(())
}

/// Raw projections S_k = Σ_j w_j·He_k(z_j)·x(z_j), k = 0..=n, over an
/// m-point Gauss-Hermite rule. Every node is passed to `transform` exactly
/// once.
pub fn quadrature_projections(
    name: &str,
    mut transform: impl FnMut(f64) -> f64,
    n: usize,
    points: usize,
) -> Result<Vec<f64>> {
    check_degree(n)?;
    let rule = cached_gauss_hermite(points)?;
    let mut he = vec![0.0; n + 1];
    let mut s = vec![0.0; n + 1];
    for (z, w) in rule.iter() {
        let x = transform(z);
        if !x.is_finite() {
            return Err(Error::Marginal {
                name: name.to_string(),
                node: z,
                value: x,
            });
        }
        hermite_values(z, &mut he);
        for (acc, h) in s.iter_mut().zip(&he) {
            *acc += w * h * x;
        }
    }
    Ok(s)
}

impl ContinuousMarginal {
    /// S_k = k!·a_k from the exact expansion, when the family has one.
    pub(crate) fn analytic_projections(&self, n: usize) -> Result<Option<Vec<f64>>> {
        check_degree(n)?;
        let mut s = vec![0.0; n + 1];
        match self.family() {
            ContinuousFamily::Normal01 => {
                if n >= 1 {
                    s[1] = 1.0;
                }
            }
            ContinuousFamily::LogNormal { mu, sigma } => {
                // e^{μ+σz} = e^{μ+σ²/2} Σ σ^k He_k(z) / k!
                let mut v = (mu + 0.5 * sigma * sigma).exp();
                for sk in s.iter_mut() {
                    *sk = v;
                    v *= sigma;
                }
            }
            ContinuousFamily::Uniform01 => {
                // Φ(z) = 1/2 + Σ_n (−1)^n He_{2n+1}(z) / (√(4π)(2n+1)4^n n!)
                s[0] = 0.5;
                let mut k = 1;
                let mut nn = 0u32;
                // (2n+1)! / (4^n n!), built up incrementally.
                let mut ratio = 1.0;
                while k <= n {
                    let sign = if nn % 2 == 0 { 1.0 } else { -1.0 };
                    s[k] = sign * ratio / ((4.0 * std::f64::consts::PI).sqrt() * k as f64);
                    nn += 1;
                    ratio *= (2 * nn) as f64 * (2 * nn + 1) as f64 / (4.0 * nn as f64);
                    k += 2;
                }
            }
            ContinuousFamily::Beta { .. } | ContinuousFamily::Custom(_) => return Ok(None),
        }
        Ok(Some(s))
    }

    pub(crate) fn quadrature_projections(&self, n: usize, points: usize) -> Result<Vec<f64>> {
        quadrature_projections(self.name(), |z| self.transform(z), n, points)
    }
}

impl DiscreteMarginal {
    /// S_0 = μ and, for k ≥ 1, S_k = Σ_k X_k·[He_{k−1}φ(Z_{k−1}) − He_{k−1}φ(Z_k)],
    /// summed by parts as Σ_c (X_{c+1} − X_c)·He_{k−1}(Z_c)φ(Z_c) over the
    /// interior cuts. Infinite cuts contribute nothing.
    pub(crate) fn projections(&self, n: usize) -> Result<Vec<f64>> {
        check_degree(n)?;
        let mut s = vec![0.0; n + 1];
        s[0] = self.mean();
        if n == 0 {
            return Ok(s);
        }
        let mut row = vec![0.0; n];
        let support = self.support();
        for (c, &z) in self.thresholds().interior().iter().enumerate() {
            if !z.is_finite() {
                continue;
            }
            hermite_phi_row(z, &mut row);
            let jump = support[c + 1] - support[c];
            for (acc, h) in s[1..].iter_mut().zip(&row) {
                *acc += jump * h;
            }
        }
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::marginal::{make_builtin, Builtin, Marginal};

    fn cont(b: Builtin) -> ContinuousMarginal {
        match make_builtin(b).unwrap() {
            Marginal::Continuous(m) => m,
            Marginal::Discrete(_) => unreachable!(),
        }
    }

    #[test]
    fn spec_examples() {
        let n01 = cont(Builtin::Normal01);
        assert_eq!(
            hermite_coefficients(&n01, 5, 6).unwrap().a,
            vec![0.0, 1.0, 0.0, 0.0, 0.0, 0.0]
        );

        let ln = cont(Builtin::LogNormal {
            mu: 0.0,
            sigma: 1.0,
        });
        let a = hermite_coefficients(&ln, 3, 4).unwrap().a;
        let e = 0.5f64.exp();
        for (got, want) in a.iter().zip([e, e, e / 2.0, e / 6.0]) {
            assert!((got - want).abs() < 1e-15);
        }

        let u = cont(Builtin::Uniform01);
        let a = hermite_coefficients(&u, 1, 2).unwrap().a;
        assert_eq!(a[0], 0.5);
        assert!((a[1] - 0.282_094_791_773_878_14).abs() < 1e-15);
    }

    #[test]
    fn needs_more_points_than_degree() {
        let u = cont(Builtin::Uniform01);
        assert!(matches!(
            hermite_coefficients(&u, 5, 5),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            hermite_coefficients(&u, 61, 80),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn quadrature_matches_analytic_expansions() {
        for b in [
            Builtin::Uniform01,
            Builtin::LogNormal {
                mu: 0.0,
                sigma: 1.0,
            },
            Builtin::Normal01,
        ] {
            let m = cont(b);
            let exact = divide_factorials(m.analytic_projections(15).unwrap().unwrap());
            let quad = divide_factorials(m.quadrature_projections(15, 40).unwrap());
            for k in 0..=15 {
                assert!(
                    (quad[k] - exact[k]).abs() <= 1e-10,
                    "{b:?} k = {k}: {} vs {}",
                    quad[k],
                    exact[k]
                );
            }
        }
    }

    #[test]
    fn mean_and_parseval() {
        for b in [
            Builtin::Uniform01,
            Builtin::Normal01,
            Builtin::LogNormal {
                mu: 0.0,
                sigma: 1.0,
            },
            Builtin::LogNormal {
                mu: 0.3,
                sigma: 0.5,
            },
            Builtin::Beta {
                alpha: 2.0,
                beta: 3.0,
            },
            Builtin::Beta {
                alpha: 0.5,
                beta: 0.5,
            },
        ] {
            let m = cont(b);
            let c = hermite_coefficients(&m, 15, 40).unwrap();
            let q = divide_factorials(m.quadrature_projections(15, 40).unwrap());
            assert!((c.a[0] - m.mean()).abs() < 1e-8, "{b:?}");
            assert!((q[0] - m.mean()).abs() < 1e-8, "{b:?}");
            let var = m.std() * m.std();
            assert!((c.captured_variance() - var).abs() <= 0.01 * var, "{b:?}");
        }
    }

    #[test]
    fn discrete_projection_is_corner_sum() {
        let m = make_builtin(Builtin::BernoulliHalf).unwrap();
        let s = m.as_discrete().unwrap().projections(4).unwrap();
        let phi0 = crate::special::std_normal_pdf(0.0);
        assert_eq!(s[0], 0.5);
        assert!((s[1] - phi0).abs() < 1e-16);
        assert_eq!(s[2], 0.0);
        assert!((s[3] + phi0).abs() < 1e-16);
        assert_eq!(s[4], 0.0);
    }

    #[test]
    fn bad_transform_reports_node() {
        let q = |p: f64| if p < 1e-12 { f64::NAN } else { p };
        let m = ContinuousMarginal::from_quantile("cut", q, 0.5, 0.3).unwrap();
        match m.quadrature_projections(3, 200) {
            Err(Error::Marginal { name, node, value }) => {
                assert_eq!(name, "cut");
                assert!(node < -7.0 && value.is_nan());
            }
            other => panic!("expected a marginal error, got {other:?}"),
        }
    }
}
