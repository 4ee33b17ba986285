use statrs::function::beta::beta_reg;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Largest a + b for which the closed-form binomial-sum CDF is used.
const INTEGER_SUM_LIMIT: f64 = 120.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct BetaDist {
    a: f64,
    b: f64,
    ln_beta: f64,
    integer: bool,
}

impl BetaDist {
    pub(crate) fn new(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(Error::domain(format!(
                "beta parameters must be positive, got ({a}, {b})"
            )));
        }
        let integer = a.fract() == 0.0 && b.fract() == 0.0 && a + b <= INTEGER_SUM_LIMIT;
        Ok(Self {
            a,
            b,
            ln_beta: ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b),
            integer,
        })
    }

    pub(crate) fn mean(&self) -> f64 {
        self.a / (self.a + self.b)
    }

    pub(crate) fn std(&self) -> f64 {
        let s = self.a + self.b;
        (self.a * self.b / (s * s * (s + 1.0))).sqrt()
    }

    fn swapped(&self) -> Self {
        Self {
            a: self.b,
            b: self.a,
            ..*self
        }
    }

    pub(crate) fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x >= 1.0 {
            return 1.0;
        }
        if self.integer {
            // I_x(a, b) = P(Bin(a+b−1, x) ≥ a); every term is positive, so
            // small probabilities keep full relative precision.
            let n = (self.a + self.b - 1.0) as u32;
            let lx = x.ln();
            let l1x = (-x).ln_1p();
            let mut sum = 0.0;
            for j in (self.a as u32)..=n {
                sum += (ln_choose(n, j) + j as f64 * lx + (n - j) as f64 * l1x).exp();
            }
            sum.min(1.0)
        } else {
            beta_reg(self.a, self.b, x)
        }
    }

    pub(crate) fn pdf(&self, x: f64) -> f64 {
        if x <= 0.0 || x >= 1.0 {
            return 0.0;
        }
        ((self.a - 1.0) * x.ln() + (self.b - 1.0) * (-x).ln_1p() - self.ln_beta).exp()
    }

    /// Inverse CDF; probabilities above one half are mapped through the
    /// mirrored distribution so the answer is accurate near 1 as well.
    pub(crate) fn quantile(&self, p: f64) -> f64 {
        if p > 0.5 {
            1.0 - self.swapped().lower_quantile(1.0 - p)
        } else {
            self.lower_quantile(p)
        }
    }

    /// Quantile at the upper-tail probability q = 1 − p.
    pub(crate) fn upper_quantile(&self, q: f64) -> f64 {
        if q > 0.5 {
            self.lower_quantile(1.0 - q)
        } else {
            1.0 - self.swapped().lower_quantile(q)
        }
    }

    /// Bracketed Newton with a bisection fallback.
    fn lower_quantile(&self, p: f64) -> f64 {
        if p <= 0.0 {
            return 0.0;
        }
        if p >= 1.0 {
            return 1.0;
        }
        // Leading-order small-p behaviour: F(x) ≈ x^a / (a·B(a, b)).
        let tail_guess = ((p.ln() + self.a.ln() + self.ln_beta) / self.a).exp();
        let mut x = if tail_guess < 0.5 * self.mean() {
            tail_guess
        } else {
            self.mean()
        };
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        for _ in 0..1200 {
            let f = self.cdf(x) - p;
            if f == 0.0 {
                return x;
            }
            if f < 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            let d = self.pdf(x);
            let mut next = if d > 0.0 { x - f / d } else { f64::NAN };
            if !(next > lo && next < hi) {
                next = if lo > 0.0 && hi / lo > 16.0 {
                    (lo * hi).sqrt()
                } else {
                    0.5 * (lo + hi)
                };
                if lo == 0.0 {
                    next = 0.5 * hi;
                }
            }
            if (next - x).abs() <= 4.0 * f64::EPSILON * x.abs() || next == lo || next == hi {
                return next;
            }
            x = next;
        }
        x
    }
}

fn ln_choose(n: u32, k: u32) -> f64 {
    let k = k.min(n - k);
    (0..k).map(|i| ((n - i) as f64 / (i + 1) as f64).ln()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments_and_cdf_closed_form() {
        let d = BetaDist::new(2.0, 3.0).unwrap();
        assert!((d.mean() - 0.4).abs() < 1e-15);
        assert!((d.std() - 0.2).abs() < 1e-15);
        // F(x) = 6x² − 8x³ + 3x⁴ for Beta(2, 3)
        for &x in &[1e-9, 0.01, 0.2, 0.5, 0.77, 0.999] {
            let exact = x * x * (6.0 - 8.0 * x + 3.0 * x * x);
            assert!((d.cdf(x) - exact).abs() <= 1e-15 + 1e-13 * exact, "x = {x}");
        }
    }

    #[test]
    fn quantile_inverts_cdf() {
        for (a, b) in [
            (2.0, 3.0),
            (0.5, 0.5),
            (2.5, 1.3),
            (1.0, 1.0),
            (7.0, 2.0),
            (0.3, 4.0),
        ] {
            let d = BetaDist::new(a, b).unwrap();
            for i in 1..200 {
                let p = i as f64 / 200.0;
                let q = d.quantile(p);
                assert!((d.cdf(q) - p).abs() <= 1e-12, "a={a} b={b} p={p}");
            }
            for p in [1e-30, 1e-15, 1e-8] {
                let q = d.quantile(p);
                assert!((d.cdf(q) / p - 1.0).abs() < 1e-9, "a={a} b={b} p={p:e}");
            }
            for q in [1e-4, 0.3, 0.7] {
                let u = d.upper_quantile(q);
                let sf = d.swapped().cdf(1.0 - u);
                assert!((sf / q - 1.0).abs() < 1e-6, "upper a={a} b={b} q={q:e}");
            }
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(BetaDist::new(0.0, 1.0).is_err());
        assert!(BetaDist::new(1.0, f64::NAN).is_err());
    }
}
