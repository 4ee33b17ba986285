//! Bivariate standard normal CDF after Genz's BVND (Drezner–Wesolowsky with
//! double-precision modifications for |ρ| close to 1).

use std::f64::consts::PI;

use super::normal::std_normal_sf;
use crate::error::{Error, Result};

const TWO_PI: f64 = 2.0 * PI;
const SQRT_TWO_PI: f64 = 2.506_628_274_631_000_5;

// Gauss-Legendre (weight, abscissa) half-tables on [-1, 1]; each abscissa x is
// used at both 1 - x and 1 + x after the change of variables.
#[allow(clippy::excessive_precision)]
const GL6: [(f64, f64); 3] = [
    (0.1713244923791705e+00, -0.9324695142031522e+00),
    (0.3607615730481384e+00, -0.6612093864662647e+00),
    (0.4679139345726904e+00, -0.2386191860831970e+00),
];

#[allow(clippy::excessive_precision)]
const GL12: [(f64, f64); 6] = [
    (0.4717533638651177e-01, -0.9815606342467191e+00),
    (0.1069393259953183e+00, -0.9041172563704750e+00),
    (0.1600783285433464e+00, -0.7699026741943050e+00),
    (0.2031674267230659e+00, -0.5873179542866171e+00),
    (0.2334925365383547e+00, -0.3678314989981802e+00),
    (0.2491470458134029e+00, -0.1252334085114692e+00),
];

#[allow(clippy::excessive_precision)]
const GL20: [(f64, f64); 10] = [
    (0.1761400713915212e-01, -0.9931285991850949e+00),
    (0.4060142980038694e-01, -0.9639719272779138e+00),
    (0.6267204833410906e-01, -0.9122344282513259e+00),
    (0.8327674157670475e-01, -0.8391169718222188e+00),
    (0.1019301198172404e+00, -0.7463319064601508e+00),
    (0.1181945319615184e+00, -0.6360536807265150e+00),
    (0.1316886384491766e+00, -0.5108670019508271e+00),
    (0.1420961093183821e+00, -0.3737060887154196e+00),
    (0.1491729864726037e+00, -0.2277858511416451e+00),
    (0.1527533871307259e+00, -0.7652652113349733e-01),
];

/// P(Z₁ ≤ z1, Z₂ ≤ z2) for standard normals with correlation `rho`.
///
/// Infinite limits reduce to the univariate CDF. `|rho| >= 1` is rejected:
/// the degenerate copula is not supported.
pub fn bivariate_normal_cdf(z1: f64, z2: f64, rho: f64) -> Result<f64> {
    if rho.is_nan() || rho.abs() >= 1.0 {
        return Err(Error::domain(format!(
            "correlation {rho} must lie strictly inside (-1, 1)"
        )));
    }
    if z1.is_nan() || z2.is_nan() {
        return Err(Error::domain("bivariate normal limits must not be NaN"));
    }
    Ok(bvn_cdf(z1, z2, rho))
}

#[inline]
pub(crate) fn bvn_cdf(z1: f64, z2: f64, rho: f64) -> f64 {
    bvnd(-z1, -z2, rho).clamp(0.0, 1.0)
}

/// P(X > h, Y > k).
fn bvnd(h: f64, k: f64, r: f64) -> f64 {
    if h == f64::INFINITY || k == f64::INFINITY {
        return 0.0;
    }
    if h == f64::NEG_INFINITY {
        return std_normal_sf(k);
    }
    if k == f64::NEG_INFINITY {
        return std_normal_sf(h);
    }
    if r == 0.0 {
        return std_normal_sf(h) * std_normal_sf(k);
    }
    if r.abs() < 0.925 {
        return bvnd_moderate(h, k, r);
    }
    if r > 0.0 {
        bvnd_high(h, k, r)
    } else {
        // P(X > h, Y > k) = P(Y > k) - P(-X > -h, Y > k), and (-X, Y) has
        // correlation -r > 0.925.
        std_normal_sf(k) - bvnd_high(-h, k, -r)
    }
}

fn bvnd_moderate(h: f64, k: f64, r: f64) -> f64 {
    let quad: &[(f64, f64)] = if r.abs() < 0.3 {
        &GL6
    } else if r.abs() < 0.75 {
        &GL12
    } else {
        &GL20
    };
    let hk = h * k;
    let hs = 0.5 * (h * h + k * k);
    let asr = 0.5 * libm::asin(r);
    let mut bvn = 0.0;
    for &(w, x) in quad {
        for sign in [-1.0, 1.0] {
            let sn = libm::sin(asr * (sign * x + 1.0));
            bvn += w * libm::exp((sn * hk - hs) / (1.0 - sn * sn));
        }
    }
    bvn * asr / TWO_PI + std_normal_sf(h) * std_normal_sf(k)
}

// 0.925 <= r < 1
fn bvnd_high(h: f64, k: f64, r: f64) -> f64 {
    let hk = h * k;
    let a_s = (1.0 - r) * (1.0 + r);
    let a = a_s.sqrt();
    let b_s = (h - k) * (h - k);
    let c = (4.0 - hk) / 8.0;
    let d = (12.0 - hk) / 16.0;

    let mut bvn = 0.0;
    let asr = -0.5 * (b_s / a_s + hk);
    if asr > -100.0 {
        bvn = a
            * libm::exp(asr)
            * (1.0 - c * (b_s - a_s) * (1.0 - d * b_s / 5.0) / 3.0 + c * d * a_s * a_s / 5.0);
    }
    if -hk < 100.0 {
        let b = b_s.sqrt();
        bvn -= libm::exp(-0.5 * hk)
            * SQRT_TWO_PI
            * std_normal_sf(b / a)
            * b
            * (1.0 - c * b_s * (1.0 - d * b_s / 5.0) / 3.0);
    }
    let half_a = 0.5 * a;
    for &(w, x) in &GL20 {
        for sign in [-1.0, 1.0] {
            let xs = half_a * (sign * x + 1.0);
            let xs2 = xs * xs;
            let rs = (1.0 - xs2).sqrt();
            let asr = -0.5 * (b_s / xs2 + hk);
            if asr > -100.0 {
                bvn += half_a
                    * w
                    * libm::exp(asr)
                    * (libm::exp(-hk * (1.0 - rs) / (2.0 * (1.0 + rs))) / rs
                        - (1.0 + c * xs2 * (1.0 + d * xs2)));
            }
        }
    }
    -bvn / TWO_PI + std_normal_sf(h.max(k))
}
