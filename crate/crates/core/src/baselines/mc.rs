use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::marginal::Marginal;
use crate::special::ppnd;

/// Fixed so results do not depend on the thread count.
const SHARDS: usize = 16;
const MAX_ORDER: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub rho_hat: f64,
    pub sample_count: u64,
    pub std_error: f64,
}

/// Open-interval uniform from the top 53 bits.
fn uniform(rng: &mut ChaCha20Rng) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Raw sums Σ a^p b^q for p + q ≤ 4, with a, b shifted by the marginal means.
type Sums = [[f64; MAX_ORDER + 1]; MAX_ORDER + 1];

fn shard_sums(mi: &Marginal, mj: &Marginal, rho: f64, n: u64, seed: u64, shard: u64) -> Sums {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(shard);
    let c = (1.0 - rho * rho).sqrt();
    let (mu_i, mu_j) = (mi.mean(), mj.mean());
    let mut s: Sums = [[0.0; MAX_ORDER + 1]; MAX_ORDER + 1];
    for _ in 0..n {
        let z1 = ppnd(uniform(&mut rng));
        let w = ppnd(uniform(&mut rng));
        let a = mi.transform(z1) - mu_i;
        let b = mj.transform(rho * z1 + c * w) - mu_j;
        let mut ap = 1.0;
        for row in s.iter_mut() {
            let mut t = ap;
            for (q, cell) in row.iter_mut().enumerate() {
                *cell += t;
                if q < MAX_ORDER {
                    t *= b;
                }
            }
            ap *= a;
        }
    }
    s
}

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |c, i| c * (n - i) as f64 / (i + 1) as f64)
}

/// Sample Pearson correlation of (F_i⁻¹(Φ(z₁)), F_j⁻¹(Φ(z₂))) for standard
/// normal pairs with correlation ρ_z, z₂ = ρz₁ + √(1−ρ²)w. Draws use
/// ChaCha20 in 16 independent streams; the standard error is the
/// delta-method (fourth-moment) one, valid for non-normal data.
pub fn mc_estimate(
    mi: &Marginal,
    mj: &Marginal,
    rho_z: f64,
    n_samples: u64,
    seed: u64,
) -> Result<McEstimate> {
    if !(rho_z > -1.0 && rho_z < 1.0) {
        return Err(Error::domain(format!(
            "rho_z = {rho_z} must lie strictly inside (-1, 1)"
        )));
    }
    if n_samples < 2 {
        return Err(Error::config("at least two samples are needed"));
    }
    let base = n_samples / SHARDS as u64;
    let extra = n_samples % SHARDS as u64;
    let parts: Vec<Sums> = (0..SHARDS as u64)
        .into_par_iter()
        .map(|k| shard_sums(mi, mj, rho_z, base + u64::from(k < extra), seed, k))
        .collect();
    let mut s: Sums = [[0.0; MAX_ORDER + 1]; MAX_ORDER + 1];
    for part in &parts {
        for p in 0..=MAX_ORDER {
            for q in 0..=MAX_ORDER {
                s[p][q] += part[p][q];
            }
        }
    }
    let n = n_samples as f64;
    let raw = |p: usize, q: usize| s[p][q] / n;
    let (ma, mb) = (raw(1, 0), raw(0, 1));
    // Central moment E[(a−ā)^p (b−b̄)^q] by binomial expansion of the raw ones.
    let central = |p: usize, q: usize| {
        let mut total = 0.0;
        for i in 0..=p {
            for j in 0..=q {
                total += binom(p, i)
                    * binom(q, j)
                    * (-ma).powi((p - i) as i32)
                    * (-mb).powi((q - j) as i32)
                    * raw(i, j);
            }
        }
        total
    };
    let (m20, m02, m11) = (central(2, 0), central(0, 2), central(1, 1));
    let rho_hat = m11 / (m20 * m02).sqrt();
    let (m40, m04, m22, m31, m13) = (
        central(4, 0),
        central(0, 4),
        central(2, 2),
        central(3, 1),
        central(1, 3),
    );
    let r2 = rho_hat * rho_hat;
    let var = r2 / 4.0 * (m40 / (m20 * m20) + m04 / (m02 * m02) + 2.0 * m22 / (m20 * m02))
        - rho_hat * (m31 / (m20.powf(1.5) * m02.sqrt()) + m13 / (m02.powf(1.5) * m20.sqrt()))
        + m22 / (m20 * m02);
    Ok(McEstimate {
        rho_hat,
        sample_count: n_samples,
        std_error: (var.max(0.0) / n).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::marginal::{make_builtin, Builtin};

    #[test]
    fn normal_pair_and_determinism() {
        let n = make_builtin(Builtin::Normal01).unwrap();
        let a = mc_estimate(&n, &n, 0.7, 200_000, 7).unwrap();
        let b = mc_estimate(&n, &n, 0.7, 200_000, 7).unwrap();
        assert_eq!(a.rho_hat.to_bits(), b.rho_hat.to_bits());
        assert!((a.rho_hat - 0.7).abs() < 4.0 * a.std_error);
        // Normal theory: (1 − ρ²)/√n.
        let normal_se = (1.0 - 0.49) / (200_000f64).sqrt();
        assert!((a.std_error / normal_se - 1.0).abs() < 0.05);
        let c = mc_estimate(&n, &n, 0.7, 200_000, 8).unwrap();
        assert_ne!(a.rho_hat, c.rho_hat);
    }

    #[test]
    fn lognormal_pair() {
        let ln = make_builtin(Builtin::LogNormal {
            mu: 0.0,
            sigma: 1.0,
        })
        .unwrap();
        let e = std::f64::consts::E;
        let want = (0.5f64.exp() - 1.0) / (e - 1.0);
        let r = mc_estimate(&ln, &ln, 0.5, 400_000, 11).unwrap();
        assert!((r.rho_hat - want).abs() < 0.01, "{r:?}");
    }

    #[test]
    fn rejects_degenerate() {
        let n = make_builtin(Builtin::Normal01).unwrap();
        assert!(mc_estimate(&n, &n, 1.0, 100, 1).is_err());
        assert!(mc_estimate(&n, &n, 0.1, 1, 1).is_err());
    }
}
