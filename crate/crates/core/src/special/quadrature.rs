use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

pub const MAX_RULE_POINTS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadratureKind {
    /// Weight φ(z) on the real line.
    GaussHermiteProbabilist,
    /// Unit weight on a finite interval.
    GaussLegendre,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    kind: QuadratureKind,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn kind(&self) -> QuadratureKind {
        self.kind
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn point_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    /// Σ wᵢ f(xᵢ).
    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.iter().map(|(x, w)| w * f(x)).sum()
    }
}

/// m-point Gauss-Hermite rule for ∫ f(z) φ(z) dz.
pub fn gauss_hermite_rule(m: usize) -> Result<QuadratureRule> {
    check_points(m)?;
    let (nodes, weights) = golub_welsch(m, 1.0, |k| (k as f64).sqrt());
    Ok(QuadratureRule {
        kind: QuadratureKind::GaussHermiteProbabilist,
        nodes,
        weights,
    })
}

/// m-point Gauss-Legendre rule on [a, b].
pub fn gauss_legendre_rule(m: usize, a: f64, b: f64) -> Result<QuadratureRule> {
    check_points(m)?;
    if !(a.is_finite() && b.is_finite()) || a >= b {
        return Err(Error::domain(format!(
            "Gauss-Legendre interval [{a}, {b}] must be finite with a < b"
        )));
    }
    let (mut nodes, mut weights) = golub_welsch(m, 2.0, |k| {
        let k = k as f64;
        k / (4.0 * k * k - 1.0).sqrt()
    });
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    nodes.iter_mut().for_each(|x| *x = mid + half * *x);
    weights.iter_mut().for_each(|w| *w *= half);
    Ok(QuadratureRule {
        kind: QuadratureKind::GaussLegendre,
        nodes,
        weights,
    })
}

/// Shared Gauss-Hermite rules; construction is the expensive part of most
/// projections, and rule sizes repeat heavily.
pub(crate) fn cached_gauss_hermite(m: usize) -> Result<Arc<QuadratureRule>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<QuadratureRule>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(rule) = cache.lock().unwrap().get(&m) {
        return Ok(rule.clone());
    }
    let rule = Arc::new(gauss_hermite_rule(m)?);
    cache.lock().unwrap().insert(m, rule.clone());
    Ok(rule)
}

fn check_points(m: usize) -> Result<()> {
    if m == 0 || m > MAX_RULE_POINTS {
        return Err(Error::config(format!(
            "quadrature size {m} is outside 1..={MAX_RULE_POINTS}"
        )));
    }
    Ok(())
}

/// Nodes from the eigenvalues of the symmetric Jacobi matrix (zero diagonal,
/// off-diagonals `beta(1..m)`), polished by Newton on the orthonormal
/// recurrence. Weights come from the Christoffel function 1 / Σ p_k(x)²,
/// which keeps tail weights accurate to full relative precision.
fn golub_welsch(m: usize, mass: f64, beta: impl Fn(usize) -> f64) -> (Vec<f64>, Vec<f64>) {
    let betas: Vec<f64> = (0..=m)
        .map(|k| if k == 0 { 0.0 } else { beta(k) })
        .collect();

    let mut jacobi = DMatrix::<f64>::zeros(m, m);
    for k in 1..m {
        jacobi[(k - 1, k)] = betas[k];
        jacobi[(k, k - 1)] = betas[k];
    }
    let mut nodes: Vec<f64> = SymmetricEigen::new(jacobi)
        .eigenvalues
        .iter()
        .copied()
        .collect();
    nodes.sort_by(|a, b| a.total_cmp(b));

    let p0 = 1.0 / mass.sqrt();
    // (p_{m}(x), p'_{m}(x), Σ_{k<m} p_k(x)²)
    let eval = |x: f64| {
        let (mut p_prev, mut p) = (0.0, p0);
        let (mut d_prev, mut d) = (0.0, 0.0);
        let mut sum_sq = 0.0;
        for k in 0..m {
            sum_sq += p * p;
            let p_next = (x * p - betas[k] * p_prev) / betas[k + 1];
            let d_next = (p + x * d - betas[k] * d_prev) / betas[k + 1];
            p_prev = p;
            p = p_next;
            d_prev = d;
            d = d_next;
        }
        (p, d, sum_sq)
    };

    let mut weights = vec![0.0; m];
    for (x, w) in nodes.iter_mut().zip(weights.iter_mut()) {
        for _ in 0..3 {
            let (p, d, _) = eval(*x);
            if d == 0.0 || !d.is_finite() {
                break;
            }
            let step = p / d;
            *x -= step;
            if step.abs() <= 1e-16 * x.abs().max(1.0) {
                break;
            }
        }
        *w = 1.0 / eval(*x).2;
    }

    // Exact symmetry about 0.
    for i in 0..m / 2 {
        let j = m - 1 - i;
        let x = 0.5 * (nodes[j] - nodes[i]);
        let w = 0.5 * (weights[i] + weights[j]);
        nodes[i] = -x;
        nodes[j] = x;
        weights[i] = w;
        weights[j] = w;
    }
    if m % 2 == 1 {
        nodes[m / 2] = 0.0;
    }
    (nodes, weights)
}
