//! Mapping a whole target correlation matrix into normal space.

use nalgebra::{Cholesky, DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, InfeasibleEntry, Result};
use crate::marginal::{Marginal, MarginalSpec};
use crate::solve::{PairLink, PairOptions, SolveMethod};

pub const EIGEN_FLOOR: f64 = 1e-8;

/// Marginals plus the target matrix R_X (key `"R_X"` in JSON).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixSpec {
    pub marginals: Vec<MarginalSpec>,
    #[serde(rename = "R_X", alias = "r_x")]
    pub r_x: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairEntry {
    pub i: usize,
    pub j: usize,
    pub rho_x: f64,
    pub rho_z: f64,
    pub method: SolveMethod,
    pub degree: Option<usize>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixReport {
    pub r_z: Vec<Vec<f64>>,
    /// R_Z before any repair.
    pub r_z_raw: Vec<Vec<f64>>,
    pub repaired: bool,
    pub max_perturbation: f64,
    pub min_eigenvalue: f64,
    pub pairs: Vec<PairEntry>,
}

/// Square, symmetric within 1e−12, unit diagonal, entries in [−1, 1].
pub fn validate_correlation(r: &[Vec<f64>]) -> Result<()> {
    let m = r.len();
    if m == 0 || r.iter().any(|row| row.len() != m) {
        return Err(Error::Input(
            "correlation matrix must be square and non-empty".into(),
        ));
    }
    for i in 0..m {
        if r[i][i] != 1.0 {
            return Err(Error::Input(format!(
                "diagonal entry ({i}, {i}) is {}, not 1",
                r[i][i]
            )));
        }
        for j in 0..m {
            let v = r[i][j];
            if !(-1.0..=1.0).contains(&v) {
                return Err(Error::Input(format!(
                    "entry ({i}, {j}) = {v} is not a correlation"
                )));
            }
            if (v - r[j][i]).abs() > 1e-12 {
                return Err(Error::Input(format!(
                    "matrix is not symmetric at ({i}, {j})"
                )));
            }
        }
    }
    Ok(())
}

fn to_dmatrix(r: &[Vec<f64>]) -> DMatrix<f64> {
    DMatrix::from_fn(r.len(), r.len(), |i, j| r[i][j])
}

pub fn min_eigenvalue(r: &[Vec<f64>]) -> f64 {
    SymmetricEigen::new(to_dmatrix(r))
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

pub fn is_positive_definite(r: &[Vec<f64>]) -> bool {
    Cholesky::new(to_dmatrix(r)).is_some()
}

/// Eigenvalues clipped at `floor`, then rescaled back to unit diagonal.
/// Returns the repaired matrix and the largest absolute entry change.
pub fn clip_repair(r: &[Vec<f64>], floor: f64) -> (Vec<Vec<f64>>, f64) {
    let m = r.len();
    let eig = SymmetricEigen::new(to_dmatrix(r));
    let clipped = eig.eigenvalues.map(|l| l.max(floor));
    let rebuilt =
        &eig.eigenvectors * DMatrix::from_diagonal(&clipped) * eig.eigenvectors.transpose();
    let d: Vec<f64> = (0..m).map(|i| rebuilt[(i, i)].sqrt()).collect();
    let mut out = vec![vec![0.0; m]; m];
    let mut max_change: f64 = 0.0;
    for i in 0..m {
        for j in 0..m {
            let v = if i == j {
                1.0
            } else {
                0.5 * (rebuilt[(i, j)] + rebuilt[(j, i)]) / (d[i] * d[j])
            };
            out[i][j] = v;
            max_change = max_change.max((v - r[i][j]).abs());
        }
    }
    (out, max_change)
}

/// Solves every off-diagonal entry (in parallel), assembles R_Z and
/// repairs it by eigenvalue clipping if it is not positive definite.
pub fn map_correlation_matrix(
    marginals: &[Marginal],
    r_x: &[Vec<f64>],
    opts: &PairOptions,
) -> Result<MatrixReport> {
    validate_correlation(r_x)?;
    let m = marginals.len();
    if r_x.len() != m {
        return Err(Error::Input(format!(
            "{m} marginals but a {}x{} matrix",
            r_x.len(),
            r_x.len()
        )));
    }
    let jobs: Vec<(usize, usize)> = (0..m)
        .flat_map(|i| (i + 1..m).map(move |j| (i, j)))
        .collect();
    let results: Vec<Result<PairEntry>> = jobs
        .par_iter()
        .map(|&(i, j)| {
            let link = PairLink::prepare(&marginals[i], &marginals[j], opts)?;
            let report = link.solve(r_x[i][j], opts.tol)?;
            Ok(PairEntry {
                i,
                j,
                rho_x: r_x[i][j],
                rho_z: report.rho_z,
                method: report.method,
                degree: link.polynomial().map(|p| p.degree()),
                warnings: report.warnings,
            })
        })
        .collect();

    let mut pairs = Vec::with_capacity(jobs.len());
    let mut infeasible = Vec::new();
    for (res, &(i, j)) in results.into_iter().zip(&jobs) {
        match res {
            Ok(entry) => pairs.push(entry),
            Err(Error::Infeasible { rho_x, lo, hi }) => infeasible.push(InfeasibleEntry {
                i,
                j,
                rho_x,
                lo,
                hi,
            }),
            Err(e) => return Err(e),
        }
    }
    if !infeasible.is_empty() {
        return Err(Error::InfeasibleMatrix(infeasible));
    }

    let mut r_z = vec![vec![0.0; m]; m];
    for i in 0..m {
        r_z[i][i] = 1.0;
    }
    for p in &pairs {
        r_z[p.i][p.j] = p.rho_z;
        r_z[p.j][p.i] = p.rho_z;
    }
    let raw = r_z.clone();
    let (r_z, repaired, max_perturbation) = if is_positive_definite(&r_z) {
        (r_z, false, 0.0)
    } else {
        let (fixed, change) = clip_repair(&r_z, EIGEN_FLOOR);
        (fixed, true, change)
    };
    let min_eigenvalue = min_eigenvalue(&r_z);
    Ok(MatrixReport {
        r_z,
        r_z_raw: raw,
        repaired,
        max_perturbation,
        min_eigenvalue,
        pairs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::marginal::{make_builtin, Builtin};

    #[test]
    fn normal_marginals_keep_matrix() {
        let n = make_builtin(Builtin::Normal01).unwrap();
        let r = vec![vec![1.0, 0.5], vec![0.5, 1.0]];
        let rep = map_correlation_matrix(&[n.clone(), n], &r, &PairOptions::default()).unwrap();
        assert!((rep.r_z[0][1] - 0.5).abs() < 1e-12);
        assert!(!rep.repaired);
    }

    #[test]
    fn lognormal_entries_invert_analytically() {
        let ln = make_builtin(Builtin::LogNormal {
            mu: 0.0,
            sigma: 1.0,
        })
        .unwrap();
        let r = vec![
            vec![1.0, 0.3, 0.3],
            vec![0.3, 1.0, 0.3],
            vec![0.3, 0.3, 1.0],
        ];
        let want = (1.0 + 0.3 * (std::f64::consts::E - 1.0)).ln();
        for closed_form in [true, false] {
            let opts = PairOptions {
                closed_form,
                ..Default::default()
            };
            let rep = map_correlation_matrix(&vec![ln.clone(); 3], &r, &opts).unwrap();
            for (i, j) in [(0, 1), (0, 2), (1, 2)] {
                assert!(
                    (rep.r_z[i][j] - want).abs() < 1e-6,
                    "closed_form = {closed_form}"
                );
                assert_eq!(rep.r_z[i][j], rep.r_z[j][i]);
            }
        }
    }

    #[test]
    fn indefinite_matrix_is_repaired() {
        // Bernoulli pairs push |ρ_z| above |ρ_x|; this R_X is PD but R_Z is not.
        let b = make_builtin(Builtin::BernoulliHalf).unwrap();
        let r = vec![
            vec![1.0, 0.6, 0.6],
            vec![0.6, 1.0, -0.2],
            vec![0.6, -0.2, 1.0],
        ];
        assert!(is_positive_definite(&r));
        let rep = map_correlation_matrix(&vec![b; 3], &r, &PairOptions::default()).unwrap();
        assert!(!is_positive_definite(&rep.r_z_raw));
        assert!(rep.repaired && rep.max_perturbation > 0.0);
        assert!(rep.min_eigenvalue >= -1e-10);
        for i in 0..3 {
            assert_eq!(rep.r_z[i][i], 1.0);
            for j in 0..3 {
                assert!((rep.r_z[i][j] - rep.r_z[j][i]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn infeasible_pairs_are_listed() {
        let b = make_builtin(Builtin::Binomial { n: 2, p: 0.2 }).unwrap();
        let r = vec![vec![1.0, -0.9], vec![-0.9, 1.0]];
        match map_correlation_matrix(&[b.clone(), b], &r, &PairOptions::default()) {
            Err(Error::InfeasibleMatrix(list)) => assert_eq!((list[0].i, list[0].j), (0, 1)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn validation() {
        assert!(validate_correlation(&[vec![1.0, 0.2], vec![0.3, 1.0]]).is_err());
        assert!(validate_correlation(&[vec![0.9, 0.2], vec![0.2, 1.0]]).is_err());
        assert!(validate_correlation(&[vec![1.0, 1.2], vec![1.2, 1.0]]).is_err());
        assert!(validate_correlation(&[vec![1.0, 0.2]]).is_err());
    }
}
