use serde::{Deserialize, Serialize};

use super::{build_link, BuildOptions, LinkPolynomial};
use crate::error::{Error, Result};
use crate::marginal::Marginal;

pub const DEFAULT_DEGREE_CAP: usize = 39;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegreeOptions {
    /// Δn, the degree increment.
    pub step: usize,
    /// δ, the stopping bound on ΔP_j.
    pub delta: f64,
    pub grid_step: f64,
    pub cap: usize,
    pub build: BuildOptions,
}

impl Default for DegreeOptions {
    fn default() -> Self {
        Self {
            step: 2,
            delta: 1e-4,
            grid_step: 0.01,
            cap: DEFAULT_DEGREE_CAP,
            build: BuildOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeSelection {
    pub degree: usize,
    pub polynomial: LinkPolynomial,
    /// (j, ΔP_j) for every comparison made.
    pub trace: Vec<(usize, f64)>,
    /// The bound was never met and the cap polynomial was returned.
    pub capped: bool,
}

/// Evenly spaced grid over [−1, 1] that always contains both ends.
pub(crate) fn rho_grid(step: f64) -> Vec<f64> {
    let n = (2.0 / step).round().max(1.0) as usize;
    (0..=n)
        .map(|i| (-1.0 + 2.0 * i as f64 / n as f64).clamp(-1.0, 1.0))
        .collect()
}

/// max over the grid of |P(ρ) − Q(ρ)|.
pub fn delta_p(p: &LinkPolynomial, q: &LinkPolynomial, grid_step: f64) -> f64 {
    rho_grid(grid_step)
        .into_iter()
        .map(|r| (p.evaluate(r) - q.evaluate(r)).abs())
        .fold(0.0, f64::max)
}

/// Builds P_1, P_{1+Δn}, … and stops at the first j with
/// ΔP_j = max |P_j − P_{j+Δn}| < δ, returning P_j. Each polynomial is built
/// from scratch, so a degree-dependent quadrature policy applies per degree.
pub fn select_degree(
    mi: &Marginal,
    mj: &Marginal,
    opts: &DegreeOptions,
) -> Result<DegreeSelection> {
    if opts.step == 0
        || !(opts.delta > 0.0)
        || !(opts.grid_step > 0.0 && opts.grid_step <= 1.0)
        || opts.cap == 0
    {
        return Err(Error::config(format!(
            "invalid degree-selection options {opts:?}"
        )));
    }
    let mut trace = Vec::new();
    let mut j = 1;
    let mut current = build_link(mi, mj, j, &opts.build)?;
    while j + opts.step <= opts.cap {
        let next = build_link(mi, mj, j + opts.step, &opts.build)?;
        let gap = delta_p(&current, &next, opts.grid_step);
        trace.push((j, gap));
        if gap < opts.delta {
            return Ok(DegreeSelection {
                degree: j,
                polynomial: current,
                trace,
                capped: false,
            });
        }
        j += opts.step;
        current = next;
    }
    let last_gap = trace.last().map_or(f64::NAN, |t| t.1);
    current.meta.warnings.push(format!(
        "degree cap {} reached without delta_P < {:e} (last delta_P = {:.3e})",
        j, opts.delta, last_gap
    ));
    Ok(DegreeSelection {
        degree: j,
        polynomial: current,
        trace,
        capped: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::marginal::{make_builtin, Builtin};

    #[test]
    fn grid_covers_ends() {
        let g = rho_grid(0.01);
        assert_eq!(g.len(), 201);
        assert_eq!((g[0], g[100], g[200]), (-1.0, 0.0, 1.0));
    }

    #[test]
    fn normal_pair_stops_immediately() {
        let n = make_builtin(Builtin::Normal01).unwrap();
        let s = select_degree(&n, &n, &DegreeOptions::default()).unwrap();
        assert_eq!(s.degree, 1);
        assert_eq!(s.trace, vec![(1, 0.0)]);
        assert!(!s.capped);
    }

    #[test]
    fn cap_is_flagged() {
        let b = make_builtin(Builtin::BernoulliHalf).unwrap();
        let opts = DegreeOptions {
            cap: 9,
            ..Default::default()
        };
        let s = select_degree(&b, &b, &opts).unwrap();
        assert!(s.capped);
        assert_eq!(s.degree, 9);
        assert_eq!(s.polynomial.degree(), 9);
        assert!(s.polynomial.warnings().iter().any(|w| w.contains("cap")));
        assert_eq!(s.trace.len(), 4);
    }

    #[test]
    fn rejects_bad_options() {
        let n = make_builtin(Builtin::Normal01).unwrap();
        let opts = DegreeOptions {
            step: 0,
            ..Default::default()
        };
        assert!(matches!(
            select_degree(&n, &n, &opts),
            Err(Error::Config(_))
        ));
    }
}
