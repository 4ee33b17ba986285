//! Inverting a link for a target ρ_x.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::link::{
    build_link, select_degree, BuildOptions, ClosedFormCase, DegreeOptions, LinkPolynomial,
};
use crate::marginal::{Marginal, MarginalSpec};

pub const DEFAULT_TOLERANCE: f64 = 1e-12;
/// Outermost point of the bracket walk; ρ_z = ±1 itself is excluded.
const EDGE: f64 = 1.0 - 1e-9;
const WALK_STEPS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    PolynomialInvert,
    ClosedForm,
    Bisection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub rho_z: f64,
    pub residual: f64,
    pub feasible_range: (f64, f64),
    pub method: SolveMethod,
    pub warnings: Vec<String>,
}

/// Walks k·0.01 outward from 0 while P keeps increasing; the final step
/// lands on ±(1 − 1e−9). Returns the last point reached on each side.
pub fn monotone_bracket(p: &LinkPolynomial) -> (f64, f64) {
    let walk = |sign: f64| {
        let mut prev = p.evaluate(0.0);
        let mut last = 0.0;
        for k in 1..=WALK_STEPS {
            let t = if k == WALK_STEPS {
                EDGE
            } else {
                k as f64 / WALK_STEPS as f64
            };
            let v = p.evaluate(sign * t);
            if sign * (v - prev) <= 0.0 {
                break;
            }
            prev = v;
            last = sign * t;
        }
        last
    };
    (walk(-1.0), walk(1.0))
}

/// (P(r₋), P(r₊)) on the monotone bracket, clamped to [−1, 1].
pub fn feasible_range(p: &LinkPolynomial) -> (f64, f64) {
    let (lo, hi) = monotone_bracket(p);
    (
        p.evaluate(lo).clamp(-1.0, 1.0),
        p.evaluate(hi).clamp(-1.0, 1.0),
    )
}

fn check_target(rho_x: f64) -> Result<()> {
    if !(-1.0..=1.0).contains(&rho_x) {
        return Err(Error::domain(format!(
            "rho_x = {rho_x} is not a correlation"
        )));
    }
    Ok(())
}

/// Finds ρ_z with P(ρ_z) = ρ_x on the monotone bracket on the side of 0
/// that matches the sign of ρ_x.
pub fn solve_rho_z(p: &LinkPolynomial, rho_x: f64, tol: f64) -> Result<SolveReport> {
    check_target(rho_x)?;
    let (r_lo, r_hi) = monotone_bracket(p);
    let range = (
        p.evaluate(r_lo).clamp(-1.0, 1.0),
        p.evaluate(r_hi).clamp(-1.0, 1.0),
    );
    let mut report = SolveReport {
        rho_z: 0.0,
        residual: (p.evaluate(0.0) - rho_x).abs(),
        feasible_range: range,
        method: SolveMethod::PolynomialInvert,
        warnings: p.warnings().to_vec(),
    };
    if rho_x == 0.0 {
        return Ok(report);
    }
    let (a, b) = if rho_x > 0.0 {
        (0.0, r_hi)
    } else {
        (r_lo, 0.0)
    };
    let f = |r: f64| p.evaluate(r) - rho_x;
    let (fa, fb) = (f(a), f(b));
    if rho_x > 0.0 && fb < 0.0 || rho_x < 0.0 && fa > 0.0 {
        return Err(Error::Infeasible {
            rho_x,
            lo: range.0,
            hi: range.1,
        });
    }
    if fa * fb > 0.0 {
        // |ρ_x| is below |b_0|: the sign-consistent answer is 0.
        report.warnings.push(format!(
            "target {rho_x:e} is within b_0 of zero; returning rho_z = 0"
        ));
        return Ok(report);
    }
    let root = illinois(f, a, b, fa, fb, tol);
    report.rho_z = root;
    report.residual = f(root).abs();
    Ok(report)
}

/// Regula falsi with the Illinois modification, falling back to bisection
/// whenever a step fails to halve the bracket.
fn illinois(
    f: impl Fn(f64) -> f64,
    mut a: f64,
    mut b: f64,
    mut fa: f64,
    mut fb: f64,
    tol: f64,
) -> f64 {
    if fa.abs() <= tol {
        return a;
    }
    if fb.abs() <= tol {
        return b;
    }
    let mut side = 0i8;
    for _ in 0..200 {
        let width = b - a;
        let mut c = (a * fb - b * fa) / (fb - fa);
        if !(c > a && c < b) {
            c = 0.5 * (a + b);
        }
        let fc = f(c);
        if fc.abs() <= tol || width <= 4.0 * f64::EPSILON {
            return c;
        }
        if (fc < 0.0) == (fa < 0.0) {
            a = c;
            fa = fc;
            if side == -1 {
                fb *= 0.5;
            }
            side = -1;
        } else {
            b = c;
            fb = fc;
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        }
        if b - a > 0.5 * width {
            let m = 0.5 * (a + b);
            let fm = f(m);
            if fm.abs() <= tol {
                return m;
            }
            if (fm < 0.0) == (fa < 0.0) {
                a = m;
                fa = fm;
            } else {
                b = m;
                fb = fm;
            }
            side = 0;
        }
    }
    0.5 * (a + b)
}

pub fn solve_closed_form(case: ClosedFormCase, rho_x: f64) -> Result<SolveReport> {
    check_target(rho_x)?;
    let rho_z = case.x_to_z(rho_x)?;
    Ok(SolveReport {
        rho_z,
        residual: (case.z_to_x(rho_z) - rho_x).abs(),
        feasible_range: (case.z_to_x(-1.0).max(-1.0), case.z_to_x(1.0).min(1.0)),
        method: SolveMethod::ClosedForm,
        warnings: Vec::new(),
    })
}

/// How a pair is turned into a link before solving.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairOptions {
    /// Fixed degree; `None` selects it automatically.
    pub degree: Option<usize>,
    pub selection: DegreeOptions,
    /// Use the exact link when the pair has one.
    pub closed_form: bool,
    pub tol: f64,
}

impl Default for PairOptions {
    fn default() -> Self {
        Self {
            degree: None,
            selection: DegreeOptions::default(),
            closed_form: true,
            tol: DEFAULT_TOLERANCE,
        }
    }
}

impl PairOptions {
    pub fn build(&self) -> &BuildOptions {
        &self.selection.build
    }
}

/// A link ready to solve against, however it was obtained.
#[derive(Debug, Clone, PartialEq)]
pub enum PairLink {
    Polynomial(LinkPolynomial),
    ClosedForm(ClosedFormCase),
}

impl PairLink {
    pub fn prepare(mi: &Marginal, mj: &Marginal, opts: &PairOptions) -> Result<Self> {
        if opts.closed_form {
            if let Some(case) = ClosedFormCase::detect(mi, mj) {
                return Ok(Self::ClosedForm(case));
            }
        }
        let poly = match opts.degree {
            Some(n) => build_link(mi, mj, n, opts.build())?,
            None => select_degree(mi, mj, &opts.selection)?.polynomial,
        };
        Ok(Self::Polynomial(poly))
    }

    pub fn solve(&self, rho_x: f64, tol: f64) -> Result<SolveReport> {
        match self {
            Self::Polynomial(p) => solve_rho_z(p, rho_x, tol),
            Self::ClosedForm(case) => solve_closed_form(*case, rho_x),
        }
    }

    pub fn evaluate(&self, rho_z: f64) -> f64 {
        match self {
            Self::Polynomial(p) => p.evaluate(rho_z),
            Self::ClosedForm(case) => case.z_to_x(rho_z),
        }
    }

    pub fn polynomial(&self) -> Option<&LinkPolynomial> {
        match self {
            Self::Polynomial(p) => Some(p),
            Self::ClosedForm(_) => None,
        }
    }
}

/// Builds (or recognizes) the link for a pair and solves it once.
pub fn solve_pair(
    mi: &Marginal,
    mj: &Marginal,
    rho_x: f64,
    opts: &PairOptions,
) -> Result<SolveReport> {
    PairLink::prepare(mi, mj, opts)?.solve(rho_x, opts.tol)
}

/// A marginal pair with one or more targets, as read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairSpec {
    pub marginal_i: MarginalSpec,
    pub marginal_j: MarginalSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_x: Option<Targets>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Targets {
    One(f64),
    Many(Vec<f64>),
}

impl PairSpec {
    pub fn build(&self) -> Result<(Marginal, Marginal)> {
        Ok((self.marginal_i.build()?, self.marginal_j.build()?))
    }

    /// The listed targets, each checked to be a correlation.
    pub fn targets(&self) -> Result<Vec<f64>> {
        let list = match &self.rho_x {
            None => Vec::new(),
            Some(Targets::One(r)) => vec![*r],
            Some(Targets::Many(v)) => v.clone(),
        };
        if let Some(bad) = list.iter().find(|r| !(-1.0..=1.0).contains(*r)) {
            return Err(Error::Input(format!("rho_x = {bad} is not a correlation")));
        }
        Ok(list)
    }
}
