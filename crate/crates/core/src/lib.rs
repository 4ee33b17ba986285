//! Equivalent normal-space correlation for Gaussian copulas.
//!
//! Given two marginals and a target product-moment correlation ρ_x, this
//! crate finds the correlation ρ_z of the underlying bivariate normal that
//! reproduces ρ_x after each coordinate is pushed through its marginal
//! transform x = F⁻¹(Φ(z)). The link ρ_x = G(ρ_z) is approximated by a
//! polynomial built from Hermite projections of the two transforms
//! (Mehler's expansion of the bivariate density), then inverted on its
//! monotone branch.

pub mod baselines;
pub mod error;
pub mod link;
pub mod marginal;
pub mod matrix;
pub mod solve;
pub mod special;
pub mod tables;

pub use error::{Error, InfeasibleEntry, Result};
pub use link::{
    build_continuous, build_discrete, build_link, build_mixed, closed_form, select_degree,
    BuildOptions, ClosedFormCase, DegreeOptions, DegreeSelection, Direction, LinkPolynomial,
    QuadraturePolicy, Route,
};
pub use marginal::{
    discrete_thresholds, hermite_coefficients, make_builtin, Builtin, ContinuousMarginal,
    DiscreteMarginal, HermiteCoefficients, Marginal, MarginalKind, MarginalSpec, ThresholdSet,
};
pub use matrix::{map_correlation_matrix, MatrixReport, MatrixSpec};
pub use solve::{
    feasible_range, solve_pair, solve_rho_z, PairLink, PairOptions, PairSpec, SolveMethod,
    SolveReport, Targets,
};
