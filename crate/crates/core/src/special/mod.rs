//! Standard-normal scalar functions, the bivariate normal CDF, probabilists'
//! Hermite polynomials and Gaussian quadrature rules.

mod bivariate;
mod hermite;
mod normal;
mod quadrature;

pub use bivariate::bivariate_normal_cdf;
pub use hermite::{hermite_sequence, HermiteSequence, MAX_HERMITE_DEGREE};
pub use normal::{std_normal_cdf, std_normal_pdf, std_normal_quantile, std_normal_sf};
pub use quadrature::{gauss_hermite_rule, gauss_legendre_rule, QuadratureKind, QuadratureRule};

pub(crate) use bivariate::bvn_cdf;
pub(crate) use hermite::{hermite_phi_row, hermite_values};
pub(crate) use normal::{ppnd, upper_quantile};
pub(crate) use quadrature::cached_gauss_hermite;
