use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A size, degree, or option is outside the supported range.
    #[error("configuration error: {0}")]
    Config(String),

    /// The marginal transform produced a non-finite value.
    #[error("marginal `{name}` failed at normal-space node z = {node}: got {value}")]
    Marginal { name: String, node: f64, value: f64 },

    /// The target correlation cannot be produced by this pair of marginals.
    #[error("target rho_x = {rho_x} is outside the feasible range [{lo}, {hi}]")]
    Infeasible { rho_x: f64, lo: f64, hi: f64 },

    /// One or more off-diagonal entries of a correlation matrix are infeasible.
    #[error("infeasible matrix entries: {}", format_entries(.0))]
    InfeasibleMatrix(Vec<InfeasibleEntry>),

    #[error("invalid input: {0}")]
    Input(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct InfeasibleEntry {
    pub i: usize,
    pub j: usize,
    pub rho_x: f64,
    pub lo: f64,
    pub hi: f64,
}

fn format_entries(entries: &[InfeasibleEntry]) -> String {
    entries
        .iter()
        .map(|e| {
            format!(
                "({}, {}): rho_x = {} not in [{}, {}]",
                e.i, e.j, e.rho_x, e.lo, e.hi
            )
        })
        .collect::<Vec<_>>()
        .join("; ")
}

impl Error {
    /// True for errors that mean "no answer exists", as opposed to bad input.
    pub fn is_infeasible(&self) -> bool {
        matches!(self, Error::Infeasible { .. } | Error::InfeasibleMatrix(_))
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
