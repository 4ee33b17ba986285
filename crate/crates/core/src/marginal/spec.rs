use serde::{Deserialize, Serialize};

use super::{make_builtin, Builtin, DiscreteMarginal, Marginal};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaParams {
    pub alpha: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinomialParams {
    pub n: u32,
    pub p: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogNormalParams {
    #[serde(default)]
    pub mu: f64,
    #[serde(default = "one")]
    pub sigma: f64,
}

impl Default for LogNormalParams {
    fn default() -> Self {
        Self {
            mu: 0.0,
            sigma: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoissonParams {
    pub lambda: f64,
}

fn one() -> f64 {
    1.0
}

/// Serializable description of a marginal, tagged by `"dist"`:
///
/// ```json
/// {"dist": "beta", "params": {"alpha": 2, "beta": 3}}
/// {"dist": "binomial", "params": {"n": 20, "p": 0.2}}
/// {"dist": "discrete", "support": [0, 1, 5], "probs": [0.2, 0.5, 0.3]}
/// {"dist": "lognormal", "params": {"mu": 0, "sigma": 1}}
/// {"dist": "uniform01"}
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dist", rename_all = "snake_case")]
pub enum MarginalSpec {
    Uniform01,
    Normal01,
    BernoulliHalf,
    Lognormal {
        #[serde(default)]
        params: LogNormalParams,
    },
    Beta {
        params: BetaParams,
    },
    Binomial {
        params: BinomialParams,
    },
    Poisson {
        params: PoissonParams,
    },
    Discrete {
        support: Vec<f64>,
        probs: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
    },
}

impl MarginalSpec {
    pub fn build(&self) -> Result<Marginal> {
        match self {
            Self::Uniform01 => make_builtin(Builtin::Uniform01),
            Self::Normal01 => make_builtin(Builtin::Normal01),
            Self::BernoulliHalf => make_builtin(Builtin::BernoulliHalf),
            Self::Lognormal { params } => make_builtin(Builtin::LogNormal {
                mu: params.mu,
                sigma: params.sigma,
            }),
            Self::Beta { params } => make_builtin(Builtin::Beta {
                alpha: params.alpha,
                beta: params.beta,
            }),
            Self::Binomial { params } => make_builtin(Builtin::Binomial {
                n: params.n,
                p: params.p,
            }),
            Self::Poisson { params } => make_builtin(Builtin::Poisson {
                lambda: params.lambda,
            }),
            Self::Discrete {
                support,
                probs,
                name,
            } => Ok(Marginal::Discrete(DiscreteMarginal::new(
                name.clone().unwrap_or_else(|| "discrete".to_string()),
                support.clone(),
                probs.clone(),
            )?)),
        }
    }
}
