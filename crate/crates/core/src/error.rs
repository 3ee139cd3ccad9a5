use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {}", .0.join("; "))]
    InvalidConfig(Vec<String>),
    #[error("{0} must be finite")]
    NonFinite(&'static str),
    #[error("{name} = {value} violates {constraint}")]
    Domain {
        name: &'static str,
        value: f64,
        constraint: &'static str,
    },
    #[error("volatility of atom {0} is zero")]
    ZeroVolatility(usize),
    #[error("index set is empty")]
    EmptyIndexSet,
    #[error("index sets overlap at atom {0}")]
    OverlappingIndexSets(usize),
    #[error("atom index {index} out of range for a market of {n} atoms")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("weights over {got} atoms do not match a market of {n} atoms")]
    WeightLength { got: usize, n: usize },
    #[error("weights sum to {0}, expected 1")]
    WeightSum(f64),
    #[error("stationary density is not normalizable: {0}")]
    NotNormalizable(&'static str),
    #[error("quadrature did not reach tolerance (estimated error {0:e})")]
    Quadrature(f64),
    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { got: usize, need: usize },
    #[error("portfolio wealth became non-positive at step {0}")]
    Bankrupt(usize),
    #[error("no candidate volatility function matches a gamma law")]
    NoMatch,
    #[error("operation requires an information-minimizing market")]
    NotInfoMinimizing,
}
