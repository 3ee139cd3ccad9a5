//! Simulation and validation primitives for the information-minimizing
//! stationary market model.
//!
//! The crate is `no_std` (with `alloc`). It covers:
//!
//! * [`market`]: scenario configuration, validation and the square-root
//!   process parametrization shared by everything else;
//! * [`sampler`] and [`path`]: exact noncentral chi-squared transitions of
//!   square-root (SROU/CIR) processes, a full-truncation Euler fallback and
//!   single-path market generation in activity time;
//! * [`portfolio`]: atom GOP, extended-market GOP, minimum variance
//!   portfolio, atom portfolio and sums of atoms along simulated paths;
//! * [`information`]: stationary gamma laws, self-information and the
//!   Kullback-Leibler divergence of the risk-neutral density;
//! * [`stats`]: Kolmogorov-Smirnov tests, Student-t maximum likelihood and
//!   realized growth-rate reports.
//!
//! Parallel path generation, file formats and the command line live in the
//! `imm` companion crate.
#![no_std]

extern crate alloc;

pub mod error;
mod float;
pub mod information;
pub mod market;
pub mod path;
pub mod portfolio;
pub mod quadrature;
pub mod sampler;
pub mod special;
pub mod stats;

pub use error::{Error, Result};
pub use information::{GammaLaw, InfoReport};
pub use market::{
    effective_lambda_star, validate_config, ActivityModel, ActivitySpec, InitialValues,
    MarketConfig, Mode, RateModel, SquareRootSpec, ValidationReport, Violation,
    VolatilityFunction,
};
pub use path::{simulate_market, simulate_path, MarketPath, MarketView, PathSet};
pub use portfolio::{PortfolioPath, PortfolioWeights, WeightsRule};
pub use sampler::{RngStream, StreamRng, TransitionLaw};
