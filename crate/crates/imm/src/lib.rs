//! Standard-library companion of `imm-core`: TOML configuration, a
//! path-parallel engine, CSV/JSON persistence, the property-validation
//! harness and the `imm` command-line tool.

pub mod cli;
pub mod config;
pub mod engine;
pub mod error;
pub mod io;
pub mod validate;

pub use engine::Engine;
pub use error::{AppError, AppResult};
