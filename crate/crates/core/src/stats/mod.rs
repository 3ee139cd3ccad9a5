//! Goodness-of-fit tests, Student-t fitting and growth-rate summaries.

pub mod growth;
pub mod ks;
pub mod student_t;

pub use growth::{GrowthAccumulator, GrowthReport, PathGrowth};
pub use ks::{kolmogorov_survival, ks_one_sample, ks_two_sample, KsResult};
pub use student_t::{student_t_fit, StudentTFit};
