pub mod cli;
pub mod copula;
pub mod diff;
pub mod error;
pub mod estimator;
pub mod nets;
pub mod numerics;
pub mod oracle;
pub mod parallel;
pub mod pid;
pub mod pseudoobs;
pub mod simgen;
pub mod stats;

pub use error::{Error, Result};
