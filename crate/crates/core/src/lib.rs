pub mod bohr;
pub mod cli;
pub mod counting;
pub mod error;
pub mod experiments;
pub mod exponents;
pub mod fixedpoint;
pub mod geometry;
pub mod oracle;
pub mod predictors;
pub mod psi;
pub mod selfcheck;
pub mod summation;

pub use error::{Error, Result};
pub use fixedpoint::{Frac64, NearestDist};
pub use psi::ApproxFunction;
