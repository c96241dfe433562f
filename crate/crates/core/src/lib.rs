pub mod cli_report;
pub mod complex_pullback;
pub mod error;
pub mod interval_dynamics;
pub mod map_model;
pub mod polylike_bounds;
pub mod real_bounds;
pub mod renormalization;

pub use error::{Error, Result};
