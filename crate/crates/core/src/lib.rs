pub mod baxter;
pub mod cli;
pub mod duality;
pub mod error;
pub mod kernels;
pub mod model;
pub mod montecarlo;
pub mod prediction;
pub mod quad;
pub mod table;

pub use error::{LrdError, Result};
