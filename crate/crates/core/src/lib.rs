pub mod cli;
pub mod closedforms;
pub mod error;
pub mod laplace;
pub mod models;
pub mod montecarlo;
pub mod quadrature;
pub mod ruin;
pub mod special;
pub mod supdist;

pub use error::{Error, Result};
pub use models::{BrokenDrift, LevyModel, SpectralSign};
pub use quadrature::{Estimate, QuadConfig};
pub use supdist::{Horizon, SupResult};
