pub mod besov;
pub mod error;
pub mod harness;
pub mod orlicz;
pub mod stochastic;

pub use error::{Error, Result};
pub use orlicz::{lux_equivalence_mid, luxemburg_norm, DiscreteMeasure, YoungFunction};
