//! Synthetic-gauge-field quantum networks: construction, exact dynamics and chiral-flow checks.

pub mod criteria;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod floquet;
pub mod format;
pub mod hilbert;
pub mod models;
pub mod oracles;

pub use error::{Error, Result};
