//! Three-state discrete-time quantum walks with a two-phase coin field and
//! finitely many defects: transfer-matrix eigenvalue search and direct
//! time evolution.

pub mod coin;
pub mod config;
pub mod evolution;
pub mod linalg;
pub mod spectral;
pub mod transfer;

pub use coin::{CoinError, CoinField, CoinMatrix};
pub use config::{parse_field_config, ConfigError};
pub use evolution::{Distribution, StateVector};
pub use linalg::Complex;
pub use spectral::{analyze, EigenvalueRecord, SpectralReport};
