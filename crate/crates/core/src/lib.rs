//! Friedkin-Johnsen opinion dynamics with small immunity weights.
//!
//! The crate covers the dense linear algebra it needs ([`linalg`]),
//! Perron-Frobenius tools ([`spectral`]), the DeGroot / Friedkin-Johnsen
//! recursions and static gain ([`model`]), the small-`sigma_max` limit and
//! rate measurements ([`asymptotics`]), plus instance handling, sweeps and
//! randomized invariant campaigns used by the `fj-bench` binary.

pub mod asymptotics;
pub mod campaign;
pub mod error;
pub mod instance;
pub mod linalg;
pub mod model;
pub mod spectral;
pub mod sweep;

pub use error::{Error, Result};
pub use linalg::Matrix;
pub use model::{GainKind, GainMatrix, ImmunityProfile, InfluenceMatrix, OpinionVector, Trajectory};
