//! Simulation of a full-duplex access point serving half-duplex clients with
//! epoch-based probabilistic access assignment.

// `!(x > 0.0)` is used on purpose so NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assign;
pub mod channel;
pub mod error;
pub mod experiment;
pub mod mac;
pub mod pairing;
pub mod phy;
pub mod scheme;

pub use error::{Error, Result};
pub use mac::{run_simulation, SimConfig, SimReport, Simulation};
pub use scheme::SchemeId;
