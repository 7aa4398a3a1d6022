//! Epoch-driven simulation of the shared channel.

pub mod config;
pub mod contention;
pub(crate) mod engine;
pub mod queue;
pub mod report;

pub use config::{ArrivalSpec, SimConfig, Timing, BACKLOGGED_FPS};
pub use engine::{run_simulation, Simulation};
pub use report::{ClientStats, EpochStats, PairStats, SafetyStats, SimReport, TimeBreakdown, TimeCategory};
