//! Simulation harness for the synchronized-tilt hexarotor: scenario
//! descriptions (TOML), the closed-loop runner, fixed-schema CSV run
//! logs, and post-run metrics.
//!
//! Angle fields in configuration files are degrees for readability;
//! everything internal is SI (radians, meters, seconds, newtons).

pub mod config;
pub mod log;
pub mod metrics;
pub mod runner;
pub mod scenario;
pub mod trajectory;

pub use runner::{run_scenario, RunError, RunOptions};
pub use scenario::ScenarioSpec;
