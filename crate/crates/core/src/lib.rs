//! Deterministic discrete-event simulator of a distributed flash storage
//! cluster, comparing HDFS-style replica placement with write-array wear
//! leveling.

pub mod baseline;
pub mod cluster;
pub mod config;
pub mod error;
pub mod ids;
pub mod metrics;
pub mod node;
pub mod protocol;
pub mod sim;
pub mod simulation;
pub mod workload;

pub use config::{RunConfig, Scenario};
pub use error::{ConfigError, SimError};
pub use ids::{BlockRef, FileId, NodeId};
pub use simulation::{run, RunError, Simulation};
