//! Rack-aware replica placement as done by HDFS, used as the comparison
//! baseline.

mod client;
mod namenode;
mod placement;

pub use client::HdfsClient;
pub use namenode::{BaselineParams, Namenode, Placement};
pub use placement::{
    choose_targets, overload_check, CandidateState, PlacementFailure, PlacementRequest, Thresholds, Verdict,
};
