//! Write-array wear-leveling protocol.
//!
//! Management servers hand clients write-arrays: short lists of storage
//! servers with a block-write budget each, proportional to the servers'
//! remaining write capacity. Clients spend the budgets without further
//! coordination and report the new block-map location on close.

mod block_map;
mod client;
mod invalidation;
mod locks;
mod manager;
mod reconcile;
mod write_array;

pub use block_map::{BlockMap, MapEntry};
pub use client::{Client, ClientParams};
pub use invalidation::{Band, BandTable, InvalidationBuffer};
pub use locks::{Acquire, LockTable, MapLocationTable};
pub use manager::Manager;
pub use reconcile::{ReconciliationState, ReplyOutcome, ServerSnapshot};
pub use write_array::{apportion, round_robin_select, rounding_phase, GrantId, WriteArray, WriteArrayEntry};
