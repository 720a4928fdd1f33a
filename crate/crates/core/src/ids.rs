//! Identifier newtypes shared by every layer of the simulator.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Identity of a node in the cluster topology (client, management or storage).
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct FileId(pub u64);

impl fmt::Display for FileId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One written copy of a file block.
///
/// `generation` increments every time the block is re-written, so the stale
/// copy left behind by an out-of-place update never collides with the fresh
/// one, even when both land on the same storage node.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct BlockRef {
    pub file: FileId,
    pub index: u32,
    pub generation: u32,
}

impl BlockRef {
    pub fn new(file: FileId, index: u32, generation: u32) -> Self {
        Self {
            file,
            index,
            generation,
        }
    }
}
