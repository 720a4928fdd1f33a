//! Static cluster description and dynamic flash-node state.

mod storage;
pub mod topology;

pub use storage::{
    FlashDevice, StorageError, StorageNodeSpec, StorageNodeState, WriteCapacity,
    DEFAULT_BLOCK_SIZE, DEFAULT_PAGE_SIZE, MIB,
};
pub use topology::{LinearLayout, NodeSpec, Rack, Roles, Topology};
