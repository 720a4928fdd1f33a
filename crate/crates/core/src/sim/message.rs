//! Typed inter-node messages and their counting categories.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::cluster::StorageError;
use crate::ids::{BlockRef, FileId, NodeId};
use crate::protocol::{BlockMap, GrantId, ServerSnapshot, WriteArray};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum OpenMode {
    Read,
    Write,
}

/// Counting category of a message. Every dispatched message increments
/// exactly one of these.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MessageKind {
    LockRequest,
    LockGrant,
    LockDeny,
    LockRelease,
    MapRead,
    MapReadReply,
    MapWrite,
    WriteArrayRequest,
    WriteArrayGrant,
    BlockWrite,
    BlockWriteAck,
    Invalidate,
    InvalidateBatch,
    CloseNotify,
    ReconcileQuery,
    ReconcileReply,
    ReconcileSync,
    AddBlock,
    AddBlockReply,
}

impl MessageKind {
    pub const COUNT: usize = 19;

    pub const ALL: [MessageKind; Self::COUNT] = [
        MessageKind::LockRequest,
        MessageKind::LockGrant,
        MessageKind::LockDeny,
        MessageKind::LockRelease,
        MessageKind::MapRead,
        MessageKind::MapReadReply,
        MessageKind::MapWrite,
        MessageKind::WriteArrayRequest,
        MessageKind::WriteArrayGrant,
        MessageKind::BlockWrite,
        MessageKind::BlockWriteAck,
        MessageKind::Invalidate,
        MessageKind::InvalidateBatch,
        MessageKind::CloseNotify,
        MessageKind::ReconcileQuery,
        MessageKind::ReconcileReply,
        MessageKind::ReconcileSync,
        MessageKind::AddBlock,
        MessageKind::AddBlockReply,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MessageKind::LockRequest => "LockRequest",
            MessageKind::LockGrant => "LockGrant",
            MessageKind::LockDeny => "LockDeny",
            MessageKind::LockRelease => "LockRelease",
            MessageKind::MapRead => "MapRead",
            MessageKind::MapReadReply => "MapReadReply",
            MessageKind::MapWrite => "MapWrite",
            MessageKind::WriteArrayRequest => "WriteArrayRequest",
            MessageKind::WriteArrayGrant => "WriteArrayGrant",
            MessageKind::BlockWrite => "BlockWrite",
            MessageKind::BlockWriteAck => "BlockWriteAck",
            MessageKind::Invalidate => "Invalidate",
            MessageKind::InvalidateBatch => "InvalidateBatch",
            MessageKind::CloseNotify => "CloseNotify",
            MessageKind::ReconcileQuery => "ReconcileQuery",
            MessageKind::ReconcileReply => "ReconcileReply",
            MessageKind::ReconcileSync => "ReconcileSync",
            MessageKind::AddBlock => "AddBlock",
            MessageKind::AddBlockReply => "AddBlockReply",
        }
    }

    pub fn is_invalidation(self) -> bool {
        matches!(self, MessageKind::Invalidate | MessageKind::InvalidateBatch)
    }
}

impl fmt::Display for MessageKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MessageBody {
    LockRequest {
        file: FileId,
        mode: OpenMode,
    },
    LockGrant {
        file: FileId,
        mode: OpenMode,
        map_location: Option<NodeId>,
    },
    LockDeny {
        file: FileId,
    },
    /// Ends a read-mode open; write-mode opens end with `CloseNotify`.
    LockRelease {
        file: FileId,
    },
    MapRead {
        file: FileId,
    },
    MapReadReply {
        file: FileId,
        map: Option<BlockMap>,
    },
    MapWrite {
        file: FileId,
        map: BlockMap,
        voucher: Option<GrantId>,
    },
    WriteArrayRequest {
        requested_total: u64,
    },
    WriteArrayGrant {
        /// `None` when every storage server is worn out.
        array: Option<WriteArray>,
        /// Last known space utilization per storage server, in directory order.
        utilization: Vec<f64>,
    },
    BlockWrite {
        block: BlockRef,
        voucher: Option<GrantId>,
    },
    BlockWriteAck {
        block: BlockRef,
        rejected: Option<StorageError>,
    },
    Invalidate {
        block: BlockRef,
    },
    InvalidateBatch {
        blocks: Vec<BlockRef>,
    },
    CloseNotify {
        file: FileId,
        map_location: Option<NodeId>,
        deleted: bool,
    },
    ReconcileQuery {
        round: u64,
    },
    ReconcileReply {
        round: u64,
        remaining_write_capacity: u64,
        utilization: f64,
    },
    ReconcileSync {
        snapshot: Vec<ServerSnapshot>,
    },
    /// Baseline only: ask the namenode where to place one block.
    AddBlock {
        file: FileId,
        index: u32,
    },
    AddBlockReply {
        block: BlockRef,
        targets: Vec<NodeId>,
    },
}

impl MessageBody {
    pub fn kind(&self) -> MessageKind {
        match self {
            MessageBody::LockRequest { .. } => MessageKind::LockRequest,
            MessageBody::LockGrant { .. } => MessageKind::LockGrant,
            MessageBody::LockDeny { .. } => MessageKind::LockDeny,
            MessageBody::LockRelease { .. } => MessageKind::LockRelease,
            MessageBody::MapRead { .. } => MessageKind::MapRead,
            MessageBody::MapReadReply { .. } => MessageKind::MapReadReply,
            MessageBody::MapWrite { .. } => MessageKind::MapWrite,
            MessageBody::WriteArrayRequest { .. } => MessageKind::WriteArrayRequest,
            MessageBody::WriteArrayGrant { .. } => MessageKind::WriteArrayGrant,
            MessageBody::BlockWrite { .. } => MessageKind::BlockWrite,
            MessageBody::BlockWriteAck { .. } => MessageKind::BlockWriteAck,
            MessageBody::Invalidate { .. } => MessageKind::Invalidate,
            MessageBody::InvalidateBatch { .. } => MessageKind::InvalidateBatch,
            MessageBody::CloseNotify { .. } => MessageKind::CloseNotify,
            MessageBody::ReconcileQuery { .. } => MessageKind::ReconcileQuery,
            MessageBody::ReconcileReply { .. } => MessageKind::ReconcileReply,
            MessageBody::ReconcileSync { .. } => MessageKind::ReconcileSync,
            MessageBody::AddBlock { .. } => MessageKind::AddBlock,
            MessageBody::AddBlockReply { .. } => MessageKind::AddBlockReply,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Message {
    pub source: NodeId,
    pub body: MessageBody,
}

impl Message {
    pub fn new(source: NodeId, body: MessageBody) -> Self {
        Self { source, body }
    }

    pub fn kind(&self) -> MessageKind {
        self.body.kind()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kind_table_is_dense() {
        for (i, k) in MessageKind::ALL.iter().enumerate() {
            assert_eq!(k.index(), i);
        }
    }
}
