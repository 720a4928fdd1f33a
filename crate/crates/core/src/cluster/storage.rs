//! Per-node flash state and the node-level wear metrics.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::{BlockRef, NodeId};
use crate::sim::{FlashOp, FlashTiming, SimTime};

pub const MIB: u64 = 1024 * 1024;
pub const DEFAULT_BLOCK_SIZE: u64 = 64 * MIB;
pub const DEFAULT_PAGE_SIZE: u64 = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Error)]
pub enum StorageError {
    #[error("no free block slot")]
    SpaceExhausted,
    #[error("endurance exhausted")]
    WornOut,
    #[error("invalidate for a block that is not stored here")]
    StaleInvalidate,
    #[error("block copy is already stored here")]
    DuplicateBlock,
}

/// Page geometry and latencies of the NAND device behind a storage node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlashDevice {
    pub page_size_bytes: u64,
    pub timing: FlashTiming,
}

impl Default for FlashDevice {
    fn default() -> Self {
        Self {
            page_size_bytes: DEFAULT_PAGE_SIZE,
            timing: FlashTiming::default(),
        }
    }
}

impl FlashDevice {
    pub fn pages_per_block(&self, block_size_bytes: u64) -> u64 {
        block_size_bytes.div_ceil(self.page_size_bytes)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StorageNodeSpec {
    pub node_id: NodeId,
    pub rack: u32,
    pub capacity_blocks: u64,
    pub block_size_bytes: u64,
    pub max_endurance_cycles: u64,
}

impl StorageNodeSpec {
    pub fn capacity_bytes(&self) -> u64 {
        self.capacity_blocks * self.block_size_bytes
    }

    /// Lifetime write budget in block-writes.
    pub fn initial_write_capacity(&self) -> u64 {
        self.capacity_blocks * self.max_endurance_cycles
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WriteCapacity {
    pub initial: u64,
    pub remaining: u64,
}

/// Dynamic state of one flash storage node.
///
/// Wear is tracked at node granularity through `bytes_written_total`; an
/// ideal local wear leveler is assumed so individual erase counters are not
/// modeled. Invalidated slots are reclaimed immediately.
#[derive(Debug, Clone)]
pub struct StorageNodeState {
    spec: StorageNodeSpec,
    device: FlashDevice,
    bytes_written_total: u64,
    valid_blocks: BTreeMap<BlockRef, u32>,
    free_slots: Vec<u32>,
    block_writes: u64,
    rejected_writes: u64,
    invalidates_received: u64,
    stale_invalidates: u64,
}

impl StorageNodeState {
    pub fn new(spec: StorageNodeSpec, device: FlashDevice) -> Self {
        let slots = u32::try_from(spec.capacity_blocks).expect("capacity fits in u32");
        Self {
            spec,
            device,
            bytes_written_total: 0,
            valid_blocks: BTreeMap::new(),
            free_slots: (0..slots).rev().collect(),
            block_writes: 0,
            rejected_writes: 0,
            invalidates_received: 0,
            stale_invalidates: 0,
        }
    }

    pub fn spec(&self) -> &StorageNodeSpec {
        &self.spec
    }

    pub fn node_id(&self) -> NodeId {
        self.spec.node_id
    }

    /// Stores one block copy and returns the device service time.
    pub fn write_block(&mut self, block: BlockRef) -> Result<SimTime, StorageError> {
        let rejected = if self.remaining_write_capacity() == 0 {
            Some(StorageError::WornOut)
        } else if self.valid_blocks.contains_key(&block) {
            Some(StorageError::DuplicateBlock)
        } else if self.free_slots.is_empty() {
            Some(StorageError::SpaceExhausted)
        } else {
            None
        };
        if let Some(err) = rejected {
            self.rejected_writes += 1;
            return Err(err);
        }
        let slot = self.free_slots.pop().expect("checked non-empty");
        self.valid_blocks.insert(block, slot);
        self.bytes_written_total += self.spec.block_size_bytes;
        self.block_writes += 1;
        let pages = self.device.pages_per_block(self.spec.block_size_bytes);
        Ok(self.device.timing.device_latency(FlashOp::PageWrite, pages))
    }

    pub fn invalidate_block(&mut self, block: &BlockRef) -> Result<(), StorageError> {
        self.invalidates_received += 1;
        match self.valid_blocks.remove(block) {
            Some(slot) => {
                self.free_slots.push(slot);
                Ok(())
            }
            None => {
                self.stale_invalidates += 1;
                Err(StorageError::StaleInvalidate)
            }
        }
    }

    /// Accounts wear for metadata (block-map) writes that do not occupy a slot.
    pub fn record_metadata_write(&mut self, bytes: u64) {
        self.bytes_written_total += bytes;
    }

    pub fn bytes_written_total(&self) -> u64 {
        self.bytes_written_total
    }

    pub fn valid_count(&self) -> u64 {
        self.valid_blocks.len() as u64
    }

    pub fn free_slots(&self) -> u64 {
        self.free_slots.len() as u64
    }

    pub fn holds(&self, block: &BlockRef) -> bool {
        self.valid_blocks.contains_key(block)
    }

    pub fn valid_blocks(&self) -> impl Iterator<Item = &BlockRef> {
        self.valid_blocks.keys()
    }

    pub fn block_writes(&self) -> u64 {
        self.block_writes
    }

    pub fn rejected_writes(&self) -> u64 {
        self.rejected_writes
    }

    pub fn invalidates_received(&self) -> u64 {
        self.invalidates_received
    }

    pub fn stale_invalidates(&self) -> u64 {
        self.stale_invalidates
    }

    /// `bytes written * 100 / (node size * max erase cycles)`.
    pub fn percentage_wear(&self) -> f64 {
        let lifetime_bytes =
            self.spec.capacity_bytes() as f64 * self.spec.max_endurance_cycles as f64;
        self.bytes_written_total as f64 * 100.0 / lifetime_bytes
    }

    /// Block-writes the node can still absorb, floored at zero.
    pub fn remaining_write_capacity(&self) -> u64 {
        self.spec
            .initial_write_capacity()
            .saturating_sub(self.bytes_written_total / self.spec.block_size_bytes)
    }

    pub fn write_capacity(&self) -> WriteCapacity {
        WriteCapacity {
            initial: self.spec.initial_write_capacity(),
            remaining: self.remaining_write_capacity(),
        }
    }

    pub fn space_utilization(&self) -> f64 {
        self.valid_blocks.len() as f64 / self.spec.capacity_blocks as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ids::FileId;

    fn node(capacity_blocks: u64, cycles: u64) -> StorageNodeState {
        StorageNodeState::new(
            StorageNodeSpec {
                node_id: NodeId(0),
                rack: 0,
                capacity_blocks,
                block_size_bytes: DEFAULT_BLOCK_SIZE,
                max_endurance_cycles: cycles,
            },
            FlashDevice::default(),
        )
    }

    fn blk(i: u32) -> BlockRef {
        BlockRef::new(FileId(7), i, 0)
    }

    #[test]
    fn fresh_write_consumes_a_slot() {
        let mut n = node(10, 100);
        n.write_block(blk(0)).unwrap();
        assert_eq!(n.free_slots(), 9);
        assert_eq!(n.bytes_written_total(), 64 * MIB);
    }

    #[test]
    fn full_node_rejects_writes() {
        let mut n = node(1, 100);
        n.write_block(blk(0)).unwrap();
        assert_eq!(n.write_block(blk(1)), Err(StorageError::SpaceExhausted));
        assert_eq!(n.rejected_writes(), 1);
    }

    #[test]
    fn worn_node_rejects_writes() {
        let mut n = node(1, 2);
        n.write_block(blk(0)).unwrap();
        n.invalidate_block(&blk(0)).unwrap();
        n.write_block(blk(1)).unwrap();
        n.invalidate_block(&blk(1)).unwrap();
        assert_eq!(n.remaining_write_capacity(), 0);
        assert_eq!(n.write_block(blk(2)), Err(StorageError::WornOut));
    }

    #[test]
    fn block_write_latency_with_4k_pages() {
        let mut n = node(4, 100);
        // 64 MiB / 4 KiB = 16384 pages at 200us each
        assert_eq!(n.write_block(blk(0)).unwrap().as_micros(), 3_276_800);
    }

    #[test]
    fn invalidate_returns_slot() {
        let mut n = node(5, 100);
        n.write_block(blk(0)).unwrap();
        n.invalidate_block(&blk(0)).unwrap();
        assert_eq!(n.free_slots(), 5);
        assert_eq!(n.invalidate_block(&blk(0)), Err(StorageError::StaleInvalidate));
        assert_eq!(n.stale_invalidates(), 1);
    }

    #[test]
    fn writes_then_invalidates_restore_occupancy() {
        let mut n = node(32, 100);
        for i in 0..20 {
            n.write_block(blk(i)).unwrap();
        }
        let written = n.bytes_written_total();
        for i in 0..20 {
            n.invalidate_block(&blk(i)).unwrap();
        }
        assert_eq!(n.free_slots(), 32);
        assert_eq!(n.valid_count(), 0);
        assert_eq!(n.bytes_written_total(), written);
        assert_eq!(written, 20 * 64 * MIB);
    }

    #[test]
    fn percentage_wear_examples() {
        let mut n = node(100, 100);
        assert_eq!(n.percentage_wear(), 0.0);
        n.record_metadata_write(32_000 * MIB);
        assert_eq!(n.percentage_wear(), 5.0);

        let mut worn = node(3, 10);
        worn.record_metadata_write(3 * 10 * 64 * MIB);
        assert_eq!(worn.percentage_wear(), 100.0);
    }

    #[test]
    fn remaining_capacity_examples() {
        let mut n = node(1000, 100);
        assert_eq!(n.remaining_write_capacity(), 100_000);
        n.record_metadata_write(500 * 64 * MIB);
        assert_eq!(n.remaining_write_capacity(), 99_500);
        n.record_metadata_write(200_000 * 64 * MIB);
        assert_eq!(n.remaining_write_capacity(), 0);
    }

    #[test]
    fn utilization_examples() {
        let mut n = node(100, 10);
        assert_eq!(n.space_utilization(), 0.0);
        for i in 0..25 {
            n.write_block(blk(i)).unwrap();
        }
        assert_eq!(n.space_utilization(), 0.25);
        let mut full = node(2, 10);
        full.write_block(blk(0)).unwrap();
        full.write_block(blk(1)).unwrap();
        assert_eq!(full.space_utilization(), 1.0);
    }
}
