//! Plumbing shared by every role's state machine.

use std::collections::BTreeMap;

use crate::cluster::{FlashDevice, StorageError, StorageNodeSpec, StorageNodeState, Topology};
use crate::ids::{BlockRef, FileId, NodeId};
use crate::protocol::{BlockMap, GrantId, WriteArrayEntry};
use crate::sim::{FlashOp, Message, MessageBody, SimTime};

/// Cluster membership as every node knows it.
#[derive(Debug, Clone)]
pub struct Directory {
    pub storage: Vec<NodeId>,
    pub managers: Vec<NodeId>,
    pub clients: Vec<NodeId>,
}

impl Directory {
    pub fn from_topology(topo: &Topology) -> Self {
        Self {
            storage: topo.storage_nodes().map(|n| n.id).collect(),
            managers: topo.managers().map(|n| n.id).collect(),
            clients: topo.clients().map(|n| n.id).collect(),
        }
    }

    /// Management server responsible for `file`'s lock and map location.
    pub fn home_manager(&self, file: FileId) -> NodeId {
        let h = splitmix64(file.0);
        self.managers[(h % self.managers.len() as u64) as usize]
    }

    pub fn storage_index(&self, node: NodeId) -> Option<usize> {
        self.storage.iter().position(|s| *s == node)
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Grant as recorded for auditing.
#[derive(Debug, Clone, PartialEq)]
pub struct GrantRecord {
    pub id: GrantId,
    pub client: NodeId,
    pub requested_total: u64,
    /// Remaining capacity of every storage server as the manager knew it.
    pub capacities: Vec<(NodeId, u64)>,
    pub array_len: usize,
    pub entries: Vec<WriteArrayEntry>,
}

/// Side effects a handler reports to the simulation driver.
#[derive(Debug, Clone, PartialEq)]
pub enum Note {
    OpCompleted { client: NodeId, op_seq: u64 },
    ClusterWornOut,
    BlockWritten { server: NodeId, block: BlockRef, voucher: Option<GrantId> },
    WriteRejected { server: NodeId, block: BlockRef, error: StorageError },
    StaleInvalidate { server: NodeId, block: BlockRef },
    Granted(GrantRecord),
}

#[derive(Debug, Default)]
pub struct Outbox {
    pub sends: Vec<(NodeId, MessageBody)>,
    pub notes: Vec<Note>,
}

impl Outbox {
    pub fn send(&mut self, to: NodeId, body: MessageBody) {
        self.sends.push((to, body));
    }

    pub fn note(&mut self, note: Note) {
        self.notes.push(note);
    }
}

/// Knobs of the storage role.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StorageParams {
    /// Pages read or written for one block-map access.
    pub map_io_pages: u64,
    /// Charge a block erase per invalidated block.
    pub charge_erase_on_invalidate: bool,
}

impl Default for StorageParams {
    fn default() -> Self {
        Self {
            map_io_pages: 1,
            charge_erase_on_invalidate: false,
        }
    }
}

/// Storage role: the flash device plus the block maps stored on it.
#[derive(Debug, Clone)]
pub struct StorageServer {
    pub state: StorageNodeState,
    device: FlashDevice,
    params: StorageParams,
    maps: BTreeMap<FileId, BlockMap>,
}

impl StorageServer {
    pub fn new(spec: StorageNodeSpec, device: FlashDevice, params: StorageParams) -> Self {
        Self {
            state: StorageNodeState::new(spec, device),
            device,
            params,
            maps: BTreeMap::new(),
        }
    }

    pub fn id(&self) -> NodeId {
        self.state.node_id()
    }

    pub fn map(&self, file: FileId) -> Option<&BlockMap> {
        self.maps.get(&file)
    }

    pub fn forget_map(&mut self, file: FileId) {
        self.maps.remove(&file);
    }

    /// Applies `msg` and returns the device service time.
    pub fn handle(&mut self, msg: &Message, out: &mut Outbox) -> Option<SimTime> {
        let me = self.id();
        let timing = self.device.timing;
        let service = match &msg.body {
            MessageBody::BlockWrite { block, voucher } => match self.state.write_block(*block) {
                Ok(t) => {
                    out.note(Note::BlockWritten {
                        server: me,
                        block: *block,
                        voucher: *voucher,
                    });
                    out.send(
                        msg.source,
                        MessageBody::BlockWriteAck {
                            block: *block,
                            rejected: None,
                        },
                    );
                    t
                }
                Err(error) => {
                    out.note(Note::WriteRejected {
                        server: me,
                        block: *block,
                        error,
                    });
                    out.send(
                        msg.source,
                        MessageBody::BlockWriteAck {
                            block: *block,
                            rejected: Some(error),
                        },
                    );
                    SimTime::ZERO
                }
            },
            MessageBody::Invalidate { block } => self.invalidate(std::slice::from_ref(block), out),
            MessageBody::InvalidateBatch { blocks } => self.invalidate(blocks, out),
            MessageBody::MapRead { file } => {
                out.send(
                    msg.source,
                    MessageBody::MapReadReply {
                        file: *file,
                        map: self.maps.get(file).cloned(),
                    },
                );
                timing.device_latency(FlashOp::PageRead, self.params.map_io_pages)
            }
            MessageBody::MapWrite { file, map, .. } => {
                self.maps.insert(*file, map.clone());
                self.state
                    .record_metadata_write(self.params.map_io_pages * self.device.page_size_bytes);
                timing.device_latency(FlashOp::PageWrite, self.params.map_io_pages)
            }
            MessageBody::ReconcileQuery { round } => {
                out.send(
                    msg.source,
                    MessageBody::ReconcileReply {
                        round: *round,
                        remaining_write_capacity: self.state.remaining_write_capacity(),
                        utilization: self.state.space_utilization(),
                    },
                );
                SimTime::ZERO
            }
            _ => return None,
        };
        Some(service)
    }

    fn invalidate(&mut self, blocks: &[BlockRef], out: &mut Outbox) -> SimTime {
        let me = self.id();
        let mut erased = 0;
        for block in blocks {
            match self.state.invalidate_block(block) {
                Ok(()) => erased += 1,
                Err(_) => out.note(Note::StaleInvalidate {
                    server: me,
                    block: *block,
                }),
            }
        }
        if self.params.charge_erase_on_invalidate {
            self.device.timing.device_latency(FlashOp::BlockErase, erased)
        } else {
            SimTime::ZERO
        }
    }
}
