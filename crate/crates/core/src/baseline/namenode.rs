use std::collections::BTreeMap;

use rand_chacha::ChaCha8Rng;

use crate::cluster::Topology;
use crate::error::SimError;
use crate::ids::{BlockRef, FileId, NodeId};
use crate::node::{Directory, Outbox};
use crate::protocol::{Acquire, LockTable};
use crate::sim::{Message, MessageBody, OpenMode};

use super::placement::{choose_targets, CandidateState, PlacementRequest, Thresholds};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineParams {
    pub replica_count: usize,
    pub space_floor: f64,
    pub load_factor: f64,
}

impl Default for BaselineParams {
    fn default() -> Self {
        Self {
            replica_count: 3,
            space_floor: 0.05,
            load_factor: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Placement {
    pub generation: u32,
    pub replicas: Vec<NodeId>,
}

/// Namenode of the baseline: keeps the namespace and places every replica.
#[derive(Debug, Clone)]
pub struct Namenode {
    id: NodeId,
    params: BaselineParams,
    rng: ChaCha8Rng,
    pub locks: LockTable,
    files: BTreeMap<FileId, BTreeMap<u32, Placement>>,
    /// Placements of files open for writing, committed at close.
    staged: BTreeMap<FileId, BTreeMap<u32, Placement>>,
}

impl Namenode {
    pub fn new(id: NodeId, params: BaselineParams, rng: ChaCha8Rng) -> Self {
        Self {
            id,
            params,
            rng,
            locks: LockTable::default(),
            files: BTreeMap::new(),
            staged: BTreeMap::new(),
        }
    }

    pub fn id(&self) -> NodeId {
        self.id
    }

    pub fn files(&self) -> &BTreeMap<FileId, BTreeMap<u32, Placement>> {
        &self.files
    }

    /// `states` must be provided for `AddBlock` messages.
    pub fn handle(
        &mut self,
        msg: &Message,
        topo: &Topology,
        states: Option<&BTreeMap<NodeId, CandidateState>>,
        out: &mut Outbox,
    ) -> Result<bool, SimError> {
        match &msg.body {
            MessageBody::LockRequest { file, mode } => match mode {
                OpenMode::Read => {
                    if self.files.contains_key(file) {
                        out.send(
                            msg.source,
                            MessageBody::LockGrant {
                                file: *file,
                                mode: *mode,
                                map_location: None,
                            },
                        );
                    } else {
                        out.send(msg.source, MessageBody::LockDeny { file: *file });
                    }
                }
                OpenMode::Write => {
                    if self.locks.acquire(*file, msg.source) == Acquire::Granted {
                        out.send(
                            msg.source,
                            MessageBody::LockGrant {
                                file: *file,
                                mode: *mode,
                                map_location: None,
                            },
                        );
                    }
                }
            },
            MessageBody::LockRelease { .. } => {}
            MessageBody::AddBlock { file, index } => {
                if self.locks.holder(*file) != Some(msg.source) {
                    return Err(self.violation(format!("add block to {file} without the lock")));
                }
                let states = states.expect("candidate states supplied for AddBlock");
                let generation = self
                    .staged
                    .get(file)
                    .and_then(|m| m.get(index))
                    .or_else(|| self.files.get(file).and_then(|m| m.get(index)))
                    .map_or(0, |p| p.generation + 1);
                let thresholds = Thresholds::from_states(states, self.params.load_factor, self.params.space_floor);
                let req = PlacementRequest {
                    writer: msg.source,
                    replica_count: self.params.replica_count,
                };
                let targets = choose_targets(&req, topo, states, &thresholds, &mut self.rng)?;
                let replaced = self.staged.entry(*file).or_default().insert(
                    *index,
                    Placement {
                        generation,
                        replicas: targets.clone(),
                    },
                );
                if let Some(p) = replaced {
                    invalidate(BlockRef::new(*file, *index, p.generation), &p.replicas, out);
                }
                out.send(
                    msg.source,
                    MessageBody::AddBlockReply {
                        block: BlockRef::new(*file, *index, generation),
                        targets,
                    },
                );
            }
            MessageBody::CloseNotify { file, deleted, .. } => {
                let staged = self.staged.remove(file).unwrap_or_default();
                if *deleted {
                    let current = self.files.remove(file).unwrap_or_default();
                    for (index, p) in current.into_iter().chain(staged) {
                        invalidate(BlockRef::new(*file, index, p.generation), &p.replicas, out);
                    }
                } else {
                    let current = self.files.entry(*file).or_default();
                    for (index, p) in staged {
                        if let Some(old) = current.insert(index, p) {
                            invalidate(BlockRef::new(*file, index, old.generation), &old.replicas, out);
                        }
                    }
                }
                let next = self.locks.release(*file, msg.source).map_err(|holder| {
                    self.violation(format!("close of {file} by {}, holder {holder:?}", msg.source))
                })?;
                if let Some(next) = next {
                    out.send(
                        next,
                        MessageBody::LockGrant {
                            file: *file,
                            mode: OpenMode::Write,
                            map_location: None,
                        },
                    );
                }
            }
            _ => return Ok(false),
        }
        Ok(true)
    }

    fn violation(&self, detail: String) -> SimError {
        SimError::Protocol { node: self.id, detail }
    }
}

fn invalidate(block: BlockRef, replicas: &[NodeId], out: &mut Outbox) {
    for server in replicas {
        out.send(*server, MessageBody::Invalidate { block });
    }
}

/// Directory lookup used by baseline clients: the namenode of a file is its
/// home management server.
pub fn namenode_of(dir: &Directory, file: FileId) -> NodeId {
    dir.home_manager(file)
}
