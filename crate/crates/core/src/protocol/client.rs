use std::collections::{BTreeMap, VecDeque};

use crate::error::SimError;
use crate::ids::{BlockRef, FileId, NodeId};
use crate::node::{Directory, Note, Outbox};
use crate::sim::{Message, MessageBody, OpenMode};
use crate::cluster::StorageError;
use crate::workload::{FileOp, OpKind};

use super::block_map::{BlockMap, MapEntry};
use super::invalidation::{BandTable, InvalidationBuffer};
use super::write_array::WriteArray;

#[derive(Debug, Clone)]
pub struct ClientParams {
    /// Block-writes asked for in each write-array request.
    pub grant_total: u64,
    pub delayed_invalidations: bool,
    pub flush_on_close: bool,
    pub bands: BandTable,
    /// Placement attempts per block before the run gives up.
    pub max_attempts: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Locking,
    ReadingMap,
    Writing,
    Closing,
}

#[derive(Debug, Clone, Default)]
struct Retry {
    attempts: u32,
    excluded: Vec<NodeId>,
}

#[derive(Debug, Clone)]
struct Session {
    op: FileOp,
    phase: Phase,
    old_map_location: Option<NodeId>,
    map: BlockMap,
    pending: VecDeque<u32>,
    in_flight: usize,
    retries: BTreeMap<u32, Retry>,
}

/// Client side of the write-array protocol: caches the granted array and
/// the block map of the open file, and delays invalidations per server.
#[derive(Debug, Clone)]
pub struct Client {
    id: NodeId,
    params: ClientParams,
    array: Option<WriteArray>,
    array_fresh: bool,
    awaiting_array: bool,
    next_manager: usize,
    utilization: BTreeMap<NodeId, f64>,
    buffer: InvalidationBuffer,
    session: Option<Session>,
}

impl Client {
    pub fn new(id: NodeId, params: ClientParams) -> Self {
        Self {
            id,
            params,
            array: None,
            array_fresh: false,
            awaiting_array: false,
            next_manager: 0,
            utilization: BTreeMap::new(),
            buffer: InvalidationBuffer::default(),
            session: None,
        }
    }

    pub fn id(&self) -> NodeId {
        self.id
    }

    pub fn is_idle(&self) -> bool {
        self.session.is_none()
    }

    /// File whose write lock this client currently holds.
    pub fn held_lock(&self) -> Option<FileId> {
        self.session
            .as_ref()
            .filter(|s| s.phase != Phase::Locking)
            .map(|s| s.op.file)
    }

    pub fn array(&self) -> Option<&WriteArray> {
        self.array.as_ref()
    }

    pub fn buffered(&self) -> &InvalidationBuffer {
        &self.buffer
    }

    /// Opens the file of `op` for writing.
    pub fn start(&mut self, op: FileOp, dir: &Directory, out: &mut Outbox) -> Result<(), SimError> {
        if self.session.is_some() {
            return Err(self.violation("operation started while another is open"));
        }
        out.send(
            dir.home_manager(op.file),
            MessageBody::LockRequest {
                file: op.file,
                mode: OpenMode::Write,
            },
        );
        self.session = Some(Session {
            map: BlockMap::new(op.file),
            op,
            phase: Phase::Locking,
            old_map_location: None,
            pending: VecDeque::new(),
            in_flight: 0,
            retries: BTreeMap::new(),
        });
        Ok(())
    }

    /// Sends every buffered invalidation.
    pub fn drain(&mut self, out: &mut Outbox) {
        for (server, blocks) in self.buffer.drain() {
            out.send(server, MessageBody::InvalidateBatch { blocks });
        }
    }

    pub fn handle(&mut self, msg: &Message, dir: &Directory, out: &mut Outbox) -> Result<bool, SimError> {
        match &msg.body {
            MessageBody::LockGrant {
                file,
                mode: OpenMode::Write,
                map_location,
            } => {
                let s = self.session_in(*file, Phase::Locking)?;
                s.old_map_location = *map_location;
                match map_location {
                    Some(x) => {
                        s.phase = Phase::ReadingMap;
                        out.send(*x, MessageBody::MapRead { file: *file });
                    }
                    None => self.proceed(dir, out)?,
                }
            }
            MessageBody::MapReadReply { file, map } => {
                let me = self.id;
                let s = self.session_in(*file, Phase::ReadingMap)?;
                s.map = map.clone().ok_or_else(|| SimError::Protocol {
                    node: me,
                    detail: format!("block map of {file} missing at {}", msg.source),
                })?;
                self.proceed(dir, out)?;
            }
            MessageBody::WriteArrayGrant { array, utilization } => {
                self.awaiting_array = false;
                for (server, u) in dir.storage.iter().zip(utilization) {
                    self.utilization.insert(*server, *u);
                }
                match array {
                    None => out.note(Note::ClusterWornOut),
                    Some(array) => {
                        self.array = Some(array.clone());
                        self.array_fresh = true;
                        match self.session.as_ref().map(|s| s.phase) {
                            Some(Phase::Writing) => self.pump(dir, out)?,
                            Some(Phase::Closing) => self.close(dir, out),
                            _ => {}
                        }
                    }
                }
            }
            MessageBody::BlockWriteAck { block, rejected } => {
                self.on_ack(msg.source, *block, *rejected, dir, out)?;
            }
            _ => return Ok(false),
        }
        Ok(true)
    }

    fn violation(&self, detail: impl Into<String>) -> SimError {
        SimError::Protocol {
            node: self.id,
            detail: detail.into(),
        }
    }

    fn session_in(&mut self, file: FileId, phase: Phase) -> Result<&mut Session, SimError> {
        let me = self.id;
        match self.session.as_mut() {
            Some(s) if s.op.file == file && s.phase == phase => Ok(s),
            _ => Err(SimError::Protocol {
                node: me,
                detail: format!("unexpected reply for {file} (expected {phase:?})"),
            }),
        }
    }

    fn proceed(&mut self, dir: &Directory, out: &mut Outbox) -> Result<(), SimError> {
        let s = self.session.as_mut().expect("open session");
        match s.op.kind {
            OpKind::Create | OpKind::Rewrite => {
                s.phase = Phase::Writing;
                s.pending = (0..s.op.blocks).collect();
                self.pump(dir, out)
            }
            OpKind::Delete => {
                let copies: Vec<_> = s.map.copies().collect();
                for (server, block) in copies {
                    self.invalidate(server, block, out);
                }
                self.finish(dir, None, true, out);
                Ok(())
            }
        }
    }

    /// Places pending blocks until the array runs dry.
    fn pump(&mut self, dir: &Directory, out: &mut Outbox) -> Result<(), SimError> {
        let max_attempts = self.params.max_attempts;
        let s = self.session.as_mut().expect("open session");
        while let Some(&index) = s.pending.front() {
            let current = s.map.get(index);
            let retry = s.retries.entry(index).or_default();
            let picked = self.array.as_mut().and_then(|a| {
                a.pick_server(1, current.map(|e| e.server), &retry.excluded)
                    .map(|server| (server, a.grant))
            });
            let Some((server, grant)) = picked else {
                if self.array_fresh {
                    // A fresh grant with nothing usable for this block.
                    retry.attempts += 1;
                    if retry.attempts > max_attempts {
                        return Err(SimError::ClusterFull {
                            block: BlockRef::new(s.op.file, index, 0),
                            attempts: retry.attempts,
                        });
                    }
                }
                self.array_fresh = false;
                Self::request_array(
                    &mut self.awaiting_array,
                    &mut self.next_manager,
                    self.params.grant_total,
                    dir,
                    out,
                );
                return Ok(());
            };
            self.array_fresh = false;
            s.pending.pop_front();
            let generation = current.map_or(0, |e| e.generation + 1);
            out.send(
                server,
                MessageBody::BlockWrite {
                    block: BlockRef::new(s.op.file, index, generation),
                    voucher: Some(grant),
                },
            );
            s.in_flight += 1;
        }
        if s.in_flight == 0 {
            self.close(dir, out);
        }
        Ok(())
    }

    fn on_ack(
        &mut self,
        server: NodeId,
        block: BlockRef,
        rejected: Option<StorageError>,
        dir: &Directory,
        out: &mut Outbox,
    ) -> Result<(), SimError> {
        let max_attempts = self.params.max_attempts;
        let s = self.session_in(block.file, Phase::Writing)?;
        s.in_flight -= 1;
        match rejected {
            None => {
                s.retries.remove(&block.index);
                let entry = MapEntry {
                    server,
                    generation: block.generation,
                };
                if let Some(old) = s.map.insert(block.index, entry) {
                    let stale = BlockRef::new(block.file, block.index, old.generation);
                    self.invalidate(old.server, stale, out);
                }
                let s = self.session.as_ref().expect("open session");
                if s.in_flight == 0 && s.pending.is_empty() {
                    self.close(dir, out);
                }
            }
            Some(error) => {
                let retry = s.retries.entry(block.index).or_default();
                retry.attempts += 1;
                if retry.attempts > max_attempts {
                    return Err(SimError::ClusterFull {
                        block,
                        attempts: retry.attempts,
                    });
                }
                s.pending.push_front(block.index);
                // Held-back invalidations may be what keeps the server full.
                let flushed = error == StorageError::SpaceExhausted && self.flush(server, out);
                let s = self.session.as_mut().expect("open session");
                if !flushed {
                    s.retries.entry(block.index).or_default().excluded.push(server);
                }
                if !self.awaiting_array {
                    self.pump(dir, out)?;
                }
            }
        }
        Ok(())
    }

    /// Writes the block map to a server other than the previous one and
    /// tells the home manager where it went.
    fn close(&mut self, dir: &Directory, out: &mut Outbox) {
        let s = self.session.as_mut().expect("open session");
        s.phase = Phase::Closing;
        let avoid = s.old_map_location;
        let picked = self
            .array
            .as_mut()
            .and_then(|a| a.pick_server(1, avoid, &[]).map(|y| (y, a.grant)));
        let Some((y, grant)) = picked else {
            self.array_fresh = false;
            Self::request_array(
                &mut self.awaiting_array,
                &mut self.next_manager,
                self.params.grant_total,
                dir,
                out,
            );
            return;
        };
        self.array_fresh = false;
        out.send(
            y,
            MessageBody::MapWrite {
                file: s.op.file,
                map: s.map.clone(),
                voucher: Some(grant),
            },
        );
        self.finish(dir, Some(y), false, out);
    }

    fn finish(&mut self, dir: &Directory, map_location: Option<NodeId>, deleted: bool, out: &mut Outbox) {
        let s = self.session.take().expect("open session");
        let file = s.op.file;
        out.send(
            dir.home_manager(file),
            MessageBody::CloseNotify {
                file,
                map_location,
                deleted,
            },
        );
        if self.params.flush_on_close {
            let servers: Vec<NodeId> = self
                .buffer
                .iter()
                .filter(|(_, b)| b.file == file)
                .map(|(server, _)| server)
                .collect();
            for server in servers {
                self.flush(server, out);
            }
        }
        out.note(Note::OpCompleted {
            client: self.id,
            op_seq: s.op.seq,
        });
    }

    fn request_array(
        awaiting: &mut bool,
        next_manager: &mut usize,
        grant_total: u64,
        dir: &Directory,
        out: &mut Outbox,
    ) {
        if *awaiting {
            return;
        }
        *awaiting = true;
        let manager = dir.managers[*next_manager % dir.managers.len()];
        *next_manager += 1;
        out.send(
            manager,
            MessageBody::WriteArrayRequest {
                requested_total: grant_total,
            },
        );
    }

    fn invalidate(&mut self, server: NodeId, block: BlockRef, out: &mut Outbox) {
        if !self.params.delayed_invalidations {
            out.send(server, MessageBody::Invalidate { block });
            return;
        }
        let utilization = self.utilization.get(&server).copied().unwrap_or(0.0);
        let threshold = self.params.bands.threshold(utilization);
        if let Some(blocks) = self.buffer.push(server, block, threshold) {
            out.send(server, MessageBody::InvalidateBatch { blocks });
        }
    }

    fn flush(&mut self, server: NodeId, out: &mut Outbox) -> bool {
        match self.buffer.take(server) {
            Some(blocks) => {
                out.send(server, MessageBody::InvalidateBatch { blocks });
                true
            }
            None => false,
        }
    }
}
