use crate::error::SimError;
use crate::ids::{FileId, NodeId};
use crate::node::{Directory, GrantRecord, Note, Outbox};
use crate::sim::{Message, MessageBody, OpenMode};

use super::locks::{Acquire, LockTable, MapLocationTable};
use super::reconcile::{ReconciliationState, ReplyOutcome, ServerSnapshot};
use super::write_array::{apportion, round_robin_select, rounding_phase, GrantId, WriteArray, WriteArrayEntry};

/// Management server of the write-array protocol.
#[derive(Debug, Clone)]
pub struct Manager {
    id: NodeId,
    peers: Vec<NodeId>,
    pub locks: LockTable,
    pub maps: MapLocationTable,
    pub recon: ReconciliationState,
    array_len: usize,
    cursor: usize,
    epoch: u64,
}

impl Manager {
    pub fn new(
        id: NodeId,
        dir: &Directory,
        initial: Vec<ServerSnapshot>,
        phi: u64,
        array_len: usize,
    ) -> Self {
        Self {
            id,
            peers: dir.managers.iter().copied().filter(|m| *m != id).collect(),
            locks: LockTable::default(),
            maps: MapLocationTable::default(),
            recon: ReconciliationState::new(phi, initial),
            array_len,
            cursor: 0,
            epoch: 0,
        }
    }

    pub fn id(&self) -> NodeId {
        self.id
    }

    /// Returns `Ok(false)` for messages this role does not handle.
    pub fn handle(&mut self, msg: &Message, dir: &Directory, out: &mut Outbox) -> Result<bool, SimError> {
        match &msg.body {
            MessageBody::LockRequest { file, mode } => {
                self.check_home(*file, dir)?;
                self.open(msg.source, *file, *mode, out);
            }
            MessageBody::LockRelease { .. } => {}
            MessageBody::CloseNotify {
                file,
                map_location,
                deleted,
            } => {
                self.check_home(*file, dir)?;
                self.close(msg.source, *file, *map_location, *deleted, out)?;
            }
            MessageBody::WriteArrayRequest { requested_total } => {
                let array = self.fill_write_array(msg.source, *requested_total, out);
                let utilization = self.recon.snapshot.iter().map(|s| s.utilization).collect();
                out.send(msg.source, MessageBody::WriteArrayGrant { array, utilization });
            }
            MessageBody::ReconcileReply {
                round,
                remaining_write_capacity,
                utilization,
            } => {
                let outcome =
                    self.recon
                        .record_reply(*round, msg.source, *remaining_write_capacity, *utilization);
                if let ReplyOutcome::Completed { next_round } = outcome {
                    for peer in &self.peers {
                        out.send(
                            *peer,
                            MessageBody::ReconcileSync {
                                snapshot: self.recon.snapshot.clone(),
                            },
                        );
                    }
                    if let Some(round) = next_round {
                        self.query(round, out);
                    }
                }
            }
            MessageBody::ReconcileSync { snapshot } => {
                self.recon.replace_snapshot(snapshot.clone());
            }
            _ => return Ok(false),
        }
        Ok(true)
    }

    fn check_home(&self, file: FileId, dir: &Directory) -> Result<(), SimError> {
        if dir.home_manager(file) == self.id {
            Ok(())
        } else {
            Err(SimError::Protocol {
                node: self.id,
                detail: format!("file {file} is not homed here"),
            })
        }
    }

    fn open(&mut self, client: NodeId, file: FileId, mode: OpenMode, out: &mut Outbox) {
        let map_location = self.maps.get(file);
        match mode {
            // Readers see the last closed version and never wait.
            OpenMode::Read => match map_location {
                Some(_) => out.send(
                    client,
                    MessageBody::LockGrant {
                        file,
                        mode,
                        map_location,
                    },
                ),
                None => out.send(client, MessageBody::LockDeny { file }),
            },
            OpenMode::Write => {
                if self.locks.acquire(file, client) == Acquire::Granted {
                    out.send(
                        client,
                        MessageBody::LockGrant {
                            file,
                            mode,
                            map_location,
                        },
                    );
                }
            }
        }
    }

    fn close(
        &mut self,
        client: NodeId,
        file: FileId,
        map_location: Option<NodeId>,
        deleted: bool,
        out: &mut Outbox,
    ) -> Result<(), SimError> {
        if deleted {
            self.maps.remove(file);
        } else if let Some(y) = map_location {
            self.maps.set(file, y);
        }
        let next = self.locks.release(file, client).map_err(|holder| SimError::Protocol {
            node: self.id,
            detail: format!("close of {file} by {client}, holder {holder:?}"),
        })?;
        if let Some(next) = next {
            out.send(
                next,
                MessageBody::LockGrant {
                    file,
                    mode: OpenMode::Write,
                    map_location: self.maps.get(file),
                },
            );
        }
        Ok(())
    }

    /// Builds a grant for `client` from the last known capacities, or `None`
    /// when no storage server has capacity left.
    pub fn fill_write_array(&mut self, client: NodeId, requested_total: u64, out: &mut Outbox) -> Option<WriteArray> {
        let caps: Vec<u64> = self
            .recon
            .snapshot
            .iter()
            .map(|s| s.remaining_write_capacity)
            .collect();
        let (chosen, next_cursor) = round_robin_select(&caps, self.array_len, self.cursor);
        if chosen.is_empty() {
            out.note(Note::ClusterWornOut);
            return None;
        }
        self.cursor = next_cursor;
        let chosen_caps: Vec<u64> = chosen.iter().map(|&i| caps[i]).collect();
        let budgets = apportion(requested_total, &chosen_caps, rounding_phase(self.epoch));
        let grant = GrantId {
            manager: self.id,
            window: self.recon.window,
            epoch: self.epoch,
        };
        self.epoch += 1;
        let entries: Vec<WriteArrayEntry> = chosen
            .iter()
            .zip(&budgets)
            .map(|(&i, &budget)| WriteArrayEntry {
                server: self.recon.snapshot[i].server,
                budget,
            })
            .collect();
        out.note(Note::Granted(GrantRecord {
            id: grant,
            client,
            requested_total,
            capacities: self
                .recon
                .snapshot
                .iter()
                .map(|s| (s.server, s.remaining_write_capacity))
                .collect(),
            array_len: self.array_len,
            entries: entries.clone(),
        }));
        if let Some(round) = self.recon.record_grant(budgets.iter().sum()) {
            self.query(round, out);
        }
        Some(WriteArray::new(grant, entries))
    }

    fn query(&self, round: u64, out: &mut Outbox) {
        for s in &self.recon.snapshot {
            out.send(s.server, MessageBody::ReconcileQuery { round });
        }
    }
}
