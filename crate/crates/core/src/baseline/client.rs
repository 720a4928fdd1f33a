use crate::error::SimError;
use crate::ids::NodeId;
use crate::node::{Directory, Note, Outbox};
use crate::sim::{Message, MessageBody, OpenMode};
use crate::workload::{FileOp, OpKind};

use super::namenode::namenode_of;

#[derive(Debug, Clone)]
struct Session {
    op: FileOp,
    locked: bool,
    awaiting_placements: u32,
    in_flight: usize,
}

/// Baseline client: asks the namenode for targets block by block and
/// writes every replica itself.
#[derive(Debug, Clone)]
pub struct HdfsClient {
    id: NodeId,
    session: Option<Session>,
}

impl HdfsClient {
    pub fn new(id: NodeId) -> Self {
        Self { id, session: None }
    }

    pub fn id(&self) -> NodeId {
        self.id
    }

    pub fn is_idle(&self) -> bool {
        self.session.is_none()
    }

    pub fn held_lock(&self) -> Option<crate::ids::FileId> {
        self.session.as_ref().filter(|s| s.locked).map(|s| s.op.file)
    }

    pub fn start(&mut self, op: FileOp, dir: &Directory, out: &mut Outbox) -> Result<(), SimError> {
        if self.session.is_some() {
            return Err(self.violation("operation started while another is open".into()));
        }
        out.send(
            namenode_of(dir, op.file),
            MessageBody::LockRequest {
                file: op.file,
                mode: OpenMode::Write,
            },
        );
        self.session = Some(Session {
            op,
            locked: false,
            awaiting_placements: 0,
            in_flight: 0,
        });
        Ok(())
    }

    pub fn handle(&mut self, msg: &Message, dir: &Directory, out: &mut Outbox) -> Result<bool, SimError> {
        let me = self.id;
        match &msg.body {
            MessageBody::LockGrant {
                file,
                mode: OpenMode::Write,
                ..
            } => {
                let s = self.session_for(*file)?;
                s.locked = true;
                match s.op.kind {
                    OpKind::Create | OpKind::Rewrite => {
                        s.awaiting_placements = s.op.blocks;
                        for index in 0..s.op.blocks {
                            out.send(msg.source, MessageBody::AddBlock { file: *file, index });
                        }
                    }
                    OpKind::Delete => self.finish(dir, true, out),
                }
            }
            MessageBody::AddBlockReply { block, targets } => {
                let s = self.session_for(block.file)?;
                s.awaiting_placements -= 1;
                s.in_flight += targets.len();
                for t in targets {
                    out.send(
                        *t,
                        MessageBody::BlockWrite {
                            block: *block,
                            voucher: None,
                        },
                    );
                }
                self.maybe_close(dir, out);
            }
            // A rejected replica is left out; the block stays under-replicated.
            MessageBody::BlockWriteAck { block, .. } => {
                let s = self.session_for(block.file)?;
                s.in_flight = s.in_flight.checked_sub(1).ok_or_else(|| SimError::Protocol {
                    node: me,
                    detail: "unexpected write ack".into(),
                })?;
                self.maybe_close(dir, out);
            }
            _ => return Ok(false),
        }
        Ok(true)
    }

    fn session_for(&mut self, file: crate::ids::FileId) -> Result<&mut Session, SimError> {
        let me = self.id;
        match self.session.as_mut() {
            Some(s) if s.op.file == file => Ok(s),
            _ => Err(SimError::Protocol {
                node: me,
                detail: format!("unexpected reply for {file}"),
            }),
        }
    }

    fn maybe_close(&mut self, dir: &Directory, out: &mut Outbox) {
        let s = self.session.as_ref().expect("open session");
        if s.awaiting_placements == 0 && s.in_flight == 0 {
            self.finish(dir, false, out);
        }
    }

    fn finish(&mut self, dir: &Directory, deleted: bool, out: &mut Outbox) {
        let s = self.session.take().expect("open session");
        out.send(
            namenode_of(dir, s.op.file),
            MessageBody::CloseNotify {
                file: s.op.file,
                map_location: None,
                deleted,
            },
        );
        out.note(Note::OpCompleted {
            client: self.id,
            op_seq: s.op.seq,
        });
    }

    fn violation(&self, detail: String) -> SimError {
        SimError::Protocol { node: self.id, detail }
    }
}
