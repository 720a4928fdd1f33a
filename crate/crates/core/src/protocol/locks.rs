use std::collections::{BTreeMap, VecDeque};

use crate::ids::{FileId, NodeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Acquire {
    Granted,
    Queued,
}

#[derive(Debug, Clone, Default)]
struct LockEntry {
    holder: Option<NodeId>,
    waiters: VecDeque<NodeId>,
}

/// Write locks of the files homed on one management server.
///
/// At most one client holds a file; later requesters wait in FIFO order and
/// receive the lock when the holder releases it.
#[derive(Debug, Clone, Default)]
pub struct LockTable {
    files: BTreeMap<FileId, LockEntry>,
}

impl LockTable {
    pub fn acquire(&mut self, file: FileId, client: NodeId) -> Acquire {
        let entry = self.files.entry(file).or_default();
        match entry.holder {
            None => {
                entry.holder = Some(client);
                Acquire::Granted
            }
            Some(_) => {
                entry.waiters.push_back(client);
                Acquire::Queued
            }
        }
    }

    /// Releases `client`'s lock and hands it to the next waiter, if any.
    /// Returns `Err` when `client` is not the holder.
    pub fn release(&mut self, file: FileId, client: NodeId) -> Result<Option<NodeId>, Option<NodeId>> {
        let Some(entry) = self.files.get_mut(&file) else {
            return Err(None);
        };
        if entry.holder != Some(client) {
            return Err(entry.holder);
        }
        entry.holder = entry.waiters.pop_front();
        let next = entry.holder;
        if next.is_none() {
            self.files.remove(&file);
        }
        Ok(next)
    }

    pub fn holder(&self, file: FileId) -> Option<NodeId> {
        self.files.get(&file).and_then(|e| e.holder)
    }

    pub fn waiters(&self, file: FileId) -> usize {
        self.files.get(&file).map_or(0, |e| e.waiters.len())
    }

    pub fn held(&self) -> impl Iterator<Item = (FileId, NodeId)> + '_ {
        self.files
            .iter()
            .filter_map(|(f, e)| e.holder.map(|h| (*f, h)))
    }
}

/// Which storage server holds each file's block map.
#[derive(Debug, Clone, Default)]
pub struct MapLocationTable {
    locations: BTreeMap<FileId, NodeId>,
}

impl MapLocationTable {
    pub fn get(&self, file: FileId) -> Option<NodeId> {
        self.locations.get(&file).copied()
    }

    pub fn set(&mut self, file: FileId, server: NodeId) {
        self.locations.insert(file, server);
    }

    pub fn remove(&mut self, file: FileId) -> Option<NodeId> {
        self.locations.remove(&file)
    }

    pub fn iter(&self) -> impl Iterator<Item = (FileId, NodeId)> + '_ {
        self.locations.iter().map(|(f, s)| (*f, *s))
    }

    pub fn len(&self) -> usize {
        self.locations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.locations.is_empty()
    }
}
