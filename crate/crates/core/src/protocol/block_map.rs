use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::ids::{BlockRef, FileId, NodeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MapEntry {
    pub server: NodeId,
    pub generation: u32,
}

/// Block index to storage server mapping of one file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockMap {
    pub file: FileId,
    entries: BTreeMap<u32, MapEntry>,
}

impl BlockMap {
    pub fn new(file: FileId) -> Self {
        Self {
            file,
            entries: BTreeMap::new(),
        }
    }

    pub fn get(&self, index: u32) -> Option<MapEntry> {
        self.entries.get(&index).copied()
    }

    /// Records the new location of `index`, returning the one it replaces.
    pub fn insert(&mut self, index: u32, entry: MapEntry) -> Option<MapEntry> {
        self.entries.insert(index, entry)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, MapEntry)> + '_ {
        self.entries.iter().map(|(i, e)| (*i, *e))
    }

    /// Every block copy the map references, with the server holding it.
    pub fn copies(&self) -> impl Iterator<Item = (NodeId, BlockRef)> + '_ {
        self.entries
            .iter()
            .map(|(i, e)| (e.server, BlockRef::new(self.file, *i, e.generation)))
    }
}
