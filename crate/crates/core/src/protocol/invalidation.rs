use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::ids::{BlockRef, NodeId};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Band {
    pub max_utilization: f64,
    pub threshold: u32,
}

/// Utilization bands that set how many invalidations a client may hold back
/// for one storage server. Above the last band invalidations are not delayed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BandTable {
    bands: Vec<Band>,
}

impl Default for BandTable {
    fn default() -> Self {
        Self::new(vec![
            Band { max_utilization: 0.2, threshold: 15 },
            Band { max_utilization: 0.3, threshold: 12 },
            Band { max_utilization: 0.4, threshold: 9 },
            Band { max_utilization: 0.5, threshold: 7 },
        ])
        .expect("default bands are valid")
    }
}

impl BandTable {
    pub fn new(bands: Vec<Band>) -> Result<Self, String> {
        let mut prev = 0.0;
        for b in &bands {
            if !(b.max_utilization > prev && b.max_utilization <= 1.0) {
                return Err("band max_utilization values must increase within (0, 1]".into());
            }
            if b.threshold == 0 {
                return Err("band threshold must be at least 1".into());
            }
            prev = b.max_utilization;
        }
        Ok(Self { bands })
    }

    pub fn bands(&self) -> &[Band] {
        &self.bands
    }

    /// Batch size for a server at `utilization`. Bands are half-open
    /// `[previous max, max)`, except the last which also includes its upper
    /// edge.
    pub fn threshold(&self, utilization: f64) -> u32 {
        for b in &self.bands {
            if utilization < b.max_utilization {
                return b.threshold;
            }
        }
        match self.bands.last() {
            Some(last) if utilization <= last.max_utilization => last.threshold,
            _ => 1,
        }
    }
}

/// Invalidations a client has not yet sent, per storage server.
#[derive(Debug, Clone, Default)]
pub struct InvalidationBuffer {
    pending: BTreeMap<NodeId, Vec<BlockRef>>,
}

impl InvalidationBuffer {
    /// Buffers `block` for `server`; returns the batch to send when the
    /// buffer has reached `threshold`.
    pub fn push(&mut self, server: NodeId, block: BlockRef, threshold: u32) -> Option<Vec<BlockRef>> {
        let buf = self.pending.entry(server).or_default();
        buf.push(block);
        if buf.len() >= threshold as usize {
            self.pending.remove(&server)
        } else {
            None
        }
    }

    pub fn take(&mut self, server: NodeId) -> Option<Vec<BlockRef>> {
        self.pending.remove(&server)
    }

    /// Empties every buffer, in server order.
    pub fn drain(&mut self) -> Vec<(NodeId, Vec<BlockRef>)> {
        std::mem::take(&mut self.pending).into_iter().collect()
    }

    pub fn pending(&self, server: NodeId) -> usize {
        self.pending.get(&server).map_or(0, Vec::len)
    }

    pub fn total_pending(&self) -> usize {
        self.pending.values().map(Vec::len).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeId, &BlockRef)> + '_ {
        self.pending
            .iter()
            .flat_map(|(s, v)| v.iter().map(move |b| (*s, b)))
    }
}
