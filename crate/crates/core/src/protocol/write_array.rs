//! Write-array grants: the budgets a management server hands to a client.

use serde::{Deserialize, Serialize};

use crate::ids::NodeId;

/// Identifies one grant. The `window` is the reconciliation window of the
/// issuing management server at grant time; block writes carry the id of the
/// grant they were spent from so budgets can be audited per window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GrantId {
    pub manager: NodeId,
    pub window: u64,
    pub epoch: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WriteArrayEntry {
    pub server: NodeId,
    /// Block-writes left to spend on `server`.
    pub budget: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WriteArray {
    pub grant: GrantId,
    pub entries: Vec<WriteArrayEntry>,
    pub cursor: usize,
}

impl WriteArray {
    pub fn new(grant: GrantId, entries: Vec<WriteArrayEntry>) -> Self {
        Self {
            grant,
            entries,
            cursor: 0,
        }
    }

    pub fn total_budget(&self) -> u64 {
        self.entries.iter().map(|e| e.budget).sum()
    }

    /// Round-robin pick of the first entry, from the cursor on, that has
    /// `blocks_needed` budget left.
    ///
    /// Entries equal to `avoid` are passed over while any other entry
    /// qualifies; entries in `excluded` are never chosen. The chosen entry is
    /// debited and the cursor moves past it. Returns `None` when the array
    /// is exhausted for this request.
    pub fn pick_server(
        &mut self,
        blocks_needed: u64,
        avoid: Option<NodeId>,
        excluded: &[NodeId],
    ) -> Option<NodeId> {
        let n = self.entries.len();
        if n == 0 {
            return None;
        }
        let mut fallback = None;
        for step in 0..n {
            let i = (self.cursor + step) % n;
            let entry = &self.entries[i];
            if entry.budget < blocks_needed || excluded.contains(&entry.server) {
                continue;
            }
            if Some(entry.server) == avoid {
                fallback.get_or_insert(i);
                continue;
            }
            return Some(self.take(i, blocks_needed));
        }
        fallback.map(|i| self.take(i, blocks_needed))
    }

    fn take(&mut self, i: usize, blocks: u64) -> NodeId {
        self.entries[i].budget -= blocks;
        self.cursor = (i + 1) % self.entries.len();
        self.entries[i].server
    }
}

/// Splits a grant of `requested_total` block-writes over the chosen servers
/// in proportion to `chosen`, their last known remaining capacities.
///
/// The cumulative exact share is rounded with a systematic offset `phase` (a
/// fraction of 2^64), so every budget is within one block-write of
/// `requested_total * c_i / sum(chosen)` and the budgets add up to
/// `requested_total`.
pub fn apportion(requested_total: u64, chosen: &[u64], phase: u64) -> Vec<u64> {
    let denom: u128 = chosen.iter().map(|&c| u128::from(c)).sum();
    if denom == 0 {
        return vec![0; chosen.len()];
    }
    let offset = (u128::from(phase) * denom) >> 64;
    let scale = u128::from(requested_total);
    let mut cumulative = 0u128;
    let mut prev_floor = offset / denom;
    chosen
        .iter()
        .map(|&c| {
            cumulative += scale * u128::from(c);
            let floor = (cumulative + offset) / denom;
            let budget = floor - prev_floor;
            prev_floor = floor;
            u64::try_from(budget).expect("budget fits in u64")
        })
        .collect()
}

/// Rounding phase for grant number `epoch`: a golden-ratio Weyl sequence, so
/// rounding residue is spread evenly across grants.
pub fn rounding_phase(epoch: u64) -> u64 {
    epoch.wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Picks up to `array_len` servers round-robin from `cursor`, skipping those
/// with no remaining capacity. Returns the chosen indices and the cursor to
/// use for the next grant.
pub fn round_robin_select(capacities: &[u64], array_len: usize, cursor: usize) -> (Vec<usize>, usize) {
    let n = capacities.len();
    let mut chosen = Vec::new();
    if n == 0 {
        return (chosen, cursor);
    }
    let mut at = cursor % n;
    let mut next = at;
    for _ in 0..n {
        if chosen.len() == array_len {
            break;
        }
        if capacities[at] > 0 {
            chosen.push(at);
            next = (at + 1) % n;
        }
        at = (at + 1) % n;
    }
    (chosen, next)
}
