use serde::{Deserialize, Serialize};

use crate::ids::NodeId;

/// Last known state of one storage server as seen by a management server.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ServerSnapshot {
    pub server: NodeId,
    pub remaining_write_capacity: u64,
    pub utilization: f64,
}

/// Grant accounting between reconciliations for one management server.
#[derive(Debug, Clone)]
pub struct ReconciliationState {
    pub phi: u64,
    pub granted_since_reconcile: u64,
    /// Incremented each time a reconciliation starts.
    pub window: u64,
    pub snapshot: Vec<ServerSnapshot>,
    in_flight: Option<Round>,
}

#[derive(Debug, Clone)]
struct Round {
    id: u64,
    replies: Vec<Option<(u64, f64)>>,
    outstanding: usize,
}

impl ReconciliationState {
    pub fn new(phi: u64, snapshot: Vec<ServerSnapshot>) -> Self {
        Self {
            phi,
            granted_since_reconcile: 0,
            window: 0,
            snapshot,
            in_flight: None,
        }
    }

    pub fn in_progress(&self) -> bool {
        self.in_flight.is_some()
    }

    /// Adds a grant and reports whether a reconciliation round should start
    /// now. Starting resets the counter and opens a new window.
    pub fn record_grant(&mut self, amount: u64) -> Option<u64> {
        self.granted_since_reconcile += amount;
        self.maybe_start()
    }

    fn maybe_start(&mut self) -> Option<u64> {
        if self.in_flight.is_some() || self.granted_since_reconcile < self.phi {
            return None;
        }
        self.granted_since_reconcile = 0;
        self.window += 1;
        let n = self.snapshot.len();
        self.in_flight = Some(Round {
            id: self.window,
            replies: vec![None; n],
            outstanding: n,
        });
        Some(self.window)
    }

    /// Records one server's reply. When the round completes, the snapshot is
    /// replaced and `Completed` is returned, possibly with the id of a
    /// follow-up round if grants kept flowing meanwhile.
    pub fn record_reply(
        &mut self,
        round: u64,
        server: NodeId,
        remaining: u64,
        utilization: f64,
    ) -> ReplyOutcome {
        let Some(r) = self.in_flight.as_mut() else {
            return ReplyOutcome::Ignored;
        };
        if r.id != round {
            return ReplyOutcome::Ignored;
        }
        let Some(pos) = self.snapshot.iter().position(|s| s.server == server) else {
            return ReplyOutcome::Ignored;
        };
        if r.replies[pos].replace((remaining, utilization)).is_none() {
            r.outstanding -= 1;
        }
        if r.outstanding > 0 {
            return ReplyOutcome::Pending;
        }
        let round = self.in_flight.take().expect("round in flight");
        for (snap, reply) in self.snapshot.iter_mut().zip(round.replies) {
            let (remaining, utilization) = reply.expect("all replies in");
            snap.remaining_write_capacity = remaining;
            snap.utilization = utilization;
        }
        ReplyOutcome::Completed {
            next_round: self.maybe_start(),
        }
    }

    pub fn replace_snapshot(&mut self, snapshot: Vec<ServerSnapshot>) {
        self.snapshot = snapshot;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReplyOutcome {
    Ignored,
    Pending,
    Completed { next_round: Option<u64> },
}
