use std::collections::VecDeque;

use super::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WorkKind {
    BlockWrite,
    Other,
}

#[derive(Debug, Clone, Copy)]
struct WorkItem {
    kind: WorkKind,
    completes_at: SimTime,
}

/// Single-server FIFO service queue attached to every node.
///
/// Work is admitted in arrival order; an item starts when the previous one
/// completes, so completion times never decrease.
#[derive(Debug, Clone, Default)]
pub struct NodeQueue {
    busy_until: SimTime,
    in_flight: VecDeque<WorkItem>,
    admitted: u64,
    busy_time: SimTime,
}

impl NodeQueue {
    pub fn new() -> Self {
        Self::default()
    }

    /// Admits an item arriving at `now` and returns its completion time.
    pub fn admit(&mut self, now: SimTime, service: SimTime, kind: WorkKind) -> SimTime {
        while self
            .in_flight
            .front()
            .is_some_and(|item| item.completes_at <= now)
        {
            self.in_flight.pop_front();
        }
        let start = now.max(self.busy_until);
        let done = start + service;
        self.busy_until = done;
        self.busy_time += service;
        self.admitted += 1;
        if done > now {
            self.in_flight.push_back(WorkItem {
                kind,
                completes_at: done,
            });
        }
        done
    }

    /// Items queued or in service at `now`.
    pub fn outstanding(&self, now: SimTime) -> usize {
        self.in_flight
            .iter()
            .filter(|item| item.completes_at > now)
            .count()
    }

    /// Queued plus in-service block writes at `now`.
    pub fn outstanding_writes(&self, now: SimTime) -> usize {
        self.in_flight
            .iter()
            .filter(|item| item.completes_at > now && item.kind == WorkKind::BlockWrite)
            .count()
    }

    pub fn busy_until(&self) -> SimTime {
        self.busy_until
    }

    pub fn admitted(&self) -> u64 {
        self.admitted
    }

    pub fn busy_time(&self) -> SimTime {
        self.busy_time
    }
}
