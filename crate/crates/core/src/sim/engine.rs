//! Event queue and virtual clock.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::io::{self, Write};

use crate::error::SimError;
use crate::ids::NodeId;
use crate::metrics::MessageTally;

use super::{Message, SimTime};

/// Default one-way latency added to every message that crosses nodes.
pub const DEFAULT_NETWORK_LATENCY: SimTime = SimTime::from_micros(250);

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    /// Time the sender handed the message to the network.
    pub fire_at: SimTime,
    /// Time the message reaches `target`.
    pub deliver_at: SimTime,
    pub seq: u64,
    pub target: NodeId,
    pub message: Message,
}

impl Event {
    fn key(&self) -> (SimTime, u64) {
        (self.deliver_at, self.seq)
    }
}

struct Pending(Event);

impl PartialEq for Pending {
    fn eq(&self, other: &Self) -> bool {
        self.0.key() == other.0.key()
    }
}

impl Eq for Pending {}

impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Pending {
    // BinaryHeap is a max-heap; invert so the earliest (time, seq) pops first.
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.key().cmp(&self.0.key())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunLimit {
    /// Dispatch events delivered at or before this time.
    Until(SimTime),
    /// Dispatch at most this many events.
    Events(u64),
    Unbounded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    QueueEmpty,
    LimitReached,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimStats {
    pub events_dispatched: u64,
    pub clock: SimTime,
    pub termination: Termination,
}

pub trait EventHandler {
    fn on_event(&mut self, engine: &mut Engine, event: Event) -> Result<(), SimError>;
}

impl<F> EventHandler for F
where
    F: FnMut(&mut Engine, Event) -> Result<(), SimError>,
{
    fn on_event(&mut self, engine: &mut Engine, event: Event) -> Result<(), SimError> {
        self(engine, event)
    }
}

struct TraceSink {
    out: Box<dyn Write + Send>,
    error: Option<io::Error>,
}

impl TraceSink {
    fn record(&mut self, event: &Event) {
        if self.error.is_some() {
            return;
        }
        if let Err(e) = writeln!(
            self.out,
            "{},{},{},{},{}",
            event.deliver_at.as_micros(),
            event.seq,
            event.message.source,
            event.target,
            event.message.kind()
        ) {
            self.error = Some(e);
        }
    }
}

/// Deterministic discrete-event core.
///
/// Events are totally ordered by `(delivery time, insertion sequence)`, so
/// two runs that schedule the same events dispatch them identically.
pub struct Engine {
    now: SimTime,
    next_seq: u64,
    queue: BinaryHeap<Pending>,
    network_latency: SimTime,
    events_dispatched: u64,
    tally: MessageTally,
    trace: Option<TraceSink>,
}

impl Default for Engine {
    fn default() -> Self {
        Self::new(DEFAULT_NETWORK_LATENCY)
    }
}

impl Engine {
    pub fn new(network_latency: SimTime) -> Self {
        Self {
            now: SimTime::ZERO,
            next_seq: 0,
            queue: BinaryHeap::new(),
            network_latency,
            events_dispatched: 0,
            tally: MessageTally::default(),
            trace: None,
        }
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn network_latency(&self) -> SimTime {
        self.network_latency
    }

    /// Starts CSV trace emission (`time_us,seq,source,target,kind`).
    pub fn set_trace(&mut self, mut out: Box<dyn Write + Send>) -> io::Result<()> {
        writeln!(out, "time_us,seq,source,target,kind")?;
        self.trace = Some(TraceSink { out, error: None });
        Ok(())
    }

    pub fn finish_trace(&mut self) -> io::Result<()> {
        match self.trace.take() {
            Some(mut sink) => match sink.error.take() {
                Some(e) => Err(e),
                None => sink.out.flush(),
            },
            None => Ok(()),
        }
    }

    /// Enqueues `message` for `target`. Remote messages pay the network
    /// latency on top of `fire_at`; self-addressed ones do not.
    pub fn schedule(
        &mut self,
        fire_at: SimTime,
        target: NodeId,
        message: Message,
    ) -> Result<u64, SimError> {
        if fire_at < self.now {
            return Err(SimError::ScheduleInPast {
                fire_at,
                now: self.now,
            });
        }
        let deliver_at = if target == message.source {
            fire_at
        } else {
            fire_at + self.network_latency
        };
        let seq = self.next_seq;
        self.next_seq += 1;
        self.queue.push(Pending(Event {
            fire_at,
            deliver_at,
            seq,
            target,
            message,
        }));
        Ok(seq)
    }

    pub fn peek_time(&self) -> Option<SimTime> {
        self.queue.peek().map(|p| p.0.deliver_at)
    }

    pub fn pending(&self) -> usize {
        self.queue.len()
    }

    /// Removes the next event, advancing the clock and the message counters.
    pub fn pop_next(&mut self) -> Option<Event> {
        let Pending(event) = self.queue.pop()?;
        debug_assert!(event.deliver_at >= self.now);
        self.now = event.deliver_at;
        self.events_dispatched += 1;
        self.tally.record(event.message.kind());
        if let Some(trace) = self.trace.as_mut() {
            trace.record(&event);
        }
        Some(event)
    }

    pub fn run_until<H: EventHandler>(
        &mut self,
        limit: RunLimit,
        handler: &mut H,
    ) -> Result<SimStats, SimError> {
        let mut dispatched = 0u64;
        let termination = loop {
            let Some(next) = self.peek_time() else {
                break Termination::QueueEmpty;
            };
            match limit {
                RunLimit::Until(t) if next > t => break Termination::LimitReached,
                RunLimit::Events(n) if dispatched >= n => break Termination::LimitReached,
                _ => {}
            }
            let event = self.pop_next().expect("peeked");
            dispatched += 1;
            handler.on_event(self, event)?;
        };
        Ok(SimStats {
            events_dispatched: dispatched,
            clock: self.now,
            termination,
        })
    }

    pub fn events_dispatched(&self) -> u64 {
        self.events_dispatched
    }

    pub fn tally(&self) -> &MessageTally {
        &self.tally
    }

    /// Zeroes the per-kind message counters (end of warm-up).
    pub fn reset_tally(&mut self) {
        self.tally = MessageTally::default();
    }
}
