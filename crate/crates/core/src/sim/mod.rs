//! Discrete-event engine: virtual clock, ordered event queue, per-node
//! service queues and flash device latencies.

mod device;
mod engine;
mod message;
mod queue;
mod time;

pub use device::{FlashOp, FlashTiming};
pub use engine::{
    Engine, Event, EventHandler, RunLimit, SimStats, Termination, DEFAULT_NETWORK_LATENCY,
};
pub use message::{Message, MessageBody, MessageKind, OpenMode};
pub use queue::{NodeQueue, WorkKind};
pub use time::SimTime;
