use std::fmt;
use std::io;

use thiserror::Error;

use crate::baseline::PlacementFailure;
use crate::ids::{BlockRef, NodeId};
use crate::sim::{MessageKind, SimTime};

/// Runtime failure of a simulation.
#[derive(Debug, Error)]
pub enum SimError {
    #[error("event scheduled into the past (fire_at {fire_at}, clock {now})")]
    ScheduleInPast { fire_at: SimTime, now: SimTime },
    #[error("message addressed to unknown node {0}")]
    UnknownNode(NodeId),
    #[error("node {node} has no role that handles {kind}")]
    Misrouted { node: NodeId, kind: MessageKind },
    #[error("protocol violation at node {node}: {detail}")]
    Protocol { node: NodeId, detail: String },
    #[error(transparent)]
    Placement(#[from] PlacementFailure),
    #[error("no storage server accepted {block:?} after {attempts} attempts")]
    ClusterFull { block: BlockRef, attempts: u32 },
    #[error("trace output failed: {0}")]
    Trace(#[source] io::Error),
}

/// Invalid configuration input, with the line it was found on when known.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ConfigError {
    pub origin: String,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "{}:{}: {}", self.origin, line, self.message),
            None => write!(f, "{}: {}", self.origin, self.message),
        }
    }
}

impl ConfigError {
    pub fn new(origin: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            origin: origin.into(),
            line: None,
            message: message.into(),
        }
    }

    pub fn with_line(mut self, line: Option<usize>) -> Self {
        self.line = line;
        self
    }

    pub fn from_toml(origin: &str, text: &str, err: &toml::de::Error) -> Self {
        let line = err.span().map(|span| line_of_offset(text, span.start));
        Self {
            origin: origin.to_string(),
            line,
            message: err.message().to_string(),
        }
    }
}

pub(crate) fn line_of_offset(text: &str, offset: usize) -> usize {
    let end = offset.min(text.len());
    text.as_bytes()[..end].iter().filter(|&&b| b == b'\n').count() + 1
}

/// Line of the first `key = ...` assignment inside `[section]` (or at top
/// level when `section` is empty).
pub(crate) fn line_of_key(text: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.starts_with('[') {
            current = line.trim_matches(|c| c == '[' || c == ']').trim().to_string();
            continue;
        }
        if current == section {
            if let Some((lhs, _)) = line.split_once('=') {
                if lhs.trim() == key {
                    return Some(i + 1);
                }
            }
        }
    }
    None
}
