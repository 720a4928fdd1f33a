//! Seeded small-file workload: creates, whole-file rewrites and deletes.

use std::fmt;
use std::io::{self, Write};
use std::ops::RangeInclusive;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::ids::FileId;

/// Blocks in a newly created file.
pub const BLOCKS_PER_FILE: RangeInclusive<u32> = 5..=8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OpKind {
    Create,
    Rewrite,
    Delete,
}

impl OpKind {
    pub fn as_str(self) -> &'static str {
        match self {
            OpKind::Create => "create",
            OpKind::Rewrite => "rewrite",
            OpKind::Delete => "delete",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "create" => Some(OpKind::Create),
            "rewrite" => Some(OpKind::Rewrite),
            "delete" => Some(OpKind::Delete),
            _ => None,
        }
    }
}

impl fmt::Display for OpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One file operation. `client` indexes the topology's client list and
/// `blocks` counts the blocks the operation writes or frees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileOp {
    pub seq: u64,
    pub kind: OpKind,
    pub file: FileId,
    pub client: u32,
    pub blocks: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpMix {
    pub create: f64,
    pub rewrite: f64,
    pub delete: f64,
}

impl Default for OpMix {
    fn default() -> Self {
        Self {
            create: 0.4,
            rewrite: 0.4,
            delete: 0.2,
        }
    }
}

impl OpMix {
    pub fn validate(&self) -> Result<(), String> {
        let parts = [self.create, self.rewrite, self.delete];
        if parts.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err("op_mix probabilities must lie in [0, 1]".into());
        }
        if (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err("op_mix probabilities must sum to 1".into());
        }
        Ok(())
    }

    fn draw(&self, u: f64) -> OpKind {
        if u < self.create {
            OpKind::Create
        } else if u < self.create + self.rewrite {
            OpKind::Rewrite
        } else {
            OpKind::Delete
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorkloadSpec {
    /// Bound on the live file population.
    pub file_count: u64,
    pub op_mix: OpMix,
    pub total_ops: u64,
    pub warmup_ops: u64,
    pub seed: u64,
    /// Leading fraction of a file's blocks touched by a rewrite.
    pub rewrite_fraction: f64,
}

/// Deterministic op stream.
///
/// The live-file set evolves in stream order, so rewrites and deletes
/// always name a file that the preceding ops left alive.
#[derive(Debug, Clone)]
pub struct OpGenerator {
    spec: WorkloadSpec,
    clients: u32,
    rng: ChaCha8Rng,
    live: Vec<(FileId, u32)>,
    next_file: u64,
    next_seq: u64,
}

impl OpGenerator {
    pub fn new(spec: WorkloadSpec, clients: u32) -> Self {
        assert!(clients > 0, "workload needs at least one client");
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(1);
        Self {
            spec,
            clients,
            rng,
            live: Vec::new(),
            next_file: 0,
            next_seq: 0,
        }
    }

    pub fn spec(&self) -> &WorkloadSpec {
        &self.spec
    }

    pub fn live_files(&self) -> usize {
        self.live.len()
    }

    pub fn next_op(&mut self) -> FileOp {
        let u: f64 = self.rng.random();
        let mut kind = self.spec.op_mix.draw(u);
        if self.live.is_empty() {
            kind = OpKind::Create;
        } else if kind == OpKind::Create && self.live.len() as u64 >= self.spec.file_count {
            kind = OpKind::Rewrite;
        }
        let (file, blocks) = match kind {
            OpKind::Create => {
                let file = FileId(self.next_file);
                self.next_file += 1;
                let blocks = self.rng.random_range(BLOCKS_PER_FILE);
                self.live.push((file, blocks));
                (file, blocks)
            }
            OpKind::Rewrite => {
                let i = self.rng.random_range(0..self.live.len());
                let (file, size) = self.live[i];
                (file, rewrite_blocks(size, self.spec.rewrite_fraction))
            }
            OpKind::Delete => {
                let i = self.rng.random_range(0..self.live.len());
                self.live.swap_remove(i)
            }
        };
        let client = self.rng.random_range(0..self.clients);
        let seq = self.next_seq;
        self.next_seq += 1;
        FileOp {
            seq,
            kind,
            file,
            client,
            blocks,
        }
    }
}

fn rewrite_blocks(size: u32, fraction: f64) -> u32 {
    ((f64::from(size) * fraction).ceil() as u32).clamp(1, size)
}

/// Generates the first `spec.total_ops` operations.
pub fn generate(spec: &WorkloadSpec, clients: u32) -> Vec<FileOp> {
    let mut g = OpGenerator::new(spec.clone(), clients);
    (0..spec.total_ops).map(|_| g.next_op()).collect()
}

pub const TRACE_HEADER: &str = "seq,kind,file_id,client,blocks";

pub fn write_trace<W: Write>(ops: &[FileOp], mut out: W) -> io::Result<()> {
    writeln!(out, "{TRACE_HEADER}")?;
    for op in ops {
        writeln!(out, "{},{},{},{},{}", op.seq, op.kind, op.file, op.client, op.blocks)?;
    }
    out.flush()
}

/// Parses an op trace and checks it is replayable on `clients` clients.
pub fn read_trace(origin: &str, text: &str, clients: u32) -> Result<Vec<FileOp>, ConfigError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == TRACE_HEADER => {}
        _ => {
            return Err(ConfigError::new(origin, format!("expected header `{TRACE_HEADER}`")).with_line(Some(1)))
        }
    }
    let mut ops = Vec::new();
    let mut live = std::collections::BTreeMap::new();
    for (i, line) in lines {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let err = |m: String| ConfigError::new(origin, m).with_line(Some(lineno));
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 5 {
            return Err(err(format!("expected 5 fields, found {}", fields.len())));
        }
        let num = |s: &str, what: &str| s.parse::<u64>().map_err(|_| err(format!("invalid {what} {s:?}")));
        let seq = num(fields[0], "seq")?;
        let kind = OpKind::parse(fields[1]).ok_or_else(|| err(format!("unknown op kind {:?}", fields[1])))?;
        let file = FileId(num(fields[2], "file_id")?);
        let client = u32::try_from(num(fields[3], "client")?).map_err(|_| err("client out of range".into()))?;
        let blocks = u32::try_from(num(fields[4], "blocks")?).map_err(|_| err("blocks out of range".into()))?;
        if seq != ops.len() as u64 {
            return Err(err(format!("seq {seq} out of order")));
        }
        if client >= clients {
            return Err(err(format!("client {client} but topology has {clients} clients")));
        }
        match kind {
            OpKind::Create => {
                if !BLOCKS_PER_FILE.contains(&blocks) {
                    return Err(err(format!("create of {blocks} blocks")));
                }
                if live.insert(file, blocks).is_some() {
                    return Err(err(format!("create of live file {file}")));
                }
            }
            OpKind::Rewrite => match live.get(&file) {
                Some(&size) if blocks >= 1 && blocks <= size => {}
                Some(_) => return Err(err(format!("rewrite of {blocks} blocks"))),
                None => return Err(err(format!("rewrite of unknown file {file}"))),
            },
            OpKind::Delete => match live.remove(&file) {
                Some(size) if size == blocks => {}
                Some(size) => return Err(err(format!("delete names {blocks} blocks, file has {size}"))),
                None => return Err(err(format!("delete of unknown file {file}"))),
            },
        }
        ops.push(FileOp {
            seq,
            kind,
            file,
            client,
            blocks,
        });
    }
    Ok(ops)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(mix: OpMix, file_count: u64) -> WorkloadSpec {
        WorkloadSpec {
            file_count,
            op_mix: mix,
            total_ops: 0,
            warmup_ops: 0,
            seed: 42,
            rewrite_fraction: 1.0,
        }
    }

    #[test]
    fn first_op_is_create() {
        let mut g = OpGenerator::new(spec(OpMix { create: 0.0, rewrite: 0.0, delete: 1.0 }, 10), 3);
        assert_eq!(g.next_op().kind, OpKind::Create);
    }

    #[test]
    fn create_only_mix() {
        let mut g = OpGenerator::new(spec(OpMix { create: 1.0, rewrite: 0.0, delete: 0.0 }, u64::MAX), 3);
        assert!((0..500).all(|_| g.next_op().kind == OpKind::Create));
    }

    #[test]
    fn population_is_bounded() {
        let mut g = OpGenerator::new(spec(OpMix { create: 1.0, rewrite: 0.0, delete: 0.0 }, 4), 2);
        let kinds: Vec<OpKind> = (0..6).map(|_| g.next_op().kind).collect();
        assert_eq!(&kinds[4..], &[OpKind::Rewrite, OpKind::Rewrite]);
        assert_eq!(g.live_files(), 4);
    }

    #[test]
    fn partial_rewrite_touches_a_prefix() {
        assert_eq!(rewrite_blocks(8, 0.5), 4);
        assert_eq!(rewrite_blocks(5, 0.5), 3);
        assert_eq!(rewrite_blocks(5, 0.0), 1);
        assert_eq!(rewrite_blocks(7, 1.0), 7);
    }

    #[test]
    fn trace_round_trip() {
        let mut s = spec(OpMix::default(), 20);
        s.total_ops = 300;
        let ops = generate(&s, 4);
        let mut buf = Vec::new();
        write_trace(&ops, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(read_trace("t", &text, 4).unwrap(), ops);
    }

    #[test]
    fn trace_errors_carry_lines() {
        let text = "seq,kind,file_id,client,blocks\n0,create,1,0,5\n1,delete,2,0,5\n";
        let err = read_trace("t", text, 1).unwrap_err();
        assert_eq!(err.line, Some(3));
        let err = read_trace("t", "0,create,1,0,5\n", 1).unwrap_err();
        assert_eq!(err.line, Some(1));
        let text = "seq,kind,file_id,client,blocks\n0,create,1,3,5\n";
        assert!(read_trace("t", text, 2).unwrap_err().message.contains("client"));
    }
}
