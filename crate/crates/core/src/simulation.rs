//! Wires topology, roles, workload and metrics into one runnable simulation.

use std::collections::{BTreeMap, VecDeque};
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp;

use crate::baseline::{CandidateState, HdfsClient, Namenode};
use crate::cluster::{FlashDevice, Roles, Topology};
use crate::config::{RunConfig, Scenario};
use crate::error::{ConfigError, SimError};
use crate::ids::{BlockRef, FileId, NodeId};
use crate::metrics::{InitialCapacity, NodeWear, RunReport, RunStats, SnapshotRecorder, WearSnapshot};
use crate::node::{Directory, GrantRecord, Note, Outbox, StorageParams, StorageServer};
use crate::protocol::{Client, ClientParams, GrantId, Manager, ServerSnapshot};
use crate::sim::{Engine, Event, Message, MessageBody, NodeQueue, SimTime, WorkKind};
use crate::workload::{FileOp, OpGenerator};

#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
pub enum ClientRole {
    WriteArray(Client),
    Hdfs(HdfsClient),
}

impl ClientRole {
    pub fn held_lock(&self) -> Option<FileId> {
        match self {
            ClientRole::WriteArray(c) => c.held_lock(),
            ClientRole::Hdfs(c) => c.held_lock(),
        }
    }

    pub fn is_idle(&self) -> bool {
        match self {
            ClientRole::WriteArray(c) => c.is_idle(),
            ClientRole::Hdfs(c) => c.is_idle(),
        }
    }
}

#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
pub enum ManagerRole {
    WriteArray(Manager),
    Hdfs(Namenode),
}

#[derive(Debug, Clone)]
pub struct Node {
    pub id: NodeId,
    pub roles: Roles,
    pub queue: NodeQueue,
    pub storage: Option<StorageServer>,
    pub client: Option<ClientRole>,
    pub manager: Option<ManagerRole>,
}

/// Global record of grants and budget spending, for invariant checks.
#[derive(Debug, Clone, Default)]
pub struct Audit {
    pub grants: Vec<GrantRecord>,
    /// Successful block writes per (grant, server).
    pub spent: BTreeMap<(GrantId, NodeId), u64>,
    pub stale_invalidates: Vec<(NodeId, BlockRef)>,
}

impl Audit {
    /// Budget granted per (manager, reconciliation window, server).
    pub fn granted_per_window(&self) -> BTreeMap<(NodeId, u64, NodeId), u64> {
        let mut out = BTreeMap::new();
        for g in &self.grants {
            for e in &g.entries {
                *out.entry((g.id.manager, g.id.window, e.server)).or_default() += e.budget;
            }
        }
        out
    }

    /// Block writes per (manager, reconciliation window, server).
    pub fn written_per_window(&self) -> BTreeMap<(NodeId, u64, NodeId), u64> {
        let mut out = BTreeMap::new();
        for ((g, server), n) in &self.spent {
            *out.entry((g.manager, g.window, *server)).or_default() += n;
        }
        out
    }
}

#[allow(clippy::large_enum_variant)]
enum OpSource {
    Generated(OpGenerator),
    Replay(VecDeque<FileOp>),
}

/// Hands ops to clients in stream order, one at a time per client, and holds
/// an op back until every earlier op on the same file has completed.
struct Driver {
    source: OpSource,
    total: u64,
    generated: u64,
    completed: u64,
    queued: Vec<VecDeque<FileOp>>,
    active: Vec<Option<u64>>,
    per_file: BTreeMap<FileId, VecDeque<(u64, u32)>>,
    think: Vec<ChaCha8Rng>,
    think_dist: Option<Exp<f64>>,
}

impl Driver {
    fn pull(&mut self) -> Option<FileOp> {
        if self.generated >= self.total {
            return None;
        }
        let op = match &mut self.source {
            OpSource::Generated(g) => g.next_op(),
            OpSource::Replay(ops) => ops.pop_front()?,
        };
        self.generated += 1;
        self.per_file.entry(op.file).or_default().push_back((op.seq, op.client));
        Some(op)
    }

    /// Next op of client `c`, generating ahead as needed.
    fn peek(&mut self, c: usize) -> Option<FileOp> {
        while self.queued[c].is_empty() {
            let op = self.pull()?;
            self.queued[op.client as usize].push_back(op);
        }
        self.queued[c].front().copied()
    }

    /// Pops client `c`'s next op if it may start now.
    fn ready(&mut self, c: usize) -> Option<FileOp> {
        if self.active[c].is_some() {
            return None;
        }
        let op = self.peek(c)?;
        let head = self.per_file.get(&op.file).and_then(|q| q.front()).map(|(s, _)| *s);
        if head != Some(op.seq) {
            return None;
        }
        self.queued[c].pop_front();
        self.active[c] = Some(op.seq);
        Some(op)
    }

    /// Marks the op done; returns the client whose op on the same file is
    /// next in line.
    fn complete(&mut self, c: usize, file: FileId) -> Option<usize> {
        self.active[c] = None;
        self.completed += 1;
        let q = self.per_file.get_mut(&file).expect("file has pending ops");
        q.pop_front();
        let next = q.front().map(|(_, client)| *client as usize);
        if q.is_empty() {
            self.per_file.remove(&file);
        }
        next
    }

    fn think_time(&mut self, c: usize) -> SimTime {
        match &self.think_dist {
            Some(d) => SimTime::from_micros(self.think[c].sample(d).round() as u64),
            None => SimTime::ZERO,
        }
    }

    fn done(&self) -> bool {
        self.completed >= self.total
    }
}

struct Measurement {
    start: SimTime,
    events_at_start: u64,
    block_writes_at_start: u64,
    ops_at_start: u64,
    bytes_at_start: Vec<u64>,
}

/// A complete simulated cluster running one scenario.
pub struct Simulation {
    config: RunConfig,
    topo: Topology,
    dir: Directory,
    engine: Engine,
    nodes: Vec<Node>,
    index: BTreeMap<NodeId, usize>,
    client_index: BTreeMap<NodeId, usize>,
    driver: Driver,
    audit: Audit,
    recorder: Option<SnapshotRecorder>,
    measurement: Option<Measurement>,
    block_writes: u64,
    rejected_writes: u64,
    drained: bool,
    worn_out: bool,
    started: bool,
}

impl Simulation {
    /// Builds a simulation; `replay` replaces the generated op stream.
    pub fn new(config: &RunConfig, topo: Topology, replay: Option<Vec<FileOp>>) -> Result<Self, ConfigError> {
        config.validate("config", None)?;
        let config = config.resolved(&topo);
        let storage_count = topo.storage_nodes().count();
        if config.scenario == Scenario::HdfsBaseline && config.baseline.replica_count > storage_count {
            return Err(ConfigError::new(
                "config",
                format!(
                    "replica_count {} exceeds the {storage_count} storage nodes in the topology",
                    config.baseline.replica_count
                ),
            ));
        }
        let dir = Directory::from_topology(&topo);
        let device = FlashDevice {
            page_size_bytes: config.sim.page_size,
            timing: config.sim.timing,
        };
        let storage_params = StorageParams {
            map_io_pages: config.sim.map_io_pages,
            charge_erase_on_invalidate: config.sim.charge_erase_on_invalidate,
        };
        let specs = topo.storage_specs(config.sim.block_size);
        let initial: Vec<ServerSnapshot> = specs
            .iter()
            .map(|s| ServerSnapshot {
                server: s.node_id,
                remaining_write_capacity: s.initial_write_capacity(),
                utilization: 0.0,
            })
            .collect();
        let client_params = ClientParams {
            grant_total: config.protocol.grant_total,
            delayed_invalidations: config.protocol.delayed_invalidations,
            flush_on_close: config.protocol.flush_on_close,
            bands: config.protocol.bands.clone(),
            max_attempts: 4 * dir.storage.len() as u32 + 4,
        };
        let phi = config.protocol.phi.expect("resolved");
        let array_len = config.protocol.write_array_len.expect("resolved");

        let mut nodes = Vec::new();
        let mut index = BTreeMap::new();
        for (manager_no, spec) in topo.nodes().iter().enumerate() {
            let storage = spec.roles.storage.then(|| {
                let s = specs.iter().find(|s| s.node_id == spec.id).expect("storage spec");
                StorageServer::new(s.clone(), device, storage_params)
            });
            let client = spec.roles.client.then(|| match config.scenario {
                Scenario::WriteArray => ClientRole::WriteArray(Client::new(spec.id, client_params.clone())),
                Scenario::HdfsBaseline => ClientRole::Hdfs(HdfsClient::new(spec.id)),
            });
            let manager = spec.roles.management.then(|| match config.scenario {
                Scenario::WriteArray => {
                    ManagerRole::WriteArray(Manager::new(spec.id, &dir, initial.clone(), phi, array_len))
                }
                Scenario::HdfsBaseline => {
                    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
                    rng.set_stream(0x100 + manager_no as u64);
                    ManagerRole::Hdfs(Namenode::new(spec.id, config.baseline.params(), rng))
                }
            });
            index.insert(spec.id, nodes.len());
            nodes.push(Node {
                id: spec.id,
                roles: spec.roles,
                queue: NodeQueue::new(),
                storage,
                client,
                manager,
            });
        }
        let client_index: BTreeMap<NodeId, usize> =
            dir.clients.iter().enumerate().map(|(i, id)| (*id, i)).collect();
        let n_clients = dir.clients.len();

        let spec = config.workload_spec();
        let (source, total) = match replay {
            Some(ops) => {
                if let Some(op) = ops.iter().find(|op| op.client as usize >= n_clients) {
                    return Err(ConfigError::new(
                        "replay",
                        format!("op {} names client {} but the topology has {n_clients}", op.seq, op.client),
                    ));
                }
                let total = ops.len() as u64;
                (OpSource::Replay(ops.into()), total)
            }
            None => (OpSource::Generated(OpGenerator::new(spec, n_clients as u32)), config.workload.total_ops),
        };
        let think = (0..n_clients)
            .map(|c| {
                let mut rng = ChaCha8Rng::seed_from_u64(config.workload_seed());
                rng.set_stream(0x1000 + c as u64);
                rng
            })
            .collect();
        let mean = config.workload.think_time_mean_us;
        let driver = Driver {
            source,
            total,
            generated: 0,
            completed: 0,
            queued: vec![VecDeque::new(); n_clients],
            active: vec![None; n_clients],
            per_file: BTreeMap::new(),
            think,
            think_dist: (mean > 0).then(|| Exp::new(1.0 / mean as f64).expect("positive rate")),
        };
        let engine = Engine::new(SimTime::from_micros(config.sim.network_latency_us));
        let mut sim = Self {
            config,
            topo,
            dir,
            engine,
            nodes,
            index,
            client_index,
            driver,
            audit: Audit::default(),
            recorder: None,
            measurement: None,
            block_writes: 0,
            rejected_writes: 0,
            drained: false,
            worn_out: false,
            started: false,
        };
        if sim.config.workload.warmup_ops == 0 {
            sim.begin_measurement();
        }
        Ok(sim)
    }

    /// Convenience constructor loading topology and replay trace from the
    /// paths named in `config`.
    pub fn from_config(config: &RunConfig) -> Result<Self, ConfigError> {
        let topo = config.load_topology()?;
        let replay = match &config.workload.replay {
            Some(path) => {
                let origin = path.display().to_string();
                let text = std::fs::read_to_string(path).map_err(|e| ConfigError::new(&origin, e.to_string()))?;
                Some(crate::workload::read_trace(&origin, &text, topo.clients().count() as u32)?)
            }
            None => None,
        };
        Self::new(config, topo, replay)
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn topology(&self) -> &Topology {
        &self.topo
    }

    pub fn directory(&self) -> &Directory {
        &self.dir
    }

    pub fn now(&self) -> SimTime {
        self.engine.now()
    }

    pub fn engine(&self) -> &Engine {
        &self.engine
    }

    pub fn audit(&self) -> &Audit {
        &self.audit
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn storage_servers(&self) -> impl Iterator<Item = &StorageServer> {
        self.nodes.iter().filter_map(|n| n.storage.as_ref())
    }

    pub fn managers(&self) -> impl Iterator<Item = &Manager> {
        self.nodes.iter().filter_map(|n| match &n.manager {
            Some(ManagerRole::WriteArray(m)) => Some(m),
            _ => None,
        })
    }

    pub fn namenodes(&self) -> impl Iterator<Item = &Namenode> {
        self.nodes.iter().filter_map(|n| match &n.manager {
            Some(ManagerRole::Hdfs(m)) => Some(m),
            _ => None,
        })
    }

    pub fn clients(&self) -> impl Iterator<Item = &ClientRole> {
        self.nodes.iter().filter_map(|n| n.client.as_ref())
    }

    /// Write locks as the clients themselves believe they hold them.
    pub fn held_write_locks(&self) -> Vec<(NodeId, FileId)> {
        self.nodes
            .iter()
            .filter_map(|n| n.client.as_ref().and_then(|c| c.held_lock()).map(|f| (n.id, f)))
            .collect()
    }

    pub fn ops_completed(&self) -> u64 {
        self.driver.completed
    }

    pub fn block_writes(&self) -> u64 {
        self.block_writes
    }

    pub fn cluster_worn_out(&self) -> bool {
        self.worn_out
    }

    pub fn measuring(&self) -> bool {
        self.measurement.is_some()
    }

    /// True once the workload is done, buffers are flushed and no message
    /// is in flight.
    pub fn is_quiescent(&self) -> bool {
        self.drained && self.engine.pending() == 0 && self.clients().all(ClientRole::is_idle)
    }

    /// Writes the `time_us,seq,source,target,kind` event trace to `out`.
    pub fn set_trace(&mut self, out: Box<dyn Write + Send>) -> std::io::Result<()> {
        self.engine.set_trace(out)
    }

    /// Dispatches one event. Returns `false` when the run is over.
    pub fn step(&mut self) -> Result<bool, SimError> {
        if !self.started {
            self.started = true;
            for c in 0..self.dir.clients.len() {
                self.try_start(c)?;
            }
            return Ok(true);
        }
        if self.worn_out {
            return Ok(false);
        }
        let Some(next) = self.engine.peek_time() else {
            if !self.driver.done() {
                return Err(SimError::Protocol {
                    node: NodeId(u32::MAX),
                    detail: format!(
                        "simulation stalled with {} of {} ops completed",
                        self.driver.completed, self.driver.total
                    ),
                });
            }
            return Ok(false);
        };
        if let Some(mut rec) = self.recorder.take() {
            rec.advance(next, |at| self.snapshot(at));
            self.recorder = Some(rec);
        }
        let event = self.engine.pop_next().expect("peeked");
        self.dispatch(event)?;
        Ok(true)
    }

    pub fn run(&mut self) -> Result<(), SimError> {
        while self.step()? {}
        Ok(())
    }

    fn dispatch(&mut self, event: Event) -> Result<(), SimError> {
        let now = self.engine.now();
        let &idx = self
            .index
            .get(&event.target)
            .ok_or(SimError::UnknownNode(event.target))?;
        let msg = &event.message;
        let states = match (&msg.body, &self.nodes[idx].manager) {
            (MessageBody::AddBlock { .. }, Some(ManagerRole::Hdfs(_))) => Some(self.candidate_states(now)),
            _ => None,
        };
        let node = &mut self.nodes[idx];
        let mut out = Outbox::default();
        let mut service = SimTime::ZERO;
        let mut work = WorkKind::Other;
        let handled = match &msg.body {
            MessageBody::BlockWrite { .. }
            | MessageBody::Invalidate { .. }
            | MessageBody::InvalidateBatch { .. }
            | MessageBody::MapRead { .. }
            | MessageBody::MapWrite { .. }
            | MessageBody::ReconcileQuery { .. } => match node.storage.as_mut() {
                Some(s) => {
                    if matches!(msg.body, MessageBody::BlockWrite { .. }) {
                        work = WorkKind::BlockWrite;
                    }
                    service = s.handle(msg, &mut out).unwrap_or(SimTime::ZERO);
                    true
                }
                None => false,
            },
            MessageBody::LockRequest { .. }
            | MessageBody::LockRelease { .. }
            | MessageBody::CloseNotify { .. }
            | MessageBody::WriteArrayRequest { .. }
            | MessageBody::ReconcileReply { .. }
            | MessageBody::ReconcileSync { .. }
            | MessageBody::AddBlock { .. } => match node.manager.as_mut() {
                Some(ManagerRole::WriteArray(m)) => m.handle(msg, &self.dir, &mut out)?,
                Some(ManagerRole::Hdfs(m)) => m.handle(msg, &self.topo, states.as_ref(), &mut out)?,
                None => false,
            },
            MessageBody::LockGrant { .. }
            | MessageBody::LockDeny { .. }
            | MessageBody::MapReadReply { .. }
            | MessageBody::WriteArrayGrant { .. }
            | MessageBody::BlockWriteAck { .. }
            | MessageBody::AddBlockReply { .. } => match node.client.as_mut() {
                Some(ClientRole::WriteArray(c)) => c.handle(msg, &self.dir, &mut out)?,
                Some(ClientRole::Hdfs(c)) => c.handle(msg, &self.dir, &mut out)?,
                None => false,
            },
        };
        if !handled {
            return Err(SimError::Misrouted {
                node: event.target,
                kind: msg.kind(),
            });
        }
        let done = node.queue.admit(now, service, work);
        self.emit(idx, done, out)
    }

    fn emit(&mut self, idx: usize, at: SimTime, out: Outbox) -> Result<(), SimError> {
        let from = self.nodes[idx].id;
        for (to, body) in out.sends {
            self.engine.schedule(at, to, Message::new(from, body))?;
        }
        for note in out.notes {
            self.on_note(note)?;
        }
        Ok(())
    }

    fn on_note(&mut self, note: Note) -> Result<(), SimError> {
        match note {
            Note::OpCompleted { client, op_seq } => {
                let c = self.client_index[&client];
                debug_assert_eq!(self.driver.active[c], Some(op_seq));
                let file = self
                    .driver
                    .per_file
                    .iter()
                    .find(|(_, q)| q.front().map(|(s, _)| *s) == Some(op_seq))
                    .map(|(f, _)| *f)
                    .expect("completed op is head of its file queue");
                let next = self.driver.complete(c, file);
                if self.measurement.is_none() && self.driver.completed == self.config.workload.warmup_ops {
                    self.begin_measurement();
                }
                if let Some(n) = next {
                    if n != c {
                        self.try_start(n)?;
                    }
                }
                self.try_start(c)?;
                if self.driver.done() && !self.drained {
                    self.drain()?;
                }
            }
            Note::ClusterWornOut => self.worn_out = true,
            Note::BlockWritten { server, voucher, .. } => {
                self.block_writes += 1;
                if let Some(g) = voucher {
                    *self.audit.spent.entry((g, server)).or_default() += 1;
                }
            }
            Note::WriteRejected { .. } => self.rejected_writes += 1,
            Note::StaleInvalidate { server, block } => self.audit.stale_invalidates.push((server, block)),
            Note::Granted(record) => self.audit.grants.push(record),
        }
        Ok(())
    }

    fn try_start(&mut self, c: usize) -> Result<(), SimError> {
        let Some(op) = self.driver.ready(c) else {
            return Ok(());
        };
        let think = self.driver.think_time(c);
        let id = self.dir.clients[c];
        let idx = self.index[&id];
        let mut out = Outbox::default();
        match self.nodes[idx].client.as_mut().expect("client role") {
            ClientRole::WriteArray(cl) => cl.start(op, &self.dir, &mut out)?,
            ClientRole::Hdfs(cl) => cl.start(op, &self.dir, &mut out)?,
        }
        let at = self.engine.now() + think;
        self.emit(idx, at, out)
    }

    /// Sends every delayed invalidation once the workload is complete.
    fn drain(&mut self) -> Result<(), SimError> {
        self.drained = true;
        let now = self.engine.now();
        for idx in 0..self.nodes.len() {
            let mut out = Outbox::default();
            if let Some(ClientRole::WriteArray(c)) = self.nodes[idx].client.as_mut() {
                c.drain(&mut out);
            }
            if !out.sends.is_empty() {
                let at = self.nodes[idx].queue.admit(now, SimTime::ZERO, WorkKind::Other);
                self.emit(idx, at, out)?;
            }
        }
        Ok(())
    }

    fn begin_measurement(&mut self) {
        self.engine.reset_tally();
        let now = self.engine.now();
        self.measurement = Some(Measurement {
            start: now,
            events_at_start: self.engine.events_dispatched(),
            block_writes_at_start: self.block_writes,
            ops_at_start: self.driver.completed,
            bytes_at_start: self.storage_servers().map(|s| s.state.bytes_written_total()).collect(),
        });
        self.recorder = Some(SnapshotRecorder::new(
            now,
            self.config.snapshot_interval_us.map(SimTime::from_micros),
        ));
    }

    fn candidate_states(&self, now: SimTime) -> BTreeMap<NodeId, CandidateState> {
        self.nodes
            .iter()
            .filter_map(|n| {
                n.storage.as_ref().map(|s| {
                    (
                        n.id,
                        CandidateState {
                            outstanding_writes: n.queue.outstanding_writes(now),
                            utilization: s.state.space_utilization(),
                            remaining_write_capacity: s.state.remaining_write_capacity(),
                        },
                    )
                })
            })
            .collect()
    }

    /// Wear of every storage node, in directory order.
    pub fn snapshot(&self, at: SimTime) -> WearSnapshot {
        let baseline = match (&self.measurement, self.config.workload.wear_includes_warmup) {
            (Some(m), false) => Some(&m.bytes_at_start),
            _ => None,
        };
        let nodes = self
            .storage_servers()
            .enumerate()
            .map(|(i, s)| {
                let percentage_wear = match baseline {
                    None => s.state.percentage_wear(),
                    Some(b) => {
                        let spec = s.state.spec();
                        let bytes = s.state.bytes_written_total() - b[i];
                        bytes as f64 * 100.0 / (spec.capacity_bytes() as f64 * spec.max_endurance_cycles as f64)
                    }
                };
                NodeWear {
                    node_id: s.id(),
                    percentage_wear,
                    remaining_write_capacity: s.state.remaining_write_capacity(),
                    utilization: s.state.space_utilization(),
                }
            })
            .collect();
        WearSnapshot {
            time_us: at.as_micros(),
            nodes,
        }
    }

    /// Ends the run and builds its report.
    pub fn finish(mut self) -> Result<RunReport, SimError> {
        self.engine.finish_trace().map_err(SimError::Trace)?;
        let end = self.engine.now();
        let last = self.snapshot(end);
        let empty = self.measurement.is_none()
            || self.config.workload.warmup_ops >= self.driver.total;
        let series = match self.recorder.take() {
            Some(rec) if !empty => rec.finish(last.clone()),
            _ => vec![last.clone()],
        };
        if empty {
            self.engine.reset_tally();
        }
        let m = self.measurement.as_ref();
        let stats = RunStats {
            ops_completed: self.driver.completed,
            measured_ops: m.map_or(0, |m| self.driver.completed - m.ops_at_start),
            block_writes_total: self.block_writes,
            measured_block_writes: m.map_or(0, |m| self.block_writes - m.block_writes_at_start),
            rejected_writes: self.rejected_writes,
            stale_invalidates: self.audit.stale_invalidates.len() as u64,
            events_dispatched: self.engine.events_dispatched(),
            measured_events: if empty {
                0
            } else {
                m.map_or(0, |m| self.engine.events_dispatched() - m.events_at_start)
            },
            measurement_start_us: if empty { None } else { m.map(|m| m.start.as_micros()) },
            end_us: end.as_micros(),
        };
        let initial_capacity = self
            .storage_servers()
            .map(|s| {
                let spec = s.state.spec();
                InitialCapacity {
                    node_id: spec.node_id,
                    rack: spec.rack,
                    capacity_blocks: spec.capacity_blocks,
                    max_endurance_cycles: spec.max_endurance_cycles,
                    initial_write_capacity: spec.initial_write_capacity(),
                }
            })
            .collect();
        let tally = *self.engine.tally();
        // The output location does not affect results and would make
        // otherwise identical runs differ.
        let mut echo = self.config.clone();
        echo.out_dir = None;
        let config = serde_json::json!({
            "run": echo,
            "topology": self.topo,
        });
        Ok(RunReport {
            scenario: self.config.scenario.to_string(),
            measurement_window_empty: empty,
            cluster_worn_out: self.worn_out,
            wear_stddev: last.stddev(),
            invalidation_related_messages: tally.invalidation_related(),
            messages: tally,
            stats,
            final_snapshot: last,
            initial_capacity,
            config,
            series,
        })
    }
}

/// Runs `config` to completion.
pub fn run(config: &RunConfig, topo: Topology, replay: Option<Vec<FileOp>>) -> Result<RunReport, RunError> {
    let mut sim = Simulation::new(config, topo, replay)?;
    sim.run()?;
    Ok(sim.finish()?)
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Sim(#[from] SimError),
}
