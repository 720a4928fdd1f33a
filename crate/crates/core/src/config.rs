//! Run configuration: TOML file plus command-line overrides.
//!
//! ```toml
//! scenario = "write-array"      # or "hdfs-baseline"
//! seed = 1
//! nodes = 32                    # generated single-rack cluster, or:
//! # topology = "lopsided4.toml"
//! snapshot_interval_us = 60000000
//! trace = false
//!
//! [workload]
//! file_count = 100
//! total_ops = 12000
//! warmup_ops = 1000
//! op_mix = { create = 0.4, rewrite = 0.4, delete = 0.2 }
//!
//! [protocol]
//! grant_total = 64
//! delayed_invalidations = true
//! bands = [ { max_utilization = 0.2, threshold = 15 }, { max_utilization = 0.5, threshold = 7 } ]
//!
//! [baseline]
//! replica_count = 3
//!
//! [sim]
//! network_latency_us = 250
//! timing = { page_read_us = 25, page_write_us = 200, block_erase_us = 2000 }
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::baseline::BaselineParams;
use crate::cluster::{topology, Topology, DEFAULT_BLOCK_SIZE, DEFAULT_PAGE_SIZE};
use crate::error::{line_of_key, ConfigError};
use crate::protocol::BandTable;
use crate::sim::FlashTiming;
use crate::workload::{OpMix, WorkloadSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    HdfsBaseline,
    WriteArray,
}

impl Scenario {
    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::HdfsBaseline => "hdfs-baseline",
            Scenario::WriteArray => "write-array",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "hdfs-baseline" => Ok(Scenario::HdfsBaseline),
            "write-array" => Ok(Scenario::WriteArray),
            other => Err(format!("unknown scenario {other:?} (expected hdfs-baseline or write-array)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub seed: u64,
    /// Topology file; relative paths resolve against the config file.
    pub topology: Option<PathBuf>,
    /// Size of a generated single-rack cluster, used when no file is given.
    pub nodes: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub snapshot_interval_us: Option<u64>,
    pub trace: bool,
    pub workload: WorkloadConfig,
    pub protocol: ProtocolConfig,
    pub baseline: BaselineConfig,
    pub sim: SimConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scenario: Scenario::WriteArray,
            seed: 1,
            topology: None,
            nodes: None,
            out_dir: None,
            snapshot_interval_us: None,
            trace: false,
            workload: WorkloadConfig::default(),
            protocol: ProtocolConfig::default(),
            baseline: BaselineConfig::default(),
            sim: SimConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WorkloadConfig {
    pub file_count: u64,
    pub op_mix: OpMix,
    pub total_ops: u64,
    pub warmup_ops: u64,
    /// Defaults to the run seed.
    pub seed: Option<u64>,
    pub think_time_mean_us: u64,
    pub rewrite_fraction: f64,
    /// Op trace to replay instead of generating ops.
    pub replay: Option<PathBuf>,
    /// Report wear accumulated during warm-up as part of the wear metrics.
    pub wear_includes_warmup: bool,
}

impl Default for WorkloadConfig {
    fn default() -> Self {
        Self {
            file_count: 100,
            op_mix: OpMix::default(),
            total_ops: 12_000,
            warmup_ops: 1_000,
            seed: None,
            think_time_mean_us: 1_000,
            rewrite_fraction: 1.0,
            replay: None,
            wear_includes_warmup: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProtocolConfig {
    /// Block-writes a manager grants before reconciling; defaults to 5% of
    /// the cluster's initial write capacity.
    pub phi: Option<u64>,
    pub grant_total: u64,
    /// Defaults to min(8, storage servers).
    pub write_array_len: Option<usize>,
    pub delayed_invalidations: bool,
    pub flush_on_close: bool,
    pub bands: BandTable,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            phi: None,
            grant_total: 64,
            write_array_len: None,
            delayed_invalidations: true,
            flush_on_close: false,
            bands: BandTable::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BaselineConfig {
    pub replica_count: usize,
    pub space_floor: f64,
    pub load_factor: f64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        let p = BaselineParams::default();
        Self {
            replica_count: p.replica_count,
            space_floor: p.space_floor,
            load_factor: p.load_factor,
        }
    }
}

impl BaselineConfig {
    pub fn params(&self) -> BaselineParams {
        BaselineParams {
            replica_count: self.replica_count,
            space_floor: self.space_floor,
            load_factor: self.load_factor,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub network_latency_us: u64,
    pub page_size: u64,
    pub block_size: u64,
    pub timing: FlashTiming,
    pub map_io_pages: u64,
    pub charge_erase_on_invalidate: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            network_latency_us: 250,
            page_size: DEFAULT_PAGE_SIZE,
            block_size: DEFAULT_BLOCK_SIZE,
            timing: FlashTiming::default(),
            map_io_pages: 1,
            charge_erase_on_invalidate: false,
        }
    }
}

impl RunConfig {
    /// Parses and validates a config file's text.
    pub fn from_toml_str(origin: &str, text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError::from_toml(origin, text, &e))?;
        cfg.validate(origin, Some(text))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let origin = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::new(&origin, e.to_string()))?;
        let mut cfg = Self::from_toml_str(&origin, &text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        if let Some(t) = cfg.topology.as_mut() {
            if t.is_relative() {
                *t = base.join(&*t);
            }
        }
        if let Some(r) = cfg.workload.replay.as_mut() {
            if r.is_relative() {
                *r = base.join(&*r);
            }
        }
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Checks value ranges. `text` is the source file, used to point at the
    /// offending line.
    pub fn validate(&self, origin: &str, text: Option<&str>) -> Result<(), ConfigError> {
        let fail = |section: &str, key: &str, message: String| {
            let line = text.and_then(|t| line_of_key(t, section, key));
            Err(ConfigError::new(origin, message).with_line(line))
        };
        if self.topology.is_some() && self.nodes.is_some() {
            return fail("", "nodes", "set either `topology` or `nodes`, not both".into());
        }
        if self.nodes == Some(0) {
            return fail("", "nodes", "nodes must be at least 1".into());
        }
        if self.snapshot_interval_us == Some(0) {
            return fail("", "snapshot_interval_us", "snapshot_interval_us must be positive".into());
        }
        let w = &self.workload;
        if w.file_count == 0 {
            return fail("workload", "file_count", "file_count must be at least 1".into());
        }
        if w.total_ops == 0 {
            return fail("workload", "total_ops", "total_ops must be at least 1".into());
        }
        if w.warmup_ops > w.total_ops {
            return fail("workload", "warmup_ops", "warmup_ops exceeds total_ops".into());
        }
        if let Err(m) = w.op_mix.validate() {
            return fail("workload", "op_mix", m);
        }
        if !(w.rewrite_fraction > 0.0 && w.rewrite_fraction <= 1.0) {
            return fail("workload", "rewrite_fraction", "rewrite_fraction must lie in (0, 1]".into());
        }
        let p = &self.protocol;
        if p.phi == Some(0) {
            return fail("protocol", "phi", "phi must be at least 1".into());
        }
        if p.grant_total == 0 {
            return fail("protocol", "grant_total", "grant_total must be at least 1".into());
        }
        if p.write_array_len == Some(0) {
            return fail("protocol", "write_array_len", "write_array_len must be at least 1".into());
        }
        if let Err(m) = BandTable::new(p.bands.bands().to_vec()) {
            return fail("protocol", "bands", m);
        }
        let b = &self.baseline;
        if b.replica_count == 0 {
            return fail("baseline", "replica_count", "replica_count must be at least 1".into());
        }
        if !(0.0..1.0).contains(&b.space_floor) {
            return fail("baseline", "space_floor", "space_floor must lie in [0, 1)".into());
        }
        if b.load_factor.is_nan() || b.load_factor < 0.0 {
            return fail("baseline", "load_factor", "load_factor must be non-negative".into());
        }
        let s = &self.sim;
        if s.page_size == 0 {
            return fail("sim", "page_size", "page_size must be positive".into());
        }
        if s.block_size == 0 || !s.block_size.is_multiple_of(s.page_size) {
            return fail("sim", "block_size", "block_size must be a positive multiple of page_size".into());
        }
        Ok(())
    }

    /// Builds the cluster this config describes.
    pub fn load_topology(&self) -> Result<Topology, ConfigError> {
        match (&self.topology, self.nodes) {
            (Some(path), _) => {
                let origin = path.display().to_string();
                let text = std::fs::read_to_string(path).map_err(|e| ConfigError::new(&origin, e.to_string()))?;
                Topology::from_toml_str(&origin, &text)
            }
            (None, Some(n)) => Ok(topology::linear(&topology::LinearLayout::new(n, self.seed))),
            (None, None) => Err(ConfigError::new("config", "no topology: set `topology` or `nodes`")),
        }
    }

    pub fn workload_seed(&self) -> u64 {
        self.workload.seed.unwrap_or(self.seed)
    }

    pub fn workload_spec(&self) -> WorkloadSpec {
        WorkloadSpec {
            file_count: self.workload.file_count,
            op_mix: self.workload.op_mix,
            total_ops: self.workload.total_ops,
            warmup_ops: self.workload.warmup_ops,
            seed: self.workload_seed(),
            rewrite_fraction: self.workload.rewrite_fraction,
        }
    }

    /// Fills every defaulted parameter with the value a run on `topo` uses.
    pub fn resolved(&self, topo: &Topology) -> RunConfig {
        let mut cfg = self.clone();
        let storage = topo.storage_nodes().count();
        cfg.workload.seed = Some(self.workload_seed());
        cfg.protocol.phi = Some(self.protocol.phi.unwrap_or_else(|| default_phi(topo)));
        cfg.protocol.write_array_len = Some(self.protocol.write_array_len.unwrap_or(storage.min(8)).max(1));
        cfg
    }
}

/// 5% of the cluster's initial write capacity, at least one block-write.
pub fn default_phi(topo: &Topology) -> u64 {
    (topo.initial_write_capacity() / 20).max(1)
}
