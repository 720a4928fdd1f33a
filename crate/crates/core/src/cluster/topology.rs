//! Racks, node roles and the on-disk topology format.
//!
//! A topology file is TOML with one `[[racks]]` table per rack, each
//! listing its nodes:
//!
//! ```toml
//! [[racks]]
//! id = 0
//! nodes = [
//!   { id = 0, role = "management" },
//!   { id = 1, role = "client" },
//!   { id = 2, role = "storage", capacity_blocks = 512, max_endurance_cycles = 300 },
//!   { id = 3, role = "storage+client", capacity_blocks = 512, max_endurance_cycles = 300 },
//! ]
//! ```
//!
//! `role` is one of `client`, `management`, `storage`, or several of them
//! joined with `+` for co-located roles. Storage roles require
//! `capacity_blocks` and `max_endurance_cycles`.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::ops::RangeInclusive;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::ids::NodeId;

use super::StorageNodeSpec;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Roles {
    pub client: bool,
    pub management: bool,
    pub storage: bool,
}

impl Roles {
    pub const CLIENT: Roles = Roles {
        client: true,
        management: false,
        storage: false,
    };
    pub const MANAGEMENT: Roles = Roles {
        client: false,
        management: true,
        storage: false,
    };
    pub const STORAGE: Roles = Roles {
        client: false,
        management: false,
        storage: true,
    };
    pub const STORAGE_CLIENT: Roles = Roles {
        client: true,
        management: false,
        storage: true,
    };

    pub fn parse(text: &str) -> Option<Roles> {
        let mut roles = Roles::default();
        for part in text.split('+') {
            match part.trim() {
                "client" => roles.client = true,
                "management" => roles.management = true,
                "storage" => roles.storage = true,
                _ => return None,
            }
        }
        Some(roles)
    }

    pub fn label(&self) -> String {
        let mut parts = Vec::new();
        if self.storage {
            parts.push("storage");
        }
        if self.management {
            parts.push("management");
        }
        if self.client {
            parts.push("client");
        }
        parts.join("+")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub id: NodeId,
    pub rack: u32,
    pub roles: Roles,
    pub capacity_blocks: u64,
    pub max_endurance_cycles: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rack {
    pub id: u32,
    pub nodes: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Topology {
    racks: Vec<Rack>,
    nodes: Vec<NodeSpec>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TopologyFile {
    racks: Vec<RackEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RackEntry {
    id: u32,
    nodes: Vec<NodeEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeEntry {
    id: u32,
    role: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    capacity_blocks: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    max_endurance_cycles: Option<u64>,
}

impl Topology {
    /// Builds a topology from `(rack id, nodes)` groups and validates it.
    pub fn new(racks: Vec<(u32, Vec<NodeSpec>)>) -> Result<Self, ConfigError> {
        let mut out_racks = Vec::with_capacity(racks.len());
        let mut nodes = Vec::new();
        for (rack_id, rack_nodes) in racks {
            let mut ids = Vec::with_capacity(rack_nodes.len());
            for mut node in rack_nodes {
                node.rack = rack_id;
                ids.push(node.id);
                nodes.push(node);
            }
            out_racks.push(Rack {
                id: rack_id,
                nodes: ids,
            });
        }
        let topo = Topology {
            racks: out_racks,
            nodes,
        };
        topo.validate().map_err(|m| ConfigError::new("topology", m))?;
        Ok(topo)
    }

    fn validate(&self) -> Result<(), String> {
        let mut seen = BTreeSet::new();
        for node in &self.nodes {
            if !seen.insert(node.id) {
                return Err(format!("node id {} appears more than once", node.id));
            }
            if node.roles == Roles::default() {
                return Err(format!("node {} has no role", node.id));
            }
            if node.roles.storage {
                if node.capacity_blocks == 0 {
                    return Err(format!("storage node {} needs capacity_blocks > 0", node.id));
                }
                if node.max_endurance_cycles == 0 {
                    return Err(format!(
                        "storage node {} needs max_endurance_cycles > 0",
                        node.id
                    ));
                }
                if node.capacity_blocks > u64::from(u32::MAX) {
                    return Err(format!("storage node {} is too large", node.id));
                }
            }
        }
        let mut rack_ids = BTreeSet::new();
        for rack in &self.racks {
            if !rack_ids.insert(rack.id) {
                return Err(format!("rack id {} appears more than once", rack.id));
            }
        }
        if !self.nodes.iter().any(|n| n.roles.storage) {
            return Err("topology has no storage node".into());
        }
        if !self.nodes.iter().any(|n| n.roles.client) {
            return Err("topology has no client node".into());
        }
        if !self.nodes.iter().any(|n| n.roles.management) {
            return Err("topology has no management node".into());
        }
        Ok(())
    }

    pub fn from_toml_str(origin: &str, text: &str) -> Result<Self, ConfigError> {
        let file: TopologyFile =
            toml::from_str(text).map_err(|e| ConfigError::from_toml(origin, text, &e))?;
        let mut racks = Vec::with_capacity(file.racks.len());
        for rack in file.racks {
            let mut nodes = Vec::with_capacity(rack.nodes.len());
            for entry in rack.nodes {
                let at = || find_node_line(text, entry.id);
                let roles = Roles::parse(&entry.role).ok_or_else(|| {
                    ConfigError::new(origin, format!("unknown role {:?}", entry.role))
                        .with_line(at())
                })?;
                if !roles.storage
                    && (entry.capacity_blocks.is_some() || entry.max_endurance_cycles.is_some())
                {
                    return Err(ConfigError::new(
                        origin,
                        format!("node {} has storage fields but no storage role", entry.id),
                    )
                    .with_line(at()));
                }
                nodes.push(NodeSpec {
                    id: NodeId(entry.id),
                    rack: rack.id,
                    roles,
                    capacity_blocks: entry.capacity_blocks.unwrap_or(0),
                    max_endurance_cycles: entry.max_endurance_cycles.unwrap_or(0),
                });
            }
            racks.push((rack.id, nodes));
        }
        Topology::new(racks).map_err(|e| {
            // Point at the offending node when the message names one.
            let line = e
                .message
                .split_whitespace()
                .find_map(|w| w.parse::<u32>().ok())
                .and_then(|id| {
                    // A duplicate is reported where it repeats.
                    if e.message.contains("more than once") {
                        node_lines(text, id).nth(1)
                    } else {
                        find_node_line(text, id)
                    }
                });
            ConfigError::new(origin, e.message).with_line(line)
        })
    }

    pub fn to_toml_string(&self) -> String {
        let mut out = String::new();
        for rack in &self.racks {
            let _ = writeln!(out, "[[racks]]\nid = {}\nnodes = [", rack.id);
            for id in &rack.nodes {
                let node = self.node(*id).expect("rack member");
                let _ = write!(out, "  {{ id = {}, role = \"{}\"", node.id, node.roles.label());
                if node.roles.storage {
                    let _ = write!(
                        out,
                        ", capacity_blocks = {}, max_endurance_cycles = {}",
                        node.capacity_blocks, node.max_endurance_cycles
                    );
                }
                out.push_str(" },\n");
            }
            out.push_str("]\n\n");
        }
        out
    }

    pub fn racks(&self) -> &[Rack] {
        &self.racks
    }

    pub fn nodes(&self) -> &[NodeSpec] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> Option<&NodeSpec> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn rack_of(&self, id: NodeId) -> Option<u32> {
        self.node(id).map(|n| n.rack)
    }

    pub fn storage_nodes(&self) -> impl Iterator<Item = &NodeSpec> {
        self.nodes.iter().filter(|n| n.roles.storage)
    }

    pub fn clients(&self) -> impl Iterator<Item = &NodeSpec> {
        self.nodes.iter().filter(|n| n.roles.client)
    }

    pub fn managers(&self) -> impl Iterator<Item = &NodeSpec> {
        self.nodes.iter().filter(|n| n.roles.management)
    }

    /// Racks that contain at least one storage node.
    pub fn storage_rack_count(&self) -> usize {
        self.racks
            .iter()
            .filter(|r| {
                r.nodes
                    .iter()
                    .any(|id| self.node(*id).is_some_and(|n| n.roles.storage))
            })
            .count()
    }

    pub fn storage_specs(&self, block_size_bytes: u64) -> Vec<StorageNodeSpec> {
        self.storage_nodes()
            .map(|n| StorageNodeSpec {
                node_id: n.id,
                rack: n.rack,
                capacity_blocks: n.capacity_blocks,
                block_size_bytes,
                max_endurance_cycles: n.max_endurance_cycles,
            })
            .collect()
    }

    /// Sum of lifetime write budgets, in block-writes.
    pub fn initial_write_capacity(&self) -> u64 {
        self.storage_nodes()
            .map(|n| n.capacity_blocks * n.max_endurance_cycles)
            .sum()
    }
}

fn find_node_line(text: &str, id: u32) -> Option<usize> {
    node_lines(text, id).next()
}

fn node_lines(text: &str, id: u32) -> impl Iterator<Item = usize> + '_ {
    let needle = format!("id = {id}");
    text.lines().enumerate().filter_map(move |(i, line)| {
        let t = line.trim_start().trim_start_matches('{').trim_start();
        (t.starts_with(&needle) && t.contains("role")).then_some(i + 1)
    })
}

/// Parameters for a single-rack cluster with randomized node sizes.
#[derive(Debug, Clone)]
pub struct LinearLayout {
    pub storage_nodes: usize,
    pub clients: usize,
    pub managers: usize,
    pub capacity_blocks: RangeInclusive<u64>,
    pub endurance_cycles: RangeInclusive<u64>,
    pub seed: u64,
}

impl LinearLayout {
    pub fn new(storage_nodes: usize, seed: u64) -> Self {
        Self {
            storage_nodes,
            clients: 8,
            managers: 2,
            capacity_blocks: 256..=768,
            endurance_cycles: 100..=400,
            seed,
        }
    }
}

/// Single failure domain, node sizes and endurance drawn uniformly.
pub fn linear(layout: &LinearLayout) -> Topology {
    let mut rng = ChaCha8Rng::seed_from_u64(layout.seed);
    let mut nodes = Vec::new();
    let mut next = 0u32;
    for _ in 0..layout.managers {
        nodes.push(plain(next, Roles::MANAGEMENT));
        next += 1;
    }
    for _ in 0..layout.clients {
        nodes.push(plain(next, Roles::CLIENT));
        next += 1;
    }
    for _ in 0..layout.storage_nodes {
        let capacity = rng.random_range(layout.capacity_blocks.clone());
        let cycles = rng.random_range(layout.endurance_cycles.clone());
        nodes.push(storage(next, Roles::STORAGE, capacity, cycles));
        next += 1;
    }
    Topology::new(vec![(0, nodes)]).expect("generated topology is valid")
}

/// Four racks of unequal size (1, 3, 5 and 7 storage nodes) with two
/// clients in each rack; every storage node has the same size and endurance.
pub fn lopsided4(capacity_blocks: u64, cycles: u64) -> Topology {
    let sizes = [1usize, 3, 5, 7];
    let mut next = 0u32;
    let mut racks = Vec::new();
    for (rack, &size) in sizes.iter().enumerate() {
        let mut nodes = Vec::new();
        if rack == 0 {
            for _ in 0..2 {
                nodes.push(plain(next, Roles::MANAGEMENT));
                next += 1;
            }
        }
        for _ in 0..2 {
            nodes.push(plain(next, Roles::CLIENT));
            next += 1;
        }
        for _ in 0..size {
            nodes.push(storage(next, Roles::STORAGE, capacity_blocks, cycles));
            next += 1;
        }
        racks.push((rack as u32, nodes));
    }
    Topology::new(racks).expect("generated topology is valid")
}

/// Single rack of equal-capacity nodes, alternating between `high` and
/// `low` endurance.
pub fn mixed_endurance(storage_nodes: usize, capacity_blocks: u64, high: u64, low: u64) -> Topology {
    let mut nodes = vec![plain(0, Roles::MANAGEMENT), plain(1, Roles::MANAGEMENT)];
    let mut next = 2u32;
    for _ in 0..8 {
        nodes.push(plain(next, Roles::CLIENT));
        next += 1;
    }
    for i in 0..storage_nodes {
        let cycles = if i % 2 == 0 { high } else { low };
        nodes.push(storage(next, Roles::STORAGE, capacity_blocks, cycles));
        next += 1;
    }
    Topology::new(vec![(0, nodes)]).expect("generated topology is valid")
}

fn plain(id: u32, roles: Roles) -> NodeSpec {
    NodeSpec {
        id: NodeId(id),
        rack: 0,
        roles,
        capacity_blocks: 0,
        max_endurance_cycles: 0,
    }
}

pub(crate) fn storage(id: u32, roles: Roles, capacity_blocks: u64, cycles: u64) -> NodeSpec {
    NodeSpec {
        id: NodeId(id),
        rack: 0,
        roles,
        capacity_blocks,
        max_endurance_cycles: cycles,
    }
}
