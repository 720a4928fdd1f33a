//! Random small clusters and brute-force global-state checks shared by the
//! invariant tests and the acceptance harness.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wearsim_core::cluster::{NodeSpec, Roles, Topology};
use wearsim_core::ids::{BlockRef, FileId, NodeId};
use wearsim_core::simulation::ClientRole;
use wearsim_core::workload::{self, FileOp, OpKind};
use wearsim_core::{RunConfig, Scenario, Simulation};

pub struct SmallCase {
    pub config: RunConfig,
    pub topo: Topology,
    pub ops: Vec<FileOp>,
}

/// At most 8 nodes and 50 files, everything else drawn from `seed`.
pub fn small_case(seed: u64, scenario: Scenario) -> SmallCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let managers = rng.random_range(1..=2u32);
    let clients = rng.random_range(1..=3u32);
    let storage = rng.random_range(1..=(8 - managers - clients));
    let racks = rng.random_range(1..=storage.min(3));
    let file_count = rng.random_range(1..=50u64);
    let total_ops = rng.random_range(1..=60u64);

    // Room for every live file plus invalidations parked in client buffers.
    let need = (file_count.min(total_ops) * 8 * 2).div_ceil(storage as u64) + u64::from(clients) * 16 + 8;
    let mut nodes: Vec<Vec<NodeSpec>> = vec![Vec::new(); racks as usize];
    let mut next = 0u32;
    let mut push = |rack: u32, roles: Roles, cap: u64, cycles: u64, nodes: &mut Vec<Vec<NodeSpec>>| {
        nodes[rack as usize].push(NodeSpec {
            id: NodeId(next),
            rack,
            roles,
            capacity_blocks: cap,
            max_endurance_cycles: cycles,
        });
        next += 1;
    };
    for _ in 0..managers {
        let rack = rng.random_range(0..racks);
        push(rack, Roles::MANAGEMENT, 0, 0, &mut nodes);
    }
    for _ in 0..clients {
        let rack = rng.random_range(0..racks);
        push(rack, Roles::CLIENT, 0, 0, &mut nodes);
    }
    for i in 0..storage {
        // Every rack gets at least one storage node.
        let rack = if i < racks { i } else { rng.random_range(0..racks) };
        let cap = need + rng.random_range(0..=need);
        let cycles = rng.random_range(50..=400);
        push(rack, Roles::STORAGE, cap, cycles, &mut nodes);
    }
    let topo = Topology::new(nodes.into_iter().enumerate().map(|(r, n)| (r as u32, n)).collect())
        .expect("valid small topology");

    let mut config = RunConfig::default();
    config.scenario = scenario;
    config.seed = rng.random();
    config.workload.file_count = file_count;
    config.workload.total_ops = total_ops;
    config.workload.warmup_ops = rng.random_range(0..=total_ops);
    config.workload.think_time_mean_us = rng.random_range(0..=2_000);
    config.workload.rewrite_fraction = [1.0, 0.5, 0.2][rng.random_range(0..3)];
    config.protocol.phi = Some(rng.random_range(1..=200));
    config.protocol.grant_total = rng.random_range(1..=64);
    config.protocol.write_array_len = Some(rng.random_range(1..=storage as usize));
    config.protocol.delayed_invalidations = rng.random_bool(0.7);
    config.protocol.flush_on_close = rng.random_bool(0.3);
    config.baseline.replica_count = rng.random_range(1..=storage.min(3) as usize);
    config.sim.network_latency_us = rng.random_range(0..=500);

    let ops = workload::generate(&config.workload_spec(), clients);
    SmallCase { config, topo, ops }
}

/// Files alive after replaying `ops`, with their block counts.
pub fn live_files(ops: &[FileOp]) -> BTreeMap<FileId, u32> {
    let mut live = BTreeMap::new();
    for op in ops {
        match op.kind {
            OpKind::Create => {
                live.insert(op.file, op.blocks);
            }
            OpKind::Rewrite => {}
            OpKind::Delete => {
                live.remove(&op.file);
            }
        }
    }
    live
}

#[derive(Debug, Default, Clone, Copy)]
pub struct Checked {
    pub steps: u64,
    pub grants: u64,
    pub budget_cells: u64,
    pub live_blocks: u64,
}

/// Runs the case step by step, asserting lock exclusivity after every event
/// and budget, proportionality, occupancy and invalidation properties at
/// quiescence.
pub fn run_and_check(case: &SmallCase) -> Result<Checked, String> {
    let mut sim = Simulation::new(&case.config, case.topo.clone(), Some(case.ops.clone()))
        .map_err(|e| format!("config: {e}"))?;
    let mut checked = Checked::default();
    loop {
        let more = sim.step().map_err(|e| format!("step {}: {e}", checked.steps))?;
        checked.steps += 1;
        check_locks(&sim).map_err(|e| format!("step {}: {e}", checked.steps))?;
        if !more {
            break;
        }
    }
    if sim.cluster_worn_out() {
        return Err("small case wore out".into());
    }
    if !sim.is_quiescent() {
        return Err("run ended without quiescence".into());
    }
    if sim.ops_completed() != case.ops.len() as u64 {
        return Err(format!("{} of {} ops completed", sim.ops_completed(), case.ops.len()));
    }
    check_occupancy(&sim)?;
    match case.config.scenario {
        Scenario::WriteArray => {
            checked.grants = check_proportionality(&sim)?;
            checked.budget_cells = check_budgets(&sim)?;
            checked.live_blocks = check_maps(&sim, &case.ops)?;
        }
        Scenario::HdfsBaseline => {
            checked.live_blocks = check_replicas(&sim, &case.ops)?;
        }
    }
    Ok(checked)
}

/// No two clients hold the write lock on one file, and the managers' tables
/// never disagree with that.
pub fn check_locks(sim: &Simulation) -> Result<(), String> {
    let mut seen = BTreeMap::new();
    for (client, file) in sim.held_write_locks() {
        if let Some(other) = seen.insert(file, client) {
            return Err(format!("{file} held by both {other} and {client}"));
        }
    }
    let mut table = BTreeSet::new();
    for m in sim.managers() {
        for (file, holder) in m.locks.held() {
            if !table.insert(file) {
                return Err(format!("{file} locked at two managers"));
            }
            if let Some(c) = seen.get(&file) {
                if *c != holder {
                    return Err(format!("{file}: client {c} believes it holds a lock owned by {holder}"));
                }
            }
        }
    }
    for m in sim.namenodes() {
        for (file, holder) in m.locks.held() {
            if !table.insert(file) {
                return Err(format!("{file} locked at two namenodes"));
            }
            if let Some(c) = seen.get(&file) {
                if *c != holder {
                    return Err(format!("{file}: client {c} believes it holds a lock owned by {holder}"));
                }
            }
        }
    }
    Ok(())
}

/// Every slot is either free or holds exactly one valid block; nothing is
/// left in client invalidation buffers.
pub fn check_occupancy(sim: &Simulation) -> Result<(), String> {
    for s in sim.storage_servers() {
        let cap = s.state.spec().capacity_blocks;
        let valid = s.state.valid_blocks().count() as u64;
        if valid != s.state.valid_count() || valid + s.state.free_slots() != cap {
            return Err(format!(
                "{}: {} valid + {} free != {} capacity",
                s.id(),
                valid,
                s.state.free_slots(),
                cap
            ));
        }
    }
    for c in sim.clients() {
        if let ClientRole::WriteArray(c) = c {
            if c.buffered().total_pending() != 0 {
                return Err(format!("{} still buffers {} invalidations", c.id(), c.buffered().total_pending()));
            }
        }
    }
    Ok(())
}

/// Recomputes each grant's exact proportional shares from the capacities the
/// manager saw; every budget is within one block-write of its share.
pub fn check_proportionality(sim: &Simulation) -> Result<u64, String> {
    let mut n = 0;
    for g in &sim.audit().grants {
        let caps: BTreeMap<NodeId, u64> = g.capacities.iter().copied().collect();
        let eligible = caps.values().filter(|c| **c > 0).count();
        if g.entries.len() != eligible.min(g.array_len) {
            return Err(format!("grant {:?} has {} entries, expected {}", g.id, g.entries.len(), eligible.min(g.array_len)));
        }
        let chosen: Vec<u64> = g.entries.iter().map(|e| caps[&e.server]).collect();
        if chosen.contains(&0) {
            return Err(format!("grant {:?} picked a worn-out server", g.id));
        }
        let sum: u64 = chosen.iter().sum();
        let mut total = 0;
        for (e, c) in g.entries.iter().zip(&chosen) {
            let exact = g.requested_total as f64 * *c as f64 / sum as f64;
            if (e.budget as f64 - exact).abs() > 1.0 + 1e-9 {
                return Err(format!("grant {:?}: budget {} for {} vs exact {exact}", g.id, e.budget, e.server));
            }
            total += e.budget;
        }
        if total != g.requested_total {
            return Err(format!("grant {:?} sums to {total}, requested {}", g.id, g.requested_total));
        }
        n += 1;
    }
    Ok(n)
}

/// Writes charged to a grant never exceed its budget per server, and writes
/// in each reconciliation window never exceed what was granted in it.
pub fn check_budgets(sim: &Simulation) -> Result<u64, String> {
    let audit = sim.audit();
    let mut budget: BTreeMap<_, u64> = BTreeMap::new();
    for g in &audit.grants {
        for e in &g.entries {
            *budget.entry((g.id, e.server)).or_default() += e.budget;
        }
    }
    for (key, spent) in &audit.spent {
        let have = budget.get(key).copied().unwrap_or(0);
        if *spent > have {
            return Err(format!("{:?} wrote {spent} blocks against budget {have}", key));
        }
    }
    let granted = audit.granted_per_window();
    for (key, written) in audit.written_per_window() {
        let have = granted.get(&key).copied().unwrap_or(0);
        if written > have {
            return Err(format!("window {:?}: {written} writes, {have} granted", key));
        }
    }
    Ok(audit.spent.len() as u64)
}

/// Live files are exactly those the op stream leaves alive; each has a map
/// at the location its home manager records, the map covers every block,
/// and the valid blocks across the cluster are exactly the mapped copies.
pub fn check_maps(sim: &Simulation, ops: &[FileOp]) -> Result<u64, String> {
    let live = live_files(ops);
    let mut locations = BTreeMap::new();
    for m in sim.managers() {
        for (file, at) in m.maps.iter() {
            locations.insert(file, at);
        }
    }
    let files: BTreeSet<_> = locations.keys().copied().collect();
    if files != live.keys().copied().collect() {
        return Err(format!("manager maps cover {files:?}, live files are {:?}", live.keys()));
    }
    let mut expected = BTreeSet::new();
    for (file, at) in &locations {
        let server = sim
            .storage_servers()
            .find(|s| s.id() == *at)
            .ok_or_else(|| format!("{file}: map location {at} is not a storage server"))?;
        let map = server.map(*file).ok_or_else(|| format!("{file}: no map stored on {at}"))?;
        if map.len() as u32 != live[file] {
            return Err(format!("{file}: map has {} blocks, file has {}", map.len(), live[file]));
        }
        for (server, block) in map.copies() {
            expected.insert((server, block));
        }
    }
    let mut actual = BTreeSet::new();
    let mut slots: BTreeMap<(FileId, u32), u32> = BTreeMap::new();
    for s in sim.storage_servers() {
        for b in s.state.valid_blocks() {
            actual.insert((s.id(), *b));
            *slots.entry((b.file, b.index)).or_default() += 1;
        }
    }
    if let Some(((f, i), n)) = slots.iter().find(|(_, n)| **n > 1) {
        return Err(format!("block {f}/{i} has {n} valid copies"));
    }
    if expected != actual {
        let extra: Vec<_> = actual.difference(&expected).take(3).collect();
        let missing: Vec<_> = expected.difference(&actual).take(3).collect();
        return Err(format!("valid blocks differ from maps: unreferenced {extra:?}, missing {missing:?}"));
    }
    Ok(actual.len() as u64)
}

/// Baseline: every valid block belongs to a live file at its namenode's
/// current generation, with at most `replica_count` copies.
pub fn check_replicas(sim: &Simulation, ops: &[FileOp]) -> Result<u64, String> {
    let live = live_files(ops);
    let replicas = sim.config().baseline.replica_count as u32;
    let mut copies: BTreeMap<BlockRef, u32> = BTreeMap::new();
    for s in sim.storage_servers() {
        for b in s.state.valid_blocks() {
            if !live.contains_key(&b.file) {
                return Err(format!("{}: valid block of deleted file {}", s.id(), b.file));
            }
            if b.index >= live[&b.file] {
                return Err(format!("{}: block index {} beyond file size", s.id(), b.index));
            }
            *copies.entry(*b).or_default() += 1;
        }
    }
    let mut per_index: BTreeMap<(FileId, u32), u32> = BTreeMap::new();
    for (b, n) in &copies {
        if *n > replicas {
            return Err(format!("{b:?} has {n} copies"));
        }
        *per_index.entry((b.file, b.index)).or_default() += 1;
    }
    if let Some((k, _)) = per_index.iter().find(|(_, n)| **n > 1) {
        return Err(format!("{k:?} has valid copies from two generations"));
    }
    Ok(copies.len() as u64)
}
