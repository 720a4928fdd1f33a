use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use thiserror::Error;

use crate::cluster::Topology;
use crate::ids::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlacementRequest {
    /// Node that generates the write.
    pub writer: NodeId,
    pub replica_count: usize,
}

/// What the namenode knows about a candidate when placing a replica.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidateState {
    /// Block writes queued or in service at the node.
    pub outstanding_writes: usize,
    pub utilization: f64,
    pub remaining_write_capacity: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub load_threshold: f64,
    pub space_floor: f64,
}

impl Thresholds {
    /// `load_factor` times the mean outstanding writes across candidates.
    pub fn from_states(states: &BTreeMap<NodeId, CandidateState>, load_factor: f64, space_floor: f64) -> Self {
        let mean = if states.is_empty() {
            0.0
        } else {
            states.values().map(|s| s.outstanding_writes as f64).sum::<f64>() / states.len() as f64
        };
        Self {
            load_threshold: load_factor * mean,
            space_floor,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Accept,
    Reject,
}

/// Rejects overloaded nodes, nodes short of free space, and worn-out nodes.
pub fn overload_check(candidate: &CandidateState, thresholds: &Thresholds) -> Verdict {
    if candidate.outstanding_writes as f64 > thresholds.load_threshold || !has_room(candidate, thresholds) {
        Verdict::Reject
    } else {
        Verdict::Accept
    }
}

fn has_room(candidate: &CandidateState, thresholds: &Thresholds) -> bool {
    1.0 - candidate.utilization >= thresholds.space_floor && candidate.remaining_write_capacity > 0
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cannot place {replica_count} replicas for writer {writer}: {detail} (placed {placed:?})")]
pub struct PlacementFailure {
    pub writer: NodeId,
    pub replica_count: usize,
    pub placed: Vec<NodeId>,
    pub detail: String,
}

/// Rack-aware replica placement.
///
/// The first replica goes on the writer when it is an acceptable storage
/// node, else on a random node of the writer's rack; the second on a remote
/// rack; the third on another node of the writer's rack; the rest anywhere.
/// No node gets two replicas and no rack more than two, unless there are more
/// replicas than twice the racks. Candidates failing [`overload_check`] are
/// dropped and the draw repeated, up to three times the storage node count.
/// When only overloaded nodes are left, one of them is taken anyway; nodes
/// short of space or worn out never are.
pub fn choose_targets<R: Rng>(
    req: &PlacementRequest,
    topo: &Topology,
    states: &BTreeMap<NodeId, CandidateState>,
    thresholds: &Thresholds,
    rng: &mut R,
) -> Result<Vec<NodeId>, PlacementFailure> {
    let storage: Vec<(NodeId, u32)> = topo.storage_nodes().map(|n| (n.id, n.rack)).collect();
    let local_rack = topo.rack_of(req.writer);
    let writer_is_storage = storage.iter().any(|(id, _)| *id == req.writer);
    let rack_cap = if req.replica_count > 2 * topo.storage_rack_count() {
        usize::MAX
    } else {
        2
    };
    let budget = 3 * storage.len();
    let mut rejected: BTreeSet<NodeId> = BTreeSet::new();
    // Rejected for load alone.
    let mut busy: BTreeSet<NodeId> = BTreeSet::new();
    let mut chosen: Vec<NodeId> = Vec::with_capacity(req.replica_count);
    let mut per_rack: BTreeMap<u32, usize> = BTreeMap::new();

    let fail = |chosen: &[NodeId], detail: String| PlacementFailure {
        writer: req.writer,
        replica_count: req.replica_count,
        placed: chosen.to_vec(),
        detail,
    };

    for replica in 0..req.replica_count {
        loop {
            let open = |id: &NodeId, rack: &u32, chosen: &[NodeId], rejected: &BTreeSet<NodeId>, per_rack: &BTreeMap<u32, usize>| {
                !chosen.contains(id)
                    && !rejected.contains(id)
                    && per_rack.get(rack).copied().unwrap_or(0) < rack_cap
            };
            let preferred: Vec<NodeId> = if replica == 0 && writer_is_storage && !rejected.contains(&req.writer) {
                vec![req.writer]
            } else {
                storage
                    .iter()
                    .filter(|(id, rack)| {
                        open(id, rack, &chosen, &rejected, &per_rack)
                            && match replica {
                                0 | 2 => Some(*rack) == local_rack,
                                1 => Some(*rack) != local_rack,
                                _ => true,
                            }
                    })
                    .map(|(id, _)| *id)
                    .collect()
            };
            let pool = if preferred.is_empty() {
                storage
                    .iter()
                    .filter(|(id, rack)| open(id, rack, &chosen, &rejected, &per_rack))
                    .map(|(id, _)| *id)
                    .collect()
            } else {
                preferred
            };
            if pool.is_empty() {
                let fallback: Vec<NodeId> = storage
                    .iter()
                    .filter(|(id, rack)| {
                        busy.contains(id)
                            && !chosen.contains(id)
                            && per_rack.get(rack).copied().unwrap_or(0) < rack_cap
                    })
                    .map(|(id, _)| *id)
                    .collect();
                if fallback.is_empty() {
                    return Err(fail(&chosen, "no eligible storage node left".into()));
                }
                let candidate = fallback[rng.random_range(0..fallback.len())];
                let rack = topo.rack_of(candidate).expect("storage node in topology");
                *per_rack.entry(rack).or_default() += 1;
                chosen.push(candidate);
                break;
            }
            let candidate = pool[rng.random_range(0..pool.len())];
            let verdict = states
                .get(&candidate)
                .map_or(Verdict::Reject, |s| overload_check(s, thresholds));
            if verdict == Verdict::Accept {
                let rack = topo.rack_of(candidate).expect("storage node in topology");
                *per_rack.entry(rack).or_default() += 1;
                chosen.push(candidate);
                break;
            }
            rejected.insert(candidate);
            if states.get(&candidate).is_some_and(|s| has_room(s, thresholds)) {
                busy.insert(candidate);
            }
            if rejected.len() > budget {
                return Err(fail(&chosen, format!("{} candidates rejected", rejected.len())));
            }
        }
    }
    Ok(chosen)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::topology::{storage, NodeSpec};
    use crate::cluster::Roles;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn idle(ids: &[u32]) -> BTreeMap<NodeId, CandidateState> {
        ids.iter()
            .map(|&i| {
                (
                    NodeId(i),
                    CandidateState {
                        outstanding_writes: 0,
                        utilization: 0.0,
                        remaining_write_capacity: 100,
                    },
                )
            })
            .collect()
    }

    fn client(id: u32) -> NodeSpec {
        NodeSpec {
            id: NodeId(id),
            rack: 0,
            roles: Roles::CLIENT,
            capacity_blocks: 0,
            max_endurance_cycles: 0,
        }
    }

    fn mgmt(id: u32) -> NodeSpec {
        NodeSpec {
            roles: Roles::MANAGEMENT,
            ..client(id)
        }
    }

    fn two_racks() -> Topology {
        Topology::new(vec![
            (
                0,
                vec![
                    mgmt(0),
                    storage(1, Roles::STORAGE_CLIENT, 10, 10),
                    storage(2, Roles::STORAGE, 10, 10),
                ],
            ),
            (1, vec![storage(3, Roles::STORAGE, 10, 10)]),
        ])
        .unwrap()
    }

    fn th() -> Thresholds {
        Thresholds {
            load_threshold: 0.0,
            space_floor: 0.05,
        }
    }

    #[test]
    fn single_replica_is_local() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let req = PlacementRequest {
            writer: NodeId(1),
            replica_count: 1,
        };
        let t = choose_targets(&req, &two_racks(), &idle(&[1, 2, 3]), &th(), &mut rng).unwrap();
        assert_eq!(t, vec![NodeId(1)]);
    }

    #[test]
    fn forced_three_replica_layout() {
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let req = PlacementRequest {
                writer: NodeId(1),
                replica_count: 3,
            };
            let t = choose_targets(&req, &two_racks(), &idle(&[1, 2, 3]), &th(), &mut rng).unwrap();
            assert_eq!(t, vec![NodeId(1), NodeId(3), NodeId(2)]);
        }
    }

    #[test]
    fn rack_cap_relaxed_for_many_replicas() {
        let topo = Topology::new(vec![
            (
                0,
                vec![
                    mgmt(0),
                    client(9),
                    storage(1, Roles::STORAGE, 10, 10),
                    storage(2, Roles::STORAGE, 10, 10),
                    storage(3, Roles::STORAGE, 10, 10),
                ],
            ),
            (
                1,
                vec![storage(4, Roles::STORAGE, 10, 10), storage(5, Roles::STORAGE, 10, 10)],
            ),
        ])
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let req = PlacementRequest {
            writer: NodeId(1),
            replica_count: 5,
        };
        let mut t = choose_targets(&req, &topo, &idle(&[1, 2, 3, 4, 5]), &th(), &mut rng).unwrap();
        t.sort();
        assert_eq!(t, (1..=5).map(NodeId).collect::<Vec<_>>());
    }

    #[test]
    fn pure_client_writer_uses_local_rack() {
        let topo = Topology::new(vec![
            (0, vec![mgmt(0), client(9), storage(1, Roles::STORAGE, 10, 10)]),
            (1, vec![storage(2, Roles::STORAGE, 10, 10)]),
        ])
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let req = PlacementRequest {
            writer: NodeId(9),
            replica_count: 2,
        };
        let t = choose_targets(&req, &topo, &idle(&[1, 2]), &th(), &mut rng).unwrap();
        assert_eq!(t, vec![NodeId(1), NodeId(2)]);
    }

    #[test]
    fn overload_checks() {
        let t = th();
        let ok = CandidateState {
            outstanding_writes: 0,
            utilization: 0.0,
            remaining_write_capacity: 5,
        };
        assert_eq!(overload_check(&ok, &t), Verdict::Accept);
        let full = CandidateState { utilization: 1.0, ..ok };
        assert_eq!(overload_check(&full, &t), Verdict::Reject);
        let busy = CandidateState { outstanding_writes: 1, ..ok };
        assert_eq!(overload_check(&busy, &t), Verdict::Reject);
        let worn = CandidateState { remaining_write_capacity: 0, ..ok };
        assert_eq!(overload_check(&worn, &t), Verdict::Reject);
    }

    #[test]
    fn busy_writer_is_redrawn() {
        // Writer 1 has queued writes above twice the mean; replica 1 falls
        // back to the other node of its rack.
        let mut states = idle(&[1, 2, 3]);
        states.get_mut(&NodeId(1)).unwrap().outstanding_writes = 3;
        let thresholds = Thresholds::from_states(&states, 2.0, 0.05);
        assert_eq!(thresholds.load_threshold, 2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let req = PlacementRequest {
            writer: NodeId(1),
            replica_count: 2,
        };
        let t = choose_targets(&req, &two_racks(), &states, &thresholds, &mut rng).unwrap();
        assert_eq!(t, vec![NodeId(2), NodeId(3)]);
    }

    #[test]
    fn unsatisfiable_placement_fails() {
        let mut states = idle(&[1, 2, 3]);
        for s in states.values_mut() {
            s.utilization = 1.0;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let req = PlacementRequest {
            writer: NodeId(1),
            replica_count: 1,
        };
        let err = choose_targets(&req, &two_racks(), &states, &th(), &mut rng).unwrap_err();
        assert!(err.placed.is_empty());
    }
}
