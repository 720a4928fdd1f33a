//! Wear and message metrics, the analytical wear-out table, and report files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::NodeId;
use crate::sim::{MessageKind, SimTime};

/// Per-kind message counters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MessageTally {
    counts: [u64; MessageKind::COUNT],
}

impl Default for MessageTally {
    fn default() -> Self {
        Self {
            counts: [0; MessageKind::COUNT],
        }
    }
}

impl MessageTally {
    pub fn record(&mut self, kind: MessageKind) {
        self.counts[kind.index()] += 1;
    }

    pub fn get(&self, kind: MessageKind) -> u64 {
        self.counts[kind.index()]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// `Invalidate` plus `InvalidateBatch` messages.
    pub fn invalidation_related(&self) -> u64 {
        MessageKind::ALL
            .iter()
            .filter(|k| k.is_invalidation())
            .map(|k| self.get(*k))
            .sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (MessageKind, u64)> + '_ {
        MessageKind::ALL.iter().map(|k| (*k, self.get(*k)))
    }

    pub fn to_map(&self) -> BTreeMap<String, u64> {
        self.iter().map(|(k, c)| (k.as_str().to_string(), c)).collect()
    }
}

impl Serialize for MessageTally {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_map().serialize(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeWear {
    pub node_id: NodeId,
    pub percentage_wear: f64,
    pub remaining_write_capacity: u64,
    pub utilization: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WearSnapshot {
    pub time_us: u64,
    pub nodes: Vec<NodeWear>,
}

impl WearSnapshot {
    pub fn stddev(&self) -> f64 {
        let wear: Vec<f64> = self.nodes.iter().map(|n| n.percentage_wear).collect();
        wear_stddev(&wear)
    }

    pub fn min_remaining(&self) -> Option<u64> {
        self.nodes.iter().map(|n| n.remaining_write_capacity).min()
    }
}

/// Population standard deviation; zero for fewer than two values.
pub fn wear_stddev(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    var.sqrt()
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{name} must be positive, got {value}")]
pub struct ArgumentError {
    pub name: &'static str,
    pub value: f64,
}

/// Days until a device of `size_mib` MiB with `max_cycles` endurance wears
/// out when written continuously at `speed_mb_per_s` MB/s.
pub fn wearout_time_days(size_mib: f64, max_cycles: f64, speed_mb_per_s: f64) -> Result<f64, ArgumentError> {
    for (name, value) in [
        ("size_mib", size_mib),
        ("max_cycles", max_cycles),
        ("speed_mb_per_s", speed_mb_per_s),
    ] {
        if value.is_nan() || value <= 0.0 {
            return Err(ArgumentError { name, value });
        }
    }
    Ok(size_mib * max_cycles / speed_mb_per_s / 86_400.0)
}

pub const TABLE1_SIZES_GIB: [u64; 4] = [1, 2, 5, 10];
pub const TABLE1_CYCLES: [u64; 2] = [10_000, 100_000];
pub const TABLE1_SPEEDS: [u64; 3] = [40, 80, 100];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Table1Cell {
    pub size_gib: u64,
    pub max_cycles: u64,
    pub speed_mb_per_s: u64,
    pub days: f64,
}

/// Wear-out days for every size, endurance and speed combination, row-major
/// by size, then endurance, then speed.
pub fn table1() -> Vec<Table1Cell> {
    let mut cells = Vec::new();
    for size in TABLE1_SIZES_GIB {
        for cycles in TABLE1_CYCLES {
            for speed in TABLE1_SPEEDS {
                let days = wearout_time_days((size * 1024) as f64, cycles as f64, speed as f64)
                    .expect("table inputs are positive");
                cells.push(Table1Cell {
                    size_gib: size,
                    max_cycles: cycles,
                    speed_mb_per_s: speed,
                    days,
                });
            }
        }
    }
    cells
}

pub fn table1_text() -> String {
    let cells = table1();
    let mut out = String::from("size    ");
    for cycles in TABLE1_CYCLES {
        for speed in TABLE1_SPEEDS {
            let _ = write!(out, " {:>14}", format!("{}k@{}MB/s", cycles / 1000, speed));
        }
    }
    out.push('\n');
    for row in cells.chunks(TABLE1_CYCLES.len() * TABLE1_SPEEDS.len()) {
        let _ = write!(out, "{:<8}", format!("{}GB", row[0].size_gib));
        for cell in row {
            let _ = write!(out, " {:>9.2} days", cell.days);
        }
        out.push('\n');
    }
    out
}

pub fn table1_csv() -> String {
    let mut out = String::from("size_gib,max_cycles,speed_mb_per_s,days\n");
    for c in table1() {
        let _ = writeln!(out, "{},{},{},{:.2}", c.size_gib, c.max_cycles, c.speed_mb_per_s, c.days);
    }
    out
}

/// Collects wear snapshots on a fixed grid `origin + k * interval`.
///
/// Without an explicit interval the grid adapts: it starts fine and doubles
/// whenever [`SnapshotRecorder::ADAPTIVE_LIMIT`] snapshots have piled up,
/// keeping the ones that sit on the coarser grid.
#[derive(Debug, Clone)]
pub struct SnapshotRecorder {
    origin: SimTime,
    interval: SimTime,
    adaptive: bool,
    snapshots: Vec<WearSnapshot>,
}

impl SnapshotRecorder {
    pub const ADAPTIVE_LIMIT: usize = 40;
    const ADAPTIVE_START: SimTime = SimTime::from_millis(1);

    pub fn new(origin: SimTime, interval: Option<SimTime>) -> Self {
        let (interval, adaptive) = match interval {
            Some(i) => (i, false),
            None => (Self::ADAPTIVE_START, true),
        };
        assert!(interval > SimTime::ZERO, "snapshot interval must be positive");
        Self {
            origin,
            interval,
            adaptive,
            snapshots: Vec::new(),
        }
    }

    pub fn next_due(&self) -> SimTime {
        self.origin + self.interval.times(self.snapshots.len() as u64 + 1)
    }

    /// Records snapshots for every grid point strictly before `upcoming`,
    /// the delivery time of the next event.
    pub fn advance(&mut self, upcoming: SimTime, mut take: impl FnMut(SimTime) -> WearSnapshot) {
        while self.next_due() < upcoming {
            let at = self.next_due();
            self.snapshots.push(take(at));
            if self.adaptive && self.snapshots.len() >= Self::ADAPTIVE_LIMIT {
                let kept: Vec<WearSnapshot> = self.snapshots.drain(..).skip(1).step_by(2).collect();
                self.snapshots = kept;
                self.interval = self.interval.times(2);
            }
        }
    }

    /// Adds the end-of-run snapshot and returns the series.
    pub fn finish(mut self, last: WearSnapshot) -> Vec<WearSnapshot> {
        if self.snapshots.last().is_some_and(|s| s.time_us >= last.time_us) {
            self.snapshots.pop();
        }
        self.snapshots.push(last);
        self.snapshots
    }

    pub fn interval(&self) -> SimTime {
        self.interval
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialCapacity {
    pub node_id: NodeId,
    pub rack: u32,
    pub capacity_blocks: u64,
    pub max_endurance_cycles: u64,
    pub initial_write_capacity: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub ops_completed: u64,
    pub measured_ops: u64,
    pub block_writes_total: u64,
    pub measured_block_writes: u64,
    pub rejected_writes: u64,
    pub stale_invalidates: u64,
    pub events_dispatched: u64,
    pub measured_events: u64,
    pub measurement_start_us: Option<u64>,
    pub end_us: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub scenario: String,
    pub measurement_window_empty: bool,
    pub cluster_worn_out: bool,
    pub wear_stddev: f64,
    pub invalidation_related_messages: u64,
    pub messages: MessageTally,
    pub stats: RunStats,
    pub final_snapshot: WearSnapshot,
    pub initial_capacity: Vec<InitialCapacity>,
    /// Fully resolved run configuration, including the topology.
    pub config: serde_json::Value,
    #[serde(skip)]
    pub series: Vec<WearSnapshot>,
}

impl RunReport {
    pub fn summary_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn timeseries_csv(&self) -> String {
        let mut out = String::from("time_us,node_id,percentage_wear,remaining_capacity,utilization\n");
        for snap in &self.series {
            for n in &snap.nodes {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{}",
                    snap.time_us, n.node_id, n.percentage_wear, n.remaining_write_capacity, n.utilization
                );
            }
        }
        out
    }

    pub fn messages_csv(&self) -> String {
        let mut out = String::from("kind,count\n");
        for (kind, count) in self.messages.iter() {
            let _ = writeln!(out, "{kind},{count}");
        }
        out
    }

    pub fn initial_capacity_csv(&self) -> String {
        let mut out = String::from("node_id,rack,capacity_blocks,max_endurance_cycles,initial_write_capacity\n");
        for c in &self.initial_capacity {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                c.node_id, c.rack, c.capacity_blocks, c.max_endurance_cycles, c.initial_write_capacity
            );
        }
        out
    }
}

pub const SUMMARY_FILE: &str = "summary.json";
pub const TIMESERIES_FILE: &str = "wear_timeseries.csv";
pub const MESSAGES_FILE: &str = "messages.csv";
pub const INITIAL_CAPACITY_FILE: &str = "initial_capacity.csv";

/// Writes the four report files into `out_dir`, creating it if needed.
pub fn emit_report(report: &RunReport, out_dir: &Path) -> io::Result<()> {
    fs::create_dir_all(out_dir)?;
    fs::write(out_dir.join(SUMMARY_FILE), report.summary_json())?;
    fs::write(out_dir.join(TIMESERIES_FILE), report.timeseries_csv())?;
    fs::write(out_dir.join(MESSAGES_FILE), report.messages_csv())?;
    fs::write(out_dir.join(INITIAL_CAPACITY_FILE), report.initial_capacity_csv())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn snap(t: u64, wear: &[f64]) -> WearSnapshot {
        WearSnapshot {
            time_us: t,
            nodes: wear
                .iter()
                .enumerate()
                .map(|(i, w)| NodeWear {
                    node_id: NodeId(i as u32),
                    percentage_wear: *w,
                    remaining_write_capacity: 0,
                    utilization: 0.0,
                })
                .collect(),
        }
    }

    #[test]
    fn stddev_examples() {
        assert_eq!(wear_stddev(&[3.0, 3.0, 3.0]), 0.0);
        assert_eq!(wear_stddev(&[10.0, 20.0]), 5.0);
        assert_eq!(wear_stddev(&[7.5]), 0.0);
    }

    #[test]
    fn wearout_rejects_non_positive() {
        assert!(wearout_time_days(0.0, 1.0, 1.0).is_err());
        assert!(wearout_time_days(1.0, -1.0, 1.0).is_err());
        assert!(wearout_time_days(1.0, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn table_has_24_cells() {
        assert_eq!(table1().len(), 24);
        assert_eq!(table1_csv().lines().count(), 25);
    }

    #[test]
    fn tally_aggregates() {
        let mut t = MessageTally::default();
        t.record(MessageKind::Invalidate);
        t.record(MessageKind::InvalidateBatch);
        t.record(MessageKind::BlockWrite);
        assert_eq!(t.total(), 3);
        assert_eq!(t.invalidation_related(), 2);
    }

    #[test]
    fn long_interval_yields_one_snapshot() {
        let mut r = SnapshotRecorder::new(SimTime::ZERO, Some(SimTime::from_secs(100)));
        r.advance(SimTime::from_secs(10), |t| snap(t.as_micros(), &[0.0]));
        let series = r.finish(snap(10_000_000, &[1.0]));
        assert_eq!(series.len(), 1);
    }

    #[test]
    fn fixed_grid() {
        let mut r = SnapshotRecorder::new(SimTime::ZERO, Some(SimTime::from_secs(1)));
        for ms in (0..=10_000).step_by(250) {
            r.advance(SimTime::from_millis(ms), |t| snap(t.as_micros(), &[0.0]));
        }
        let series = r.finish(snap(10_000_000, &[0.0]));
        let times: Vec<u64> = series.iter().map(|s| s.time_us / 1_000_000).collect();
        assert_eq!(times, (1..=10).collect::<Vec<_>>());
    }

    #[test]
    fn adaptive_grid_stays_bounded() {
        let mut r = SnapshotRecorder::new(SimTime::ZERO, None);
        r.advance(SimTime::from_secs(3600), |t| snap(t.as_micros(), &[0.0]));
        let series = r.finish(snap(3_600_000_000, &[0.0]));
        assert!(series.len() >= SnapshotRecorder::ADAPTIVE_LIMIT / 2);
        assert!(series.len() <= SnapshotRecorder::ADAPTIVE_LIMIT);
        assert!(series.windows(2).all(|w| w[0].time_us < w[1].time_us));
    }
}
