use proptest::prelude::*;
use wearsim_core::metrics::{self, wear_stddev, wearout_time_days, NodeWear, SnapshotRecorder, WearSnapshot};
use wearsim_core::sim::SimTime;
use wearsim_core::ids::NodeId;

/// Wear-out days as printed, rows 1, 2, 5 and 10 GB; columns 10k cycles at
/// 40/80/100 MB/s then 100k cycles at 40/80/100 MB/s.
const PRINTED: [[f64; 6]; 4] = [
    [2.96, 1.48, 1.18, 29.63, 14.81, 11.85],
    [5.93, 2.96, 2.37, 59.62, 29.63, 23.70],
    [14.81, 7.41, 5.93, 148.15, 74.07, 59.26],
    [29.63, 14.81, 11.85, 296.30, 148.15, 118.52],
];

#[test]
fn grid_matches_printed_values_except_the_transposed_cell() {
    let cells = metrics::table1();
    assert_eq!(cells.len(), 24);
    for (i, cell) in cells.iter().enumerate() {
        let printed = PRINTED[i / 6][i % 6];
        let oracle = (cell.size_gib * 1024 * cell.max_cycles) as f64 / cell.speed_mb_per_s as f64 / 86_400.0;
        assert!((cell.days - oracle).abs() < 1e-9);
        if (cell.size_gib, cell.max_cycles, cell.speed_mb_per_s) == (2, 100_000, 40) {
            assert!((cell.days - 59.26).abs() <= 0.01, "{}", cell.days);
            assert!((cell.days - printed).abs() > 0.3);
        } else {
            assert!((cell.days - printed).abs() <= 0.01, "cell {i}: {} vs {printed}", cell.days);
        }
    }
}

#[test]
fn doubling_size_doubles_days() {
    let one = wearout_time_days(1024.0, 10_000.0, 100.0).unwrap();
    let two = wearout_time_days(2048.0, 10_000.0, 100.0).unwrap();
    assert!((two - 2.0 * one).abs() < 1e-12);
    assert!(wearout_time_days(0.0, 1.0, 1.0).is_err());
    assert!(wearout_time_days(1.0, -1.0, 1.0).is_err());
    assert!(wearout_time_days(1.0, 1.0, 0.0).is_err());
}

#[test]
fn text_and_csv_grids_list_every_cell() {
    assert_eq!(metrics::table1_csv().lines().count(), 25);
    assert_eq!(metrics::table1_text().lines().count(), 5);
    assert!(metrics::table1_text().contains("59.26 days"));
}

#[test]
fn stddev_examples() {
    assert_eq!(wear_stddev(&[10.0, 20.0]), 5.0);
    assert_eq!(wear_stddev(&[7.0]), 0.0);
    assert_eq!(wear_stddev(&[3.0; 9]), 0.0);
}

proptest! {
    #[test]
    fn stddev_matches_two_pass_oracle(values in prop::collection::vec(0.0f64..100.0, 1..64)) {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        prop_assert!((wear_stddev(&values) - var.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn fixed_grid_snapshots_are_strictly_increasing(interval in 1u64..50, events in prop::collection::vec(1u64..40, 1..60)) {
        let mut rec = SnapshotRecorder::new(SimTime::ZERO, Some(SimTime::from_micros(interval)));
        let mut t = 0;
        for step in events {
            t += step;
            rec.advance(SimTime::from_micros(t), |at| snap(at.as_micros()));
        }
        let series = rec.finish(snap(t));
        prop_assert_eq!(series.last().unwrap().time_us, t);
        prop_assert!(series.windows(2).all(|w| w[0].time_us < w[1].time_us));
        for (i, s) in series.iter().enumerate().take(series.len() - 1) {
            prop_assert_eq!(s.time_us, (i as u64 + 1) * interval);
        }
    }
}

fn snap(time_us: u64) -> WearSnapshot {
    WearSnapshot {
        time_us,
        nodes: vec![NodeWear {
            node_id: NodeId(1),
            percentage_wear: 0.0,
            remaining_write_capacity: 1,
            utilization: 0.0,
        }],
    }
}

#[test]
fn long_interval_gives_only_the_final_snapshot() {
    let mut rec = SnapshotRecorder::new(SimTime::ZERO, Some(SimTime::from_secs(100)));
    rec.advance(SimTime::from_secs(5), |at| snap(at.as_micros()));
    assert_eq!(rec.finish(snap(5_000_000)).len(), 1);
}

#[test]
fn ten_second_run_with_one_second_grid_has_ten_snapshots() {
    let mut rec = SnapshotRecorder::new(SimTime::ZERO, Some(SimTime::from_secs(1)));
    for ms in (250..=10_000).step_by(250) {
        rec.advance(SimTime::from_millis(ms), |at| snap(at.as_micros()));
    }
    assert_eq!(rec.finish(snap(10_000_000)).len(), 10);
}

#[test]
fn adaptive_grid_stays_bounded() {
    let mut rec = SnapshotRecorder::new(SimTime::ZERO, None);
    for s in 1..=100_000u64 {
        rec.advance(SimTime::from_millis(s * 7), |at| snap(at.as_micros()));
    }
    let series = rec.finish(snap(700_000_000));
    assert!(series.len() <= SnapshotRecorder::ADAPTIVE_LIMIT);
    assert!(series.len() >= SnapshotRecorder::ADAPTIVE_LIMIT / 2);
}
