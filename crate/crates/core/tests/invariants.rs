mod common;

use proptest::prelude::*;
use wearsim_core::Scenario;

proptest! {
    #![proptest_config(ProptestConfig { cases: 1000, ..ProptestConfig::default() })]

    #[test]
    fn write_array_small_clusters_hold_every_invariant(seed in any::<u64>()) {
        let case = common::small_case(seed, Scenario::WriteArray);
        if let Err(e) = common::run_and_check(&case) {
            prop_assert!(false, "seed {seed}: {e}");
        }
    }

    #[test]
    fn baseline_small_clusters_keep_locks_and_replicas_sound(seed in any::<u64>()) {
        let case = common::small_case(seed, Scenario::HdfsBaseline);
        if let Err(e) = common::run_and_check(&case) {
            prop_assert!(false, "seed {seed}: {e}");
        }
    }
}

#[test]
fn delaying_never_sends_more_invalidations() {
    for seed in 0..200 {
        let mut case = common::small_case(seed, Scenario::WriteArray);
        case.config.workload.warmup_ops = 0;
        let count = |delayed: bool, case: &mut common::SmallCase| {
            case.config.protocol.delayed_invalidations = delayed;
            let r = wearsim_core::run(&case.config, case.topo.clone(), Some(case.ops.clone())).unwrap();
            r.invalidation_related_messages
        };
        let on = count(true, &mut case);
        let off = count(false, &mut case);
        assert!(on <= off, "seed {seed}: {on} delayed vs {off} immediate");
    }
}
