//! The bit-packed exploration engine and the generic one must agree: same
//! state and edge counts, same terminal assignments, same wait-freedom
//! verdicts. Small instances are exhausted on both paths.

use anonshm_core::explore::{explore, ExploreOptions, PickPolicy, WaitFree};
use anonshm_core::{Algorithm, Config, GroupId, PermSpec, Permutation, ScheduleSpec};

fn config(algorithm: Algorithm, n: usize, m: usize, inputs: &[u32]) -> Config {
    Config {
        n_processors: n,
        n_registers: m,
        algorithm,
        inputs: inputs.iter().map(|&g| GroupId(g)).collect(),
        perms: PermSpec::Explicit(vec![Permutation::identity(m); n]),
        schedule: ScheduleSpec::Exhaustive {
            depth_bound: None,
            ts_cap: None,
        },
    }
}

fn run_both(config: &Config, picks: PickPolicy) -> (usize, usize, usize, bool, bool) {
    let fast = explore(
        config,
        &ExploreOptions {
            pick_policy: picks,
            ..ExploreOptions::default()
        },
    )
    .unwrap();
    let generic = explore(
        config,
        &ExploreOptions {
            pick_policy: picks,
            force_generic: true,
            ..ExploreOptions::default()
        },
    )
    .unwrap();
    assert_eq!(fast.states, generic.states, "state counts differ");
    assert_eq!(fast.edges, generic.edges, "edge counts differ");
    assert_eq!(
        fast.terminal_assignments, generic.terminal_assignments,
        "terminal assignments differ"
    );
    assert_eq!(fast.terminal_count, generic.terminal_count);
    assert_eq!(
        fast.durability_violations.len(),
        generic.durability_violations.len()
    );
    assert_eq!(
        matches!(fast.wait_free, WaitFree::Violated { .. }),
        matches!(generic.wait_free, WaitFree::Violated { .. })
    );
    (
        fast.states,
        fast.edges,
        fast.terminal_count,
        matches!(fast.wait_free, WaitFree::Holds),
        fast.atomicity_witness.is_some() == generic.atomicity_witness.is_some(),
    )
}

#[test]
fn snapshot_two_processors_agree() {
    for picks in [PickPolicy::All, PickPolicy::DefaultOnly] {
        for inputs in [[1u32, 2], [1, 1]] {
            let (states, _, terminals, wait_free, _) =
                run_both(&config(Algorithm::Snapshot, 2, 2, &inputs), picks);
            assert!(wait_free);
            assert!(terminals > 0);
            assert!(states > 100);
        }
    }
}

#[test]
fn renaming_two_processors_agree() {
    let (_, _, terminals, wait_free, _) =
        run_both(&config(Algorithm::Renaming, 2, 2, &[1, 2]), PickPolicy::All);
    assert!(wait_free);
    assert!(terminals > 0);
}

#[test]
fn writescan_cycles_agree() {
    for m in [1usize, 2] {
        let (_, _, terminals, wait_free, _) =
            run_both(&config(Algorithm::WriteScan, 2, m, &[1, 2]), PickPolicy::All);
        assert!(!wait_free, "write-scan never terminates");
        assert_eq!(terminals, 0);
    }
}
