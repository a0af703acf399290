use anonshm_core::explore::{non_atomicity_witness_exists, PickPolicy};
use anonshm_core::*;
use std::collections::BTreeSet;
use std::time::Instant;

fn main() {
    let wirings: Vec<(&str, Vec<Vec<usize>>)> = vec![
        ("identity", vec![vec![1, 2, 3], vec![1, 2, 3], vec![1, 2, 3]]),
        ("fig2", vec![vec![2, 3, 1], vec![1, 2, 3], vec![1, 2, 3]]),
        ("rotations", vec![vec![1, 2, 3], vec![2, 3, 1], vec![3, 1, 2]]),
    ];
    let targets: Vec<Vec<u32>> = vec![vec![1, 2], vec![1, 3], vec![2, 3], vec![1], vec![2], vec![3]];
    for (label, perms) in &wirings {
        for target in &targets {
            let config = Config {
                n_processors: 3,
                n_registers: 3,
                algorithm: Algorithm::Snapshot,
                inputs: vec![GroupId(1), GroupId(2), GroupId(3)],
                perms: PermSpec::Explicit(
                    perms.iter().map(|v| Permutation::new(v.clone()).unwrap()).collect(),
                ),
                schedule: ScheduleSpec::Exhaustive { depth_bound: None, ts_cap: None },
            };
            let t: BTreeSet<GroupId> = target.iter().map(|&g| GroupId(g)).collect();
            let t0 = Instant::now();
            let v = non_atomicity_witness_exists(&config, &t, PickPolicy::DefaultOnly, 320_000_000, 3).unwrap();
            println!("default thr=3 {label} {target:?}: {v:?} in {:?}", t0.elapsed());
            if v == Some(true) {
                return;
            }
        }
    }
    // The big one: all-picks, pairs, identity.
    for target in &[vec![1u32, 2]] {
        let config = Config {
            n_processors: 3,
            n_registers: 3,
            algorithm: Algorithm::Snapshot,
            inputs: vec![GroupId(1), GroupId(2), GroupId(3)],
            perms: PermSpec::Explicit(vec![Permutation::identity(3); 3]),
            schedule: ScheduleSpec::Exhaustive { depth_bound: None, ts_cap: None },
        };
        let t: BTreeSet<GroupId> = target.iter().map(|&g| GroupId(g)).collect();
        let t0 = Instant::now();
        let v = non_atomicity_witness_exists(&config, &t, PickPolicy::All, 330_000_000, 3).unwrap();
        println!("all thr=3 identity {target:?}: {v:?} in {:?}", t0.elapsed());
    }
}
