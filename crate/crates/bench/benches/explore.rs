//! Exploration throughput: packed engine on small exhaustive spaces.

use anonshm_bench::exhaustive;
use anonshm_core::explore::{explore, ExploreOptions, PickPolicy};
use anonshm_core::Algorithm;
use criterion::{criterion_group, criterion_main, Criterion};

fn bench_explore(c: &mut Criterion) {
    let mut group = c.benchmark_group("explore");
    group.sample_size(10);

    let snapshot2 = exhaustive(Algorithm::Snapshot, &[1, 2], None);
    group.bench_function("snapshot_n2_all_picks", |b| {
        b.iter(|| explore(&snapshot2, &ExploreOptions::default()).unwrap())
    });

    let snapshot3 = exhaustive(Algorithm::Snapshot, &[1, 1, 2], None);
    group.bench_function("snapshot_n3_repeated_inputs_default_picks_5m", |b| {
        b.iter(|| {
            explore(
                &snapshot3,
                &ExploreOptions {
                    pick_policy: PickPolicy::DefaultOnly,
                    max_states: 5_000_000,
                    find_atomicity_witness: false,
                    ..ExploreOptions::default()
                },
            )
            .unwrap()
        })
    });

    let consensus = exhaustive(Algorithm::Consensus, &[1, 2], Some(4));
    group.bench_function("consensus_n2_cap4", |b| {
        b.iter(|| {
            explore(
                &consensus,
                &ExploreOptions {
                    ts_cap: Some(4),
                    ..ExploreOptions::default()
                },
            )
            .unwrap()
        })
    });

    group.finish();
}

criterion_group!(benches, bench_explore);
criterion_main!(benches);
