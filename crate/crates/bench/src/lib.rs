//! Shared configuration builders for the benchmarks.

use anonshm_core::{Algorithm, Config, GroupId, PermSpec, Permutation, ScheduleSpec};

pub fn exhaustive(algorithm: Algorithm, inputs: &[u32], ts_cap: Option<u32>) -> Config {
    let n = inputs.len();
    Config {
        n_processors: n,
        n_registers: n,
        algorithm,
        inputs: inputs.iter().map(|&g| GroupId(g)).collect(),
        perms: PermSpec::Explicit(vec![Permutation::identity(n); n]),
        schedule: ScheduleSpec::Exhaustive {
            depth_bound: None,
            ts_cap,
        },
    }
}

pub fn random(algorithm: Algorithm, inputs: &[u32], seed: u64, max_steps: usize) -> Config {
    Config {
        schedule: ScheduleSpec::Random { seed, max_steps },
        ..exhaustive(algorithm, inputs, None)
    }
}
