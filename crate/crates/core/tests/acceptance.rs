//! Acceptance suite: ten end-to-end criteria, one test each, covering the
//! golden replay, stable-view structure, exhaustive snapshot verification,
//! the non-atomicity witness search, renaming, bounded consensus safety,
//! the covering demonstration, the durably-stored predicate, the
//! group-solvability oracle, and the random-run property suite.
//!
//! Each test prints one `criterion N: ...` line (visible with
//! `--nocapture`). Budgets and tolerances are pinned here as constants.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use anonshm_core::checkers::{
    check_group_solvability, check_single_source, check_snapshot_task, check_trace_invariants,
    renaming_sample_predicate, snapshot_sample_predicate, stable_view_graph, GroupSolvability,
};
use anonshm_core::explore::{
    explore, find_non_atomicity_witness, non_atomicity_witness_exists, solo_run_decides,
    ExploreOptions, Exploration, PickPolicy, WaitFree,
};
use anonshm_core::rng::SplitMix64;
use anonshm_core::{
    build_covering_demo, fig2_script, find_lassos, group_view, init_system, rename_from_snapshot,
    replay_script, run_random, verify_covering, verify_fig2, Algorithm, Config, GroupId, Lasso,
    Output, PermSpec, Permutation, ProcId, ScheduleSpec, Val, View, FIG2_GOLDEN,
};

/// State budget for exhaustive explorations; the N = 3 spaces hold well
/// under this and the stratified engine stays within memory.
const EXPLORE_BUDGET: usize = 220_000_000;
/// Bounded all-pick sweep layered over the default-pick exhaustion.
const ALL_PICKS_PROBE: usize = 10_000_000;
/// Per-candidate cap for the guided non-atomicity witness search.
const WITNESS_GUIDED_CAP: usize = 3_000_000;
/// Consensus solo-termination bound: full snapshot invocations.
const SOLO_INVOCATION_BOUND: usize = 10;

fn group_ids(ids: &[u32]) -> Vec<GroupId> {
    ids.iter().map(|&g| GroupId(g)).collect()
}

fn exhaustive_config(
    algorithm: Algorithm,
    inputs: &[u32],
    perms: PermSpec,
    ts_cap: Option<u32>,
) -> Config {
    let n = inputs.len();
    Config {
        n_processors: n,
        n_registers: n,
        algorithm,
        inputs: group_ids(inputs),
        perms,
        schedule: ScheduleSpec::Exhaustive {
            depth_bound: None,
            ts_cap,
        },
    }
}

fn identity_perms(n: usize) -> PermSpec {
    PermSpec::Explicit(vec![Permutation::identity(n); n])
}

fn fig2_perms() -> PermSpec {
    PermSpec::Explicit(vec![
        Permutation::new(vec![2, 3, 1]).unwrap(),
        Permutation::identity(3),
        Permutation::identity(3),
    ])
}

/// The five permutation assignments of criterion 3: identity, the
/// pathological-execution wiring, and three seeded ones.
fn criterion3_wirings() -> Vec<(String, PermSpec)> {
    let mut wirings = vec![
        ("identity".to_string(), identity_perms(3)),
        ("fig2".to_string(), fig2_perms()),
    ];
    for seed in [11u64, 23, 47] {
        wirings.push((format!("seed{seed}"), PermSpec::Seed(seed)));
    }
    wirings
}

fn snapshot_entries(
    config: &Config,
    assignment: &BTreeMap<ProcId, Output>,
) -> Vec<(GroupId, BTreeSet<GroupId>)> {
    assignment
        .iter()
        .map(|(&p, o)| match o {
            Output::View(v) => (config.inputs[p - 1], group_view(v)),
            other => panic!("snapshot output expected, got {other:?}"),
        })
        .collect()
}

// ---------------------------------------------------------------------------

/// Criterion 1: the built-in replay reproduces all 13 rows of the reference
/// execution byte-exactly and detects the lasso (state after row 13 equals
/// state after row 4). Runtime < 1 s.
#[test]
fn criterion_01_fig2_golden_replay() {
    let started = Instant::now();
    let (config, script) = fig2_script();
    let trace = replay_script(&config, &script).unwrap();
    let report = verify_fig2(&trace).unwrap();
    assert_eq!(report.rows.len(), 13);
    assert!(report.all_match(), "row mismatches: {:?}", report.rows);

    // Byte-exact comparison after canonical serialization.
    let states = trace.replay().unwrap();
    let bounds = anonshm_core::fig2_row_boundaries();
    for (row, &t) in bounds.iter().enumerate() {
        let state = &states[t];
        let actual: Vec<Vec<u32>> = (1..=3)
            .map(|r| group_view(&state.register(r).payload.view).iter().map(|g| g.0).collect())
            .collect();
        let views: Vec<Vec<u32>> = (1..=3)
            .map(|p| group_view(state.proc(p).machine.view()).iter().map(|g| g.0).collect())
            .collect();
        let golden = &FIG2_GOLDEN[row];
        let expected_regs: Vec<Vec<u32>> = golden.registers.iter().map(|s| s.to_vec()).collect();
        let expected_views: Vec<Vec<u32>> = golden.views.iter().map(|s| s.to_vec()).collect();
        assert_eq!(
            serde_json::to_string(&actual).unwrap(),
            serde_json::to_string(&expected_regs).unwrap(),
            "registers after row {}",
            row + 1
        );
        assert_eq!(
            serde_json::to_string(&views).unwrap(),
            serde_json::to_string(&expected_views).unwrap(),
            "views after row {}",
            row + 1
        );
    }

    assert!(report.lasso_detected, "state(row 13) must equal state(row 4)");
    assert_eq!(trace.cycle_start, Some(20), "cycle closes on the row-4 state");
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 1, "took {elapsed:?}, budget 1 s");
    println!("criterion 1: PASS — 13/13 rows match, lasso at t=20, in {elapsed:?}");
}

/// Criterion 2: the reference lasso yields stable views {1}, {1,2}, {1,3}
/// with subset edges from {1} and unique source {1}; 100 seeded random
/// write-scan lassos per N in {3,4,5} all pass the single-source check.
/// Runtime < 1 min.
#[test]
fn criterion_02_stable_view_structure() {
    let started = Instant::now();
    let (config, script) = fig2_script();
    let trace = replay_script(&config, &script).unwrap();
    let lasso = Lasso::analyze(trace).unwrap();
    assert_eq!(lasso.live_set, [1, 2, 3].into());
    let graph = stable_view_graph(&lasso).unwrap();
    let vset = |ids: &[u32]| -> BTreeSet<GroupId> { ids.iter().map(|&g| GroupId(g)).collect() };
    let expected_vertices: BTreeSet<BTreeSet<GroupId>> =
        [vset(&[1]), vset(&[1, 2]), vset(&[1, 3])].into();
    let expected_edges: BTreeSet<(BTreeSet<GroupId>, BTreeSet<GroupId>)> = [
        (vset(&[1]), vset(&[1, 2])),
        (vset(&[1]), vset(&[1, 3])),
    ]
    .into();
    assert_eq!(graph.vertices, expected_vertices);
    assert_eq!(graph.edges, expected_edges);
    let report = check_single_source(&graph).unwrap();
    assert!(report.holds());
    assert_eq!(report.sources, vec![vset(&[1])]);

    let mut checked = 0;
    for n in [3usize, 4, 5] {
        for i in 0..100u64 {
            let config = Config {
                n_processors: n,
                n_registers: n,
                algorithm: Algorithm::WriteScan,
                inputs: (1..=n as u32).map(GroupId).collect(),
                perms: PermSpec::Seed(i * 31 + n as u64),
                schedule: ScheduleSpec::Random {
                    seed: 1000 + i,
                    max_steps: 0,
                },
            };
            let lassos = find_lassos(&config, 1).unwrap();
            let lasso = &lassos[0];
            assert!(!lasso.gst_flagged, "N={n} seed {i}: flagged lasso");
            let graph = stable_view_graph(lasso).unwrap();
            let single = check_single_source(&graph).unwrap();
            assert!(
                single.holds(),
                "N={n} seed {i}: sources {:?}",
                single.sources
            );
            checked += 1;
        }
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 60, "took {elapsed:?}, budget 1 min");
    println!("criterion 2: PASS — reference graph exact, {checked}/300 random lassos single-source, in {elapsed:?}");
}

fn assert_snapshot_exploration(label: &str, config: &Config, result: &Exploration) {
    assert!(
        !result.truncated,
        "{label}: exploration truncated at {} states",
        result.states
    );
    assert!(
        matches!(result.wait_free, WaitFree::Holds),
        "{label}: wait-freedom verdict {:?}",
        result.wait_free
    );
    assert!(result.terminal_count > 0, "{label}: no terminals");
    for assignment in &result.terminal_assignments {
        assert_eq!(assignment.len(), config.n_processors);
        let entries = snapshot_entries(config, assignment);
        check_snapshot_task(entries.iter().map(|(g, s)| (*g, s)))
            .unwrap_or_else(|v| panic!("{label}: containment violated: {v:?}"));
    }
    assert!(
        result.durability_violations.is_empty(),
        "{label}: durably-stored failed at {} output instants",
        result.durability_violations.len()
    );
}

/// Criterion 3: exhaustive snapshot verification at N = 3 for five distinct
/// permutation assignments (identity and the reference wiring included):
/// terminal outputs pairwise containment-related and self-including,
/// wait-freedom holds, and group solvability holds for repeated inputs.
/// The default-pick subsystem is exhausted per assignment within the 5 min
/// target; a bounded all-pick sweep is layered on top of each.
#[test]
fn criterion_03_exhaustive_snapshot() {
    let wirings = criterion3_wirings();
    // The five assignments must be pairwise distinct.
    let resolved: Vec<Vec<Permutation>> = wirings
        .iter()
        .map(|(_, perms)| {
            exhaustive_config(Algorithm::Snapshot, &[1, 2, 3], perms.clone(), None)
                .resolved_perms()
                .unwrap()
        })
        .collect();
    for i in 0..resolved.len() {
        for j in i + 1..resolved.len() {
            assert_ne!(resolved[i], resolved[j], "wirings {i} and {j} coincide");
        }
    }

    for (label, perms) in &wirings {
        let config = exhaustive_config(Algorithm::Snapshot, &[1, 2, 3], perms.clone(), None);
        let started = Instant::now();
        let result = explore(
            &config,
            &ExploreOptions {
                pick_policy: PickPolicy::DefaultOnly,
                max_states: EXPLORE_BUDGET,
                find_atomicity_witness: false,
                ..ExploreOptions::default()
            },
        )
        .unwrap();
        let elapsed = started.elapsed();
        assert_snapshot_exploration(label, &config, &result);
        assert!(
            elapsed.as_secs() < 300,
            "{label}: took {elapsed:?}, target 5 min per assignment"
        );

        // Bounded all-pick probe: same invariants over the explored part.
        let probe = explore(
            &config,
            &ExploreOptions {
                pick_policy: PickPolicy::All,
                max_states: ALL_PICKS_PROBE,
                find_atomicity_witness: false,
                ..ExploreOptions::default()
            },
        )
        .unwrap();
        assert!(
            !matches!(probe.wait_free, WaitFree::Violated { .. }),
            "{label}: cycle under all picks"
        );
        assert!(probe.durability_violations.is_empty());
        for assignment in &probe.terminal_assignments {
            let entries = snapshot_entries(&config, assignment);
            check_snapshot_task(entries.iter().map(|(g, s)| (*g, s))).unwrap();
        }
        println!(
            "criterion 3 [{label}]: exhaustive (default picks) {} states in {elapsed:?}; all-pick probe {} states",
            result.states, probe.states
        );
    }

    // (c) group solvability with repeated inputs.
    for (label, perms) in [("identity", identity_perms(3)), ("fig2", fig2_perms())] {
        let config = exhaustive_config(Algorithm::Snapshot, &[1, 1, 2], perms, None);
        let result = explore(
            &config,
            &ExploreOptions {
                pick_policy: PickPolicy::DefaultOnly,
                max_states: EXPLORE_BUDGET,
                find_atomicity_witness: false,
                ..ExploreOptions::default()
            },
        )
        .unwrap();
        assert_snapshot_exploration(label, &config, &result);
        let groups = config.groups();
        let participants: BTreeSet<ProcId> = (1..=3).collect();
        for assignment in &result.terminal_assignments {
            let verdict = check_group_solvability(
                snapshot_sample_predicate,
                &groups,
                &participants,
                assignment,
            )
            .unwrap();
            assert!(
                verdict.holds(),
                "[{label}] inputs [1,1,2]: group solvability violated: {verdict:?}"
            );
        }
        println!(
            "criterion 3 [{label}, inputs 1,1,2]: group solvability over {} assignments",
            result.terminal_assignments.len()
        );
    }
    println!("criterion 3: PASS");
}

/// Criterion 4: the non-atomicity witness — an execution whose snapshot
/// output never equals the union of register views at any prefix time.
/// The search is exact per candidate output set: states whose memory union
/// equals the candidate are pruned and an output of the candidate is sought
/// in what remains (guided all-pick search per wiring, then an exhaustive
/// default-pick decision for the pair candidates at the named wirings).
#[test]
fn criterion_04_non_atomicity_witness() {
    let started = Instant::now();
    for (label, perms) in criterion3_wirings() {
        let config = exhaustive_config(Algorithm::Snapshot, &[1, 2, 3], perms, None);
        if let Some(w) = find_non_atomicity_witness(&config, WITNESS_GUIDED_CAP).unwrap() {
            let confirmed = anonshm_core::checkers::atomicity_witness(&w.trace)
                .unwrap()
                .expect("search result confirmed by the trace checker");
            println!(
                "criterion 4: PASS — witness at wiring {label}: processor {} output {:?} (t={}), in {:?}",
                confirmed.actor,
                w.output_view,
                confirmed.t,
                started.elapsed()
            );
            return;
        }
    }
    // Exact decision for the likeliest candidates under default picks.
    let mut refuted = Vec::new();
    for target in [[1u32, 2], [1, 3], [2, 3]] {
        let config = exhaustive_config(Algorithm::Snapshot, &[1, 2, 3], identity_perms(3), None);
        let t: BTreeSet<GroupId> = target.iter().map(|&g| GroupId(g)).collect();
        let verdict =
            non_atomicity_witness_exists(&config, &t, PickPolicy::DefaultOnly, EXPLORE_BUDGET, 3)
                .unwrap();
        refuted.push((target, verdict));
    }
    panic!(
        "criterion 4: FAIL — no witness found; exhaustive default-pick decisions at identity \
         wiring: {refuted:?} (level-N termination admits no witness there; the level-(N-1) \
         termination variant does, see the project notes), in {:?}",
        started.elapsed()
    );
}

/// Criterion 5: renaming at N = 3 over every input assignment over {1,2,3}.
/// With a common wiring, assignments that are processor relabelings of each
/// other generate isomorphic systems, so one exhaustive exploration per
/// input multiset decides all 27 assignments; the checkers still run for
/// each assignment on the (relabeled) terminal outputs. The name formula's
/// reserved ranges are asserted directly. Runtime < 10 min.
#[test]
fn criterion_05_renaming() {
    let started = Instant::now();
    // Name formula: size 1 reserves 1, size 2 reserves 2..3, size 3 reserves 4..6.
    let gset = |ids: &[u32]| -> BTreeSet<GroupId> { ids.iter().map(|&g| GroupId(g)).collect() };
    assert_eq!(rename_from_snapshot(&gset(&[7]), GroupId(7)).unwrap(), 1);
    assert_eq!(rename_from_snapshot(&gset(&[1, 2]), GroupId(1)).unwrap(), 2);
    assert_eq!(rename_from_snapshot(&gset(&[1, 2]), GroupId(2)).unwrap(), 3);
    assert_eq!(rename_from_snapshot(&gset(&[1, 2, 3]), GroupId(1)).unwrap(), 4);
    assert_eq!(rename_from_snapshot(&gset(&[1, 2, 3]), GroupId(2)).unwrap(), 5);
    assert_eq!(rename_from_snapshot(&gset(&[1, 2, 3]), GroupId(3)).unwrap(), 6);

    // One exhaustive exploration per input multiset.
    let mut by_multiset: BTreeMap<Vec<u32>, Exploration> = BTreeMap::new();
    let mut all_assignments = Vec::new();
    for a in 1..=3u32 {
        for b in 1..=3u32 {
            for c in 1..=3u32 {
                all_assignments.push(vec![a, b, c]);
            }
        }
    }
    assert_eq!(all_assignments.len(), 27);
    for assignment in &all_assignments {
        let mut key = assignment.clone();
        key.sort_unstable();
        if !by_multiset.contains_key(&key) {
            let config =
                exhaustive_config(Algorithm::Renaming, &key, identity_perms(3), None);
            let result = explore(
                &config,
                &ExploreOptions {
                    pick_policy: PickPolicy::DefaultOnly,
                    max_states: EXPLORE_BUDGET,
                    ..ExploreOptions::default()
                },
            )
            .unwrap();
            assert!(!result.truncated, "inputs {key:?}: truncated");
            assert!(matches!(result.wait_free, WaitFree::Holds));
            assert!(result.durability_violations.is_empty());
            by_multiset.insert(key, result);
        }
    }

    // Soundness of the relabeling quotient, verified empirically on one
    // non-canonical ordering: the group-level reachable outputs coincide.
    {
        let reordered = exhaustive_config(Algorithm::Renaming, &[2, 1, 1], identity_perms(3), None);
        let result = explore(
            &reordered,
            &ExploreOptions {
                pick_policy: PickPolicy::DefaultOnly,
                max_states: EXPLORE_BUDGET,
                ..ExploreOptions::default()
            },
        )
        .unwrap();
        assert_eq!(
            result.reachable_group_outputs(),
            by_multiset[&vec![1, 1, 2]].reachable_group_outputs(),
            "processor relabeling must preserve group-level outputs"
        );
    }

    // Every one of the 27 assignments: every sample has distinct names in
    // range, and no cross-group collision in any full assignment.
    for assignment_inputs in &all_assignments {
        let mut key = assignment_inputs.clone();
        key.sort_unstable();
        let canonical = exhaustive_config(Algorithm::Renaming, &key, identity_perms(3), None);
        let result = &by_multiset[&key];
        let groups = canonical.groups();
        let participants: BTreeSet<ProcId> = (1..=3).collect();
        let participating_groups = groups.len();
        let bound = (participating_groups * (participating_groups + 1) / 2) as u64;
        for terminal in &result.terminal_assignments {
            // Group solvability: every one-per-group sample of names is
            // distinct and within 1..=M(M+1)/2.
            let verdict = check_group_solvability(
                renaming_sample_predicate,
                &groups,
                &participants,
                terminal,
            )
            .unwrap();
            assert!(
                verdict.holds(),
                "inputs {assignment_inputs:?}: sample violated: {verdict:?}"
            );
            // Full assignment: range and cross-group uniqueness.
            let names: Vec<(GroupId, u64)> = terminal
                .iter()
                .map(|(&p, o)| match o {
                    Output::Name(n) => (canonical.inputs[p - 1], *n),
                    other => panic!("name expected, got {other:?}"),
                })
                .collect();
            for &(_, n) in &names {
                assert!(n >= 1 && n <= bound, "name {n} outside 1..={bound}");
            }
            for (i, &(ga, na)) in names.iter().enumerate() {
                for &(gb, nb) in &names[i + 1..] {
                    assert!(
                        !(na == nb && ga != gb),
                        "inputs {assignment_inputs:?}: cross-group collision on {na}"
                    );
                }
            }
        }
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 600, "took {elapsed:?}, budget 10 min");
    println!(
        "criterion 5: PASS — 27 assignments via {} exhaustive explorations, in {elapsed:?}",
        by_multiset.len() + 1
    );
}

/// Criterion 6: bounded exhaustive consensus at N = 2 with timestamp cap 6
/// reaches no state with two distinct decided values and no decision
/// outside the inputs; from 200 sampled reachable states, every processor
/// run solo decides within 10 snapshot invocations. Runtime < 10 min.
#[test]
fn criterion_06_consensus_safety_and_obstruction_freedom() {
    let started = Instant::now();
    let config = exhaustive_config(Algorithm::Consensus, &[1, 2], identity_perms(2), Some(6));
    let result = explore(
        &config,
        &ExploreOptions {
            ts_cap: Some(6),
            sample_target: 200,
            sample_seed: 7,
            ..ExploreOptions::default()
        },
    )
    .unwrap();
    assert!(!result.truncated, "bounded exploration must be exhaustive up to the cap");
    assert!(
        result.max_decisions_in_state <= 1,
        "two distinct decided values reachable"
    );
    for v in &result.decided_values {
        assert!(config.inputs.contains(v), "decided {v} outside the inputs");
    }
    assert!(result.frontier_states > 0, "cap should produce frontier states");
    assert_eq!(result.samples.len(), 200);

    let mut probes = 0;
    for state in &result.samples {
        for actor in 1..=2 {
            let out = solo_run_decides(state, actor, SOLO_INVOCATION_BOUND)
                .unwrap_or_else(|e| panic!("solo run of processor {actor} failed: {e}"));
            assert!(matches!(out, Output::Decision(_)));
            probes += 1;
        }
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 600, "took {elapsed:?}, budget 10 min");
    println!(
        "criterion 6: PASS — {} states (frontier {}), decided values {:?}, {probes} solo probes, in {elapsed:?}",
        result.states, result.frontier_states, result.decided_values
    );
}

/// Criterion 7: the covering demonstration for N in {2,3,4,5} with M = N-1
/// registers ends with no register containing the solo processor's input.
/// Runtime < 1 s.
#[test]
fn criterion_07_covering_demo() {
    let started = Instant::now();
    for n in [2usize, 3, 4, 5] {
        let (config, script) = build_covering_demo(n).unwrap();
        let trace = replay_script(&config, &script).unwrap();
        assert!(
            verify_covering(&trace).unwrap(),
            "N={n}: a register still contains the solo processor's input"
        );
        // No information written by the solo processor remains: every
        // register was overwritten by a member of Q.
        let states = trace.replay().unwrap();
        let last = states.last().unwrap();
        for r in 1..=last.m() {
            assert_eq!(last.register(r).last_writer.map(|q| q > 1), Some(true));
        }
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_millis() < 1000, "took {elapsed:?}, budget 1 s");
    println!("criterion 7: PASS — covering property holds for N = 2..5, in {elapsed:?}");
}

/// Criterion 8: along every terminating execution of criterion 3's
/// explorations, the freshly produced output view is durably stored despite
/// interference by all processors at each output instant. The explorations
/// in criterion 3 run with the check enabled and assert zero violations;
/// this test re-runs the two named wirings and asserts the same, plus the
/// predicate examples.
#[test]
fn criterion_08_durably_stored() {
    use anonshm_core::checkers::durably_stored;
    let started = Instant::now();

    // Predicate examples: full occupancy is durable, empty R_W is not.
    let config = exhaustive_config(Algorithm::Snapshot, &[1, 2, 3], identity_perms(3), None);
    let mut state = init_system(&config).unwrap();
    let w: View = [Val::group(1)].into_iter().collect();
    let all: BTreeSet<ProcId> = (1..=3).collect();
    assert!(!durably_stored(&state, &w, &all), "empty registers hold nothing");
    for r in 0..3 {
        state.registers[r].payload.view = w.clone();
    }
    assert!(durably_stored(&state, &w, &all), "full occupancy is durable");

    for (label, perms) in [("identity", identity_perms(3)), ("fig2", fig2_perms())] {
        let config = exhaustive_config(Algorithm::Snapshot, &[1, 2, 3], perms, None);
        let result = explore(
            &config,
            &ExploreOptions {
                pick_policy: PickPolicy::DefaultOnly,
                max_states: EXPLORE_BUDGET,
                find_atomicity_witness: false,
                ..ExploreOptions::default()
            },
        )
        .unwrap();
        assert!(!result.truncated);
        assert!(
            result.durability_violations.is_empty(),
            "[{label}]: {} violations",
            result.durability_violations.len()
        );
    }
    let elapsed = started.elapsed();
    println!("criterion 8: PASS — zero durably-stored violations at every output instant, in {elapsed:?}");
}

/// Criterion 9: the group-solvability oracle on the worked example (groups
/// {1},{2,3},{4}) and its mutated variant, which must fail with a concrete
/// violating sample. Runtime < 1 s.
#[test]
fn criterion_09_group_solvability_oracle() {
    let started = Instant::now();
    let view = |ids: &[u32]| -> Output { Output::View(ids.iter().map(|&i| Val::group(i)).collect()) };
    let g = GroupId;

    let groups: BTreeMap<GroupId, BTreeSet<ProcId>> = [
        (g(1), [1].into()),
        (g(2), [2, 3].into()),
        (g(3), [4].into()),
    ]
    .into();
    let assignment: BTreeMap<ProcId, Output> = [
        (1, view(&[1, 2, 3])),
        (2, view(&[1, 2])),
        (3, view(&[2, 3])),
        (4, view(&[1, 2, 3])),
    ]
    .into();
    let participants: BTreeSet<ProcId> = [1, 2, 3, 4].into();
    let verdict =
        check_group_solvability(snapshot_sample_predicate, &groups, &participants, &assignment)
            .unwrap();
    assert_eq!(verdict, GroupSolvability::Holds { samples_checked: 2 });

    // Mutated: processor 3 moved to the third group; the sample that picks
    // {1,2} for group 2 and {2,3} for group 3 is incomparable.
    let mutated_groups: BTreeMap<GroupId, BTreeSet<ProcId>> = [
        (g(1), [1].into()),
        (g(2), [2].into()),
        (g(3), [3, 4].into()),
    ]
    .into();
    let verdict = check_group_solvability(
        snapshot_sample_predicate,
        &mutated_groups,
        &participants,
        &assignment,
    )
    .unwrap();
    let GroupSolvability::Violated { sample } = verdict else {
        panic!("mutated example must be violated");
    };
    assert_eq!(sample[&g(2)], view(&[1, 2]));
    assert_eq!(sample[&g(3)], view(&[2, 3]));
    let elapsed = started.elapsed();
    assert!(elapsed.as_millis() < 1000);
    println!("criterion 9: PASS — worked example holds, mutation fails with the expected sample, in {elapsed:?}");
}

/// Criterion 10: 1000 seeded random snapshot runs at N <= 6. Every run
/// terminates within the step budget and satisfies view monotonicity, value
/// validity, write fairness, the level rule, self-inclusion, pairwise
/// containment, and replay determinism. Runtime < 5 min.
#[test]
fn criterion_10_random_run_property_suite() {
    let started = Instant::now();
    let mut rng = SplitMix64::new(0xacce97ed);
    for i in 0..1000u64 {
        let n = 2 + (i % 5) as usize; // N in 2..=6
        let inputs: Vec<u32> = (0..n).map(|_| rng.below(n as u64) as u32 + 1).collect();
        let config = Config {
            n_processors: n,
            n_registers: n,
            algorithm: Algorithm::Snapshot,
            inputs: group_ids(&inputs),
            perms: PermSpec::Seed(rng.next_u64()),
            schedule: ScheduleSpec::Random {
                seed: rng.next_u64(),
                max_steps: 100_000,
            },
        };
        let trace = run_random(&config).unwrap();
        let states = trace.replay().unwrap();
        let final_state = states.last().unwrap();
        assert!(
            final_state.all_terminated(),
            "run {i}: not all processors output within the budget"
        );
        let violations = check_trace_invariants(&trace).unwrap();
        assert!(violations.is_empty(), "run {i}: {violations:?}");

        // Replay determinism: the same (config, seed) reproduces the trace.
        let again = run_random(&config).unwrap();
        assert_eq!(again.final_digest(), trace.final_digest(), "run {i}");
        assert_eq!(again.len(), trace.len());
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 300, "took {elapsed:?}, budget 5 min");
    println!("criterion 10: PASS — 1000 runs, all invariants hold, in {elapsed:?}");
}
