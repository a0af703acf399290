//! Simulator, algorithm library and bounded model explorer for the
//! fully-anonymous shared-memory model: processors without identifiers
//! communicating through registers without an agreed-upon numbering.
//!
//! The crate provides:
//!
//! * the model itself ([`model`]): permutation-wired registers, atomic
//!   read/write/output steps, deterministic state digests;
//! * the algorithms ([`machines`]): the write-scan loop, the level-based
//!   wait-free snapshot, snapshot-based adaptive renaming, and
//!   obstruction-free consensus over a long-lived snapshot;
//! * schedulers ([`schedule`]): seeded random runs, scripted adversarial
//!   replays (including two built-in demonstrations), and lasso extraction
//!   for non-terminating runs;
//! * an exhaustive explorer ([`explore`]) with cycle detection,
//!   wait-freedom verdicts and witness search;
//! * task checkers ([`checkers`]): snapshot/consensus/renaming predicates,
//!   the group-solvability sampler, stable-view-graph analysis, the
//!   durably-stored predicate and trace invariant verification.

pub mod checkers;
pub mod digest;
pub mod explore;
pub mod machines;
pub mod model;
pub mod rng;
pub mod schedule;
pub mod trace;

pub use digest::Digest;
pub use machines::{
    consensus_decide, consensus_repropose, longlived_invoke, rename_from_snapshot, ConsensusLocal,
    MachineError, MachineState, SnapshotLocal, StepRequest, WriteScanLocal,
};
pub use model::{
    apply_step, group_view, init_system, next_action, step, Action, ActionKind, Algorithm, Config,
    ConfigError, GroupId, Output, PermSpec, Permutation, ProcId, ProcState, Register,
    RegisterPayload, ScheduleSpec, StepEffect, StepError, SystemState, Val, View,
};
pub use schedule::{
    build_covering_demo, fig2_row_boundaries, fig2_script, find_lassos, record_actions,
    replay_script, run_random, verify_covering, verify_fig2, Fig2Report, Fig2Row, Lasso, Script,
    ScriptEntry, FIG2_GOLDEN, FIG2_STABLE_VIEWS,
};
pub use trace::{Trace, TraceStep};
