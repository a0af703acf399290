//! Drives machines through executions: seeded random schedules, scripted
//! adversarial replays, and lasso extraction for non-terminating runs.
//!
//! Two adversarial schedules ship built in:
//!
//! * [`fig2_script`] — three write-scan processors wired so that two of them
//!   keep overwriting each other and maintain incomparable views forever;
//!   the run closes a cycle after 13 rows of write-then-scan blocks.
//! * [`build_covering_demo`] — with `M = N-1` registers, the other `N-1`
//!   processors each sit poised on a distinct register while one processor
//!   runs solo; when they finally write, every trace of the solo processor's
//!   input is erased from the registers.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::digest::Digest;
use crate::model::{
    group_view, init_system, step, Action, ActionKind, Algorithm, Config, ConfigError, GroupId,
    PermSpec, Permutation, ProcId, ScheduleSpec, StepError, SystemState, Val, View,
};
use crate::rng::SplitMix64;
use crate::trace::{ReplayError, Trace, TraceStep};

/// One scripted scheduling decision: which processor steps, and for a write
/// step optionally which local register it picks. Omitted targets use the
/// machine default (lowest local index not yet written this round).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptEntry {
    pub actor: ProcId,
    #[serde(
        rename = "writeTarget",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    pub write_target: Option<usize>,
}

pub type Script = Vec<ScriptEntry>;

#[derive(Debug, Error)]
pub enum ScheduleError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("script step {index}: {source}")]
    ScriptStep { index: usize, source: StepError },
    #[error("{0}")]
    Step(#[from] StepError),
    #[error("schedule spec mismatch: expected {expected}")]
    SpecMismatch { expected: &'static str },
    #[error("covering demo needs N >= 2, got {0}")]
    CoveringTooSmall(usize),
    #[error("lasso extraction only applies to the write-scan algorithm")]
    NotWriteScan,
    #[error("no state repetition within {0} steps")]
    NoRepetition(usize),
    #[error(transparent)]
    Replay(#[from] ReplayError),
}

/// Records steps into a [`Trace`] while keeping the current state.
struct Recorder {
    state: SystemState,
    trace: Trace,
}

impl Recorder {
    fn new(config: &Config) -> Result<Self, ConfigError> {
        let initial = init_system(config)?;
        Ok(Self {
            state: initial.clone(),
            trace: Trace::new(config.clone(), initial),
        })
    }

    fn step(&mut self, actor: ProcId, write_target: Option<usize>) -> Result<(), StepError> {
        let (action, effect) = step(&self.state, actor, write_target)?;
        self.trace.steps.push(TraceStep {
            action,
            physical: effect.physical,
            read_payload: effect.read_payload,
            reads_from: effect.reads_from,
            digest: effect.state.digest(),
        });
        self.state = effect.state;
        Ok(())
    }
}

/// Records an explicit action sequence into a trace; used to materialize
/// witnesses found by the explorer.
pub fn record_actions(config: &Config, actions: &[Action]) -> Result<Trace, ScheduleError> {
    let mut rec = Recorder::new(config)?;
    for (index, action) in actions.iter().enumerate() {
        let target = match &action.kind {
            ActionKind::Write { local, .. } => Some(*local),
            _ => None,
        };
        rec.step(action.actor, target)
            .map_err(|source| ScheduleError::ScriptStep { index, source })?;
    }
    Ok(rec.trace)
}

/// Seeded random schedule: at each step a uniformly chosen non-terminated
/// processor takes its next action with the default write target. Stops at
/// `max_steps` or when every processor has output. Fully determined by
/// `(config, seed)`.
pub fn run_random(config: &Config) -> Result<Trace, ScheduleError> {
    let ScheduleSpec::Random { seed, max_steps } = config.schedule else {
        return Err(ScheduleError::SpecMismatch { expected: "random" });
    };
    let mut rng = SplitMix64::new(seed);
    let mut rec = Recorder::new(config)?;
    for _ in 0..max_steps {
        let live: Vec<ProcId> = rec.state.live_procs().collect();
        if live.is_empty() {
            break;
        }
        let actor = live[rng.below(live.len() as u64) as usize];
        rec.step(actor, None)?;
    }
    Ok(rec.trace)
}

/// Applies exactly the scripted actions; reports the first disabled step.
/// The returned trace has `cycle_start` set if the final state repeats an
/// earlier one.
pub fn replay_script(config: &Config, script: &Script) -> Result<Trace, ScheduleError> {
    let mut rec = Recorder::new(config)?;
    for (index, entry) in script.iter().enumerate() {
        rec.step(entry.actor, entry.write_target)
            .map_err(|source| ScheduleError::ScriptStep { index, source })?;
    }
    let mut trace = rec.trace;
    trace.cycle_start = trace.detect_cycle_start();
    Ok(trace)
}

// ---------------------------------------------------------------------------
// Built-in: the three-processor pathological write-scan execution.

/// Expected post-state of one row: register views then processor views.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fig2Row {
    pub registers: [&'static [u32]; 3],
    pub views: [&'static [u32]; 3],
}

/// The reference table: register contents and views after each of the 13
/// write-then-scan rows. The state after row 13 equals the state after
/// row 4; rows 5 to 13 repeat forever.
pub const FIG2_GOLDEN: [Fig2Row; 13] = [
    Fig2Row { registers: [&[], &[1], &[1]], views: [&[1], &[2], &[3]] },
    Fig2Row { registers: [&[2], &[1], &[1]], views: [&[1], &[1, 2], &[3]] },
    Fig2Row { registers: [&[3], &[1], &[1]], views: [&[1], &[1, 2], &[1, 3]] },
    Fig2Row { registers: [&[1], &[1], &[1]], views: [&[1], &[1, 2], &[1, 3]] },
    Fig2Row { registers: [&[1], &[1, 2], &[1]], views: [&[1], &[1, 2], &[1, 3]] },
    Fig2Row { registers: [&[1], &[1, 3], &[1]], views: [&[1], &[1, 2], &[1, 3]] },
    Fig2Row { registers: [&[1], &[1], &[1]], views: [&[1], &[1, 2], &[1, 3]] },
    Fig2Row { registers: [&[1], &[1], &[1, 2]], views: [&[1], &[1, 2], &[1, 3]] },
    Fig2Row { registers: [&[1], &[1], &[1, 3]], views: [&[1], &[1, 2], &[1, 3]] },
    Fig2Row { registers: [&[1], &[1], &[1]], views: [&[1], &[1, 2], &[1, 3]] },
    Fig2Row { registers: [&[1, 2], &[1], &[1]], views: [&[1], &[1, 2], &[1, 3]] },
    Fig2Row { registers: [&[1, 3], &[1], &[1]], views: [&[1], &[1, 2], &[1, 3]] },
    Fig2Row { registers: [&[1], &[1], &[1]], views: [&[1], &[1, 2], &[1, 3]] },
];

/// Stable views of the reference lasso and the subset edges among them.
pub const FIG2_STABLE_VIEWS: [&[u32]; 3] = [&[1], &[1, 2], &[1, 3]];

/// Per-row (actor, write-target local) pairs. Processor 1 is wired through
/// the rotation [2, 3, 1] so that its third write of each round lands on
/// physical register 1; processors 2 and 3 are wired identity. Row 1 is two
/// full write-scan iterations of processor 1; every other row is one
/// iteration of its actor.
const FIG2_ROWS: [(ProcId, &[usize]); 13] = [
    (1, &[1, 2]),
    (2, &[1]),
    (3, &[1]),
    (1, &[3]),
    (2, &[2]),
    (3, &[2]),
    (1, &[1]),
    (2, &[3]),
    (3, &[3]),
    (1, &[2]),
    (2, &[1]),
    (3, &[1]),
    (1, &[3]),
];

/// The three-processor, three-register write-scan configuration and script
/// reproducing the pathological execution, rows 1 to 13.
pub fn fig2_script() -> (Config, Script) {
    let config = Config {
        n_processors: 3,
        n_registers: 3,
        algorithm: Algorithm::WriteScan,
        inputs: vec![GroupId(1), GroupId(2), GroupId(3)],
        perms: PermSpec::Explicit(vec![
            Permutation::new(vec![2, 3, 1]).unwrap(),
            Permutation::identity(3),
            Permutation::identity(3),
        ]),
        schedule: ScheduleSpec::Script {
            path: "builtin:fig2".into(),
        },
    };
    let mut script = Script::new();
    for (actor, writes) in FIG2_ROWS {
        for &target in writes {
            script.push(ScriptEntry {
                actor,
                write_target: Some(target),
            });
            for _ in 0..3 {
                script.push(ScriptEntry {
                    actor,
                    write_target: None,
                });
            }
        }
    }
    (config, script)
}

/// Step index at which each row of the reference table ends (1-based rows).
pub fn fig2_row_boundaries() -> Vec<usize> {
    let mut bounds = Vec::with_capacity(13);
    let mut t = 0;
    for (_, writes) in FIG2_ROWS {
        t += writes.len() * 4;
        bounds.push(t);
    }
    bounds
}

/// Comparison of a replayed trace against the reference table.
#[derive(Debug, Clone, Serialize)]
pub struct Fig2Report {
    /// Per-row match against the reference post-states.
    pub rows: Vec<bool>,
    /// Detected cycle start (a time index), if any.
    pub cycle_start: Option<usize>,
    /// True when the state after row 13 equals the state after row 4.
    pub lasso_detected: bool,
}

impl Fig2Report {
    pub fn all_match(&self) -> bool {
        self.rows.len() == 13 && self.rows.iter().all(|&b| b)
    }
}

fn ids(view: &View) -> BTreeSet<u32> {
    group_view(view).into_iter().map(|g| g.0).collect()
}

/// Replays the built-in script and compares every row's post-state with the
/// reference table.
pub fn verify_fig2(trace: &Trace) -> Result<Fig2Report, ScheduleError> {
    let states = trace.replay()?;
    let bounds = fig2_row_boundaries();
    let mut rows = Vec::with_capacity(13);
    for (row, &t) in bounds.iter().enumerate() {
        let ok = states.get(t).is_some_and(|state| {
            let golden = &FIG2_GOLDEN[row];
            let regs_ok = (0..3).all(|r| {
                ids(&state.register(r + 1).payload.view)
                    == golden.registers[r].iter().copied().collect()
            });
            let views_ok = (0..3).all(|p| {
                ids(state.proc(p + 1).machine.view())
                    == golden.views[p].iter().copied().collect()
            });
            regs_ok && views_ok
        });
        rows.push(ok);
    }
    let cycle_start = trace.detect_cycle_start();
    // Row 4 ends at time 20, row 13 at time 56.
    let lasso_detected = states.len() > bounds[12]
        && states[bounds[3]].digest() == states[bounds[12]].digest();
    Ok(Fig2Report {
        rows,
        cycle_start,
        lasso_detected,
    })
}

// ---------------------------------------------------------------------------
// Built-in: the covering construction with M = N-1 registers.

/// Configuration and script for the covering demonstration: processors
/// 2..=N are wired so each is poised to write a distinct register; processor
/// 1 runs solo long enough to write every register; then the others write
/// once each, erasing every register that held processor 1's input.
pub fn build_covering_demo(n: usize) -> Result<(Config, Script), ScheduleError> {
    if n < 2 {
        return Err(ScheduleError::CoveringTooSmall(n));
    }
    let m = n - 1;
    let mut perms = Vec::with_capacity(n);
    perms.push(Permutation::identity(m));
    for j in 2..=n {
        // Local register 1 maps to physical j-1; the rest fill in ascending.
        let first = j - 1;
        let mut map = vec![first];
        map.extend((1..=m).filter(|&r| r != first));
        perms.push(Permutation::new(map).expect("constructed bijection"));
    }
    let config = Config {
        n_processors: n,
        n_registers: m,
        algorithm: Algorithm::WriteScan,
        inputs: (1..=n as u32).map(GroupId).collect(),
        perms: PermSpec::Explicit(perms),
        schedule: ScheduleSpec::Script {
            path: format!("builtin:covering:{n}"),
        },
    };
    let mut script = Script::new();
    // Members of Q take no steps: a fresh write-scan machine is already
    // poised at its first write. Processor 1 runs solo for M full
    // write-scan iterations, touching every register once.
    for _ in 0..m {
        script.push(ScriptEntry {
            actor: 1,
            write_target: None,
        });
        for _ in 0..m {
            script.push(ScriptEntry {
                actor: 1,
                write_target: None,
            });
        }
    }
    // Now every member of Q performs its first (covering) write.
    for j in 2..=n {
        script.push(ScriptEntry {
            actor: j,
            write_target: Some(1),
        });
    }
    Ok((config, script))
}

/// True when no register of the final state contains processor 1's input:
/// no information written by the solo processor remains in the system.
pub fn verify_covering(trace: &Trace) -> Result<bool, ScheduleError> {
    let states = trace.replay()?;
    let final_state = states.last().expect("replay returns the initial state");
    let p1 = Val::Group(trace.config.inputs[0]);
    Ok(final_state
        .registers
        .iter()
        .all(|r| !r.payload.view.contains(&p1)))
}

// ---------------------------------------------------------------------------
// Lassos.

/// Finite representation of an infinite execution: a prefix followed by a
/// cycle whose first and last states coincide.
#[derive(Debug, Clone)]
pub struct Lasso {
    /// The recorded execution, `cycle_start` always set.
    pub trace: Trace,
    /// Processors taking at least one step within the cycle.
    pub live_set: BTreeSet<ProcId>,
    /// Views of the live processors, constant across the cycle.
    pub stable_views: BTreeMap<ProcId, View>,
    /// True when some register last written by a non-live processor is never
    /// overwritten within the cycle, so the global-stabilization clause
    /// "all writes by non-live processors have been overwritten" cannot be
    /// met at any rotation of the cycle.
    pub gst_flagged: bool,
}

impl Lasso {
    /// Analyzes a trace whose final state repeats the state at
    /// `cycle_start`: live set, stable views and the stabilization clause.
    pub fn analyze(trace: Trace) -> Result<Lasso, ScheduleError> {
        let cycle_start = trace
            .cycle_start
            .expect("lasso analysis requires cycle_start");
        let states = trace.replay()?;
        debug_assert_eq!(
            states[cycle_start].digest(),
            states.last().unwrap().digest()
        );
        let live_set: BTreeSet<ProcId> = trace.steps[cycle_start..]
            .iter()
            .map(|s| s.action.actor)
            .collect();
        let stable_views: BTreeMap<ProcId, View> = live_set
            .iter()
            .map(|&p| (p, states[cycle_start].proc(p).machine.view().clone()))
            .collect();
        // A register written within the cycle is rewritten by a live
        // processor every iteration; a register never written in the cycle
        // keeps its last writer forever.
        let written_in_cycle: BTreeSet<usize> = trace.steps[cycle_start..]
            .iter()
            .filter(|s| matches!(s.action.kind, ActionKind::Write { .. }))
            .filter_map(|s| s.physical)
            .collect();
        let gst_flagged = (1..=states[cycle_start].m()).any(|r| {
            if written_in_cycle.contains(&r) {
                return false;
            }
            match states[cycle_start].register(r).last_writer {
                Some(q) => !live_set.contains(&q),
                None => false,
            }
        });
        Ok(Lasso {
            trace,
            live_set,
            stable_views,
            gst_flagged,
        })
    }

    /// Verifies that every live processor's view is identical in every state
    /// of the cycle.
    pub fn views_constant_in_cycle(&self) -> Result<bool, ScheduleError> {
        let cycle_start = self.trace.cycle_start.expect("cycle_start set");
        let states = self.trace.replay()?;
        Ok(states[cycle_start..].iter().all(|s| {
            self.live_set
                .iter()
                .all(|&p| s.proc(p).machine.view() == &self.stable_views[&p])
        }))
    }

    pub fn cycle_len(&self) -> usize {
        self.trace.len() - self.trace.cycle_start.expect("cycle_start set")
    }
}

impl Lasso {
    /// Extracts a lasso from a recorded trace at its first state revisit:
    /// the trace is truncated at the revisit and analyzed. `None` when no
    /// state repeats.
    pub fn from_first_revisit(trace: &Trace) -> Result<Option<Lasso>, ScheduleError> {
        let mut seen: HashMap<Digest, usize> = HashMap::new();
        seen.insert(trace.initial.digest(), 0);
        for (i, step) in trace.steps.iter().enumerate() {
            if let Some(&first) = seen.get(&step.digest) {
                let mut truncated = trace.clone();
                truncated.steps.truncate(i + 1);
                truncated.cycle_start = Some(first);
                return Ok(Some(Lasso::analyze(truncated)?));
            }
            seen.insert(step.digest, i + 1);
        }
        Ok(None)
    }
}

/// Runs `samples` seeded random write-scan executions until each revisits a
/// state, and returns each as a [`Lasso`]. Candidate cycles that leave a
/// non-live processor's write in place forever are skipped and the run is
/// extended until an unflagged cycle closes (or a step budget runs out, in
/// which case the flagged lasso is returned as-is).
pub fn find_lassos(config: &Config, samples: usize) -> Result<Vec<Lasso>, ScheduleError> {
    if config.algorithm != Algorithm::WriteScan {
        return Err(ScheduleError::NotWriteScan);
    }
    let base_seed = match config.schedule {
        ScheduleSpec::Random { seed, .. } => seed,
        _ => 0,
    };
    const STEP_BUDGET: usize = 200_000;
    let mut lassos = Vec::with_capacity(samples);
    for i in 0..samples {
        let seed = base_seed.wrapping_add(i as u64);
        lassos.push(find_one_lasso(config, seed, STEP_BUDGET)?);
    }
    Ok(lassos)
}

fn find_one_lasso(
    config: &Config,
    seed: u64,
    step_budget: usize,
) -> Result<Lasso, ScheduleError> {
    let mut rng = SplitMix64::new(seed);
    let mut rec = Recorder::new(config)?;
    let mut seen: HashMap<Digest, usize> = HashMap::new();
    seen.insert(rec.state.digest(), 0);
    let n = rec.state.n();
    let mut flagged_fallback: Option<Trace> = None;
    for t in 1..=step_budget {
        let actor = rng.below(n as u64) as usize + 1;
        rec.step(actor, None)?;
        let digest = rec.trace.steps.last().unwrap().digest;
        if let Some(&first) = seen.get(&digest) {
            let mut candidate = rec.trace.clone();
            candidate.cycle_start = Some(first);
            let lasso = Lasso::analyze(candidate)?;
            if !lasso.gst_flagged {
                return Ok(lasso);
            }
            if flagged_fallback.is_none() {
                flagged_fallback = Some(lasso.trace);
            }
            // Keep stepping: a later revisit will close a cycle in which
            // more processors act and stale writes get overwritten.
        } else {
            seen.insert(digest, t);
        }
    }
    if let Some(trace) = flagged_fallback {
        return Lasso::analyze(trace);
    }
    Err(ScheduleError::NoRepetition(step_budget))
}
