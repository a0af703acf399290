//! Exhaustive finite-state exploration.
//!
//! Depth-first search from the initial state, branching over which processor
//! steps and over every legal write-target pick, deduplicating by canonical
//! state digest. Cycles are detected as back edges to the DFS stack; since a
//! terminated processor can never step, any reachable cycle is an infinite
//! execution in which every processor acting inside it runs forever without
//! output, so a single back edge settles the wait-freedom verdict.
//!
//! Along the way the explorer can check the durably-stored predicate at
//! every output instant, search DFS paths for a non-atomicity witness (an
//! output that never equals the union of register views at any time of its
//! execution), and reservoir-sample reachable states for later probing.

mod fast;

use std::collections::hash_map::Entry;
use std::collections::{BTreeMap, BTreeSet, HashMap};

use thiserror::Error;

use crate::checkers::durably_stored;
use crate::digest::Digest;
use crate::machines::StepRequest;
use crate::model::{
    apply_step, init_system, step, Action, ActionKind, Algorithm, Config, ConfigError, GroupId,
    Output, ProcId, StepError, SystemState, View,
};
use crate::rng::SplitMix64;
use crate::schedule::{record_actions, Lasso, ScheduleError};
use crate::trace::Trace;

#[derive(Debug, Error)]
pub enum ExploreError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("internal step failure: {0}")]
    Step(#[from] StepError),
    #[error("consensus exploration needs a timestamp cap or a depth bound")]
    UnboundedConsensus,
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
}

/// Which write targets the explorer branches over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PickPolicy {
    /// Branch over every register not yet written this round.
    All,
    /// Follow only the deterministic default pick (lowest remaining local
    /// index). Exact for the default-pick subsystem; orders of magnitude
    /// smaller.
    DefaultOnly,
}

/// Exploration limits and feature toggles.
#[derive(Debug, Clone)]
pub struct ExploreOptions {
    /// Write-target branching; `All` covers every legal pick.
    pub pick_policy: PickPolicy,
    /// Stop (flagging the result truncated) after this many distinct states.
    pub max_states: usize,
    /// Skip successors deeper than this; truncates the graph.
    pub max_depth: Option<usize>,
    /// Consensus bound: states whose highest timestamp exceeds the cap are
    /// recorded as frontier states and not expanded. The safety verdict is
    /// exhaustive up to the cap.
    pub ts_cap: Option<u32>,
    /// Return as soon as the first cycle is found.
    pub stop_on_cycle: bool,
    /// Quotient renamings of processors that share both input and
    /// permutation. Witness traces are not materialized in this mode.
    pub symmetry: bool,
    /// Reservoir-sample this many visited states.
    pub sample_target: usize,
    pub sample_seed: u64,
    /// Track DFS paths for a snapshot output never matched by the union of
    /// register views.
    pub find_atomicity_witness: bool,
    /// Check the durably-stored predicate at every output instant.
    pub check_durability: bool,
    /// Skip the bit-packed fast path even when the configuration is
    /// eligible; used for cross-checking the two implementations.
    pub force_generic: bool,
}

impl Default for ExploreOptions {
    fn default() -> Self {
        Self {
            pick_policy: PickPolicy::All,
            max_states: 50_000_000,
            max_depth: None,
            ts_cap: None,
            stop_on_cycle: false,
            symmetry: false,
            sample_target: 0,
            sample_seed: 0,
            find_atomicity_witness: true,
            check_durability: true,
            force_generic: false,
        }
    }
}

/// Wait-freedom verdict for the explored graph.
#[derive(Debug, Clone)]
pub enum WaitFree {
    /// No reachable cycle: every processor that keeps taking steps outputs.
    Holds,
    /// A reachable cycle exists; the witness is an infinite execution in
    /// which the cycle's actors step forever without terminating. Absent
    /// under symmetry reduction.
    Violated { witness: Option<Box<Lasso>> },
    /// The exploration was truncated before the space was exhausted.
    Indeterminate,
}

impl WaitFree {
    pub fn holds(&self) -> bool {
        matches!(self, WaitFree::Holds)
    }

    pub fn violated(&self) -> bool {
        matches!(self, WaitFree::Violated { .. })
    }
}

/// A snapshot output on some explored execution that the memory never
/// contained: at no time along that execution did the union of all register
/// views equal the output.
#[derive(Debug, Clone)]
pub struct PathAtomicityWitness {
    pub actor: ProcId,
    pub output_view: View,
    pub trace: Trace,
}

/// A state (right after an output step) where the freshly output view was
/// not durably stored despite interference by all processors.
#[derive(Debug, Clone)]
pub struct DurabilityViolation {
    pub actor: ProcId,
    pub output_view: View,
    pub state_digest: Digest,
}

/// Result of an exhaustive exploration.
#[derive(Debug, Clone)]
pub struct Exploration {
    pub config: Config,
    /// Distinct states visited (including frontier states).
    pub states: usize,
    pub edges: usize,
    pub max_depth_seen: usize,
    /// Distinct terminal states (every processor has output).
    pub terminal_count: usize,
    /// Distinct full output assignments over the terminal states.
    pub terminal_assignments: BTreeSet<BTreeMap<ProcId, Output>>,
    /// States suppressed by the timestamp cap.
    pub frontier_states: usize,
    /// Budget (state count or depth) was hit; the graph is partial.
    pub truncated: bool,
    pub wait_free: WaitFree,
    pub atomicity_witness: Option<PathAtomicityWitness>,
    pub durability_violations: Vec<DurabilityViolation>,
    /// Reservoir sample of visited states.
    pub samples: Vec<SystemState>,
    /// Largest number of distinct decided values in any single state.
    pub max_decisions_in_state: usize,
    /// All decided values seen anywhere.
    pub decided_values: BTreeSet<GroupId>,
}

impl Exploration {
    /// Wait-freedom verdict; `Indeterminate` when the graph is truncated.
    pub fn wait_free(&self) -> &WaitFree {
        &self.wait_free
    }

    /// Multiset of outputs per group for one terminal assignment; the
    /// processor-anonymous projection used for symmetry cross-checks.
    pub fn group_output_multiset(
        config: &Config,
        assignment: &BTreeMap<ProcId, Output>,
    ) -> BTreeMap<GroupId, Vec<Output>> {
        let mut by_group: BTreeMap<GroupId, Vec<Output>> = BTreeMap::new();
        for (&p, out) in assignment {
            by_group
                .entry(config.inputs[p - 1])
                .or_default()
                .push(out.clone());
        }
        for outs in by_group.values_mut() {
            outs.sort();
        }
        by_group
    }

    /// The set of group-level output multisets over all terminals.
    pub fn reachable_group_outputs(&self) -> BTreeSet<BTreeMap<GroupId, Vec<Output>>> {
        self.terminal_assignments
            .iter()
            .map(|a| Self::group_output_multiset(&self.config, a))
            .collect()
    }
}

/// Streaming consumer for the node/edge list of the explored graph.
pub trait GraphSink {
    fn node(&mut self, digest: Digest, terminal: bool, frontier: bool);
    fn edge(&mut self, from: Digest, action: &Action, to: Digest);
}

/// Renames processors that share both input and permutation so that their
/// machine states (and outputs) appear in sorted order; such processors are
/// interchangeable, so the quotient preserves reachability of every
/// machine-visible property.
fn canonicalize(mut state: SystemState) -> SystemState {
    let mut classes: BTreeMap<(GroupId, &[usize]), Vec<ProcId>> = BTreeMap::new();
    for p in 1..=state.n() {
        classes
            .entry((state.proc(p).input, state.perm(p).as_slice()))
            .or_default()
            .push(p);
    }
    let classes: Vec<Vec<ProcId>> = classes
        .into_values()
        .filter(|members| members.len() > 1)
        .collect();
    for members in classes {
        let mut items: Vec<(crate::machines::MachineState, Option<Output>)> = members
            .iter()
            .map(|&p| {
                (
                    state.procs[p - 1].machine.clone(),
                    state.outputs.get(&p).cloned(),
                )
            })
            .collect();
        items.sort();
        for (&p, (machine, output)) in members.iter().zip(items) {
            state.procs[p - 1].machine = machine;
            match output {
                Some(o) => {
                    state.outputs.insert(p, o);
                }
                None => {
                    state.outputs.remove(&p);
                }
            }
        }
    }
    state
}

/// All actions enabled in a state: for each non-terminated processor, its
/// requested read or output, or one write per remaining-this-round target.
pub fn enabled_actions(state: &SystemState) -> Vec<Action> {
    enabled_actions_with(state, PickPolicy::All)
}

pub fn enabled_actions_with(state: &SystemState, picks: PickPolicy) -> Vec<Action> {
    let mut actions = Vec::new();
    for p in state.live_procs() {
        match state.proc(p).request() {
            StepRequest::Write { payload } => {
                let candidates = state.proc(p).machine.write_candidates();
                let chosen: Vec<usize> = match picks {
                    PickPolicy::All => candidates.iter().copied().collect(),
                    PickPolicy::DefaultOnly => {
                        vec![*candidates.first().expect("round set never empty")]
                    }
                };
                for local in chosen {
                    actions.push(Action {
                        actor: p,
                        kind: ActionKind::Write {
                            local,
                            payload: payload.clone(),
                        },
                    });
                }
            }
            StepRequest::Read { local } => actions.push(Action {
                actor: p,
                kind: ActionKind::Read { local },
            }),
            StepRequest::Output { output } => actions.push(Action {
                actor: p,
                kind: ActionKind::Output { output },
            }),
        }
    }
    actions
}

struct Frame {
    state: SystemState,
    digest: Digest,
    actions: Vec<Action>,
    next: usize,
    union: View,
    incoming: Option<Action>,
}

struct Reservoir {
    target: usize,
    rng: SplitMix64,
    seen: u64,
    samples: Vec<SystemState>,
}

impl Reservoir {
    fn new(target: usize, seed: u64) -> Self {
        Self {
            target,
            rng: SplitMix64::new(seed),
            seen: 0,
            samples: Vec::with_capacity(target),
        }
    }

    fn offer(&mut self, state: &SystemState) {
        if self.target == 0 {
            return;
        }
        self.seen += 1;
        if self.samples.len() < self.target {
            self.samples.push(state.clone());
        } else {
            let j = self.rng.below(self.seen);
            if (j as usize) < self.target {
                self.samples[j as usize] = state.clone();
            }
        }
    }
}

/// Exhaustive depth-first exploration. See the module docs for what is
/// computed along the way. Group-valued algorithms at desk scale run on a
/// bit-packed engine with identical semantics; consensus, symmetry
/// reduction, depth bounds, sampling and graph export use the generic one.
pub fn explore(config: &Config, options: &ExploreOptions) -> Result<Exploration, ExploreError> {
    config.validate()?;
    if fast::eligible(config, options) {
        return fast::FastExplorer::new(config)?.run(options);
    }
    explore_with_sink(config, options, None)
}

pub fn explore_with_sink(
    config: &Config,
    options: &ExploreOptions,
    mut sink: Option<&mut dyn GraphSink>,
) -> Result<Exploration, ExploreError> {
    if config.algorithm == Algorithm::Consensus
        && options.ts_cap.is_none()
        && options.max_depth.is_none()
    {
        return Err(ExploreError::UnboundedConsensus);
    }
    let track_atomicity = options.find_atomicity_witness
        && config.algorithm == Algorithm::Snapshot
        && !options.symmetry;
    let check_durability = options.check_durability
        && matches!(config.algorithm, Algorithm::Snapshot | Algorithm::Renaming);
    let level_n = config.n_processors as u32;

    let mut result = Exploration {
        config: config.clone(),
        states: 0,
        edges: 0,
        max_depth_seen: 0,
        terminal_count: 0,
        terminal_assignments: BTreeSet::new(),
        frontier_states: 0,
        truncated: false,
        wait_free: WaitFree::Indeterminate,
        atomicity_witness: None,
        durability_violations: Vec::new(),
        samples: Vec::new(),
        max_decisions_in_state: 0,
        decided_values: BTreeSet::new(),
    };
    let mut reservoir = Reservoir::new(options.sample_target, options.sample_seed);
    let all_procs: BTreeSet<ProcId> = (1..=config.n_processors).collect();

    let mut initial = init_system(config)?;
    if options.symmetry {
        initial = canonicalize(initial);
    }
    let root_digest = initial.digest();

    // Digest -> depth at which the state was expanded. Without a depth
    // bound the depth is irrelevant and states are expanded exactly once;
    // with a bound, states rediscovered at a strictly smaller depth are
    // re-expanded so the bounded graph is not spuriously pruned.
    let mut visited: HashMap<u128, usize> = HashMap::new();
    let mut gray: HashMap<u128, usize> = HashMap::new();

    visited.insert(root_digest.0, 0);
    result.states = 1;
    reservoir.offer(&initial);
    track_decisions(&initial, &mut result);
    if let Some(s) = sink.as_deref_mut() {
        s.node(root_digest, false, false);
    }

    let root_actions = enabled_actions_with(&initial, options.pick_policy);
    let root_union = initial.memory_union();
    gray.insert(root_digest.0, 0);
    let mut stack: Vec<Frame> = vec![Frame {
        state: initial,
        digest: root_digest,
        actions: root_actions,
        next: 0,
        union: root_union,
        incoming: None,
    }];
    // (stack position of the cycle entry, back action, path to the top frame)
    let mut cycle_found: Option<(usize, Action, Vec<Action>)> = None;

    'outer: while !stack.is_empty() {
        if result.states >= options.max_states {
            result.truncated = true;
            break;
        }
        let top = stack.last_mut().expect("nonempty stack");
        if top.next >= top.actions.len() {
            let frame = stack.pop().expect("nonempty stack");
            gray.remove(&frame.digest.0);
            continue;
        }
        let action = top.actions[top.next].clone();
        top.next += 1;

        let effect = apply_step(&top.state, &action)?;
        let mut succ = effect.state;
        if options.symmetry {
            succ = canonicalize(succ);
        }
        let digest = succ.digest();
        result.edges += 1;
        if let Some(s) = sink.as_deref_mut() {
            s.edge(top.digest, &action, digest);
        }

        // A non-atomicity witness is decided at the output edge: the match
        // window is exactly the prefix states on the DFS stack.
        if track_atomicity && result.atomicity_witness.is_none() {
            if let ActionKind::Output {
                output: Output::View(w),
            } = &action.kind
            {
                if !stack.iter().any(|f| &f.union == w) {
                    let mut actions: Vec<Action> = stack
                        .iter()
                        .filter_map(|f| f.incoming.clone())
                        .collect();
                    actions.push(action.clone());
                    let trace = record_actions(config, &actions)?;
                    result.atomicity_witness = Some(PathAtomicityWitness {
                        actor: action.actor,
                        output_view: w.clone(),
                        trace,
                    });
                }
            }
        }

        if check_durability {
            if let ActionKind::Read { .. } = &action.kind {
                // Termination instant: this read completed the scan that
                // raised the actor to level N; its view is now its output.
                let p = action.actor;
                let before = stack.last().unwrap().state.proc(p).machine.level();
                let after = succ.proc(p).machine.level();
                if after == Some(level_n) && before != Some(level_n) {
                    let w = succ.proc(p).machine.view();
                    if !durably_stored(&succ, w, &all_procs) {
                        result.durability_violations.push(DurabilityViolation {
                            actor: p,
                            output_view: w.clone(),
                            state_digest: digest,
                        });
                    }
                }
            }
        }

        if let Some(&pos) = gray.get(&digest.0) {
            // Back edge: a reachable cycle. Every actor inside it is
            // non-terminated throughout (outputs are constant on a cycle).
            if cycle_found.is_none() {
                let path: Vec<Action> = stack
                    .iter()
                    .filter_map(|f| f.incoming.clone())
                    .collect();
                cycle_found = Some((pos, action.clone(), path));
            }
            if options.stop_on_cycle {
                break 'outer;
            }
            continue;
        }

        let depth = stack.len();
        match visited.entry(digest.0) {
            Entry::Occupied(mut e) => {
                if options.max_depth.is_none() || *e.get() <= depth {
                    continue;
                }
                e.insert(depth); // re-expand: reached strictly shallower
            }
            Entry::Vacant(e) => {
                e.insert(depth);
                result.states += 1;
                result.max_depth_seen = result.max_depth_seen.max(depth);
                reservoir.offer(&succ);
                track_decisions(&succ, &mut result);
                if let Some(cap) = options.ts_cap {
                    if succ.max_timestamp() > cap {
                        result.frontier_states += 1;
                        if let Some(s) = sink.as_deref_mut() {
                            s.node(digest, false, true);
                        }
                        continue;
                    }
                }
                if let Some(md) = options.max_depth {
                    if depth > md {
                        result.truncated = true;
                        continue;
                    }
                }
            }
        }

        let actions = enabled_actions_with(&succ, options.pick_policy);
        let union = succ.memory_union();

        if actions.is_empty() {
            // Terminal: every processor has output.
            result.terminal_count += 1;
            result
                .terminal_assignments
                .insert(succ.outputs.clone());
            if let Some(s) = sink.as_deref_mut() {
                s.node(digest, true, false);
            }
            continue;
        }
        if let Some(s) = sink.as_deref_mut() {
            s.node(digest, false, false);
        }

        gray.insert(digest.0, stack.len());
        stack.push(Frame {
            state: succ,
            digest,
            actions,
            next: 0,
            union,
            incoming: Some(action),
        });
    }

    result.wait_free = match (cycle_found, result.truncated) {
        (Some((pos, back_action, path)), _) => {
            let witness = if options.symmetry {
                None
            } else {
                Some(Box::new(build_cycle_witness(
                    config,
                    path,
                    pos,
                    &back_action,
                )?))
            };
            WaitFree::Violated { witness }
        }
        (None, false) => WaitFree::Holds,
        (None, true) => WaitFree::Indeterminate,
    };
    result.samples = reservoir.samples;
    Ok(result)
}

fn track_decisions(state: &SystemState, result: &mut Exploration) {
    if !matches!(state.procs[0].machine, crate::machines::MachineState::Consensus(_)) {
        return;
    }
    let mut distinct: BTreeSet<GroupId> = BTreeSet::new();
    for out in state.outputs.values() {
        if let Output::Decision(v) = out {
            distinct.insert(*v);
        }
    }
    // Undelivered decisions count too: a decided machine that has not yet
    // taken its output step has still decided.
    for p in &state.procs {
        if let crate::machines::MachineState::Consensus(c) = &p.machine {
            if let Some(v) = c.decided {
                distinct.insert(v);
            }
        }
    }
    result.max_decisions_in_state = result.max_decisions_in_state.max(distinct.len());
    result.decided_values.extend(distinct);
}

/// Builds the witness lasso for a detected cycle: the DFS path to the cycle
/// entry, then the cycle itself. Prefix minimization is a separate pass
/// ([`minimize_lasso_prefix`]).
fn build_cycle_witness(
    config: &Config,
    path: Vec<Action>,
    entry_pos: usize,
    back_action: &Action,
) -> Result<Lasso, ExploreError> {
    let mut actions = path;
    actions.push(back_action.clone());
    let mut trace = record_actions(config, &actions)?;
    trace.cycle_start = Some(entry_pos);
    debug_assert_eq!(
        trace.replay().expect("witness replays")[entry_pos].digest(),
        trace.final_digest()
    );
    Ok(Lasso::analyze(trace)?)
}

/// Shortens a lasso's prefix to a breadth-first shortest path from the
/// initial state to any state on the cycle, rotating the cycle to start at
/// the state reached. Falls back to the original when the search exceeds
/// `visit_budget` states.
pub fn minimize_lasso_prefix(lasso: &Lasso, visit_budget: usize) -> Result<Lasso, ExploreError> {
    let config = &lasso.trace.config;
    let states = lasso.trace.replay().map_err(ScheduleError::from)?;
    let cycle_start = lasso.trace.cycle_start.expect("lasso has a cycle");
    let cycle_len = states.len() - 1 - cycle_start;
    // Position of each cycle state (the last state duplicates the first).
    let cycle_pos: HashMap<u128, usize> = (0..cycle_len)
        .map(|k| (states[cycle_start + k].digest().0, k))
        .collect();

    let initial = init_system(config).map_err(ExploreError::Config)?;
    let mut pred: HashMap<u128, (u128, Action)> = HashMap::new();
    let mut queue: std::collections::VecDeque<SystemState> = std::collections::VecDeque::new();
    let mut seen: BTreeSet<u128> = BTreeSet::new();
    seen.insert(initial.digest().0);
    queue.push_back(initial);
    let mut hit: Option<(u128, usize)> = None;
    'bfs: while let Some(state) = queue.pop_front() {
        let from = state.digest().0;
        if let Some(&k) = cycle_pos.get(&from) {
            hit = Some((from, k));
            break 'bfs;
        }
        if seen.len() >= visit_budget {
            break;
        }
        for action in enabled_actions(&state) {
            let succ = apply_step(&state, &action)?.state;
            let d = succ.digest().0;
            if seen.insert(d) {
                pred.insert(d, (from, action));
                queue.push_back(succ);
            }
        }
    }
    let Some((hit_digest, k)) = hit else {
        return Ok(lasso.clone());
    };
    // Prefix: walk predecessors back to the root.
    let mut prefix: Vec<Action> = Vec::new();
    let mut cur = hit_digest;
    while let Some((parent, action)) = pred.get(&cur) {
        prefix.push(action.clone());
        cur = *parent;
    }
    prefix.reverse();
    // Cycle rotated to start at the state reached.
    let cycle_actions: Vec<Action> = lasso.trace.steps[cycle_start + k..]
        .iter()
        .chain(&lasso.trace.steps[cycle_start..cycle_start + k])
        .map(|s| s.action.clone())
        .collect();
    let cycle_entry = prefix.len();
    let mut actions = prefix;
    actions.extend(cycle_actions);
    let mut trace = record_actions(config, &actions).map_err(ExploreError::Schedule)?;
    trace.cycle_start = Some(cycle_entry);
    Ok(Lasso::analyze(trace)?)
}

/// Searches for a non-atomicity witness by candidate output set: for each
/// candidate `I`, explores (all write-target picks) only the states whose
/// memory union differs from `I`; reaching an output of `I` through such
/// states yields an execution in which the memory never contained exactly
/// `I` at any prefix time. Exhausting the pruned graph for every candidate
/// (within the per-candidate state cap) finds no witness.
pub fn find_non_atomicity_witness(
    config: &Config,
    per_candidate_cap: usize,
) -> Result<Option<PathAtomicityWitness>, ExploreError> {
    config.validate()?;
    let probe = ExploreOptions::default();
    if !fast::eligible(config, &probe) {
        return Err(ExploreError::Step(StepError::NotEnabled {
            actor: 0,
            reason: "witness search requires a group-valued algorithm at desk scale".into(),
        }));
    }
    fast::FastExplorer::new(config)?.find_witness_restricted(per_candidate_cap)
}

/// Exact existence check for a single candidate output set: `Some(true)`
/// when an execution outputs exactly `target` while the memory union never
/// equals it at any prefix time, `Some(false)` when no such execution
/// exists, `None` when the state budget ran out undecided.
pub fn non_atomicity_witness_exists(
    config: &Config,
    target: &BTreeSet<GroupId>,
    picks: PickPolicy,
    max_states: usize,
    level_threshold: usize,
) -> Result<Option<bool>, ExploreError> {
    config.validate()?;
    let probe = ExploreOptions::default();
    if !fast::eligible(config, &probe) {
        return Err(ExploreError::Step(StepError::NotEnabled {
            actor: 0,
            reason: "witness search requires a group-valued algorithm at desk scale".into(),
        }));
    }
    let mask = target.iter().fold(0u8, |a, g| a | 1 << (g.0 - 1));
    fast::FastExplorer::new(config)?.witness_exists_sweep(
        mask,
        picks,
        max_states,
        level_threshold as u8,
    )
}

#[derive(Debug, Error)]
pub enum SoloError {
    #[error("no decision within {invocations} snapshot invocations")]
    InvocationBudget { invocations: usize },
    #[error("no decision within {steps} solo steps")]
    StepBudget { steps: usize },
    #[error(transparent)]
    Step(#[from] StepError),
}

/// Runs one processor solo (default write targets) from the given state
/// until it decides, allowing at most `max_invocations` completed snapshot
/// invocations. Returns the decision output. Obstruction-freedom probe.
pub fn solo_run_decides(
    state: &SystemState,
    actor: ProcId,
    max_invocations: usize,
) -> Result<Output, SoloError> {
    if let Some(out) = state.outputs.get(&actor) {
        return Ok(out.clone());
    }
    let step_budget = max_invocations * 400 * state.n().max(2);
    let mut cur = state.clone();
    let mut invocations = 0;
    for _ in 0..step_budget {
        let (prev_ts, prev_decided) = consensus_progress(&cur, actor);
        let (_, effect) = step(&cur, actor, None)?;
        cur = effect.state;
        if let Some(out) = cur.outputs.get(&actor) {
            return Ok(out.clone());
        }
        let (ts, decided) = consensus_progress(&cur, actor);
        if ts != prev_ts || decided != prev_decided {
            invocations += 1;
            if invocations > max_invocations {
                return Err(SoloError::InvocationBudget {
                    invocations: max_invocations,
                });
            }
        }
    }
    Err(SoloError::StepBudget { steps: step_budget })
}

fn consensus_progress(state: &SystemState, actor: ProcId) -> (u32, Option<GroupId>) {
    match &state.proc(actor).machine {
        crate::machines::MachineState::Consensus(c) => (c.ts, c.decided),
        _ => (0, None),
    }
}
