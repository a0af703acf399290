//! Task predicates and execution checkers.
//!
//! Everything here is a pure function over recorded data: task predicates
//! for snapshot, consensus and adaptive renaming; the group-solvability
//! sampler (brute-force enumeration of one-representative-per-group
//! samples); stable-view-graph analysis of lassos; the durably-stored
//! predicate; the non-atomicity witness search; and an invariant suite that
//! re-derives machine behavior independently while replaying a trace.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::model::{
    group_view, ActionKind, Algorithm, GroupId, Output, ProcId, RegisterPayload, SystemState, Val,
    View,
};
use crate::schedule::Lasso;
use crate::trace::{ReplayError, Trace};

/// Partial map from processors to outputs.
pub type OutputAssignment = BTreeMap<ProcId, Output>;

/// One output per participating group, picked from that group's members.
pub type OutputSample = BTreeMap<GroupId, Output>;

#[derive(Debug, Error)]
pub enum CheckerError {
    #[error("participating group {0} has no member with an output")]
    GroupWithoutOutputs(GroupId),
    #[error("output of {0} is not a view")]
    NotAView(ProcId),
    #[error("stable-view graph of an empty lasso")]
    EmptyGraph,
    #[error("lasso is flagged: a non-live processor's write survives the cycle, \
             so the stabilization clause cannot be met")]
    FlaggedLasso,
    #[error(transparent)]
    Replay(#[from] ReplayError),
}

/// Violation of the snapshot task predicate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum SnapshotViolation {
    /// `id` does not appear in its own output.
    MissingSelf { id: GroupId },
    /// Two outputs are incomparable under containment.
    Incomparable { a: GroupId, b: GroupId },
}

/// Snapshot task predicate over `(identifier, output set)` entries. The same
/// code path serves raw assignments (keyed by the owner's group) and
/// one-per-group samples (keyed by the group itself): each identifier must
/// appear in its own set, and every pair of sets must be related by
/// containment.
pub fn check_snapshot_task<'a, I>(entries: I) -> Result<(), SnapshotViolation>
where
    I: IntoIterator<Item = (GroupId, &'a BTreeSet<GroupId>)>,
{
    let entries: Vec<(GroupId, &BTreeSet<GroupId>)> = entries.into_iter().collect();
    for (id, set) in &entries {
        if !set.contains(id) {
            return Err(SnapshotViolation::MissingSelf { id: *id });
        }
    }
    for (i, (a, sa)) in entries.iter().enumerate() {
        for (b, sb) in &entries[i + 1..] {
            if !sa.is_subset(sb) && !sb.is_subset(sa) {
                return Err(SnapshotViolation::Incomparable { a: *a, b: *b });
            }
        }
    }
    Ok(())
}

/// Violation of the consensus task predicate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum ConsensusViolation {
    Disagreement { a: GroupId, b: GroupId },
    InvalidValue { value: GroupId },
}

/// Consensus task: all outputs equal, and the common value is a
/// participating input.
pub fn check_consensus_task(
    decisions: &[GroupId],
    participating_inputs: &BTreeSet<GroupId>,
) -> Result<(), ConsensusViolation> {
    for w in decisions.windows(2) {
        if w[0] != w[1] {
            return Err(ConsensusViolation::Disagreement { a: w[0], b: w[1] });
        }
    }
    for &v in decisions {
        if !participating_inputs.contains(&v) {
            return Err(ConsensusViolation::InvalidValue { value: v });
        }
    }
    Ok(())
}

/// Violation of the adaptive renaming task predicate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum RenamingViolation {
    Duplicate { a: GroupId, b: GroupId, name: u64 },
    OutOfRange { id: GroupId, name: u64, bound: u64 },
}

/// Adaptive renaming with parameter `f(n) = n(n+1)/2`, `n` counted in
/// groups: all names in the sample distinct and within `1..=M(M+1)/2` for
/// `M` participating groups.
pub fn check_renaming_task(
    sample: &BTreeMap<GroupId, u64>,
    participating_groups: usize,
) -> Result<(), RenamingViolation> {
    let m = participating_groups as u64;
    let bound = m * (m + 1) / 2;
    let mut seen: BTreeMap<u64, GroupId> = BTreeMap::new();
    for (&id, &name) in sample {
        if name < 1 || name > bound {
            return Err(RenamingViolation::OutOfRange { id, name, bound });
        }
        if let Some(&other) = seen.get(&name) {
            return Err(RenamingViolation::Duplicate {
                a: other,
                b: id,
                name,
            });
        }
        seen.insert(name, id);
    }
    Ok(())
}

/// Result of the group-solvability sampler.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GroupSolvability {
    Holds { samples_checked: usize },
    Violated { sample: OutputSample },
}

impl GroupSolvability {
    pub fn holds(&self) -> bool {
        matches!(self, GroupSolvability::Holds { .. })
    }
}

/// Enumerates every output sample — the Cartesian product, over the
/// participating groups, of their members' outputs — and applies the task
/// predicate to each. Returns the first failing sample, if any.
///
/// `groups` partitions the processors; a group participates when it has a
/// member among `participants`, and every participating group must have at
/// least one member with an output in the assignment.
pub fn check_group_solvability<F>(
    predicate: F,
    groups: &BTreeMap<GroupId, BTreeSet<ProcId>>,
    participants: &BTreeSet<ProcId>,
    assignment: &OutputAssignment,
) -> Result<GroupSolvability, CheckerError>
where
    F: Fn(&OutputSample) -> bool,
{
    let mut choices: Vec<(GroupId, Vec<&Output>)> = Vec::new();
    for (&gid, members) in groups {
        if members.iter().all(|p| !participants.contains(p)) {
            continue;
        }
        let outputs: Vec<&Output> = members
            .iter()
            .filter_map(|p| assignment.get(p))
            .collect();
        if outputs.is_empty() {
            return Err(CheckerError::GroupWithoutOutputs(gid));
        }
        choices.push((gid, outputs));
    }
    // Odometer over the product of per-group choices.
    let mut idx = vec![0usize; choices.len()];
    let mut samples_checked = 0;
    loop {
        let sample: OutputSample = choices
            .iter()
            .zip(&idx)
            .map(|((gid, outs), &i)| (*gid, outs[i].clone()))
            .collect();
        samples_checked += 1;
        if !predicate(&sample) {
            return Ok(GroupSolvability::Violated { sample });
        }
        let mut pos = choices.len();
        loop {
            if pos == 0 {
                return Ok(GroupSolvability::Holds { samples_checked });
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < choices[pos].1.len() {
                break;
            }
            idx[pos] = 0;
        }
    }
}

/// Snapshot-task predicate over an output sample, for use with
/// [`check_group_solvability`]. Non-view outputs fail.
pub fn snapshot_sample_predicate(sample: &OutputSample) -> bool {
    let mut entries: Vec<(GroupId, BTreeSet<GroupId>)> = Vec::with_capacity(sample.len());
    for (&gid, out) in sample {
        match out {
            Output::View(v) => entries.push((gid, group_view(v))),
            _ => return false,
        }
    }
    check_snapshot_task(entries.iter().map(|(g, s)| (*g, s))).is_ok()
}

/// Renaming-task predicate over an output sample.
pub fn renaming_sample_predicate(sample: &OutputSample) -> bool {
    let mut names: BTreeMap<GroupId, u64> = BTreeMap::new();
    for (&gid, out) in sample {
        match out {
            Output::Name(n) => {
                names.insert(gid, *n);
            }
            _ => return false,
        }
    }
    check_renaming_task(&names, sample.len()).is_ok()
}

// ---------------------------------------------------------------------------
// Stable views.

/// DAG over the stable views of a lasso: an edge `(V1, V2)` for every strict
/// subset pair. Acyclic by construction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StableViewGraph {
    pub vertices: BTreeSet<BTreeSet<GroupId>>,
    pub edges: BTreeSet<(BTreeSet<GroupId>, BTreeSet<GroupId>)>,
}

/// Builds the stable-view graph of a lasso: vertices are the distinct views
/// of live processors within the cycle, edges all strict-subset pairs.
/// Flagged lassos (unresolved stabilization clause) are refused.
pub fn stable_view_graph(lasso: &Lasso) -> Result<StableViewGraph, CheckerError> {
    if lasso.gst_flagged {
        return Err(CheckerError::FlaggedLasso);
    }
    let vertices: BTreeSet<BTreeSet<GroupId>> = lasso
        .stable_views
        .values()
        .map(|v| group_view(v))
        .collect();
    let mut edges = BTreeSet::new();
    for a in &vertices {
        for b in &vertices {
            if a != b && a.is_subset(b) {
                edges.insert((a.clone(), b.clone()));
            }
        }
    }
    Ok(StableViewGraph { vertices, edges })
}

/// Report of the unique-source check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SingleSourceReport {
    /// Vertices with no incoming edge.
    pub sources: Vec<BTreeSet<GroupId>>,
}

impl SingleSourceReport {
    pub fn holds(&self) -> bool {
        self.sources.len() == 1
    }
}

/// A vertex is a source when it is not a strict superset of any other
/// vertex; the graph must have exactly one.
pub fn check_single_source(graph: &StableViewGraph) -> Result<SingleSourceReport, CheckerError> {
    if graph.vertices.is_empty() {
        return Err(CheckerError::EmptyGraph);
    }
    let sources = graph
        .vertices
        .iter()
        .filter(|v| graph.edges.iter().all(|(_, to)| to != *v))
        .cloned()
        .collect();
    Ok(SingleSourceReport { sources })
}

// ---------------------------------------------------------------------------
// Durably stored.

/// The durably-stored predicate: with `R_W` the registers containing `W`
/// and `Q_W` the members of `Q` that either know `W` or are scanning with
/// some register of `R_W` not yet read this scan, the set `W` is durably
/// stored despite interference by `Q` when `|R_W| > |Q \ Q_W|`.
///
/// A scanner with an unread `R_W` register ahead of it will absorb `W`
/// before it can write again, so it cannot help evict `W`; the processors
/// counted in `Q \ Q_W` can each overwrite at most one register before
/// their next scan, and `|R_W| > |Q \ Q_W|` means they are not numerous
/// enough to overwrite every register holding `W`.
pub fn durably_stored(state: &SystemState, w: &View, q: &BTreeSet<ProcId>) -> bool {
    let r_w: BTreeSet<usize> = (1..=state.m())
        .filter(|&r| w.is_subset(&state.register(r).payload.view))
        .collect();
    let q_w_complement = q
        .iter()
        .filter(|&&p| {
            let machine = &state.proc(p).machine;
            if w.is_subset(machine.view()) {
                return false; // in Q_W
            }
            if let Some(scanned) = machine.scanned_locals() {
                let read_phys: BTreeSet<usize> = scanned
                    .map(|local| state.perm(p).resolve(local).expect("valid scan index"))
                    .collect();
                if r_w.iter().any(|phys| !read_phys.contains(phys)) {
                    return false; // an R_W register is still ahead: in Q_W
                }
            }
            true // in Q \ Q_W
        })
        .count();
    r_w.len() > q_w_complement
}

/// Replays a snapshot-family trace and evaluates [`durably_stored`] at
/// every termination instant: the post-state of the read completing the
/// scan that raised a processor's level to `N`, with `W` that processor's
/// view (its output) and `Q` all processors. Returns the instants where
/// the predicate failed.
pub fn check_durability_along_trace(
    trace: &Trace,
) -> Result<Vec<(usize, ProcId)>, CheckerError> {
    let states = trace.replay()?;
    let n = trace.initial.n() as u32;
    let all: BTreeSet<ProcId> = (1..=trace.initial.n()).collect();
    let mut failures = Vec::new();
    for (t, step) in trace.steps.iter().enumerate() {
        if !matches!(step.action.kind, ActionKind::Read { .. }) {
            continue;
        }
        let p = step.action.actor;
        let before = states[t].proc(p).machine.level();
        let after = states[t + 1].proc(p).machine.level();
        if after == Some(n) && before != Some(n) {
            let w = states[t + 1].proc(p).machine.view();
            if !durably_stored(&states[t + 1], w, &all) {
                failures.push((t, p));
            }
        }
    }
    Ok(failures)
}

// ---------------------------------------------------------------------------
// Non-atomicity witness.

/// A snapshot output that never equals the memory contents: at no time in
/// the execution did the union of all register views equal the output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AtomicityWitness {
    pub actor: ProcId,
    pub output_view: View,
    /// Time of the output step.
    pub t: usize,
}

/// Searches a trace for a snapshot output `I` such that at no prefix time
/// (any state up to the output step) the union of all register views
/// equaled `I`: the memory never contained exactly the returned set.
pub fn atomicity_witness(trace: &Trace) -> Result<Option<AtomicityWitness>, CheckerError> {
    let states = trace.replay()?;
    let unions: Vec<View> = states.iter().map(|s| s.memory_union()).collect();
    for (t, step) in trace.steps.iter().enumerate() {
        if let ActionKind::Output {
            output: Output::View(view),
        } = &step.action.kind
        {
            if !unions[..=t].iter().any(|u| u == view) {
                return Ok(Some(AtomicityWitness {
                    actor: step.action.actor,
                    output_view: view.clone(),
                    t,
                }));
            }
        }
    }
    Ok(None)
}

// ---------------------------------------------------------------------------
// Trace invariants.

/// One violated invariant, with the step index where it was caught.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum InvariantViolation {
    /// A processor's view lost an element.
    ViewShrank { t: usize, actor: ProcId },
    /// A value appeared that is not the input of any processor that has
    /// taken a step, nor the holder's own input.
    InvalidValue { t: usize, holder: String },
    /// A processor wrote a register twice within one round.
    UnfairWrite {
        t: usize,
        actor: ProcId,
        physical: usize,
    },
    /// The level set at the end of a scan does not follow the level rule.
    LevelRule {
        t: usize,
        actor: ProcId,
        expected: u32,
        got: u32,
    },
    /// The view after a scan is not the union of the pre-view and payloads.
    ScanMerge { t: usize, actor: ProcId },
    /// An output view lacks the producer's own input.
    MissingSelfInclusion { actor: ProcId },
    /// Two output views are incomparable.
    OutputsIncomparable { a: ProcId, b: ProcId },
}

/// Replays a trace and re-derives the machine contract independently:
/// view monotonicity, value validity, write fairness (per-round physical
/// register tracking), the snapshot level rule and scan merge, output
/// self-inclusion and pairwise output containment. Digest verification is
/// part of the replay itself.
pub fn check_trace_invariants(trace: &Trace) -> Result<Vec<InvariantViolation>, CheckerError> {
    let states = trace.replay()?;
    let mut violations = Vec::new();
    let n = trace.initial.n();
    let m = trace.initial.m();
    let snapshot_family = matches!(
        trace.config.algorithm,
        Algorithm::Snapshot | Algorithm::Renaming
    );

    let mut stepped: BTreeSet<ProcId> = BTreeSet::new();
    // Physical registers written by each processor in its current round.
    let mut round: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    // Payloads read in each processor's scan in progress, and the view each
    // processor held when that scan started.
    let mut scan_reads: Vec<Vec<RegisterPayload>> = vec![Vec::new(); n];
    let mut scan_start: Vec<View> = trace
        .initial
        .procs
        .iter()
        .map(|p| p.machine.view().clone())
        .collect();

    for (t, step) in trace.steps.iter().enumerate() {
        let pre = &states[t];
        let post = &states[t + 1];
        let actor = step.action.actor;
        stepped.insert(actor);

        // View monotonicity for every processor.
        for p in 1..=n {
            let before = pre.proc(p).machine.view();
            let after = post.proc(p).machine.view();
            if !before.is_subset(after) {
                violations.push(InvariantViolation::ViewShrank { t, actor: p });
            }
        }

        // Value validity: the group component of every value in registers
        // and views is the input of a processor that has stepped, or the
        // holder's own input.
        let stepped_inputs: BTreeSet<GroupId> =
            stepped.iter().map(|&p| post.proc(p).input).collect();
        let value_ok = |v: &Val, own: Option<GroupId>| {
            let g = match v {
                Val::Group(g) => *g,
                Val::Stamped { value, .. } => *value,
            };
            stepped_inputs.contains(&g) || own == Some(g)
        };
        for (r, reg) in post.registers.iter().enumerate() {
            for v in &reg.payload.view {
                if !value_ok(v, None) {
                    violations.push(InvariantViolation::InvalidValue {
                        t,
                        holder: format!("register {}", r + 1),
                    });
                }
            }
        }
        for p in 1..=n {
            let own = post.proc(p).input;
            for v in post.proc(p).machine.view() {
                if !value_ok(v, Some(own)) {
                    violations.push(InvariantViolation::InvalidValue {
                        t,
                        holder: format!("processor {p}"),
                    });
                }
            }
        }

        match &step.action.kind {
            ActionKind::Write { .. } => {
                let phys = step.physical.expect("writes record a physical register");
                if round[actor - 1].len() == m {
                    round[actor - 1].clear();
                }
                if !round[actor - 1].insert(phys) {
                    violations.push(InvariantViolation::UnfairWrite {
                        t,
                        actor,
                        physical: phys,
                    });
                }
                scan_reads[actor - 1].clear();
                scan_start[actor - 1] = post.proc(actor).machine.view().clone();
            }
            ActionKind::Read { .. } => {
                let payload = step
                    .read_payload
                    .clone()
                    .unwrap_or_else(|| {
                        let phys = step.physical.expect("reads record a physical register");
                        pre.register(phys).payload.clone()
                    });
                scan_reads[actor - 1].push(payload);
                if scan_reads[actor - 1].len() == m {
                    // End of scan: re-derive the level rule and merge.
                    let reads = std::mem::take(&mut scan_reads[actor - 1]);
                    if snapshot_family {
                        let start = &scan_start[actor - 1];
                        let all_equal = reads.iter().all(|p| &p.view == start);
                        let min_level = reads.iter().map(|p| p.level).min().unwrap();
                        let expected = if all_equal { min_level + 1 } else { 0 };
                        let got = post.proc(actor).machine.level().unwrap();
                        if got != expected {
                            violations.push(InvariantViolation::LevelRule {
                                t,
                                actor,
                                expected,
                                got,
                            });
                        }
                        let mut merged = start.clone();
                        for p in &reads {
                            merged.extend(p.view.iter().copied());
                        }
                        if &merged != post.proc(actor).machine.view() {
                            violations.push(InvariantViolation::ScanMerge { t, actor });
                        }
                    }
                }
            }
            ActionKind::Output { output } => {
                if let Output::View(view) = output {
                    if !view.contains(&Val::Group(post.proc(actor).input)) {
                        violations.push(InvariantViolation::MissingSelfInclusion { actor });
                    }
                }
            }
        }
    }

    // Pairwise containment of output views.
    let final_state = states.last().unwrap();
    let outs: Vec<(ProcId, &View)> = final_state
        .outputs
        .iter()
        .filter_map(|(&p, o)| match o {
            Output::View(v) => Some((p, v)),
            _ => None,
        })
        .collect();
    for (i, (a, va)) in outs.iter().enumerate() {
        for (b, vb) in &outs[i + 1..] {
            if !va.is_subset(vb) && !vb.is_subset(va) {
                violations.push(InvariantViolation::OutputsIncomparable { a: *a, b: *b });
            }
        }
    }
    Ok(violations)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(id: u32) -> GroupId {
        GroupId(id)
    }

    fn gset(ids: &[u32]) -> BTreeSet<GroupId> {
        ids.iter().map(|&i| g(i)).collect()
    }

    fn view_output(ids: &[u32]) -> Output {
        Output::View(ids.iter().map(|&i| Val::group(i)).collect())
    }

    #[test]
    fn snapshot_task_chain_holds() {
        let a = gset(&[1, 2]);
        let b = gset(&[1, 2]);
        let c = gset(&[1, 2, 3]);
        let entries = [(g(1), &a), (g(2), &b), (g(3), &c)];
        assert!(check_snapshot_task(entries).is_ok());
    }

    #[test]
    fn snapshot_task_catches_incomparable_pair() {
        let a = gset(&[1, 2]);
        let b = gset(&[2, 3]);
        let c = gset(&[1, 2, 3]);
        let entries = [(g(1), &a), (g(2), &b), (g(3), &c)];
        assert_eq!(
            check_snapshot_task(entries),
            Err(SnapshotViolation::Incomparable { a: g(1), b: g(2) })
        );
    }

    #[test]
    fn snapshot_task_catches_missing_self() {
        let a = gset(&[2]);
        assert_eq!(
            check_snapshot_task([(g(1), &a)]),
            Err(SnapshotViolation::MissingSelf { id: g(1) })
        );
    }

    #[test]
    fn consensus_task_checks() {
        let inputs = gset(&[1, 2]);
        assert!(check_consensus_task(&[g(1), g(1)], &inputs).is_ok());
        assert!(matches!(
            check_consensus_task(&[g(1), g(2)], &inputs),
            Err(ConsensusViolation::Disagreement { .. })
        ));
        assert!(matches!(
            check_consensus_task(&[g(3), g(3)], &inputs),
            Err(ConsensusViolation::InvalidValue { .. })
        ));
    }

    #[test]
    fn renaming_task_checks() {
        let mut sample = BTreeMap::new();
        sample.insert(g(1), 1);
        assert!(check_renaming_task(&sample, 1).is_ok());

        let mut dup = BTreeMap::new();
        dup.insert(g(1), 3);
        dup.insert(g(2), 3);
        assert!(matches!(
            check_renaming_task(&dup, 2),
            Err(RenamingViolation::Duplicate { name: 3, .. })
        ));

        let mut range = BTreeMap::new();
        range.insert(g(1), 4);
        range.insert(g(2), 1);
        assert!(matches!(
            check_renaming_task(&range, 2),
            Err(RenamingViolation::OutOfRange { name: 4, bound: 3, .. })
        ));
    }

    /// The worked example: groups A={1}, B={2,3}, C={4}. Processor 2 and 3
    /// return incomparable sets, yet every one-per-group sample is a chain.
    #[test]
    fn group_solvability_worked_example_holds() {
        let groups: BTreeMap<GroupId, BTreeSet<ProcId>> = [
            (g(1), [1].into()),
            (g(2), [2, 3].into()),
            (g(3), [4].into()),
        ]
        .into();
        let assignment: OutputAssignment = [
            (1, view_output(&[1, 2, 3])),
            (2, view_output(&[1, 2])),
            (3, view_output(&[2, 3])),
            (4, view_output(&[1, 2, 3])),
        ]
        .into();
        let participants: BTreeSet<ProcId> = [1, 2, 3, 4].into();
        let verdict = check_group_solvability(
            snapshot_sample_predicate,
            &groups,
            &participants,
            &assignment,
        )
        .unwrap();
        assert_eq!(verdict, GroupSolvability::Holds { samples_checked: 2 });
    }

    /// Same outputs, but processor 3 moved to group C: the sample that picks
    /// {1,2} for B and {2,3} for C is incomparable.
    #[test]
    fn group_solvability_mutated_example_fails_with_sample() {
        let groups: BTreeMap<GroupId, BTreeSet<ProcId>> = [
            (g(1), [1].into()),
            (g(2), [2].into()),
            (g(3), [3, 4].into()),
        ]
        .into();
        let assignment: OutputAssignment = [
            (1, view_output(&[1, 2, 3])),
            (2, view_output(&[1, 2])),
            (3, view_output(&[2, 3])),
            (4, view_output(&[1, 2, 3])),
        ]
        .into();
        let participants: BTreeSet<ProcId> = [1, 2, 3, 4].into();
        let verdict = check_group_solvability(
            snapshot_sample_predicate,
            &groups,
            &participants,
            &assignment,
        )
        .unwrap();
        let expected_sample: OutputSample = [
            (g(1), view_output(&[1, 2, 3])),
            (g(2), view_output(&[1, 2])),
            (g(3), view_output(&[2, 3])),
        ]
        .into();
        assert_eq!(
            verdict,
            GroupSolvability::Violated {
                sample: expected_sample
            }
        );
    }

    #[test]
    fn group_solvability_requires_outputs() {
        let groups: BTreeMap<GroupId, BTreeSet<ProcId>> =
            [(g(1), [1].into()), (g(2), [2].into())].into();
        let assignment: OutputAssignment = [(1, view_output(&[1]))].into();
        let participants: BTreeSet<ProcId> = [1, 2].into();
        assert!(matches!(
            check_group_solvability(
                snapshot_sample_predicate,
                &groups,
                &participants,
                &assignment
            ),
            Err(CheckerError::GroupWithoutOutputs(id)) if id == g(2)
        ));
    }

    #[test]
    fn single_source_examples() {
        let graph = StableViewGraph {
            vertices: [gset(&[1]), gset(&[1, 2]), gset(&[1, 3])].into(),
            edges: [
                (gset(&[1]), gset(&[1, 2])),
                (gset(&[1]), gset(&[1, 3])),
            ]
            .into(),
        };
        let report = check_single_source(&graph).unwrap();
        assert!(report.holds());
        assert_eq!(report.sources, vec![gset(&[1])]);

        let two_sources = StableViewGraph {
            vertices: [gset(&[1, 2]), gset(&[1, 3])].into(),
            edges: BTreeSet::new(),
        };
        assert!(!check_single_source(&two_sources).unwrap().holds());

        let chain = StableViewGraph {
            vertices: [gset(&[1]), gset(&[1, 2]), gset(&[1, 2, 3])].into(),
            edges: [
                (gset(&[1]), gset(&[1, 2])),
                (gset(&[1]), gset(&[1, 2, 3])),
                (gset(&[1, 2]), gset(&[1, 2, 3])),
            ]
            .into(),
        };
        assert!(check_single_source(&chain).unwrap().holds());

        let empty = StableViewGraph {
            vertices: BTreeSet::new(),
            edges: BTreeSet::new(),
        };
        assert!(matches!(
            check_single_source(&empty),
            Err(CheckerError::EmptyGraph)
        ));
    }
}
