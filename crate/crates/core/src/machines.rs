//! The four algorithms as deterministic step machines.
//!
//! Every machine follows the same contract: it requests one action at a time
//! (a write with a payload, a read of a specific local register, or an
//! output), and absorbs read results. The only nondeterminism is the write
//! target, picked by the scheduler from the set of local registers not yet
//! written this round; the machine itself never requests a register twice
//! before a round completes, which is what makes writes fair. The default
//! pick is the lowest remaining local index.
//!
//! * `write-scan` — alternates forever between writing its view to one
//!   register and reading all registers in ascending local order, merging
//!   every payload read into its view. Never outputs.
//! * `snapshot` — write-scan plus a level: a scan that reads the machine's
//!   own view everywhere raises the level to one above the minimum level
//!   read; any other scan resets it to 0. Reaching level `N` terminates
//!   with the view as output.
//! * `renaming` — the snapshot machine, outputting a name computed from the
//!   rank of its own group inside its snapshot instead of the view itself.
//! * `consensus` — drives a long-lived variant of the snapshot machine over
//!   value-timestamp pairs; decides once a value's timestamp leads every
//!   other value by at least 2.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::digest::{Canonical, Hasher};
use crate::model::{
    feed_locals, feed_view, group_view, Algorithm, GroupId, Output, RegisterPayload, Val, View,
};

/// What a machine wants to do next. For writes the target register is left
/// to the scheduler; the payload is fixed by the machine state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StepRequest {
    Write { payload: RegisterPayload },
    Read { local: usize },
    Output { output: Output },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MachineError {
    #[error("snapshot invocation still in progress (level {level} of {n})")]
    MidInvocation { level: u32, n: u32 },
    #[error("snapshot is empty")]
    EmptySnapshot,
    #[error("consensus machine has already decided")]
    AlreadyDecided,
    #[error("group {0} does not appear in the snapshot")]
    NotInSnapshot(GroupId),
    #[error("consensus view holds a plain group value {0:?}, expected a pair")]
    NonPairValue(Val),
}

/// Machine-local state of one processor.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MachineState {
    WriteScan(WriteScanLocal),
    Snapshot(SnapshotLocal),
    Renaming(SnapshotLocal),
    Consensus(ConsensusLocal),
}

/// Local state of the plain write-scan loop. The view is merged at every
/// read, so no scan accumulator is needed.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct WriteScanLocal {
    pub view: View,
    /// Local indices not yet written this round.
    pub round_remaining: BTreeSet<usize>,
    /// Next local index to read; `None` while in the write phase.
    pub scan_pos: Option<usize>,
    pub m: usize,
}

/// Scan-in-progress bookkeeping for the snapshot machine. The end-of-scan
/// update is applied atomically with the final read.
///
/// Payloads are merged into the view as they are read rather than
/// accumulated separately: no write can happen mid-scan, so the early merge
/// is invisible to every other machine, and while every payload still
/// equals the scanner's view the merge adds nothing, so the view doubles as
/// the scan-start view for the level rule's equality test. This keeps the
/// explorer's state space small.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ScanState {
    /// Next local index to read.
    pub pos: usize,
    /// Level-rule outcome so far.
    pub outcome: ScanOutcome,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanOutcome {
    /// Every view read so far equals the view held at scan start;
    /// `min_level` is the minimum level read, `u32::MAX` before the first
    /// read.
    Equal { min_level: u32 },
    /// Some view read differs: the scan ends with level 0.
    Reset,
}

/// Local state of the snapshot machine (and of the renaming machine, which
/// differs only in what it outputs).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SnapshotLocal {
    pub view: View,
    pub level: u32,
    pub round_remaining: BTreeSet<usize>,
    pub scan: Option<ScanState>,
    pub n: usize,
}

/// Local state of the consensus machine: preference, timestamp, and the
/// long-lived snapshot it communicates through.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ConsensusLocal {
    pub pref: GroupId,
    pub ts: u32,
    pub decided: Option<GroupId>,
    pub inner: SnapshotLocal,
}

fn full_round(m: usize) -> BTreeSet<usize> {
    (1..=m).collect()
}

impl WriteScanLocal {
    pub fn new(input: GroupId, m: usize) -> Self {
        Self {
            view: [Val::Group(input)].into_iter().collect(),
            round_remaining: full_round(m),
            scan_pos: None,
            m,
        }
    }

    fn request(&self) -> StepRequest {
        match self.scan_pos {
            None => StepRequest::Write {
                payload: RegisterPayload::new(self.view.clone(), 0),
            },
            Some(local) => StepRequest::Read { local },
        }
    }

    fn apply_write(&mut self, local: usize) {
        self.round_remaining.remove(&local);
        if self.round_remaining.is_empty() {
            self.round_remaining = full_round(self.m);
        }
        self.scan_pos = Some(1);
    }

    fn apply_read(&mut self, payload: &RegisterPayload) {
        self.view.extend(payload.view.iter().copied());
        let pos = self.scan_pos.expect("read outside a scan");
        self.scan_pos = if pos < self.m { Some(pos + 1) } else { None };
    }
}

impl SnapshotLocal {
    pub fn new(initial: Val, n: usize) -> Self {
        Self {
            view: [initial].into_iter().collect(),
            level: 0,
            round_remaining: full_round(n),
            scan: None,
            n,
        }
    }

    /// The invocation is complete: level `N` reached, not mid-scan.
    pub fn invocation_complete(&self) -> bool {
        self.level as usize == self.n && self.scan.is_none()
    }

    fn request(&self, output: Option<Output>) -> StepRequest {
        if self.level as usize == self.n {
            return StepRequest::Output {
                output: output.expect("single-shot machine reached level N"),
            };
        }
        match &self.scan {
            None => StepRequest::Write {
                payload: RegisterPayload::new(self.view.clone(), self.level),
            },
            Some(scan) => StepRequest::Read { local: scan.pos },
        }
    }

    fn apply_write(&mut self, local: usize) {
        self.round_remaining.remove(&local);
        if self.round_remaining.is_empty() {
            self.round_remaining = full_round(self.n);
        }
        self.scan = Some(ScanState {
            pos: 1,
            outcome: ScanOutcome::Equal {
                min_level: u32::MAX,
            },
        });
    }

    /// Absorbs one read; returns true when this was the scan's final read,
    /// in which case the level rule has been applied.
    fn apply_read(&mut self, payload: &RegisterPayload) -> bool {
        let scan = self.scan.as_mut().expect("read outside a scan");
        // While the outcome is still Equal the view equals the scan-start
        // view, so comparing against it is the level rule's equality test.
        scan.outcome = match scan.outcome {
            ScanOutcome::Equal { min_level } if payload.view == self.view => ScanOutcome::Equal {
                min_level: min_level.min(payload.level),
            },
            _ => ScanOutcome::Reset,
        };
        self.view.extend(payload.view.iter().copied());
        if scan.pos < self.n {
            scan.pos += 1;
            return false;
        }
        // End of scan: read its own view everywhere -> min level plus one,
        // otherwise reset to 0.
        let scan = self.scan.take().expect("scan state vanished");
        self.level = match scan.outcome {
            ScanOutcome::Equal { min_level } => min_level + 1,
            ScanOutcome::Reset => 0,
        };
        true
    }
}

/// Starts a new invocation of the long-lived snapshot: level back to 0, the
/// new input added to the view, everything else (including the write-round
/// bookkeeping, so write fairness spans invocations) kept.
pub fn longlived_invoke(local: &mut SnapshotLocal, new_input: Val) -> Result<(), MachineError> {
    if !local.invocation_complete() {
        return Err(MachineError::MidInvocation {
            level: local.level,
            n: local.n as u32,
        });
    }
    local.level = 0;
    local.view.insert(new_input);
    Ok(())
}

/// Bar-Noy-Dolev style name from a snapshot: rank the caller's group in its
/// snapshot under ascending order; a snapshot of size `z` and rank `r` maps
/// to `(z-1)z/2 + r`. Size 1 reserves name 1, size 2 reserves 2..3, size 3
/// reserves 4..6, and so on.
pub fn rename_from_snapshot(snap: &BTreeSet<GroupId>, my_group: GroupId) -> Result<u64, MachineError> {
    let rank = snap
        .iter()
        .position(|&g| g == my_group)
        .ok_or(MachineError::NotInSnapshot(my_group))? as u64
        + 1;
    let z = snap.len() as u64;
    Ok((z - 1) * z / 2 + rank)
}

fn pairs_of(snap: &View) -> Result<Vec<(GroupId, u32)>, MachineError> {
    snap.iter()
        .map(|v| match v {
            Val::Stamped { value, ts } => Ok((*value, *ts)),
            other => Err(MachineError::NonPairValue(*other)),
        })
        .collect()
}

fn max_ts_by_value(snap: &View) -> Result<BTreeMap<GroupId, u32>, MachineError> {
    let mut best: BTreeMap<GroupId, u32> = BTreeMap::new();
    for (value, ts) in pairs_of(snap)? {
        let entry = best.entry(value).or_insert(ts);
        *entry = (*entry).max(ts);
    }
    if best.is_empty() {
        return Err(MachineError::EmptySnapshot);
    }
    Ok(best)
}

/// Leader of a snapshot of pairs: the value attaining the highest timestamp,
/// ties broken towards the smallest value.
fn leader(best: &BTreeMap<GroupId, u32>) -> (GroupId, u32) {
    let mut it = best.iter();
    let (&v0, &t0) = it.next().expect("nonempty");
    it.fold((v0, t0), |(bv, bt), (&v, &t)| {
        if t > bt {
            (v, t)
        } else {
            (bv, bt)
        }
    })
}

/// Decision rule: a value is decided when its highest timestamp leads every
/// other value's highest timestamp by at least 2. Values not present in the
/// snapshot compete from timestamp 0: a register covering can erase a
/// competitor's initial pair entirely, so a singleton snapshot must not
/// license a decision until the value has actually been raced two steps
/// ahead. A solo processor therefore decides after two reproposals.
pub fn consensus_decide(snap: &View) -> Result<Option<GroupId>, MachineError> {
    let best = max_ts_by_value(snap)?;
    let (v, t) = leader(&best);
    let competitor = best
        .iter()
        .filter(|(&w, _)| w != v)
        .map(|(_, &tw)| tw)
        .max()
        .unwrap_or(0);
    Ok((t >= competitor.saturating_add(2)).then_some(v))
}

/// Reproposal rule: adopt the value with the highest timestamp (ties towards
/// the smallest value) and a timestamp one above the highest seen.
pub fn consensus_repropose(snap: &View) -> Result<(GroupId, u32), MachineError> {
    let best = max_ts_by_value(snap)?;
    let (v, t) = leader(&best);
    Ok((v, t + 1))
}

impl ConsensusLocal {
    pub fn new(input: GroupId, n: usize) -> Self {
        Self {
            pref: input,
            ts: 0,
            decided: None,
            inner: SnapshotLocal::new(Val::Stamped { value: input, ts: 0 }, n),
        }
    }

    /// Consumes the output of the current long-lived snapshot invocation:
    /// decide if some value's timestamp lead is at least 2, otherwise adopt
    /// the leading value, bump the timestamp past it, and reinvoke.
    pub fn on_snapshot(&mut self, snap: &View) -> Result<(), MachineError> {
        if self.decided.is_some() {
            return Err(MachineError::AlreadyDecided);
        }
        match consensus_decide(snap)? {
            Some(v) => {
                self.decided = Some(v);
            }
            None => {
                let (pref, ts) = consensus_repropose(snap)?;
                debug_assert!(ts >= self.ts, "timestamps are monotone");
                self.pref = pref;
                self.ts = ts;
                longlived_invoke(
                    &mut self.inner,
                    Val::Stamped {
                        value: pref,
                        ts,
                    },
                )?;
            }
        }
        Ok(())
    }

    fn request(&self) -> StepRequest {
        if let Some(v) = self.decided {
            return StepRequest::Output {
                output: Output::Decision(v),
            };
        }
        debug_assert!(!self.inner.invocation_complete());
        self.inner.request(None)
    }

    fn apply_read(&mut self, payload: &RegisterPayload) {
        let completed = self.inner.apply_read(payload);
        if completed && self.inner.invocation_complete() {
            let snap = self.inner.view.clone();
            self.on_snapshot(&snap)
                .expect("own pair is always present");
        }
    }
}

impl MachineState {
    /// Canonicalizes the bookkeeping that can never matter again once the
    /// processor has output: the round-remaining set resets to a fresh
    /// round. Frozen processors never step, so states differing only in
    /// such dead bookkeeping are indistinguishable; collapsing them keeps
    /// the explorer's state space tight.
    pub fn freeze(&mut self) {
        match self {
            MachineState::WriteScan(l) => l.round_remaining = full_round(l.m),
            MachineState::Snapshot(l) | MachineState::Renaming(l) => {
                l.round_remaining = full_round(l.n);
            }
            MachineState::Consensus(c) => c.inner.round_remaining = full_round(c.inner.n),
        }
    }

    /// Designated initial state for a processor with the given input.
    pub fn initial(algorithm: Algorithm, input: GroupId, n: usize, m: usize) -> Self {
        match algorithm {
            Algorithm::WriteScan => MachineState::WriteScan(WriteScanLocal::new(input, m)),
            Algorithm::Snapshot => MachineState::Snapshot(SnapshotLocal::new(Val::Group(input), n)),
            Algorithm::Renaming => MachineState::Renaming(SnapshotLocal::new(Val::Group(input), n)),
            Algorithm::Consensus => MachineState::Consensus(ConsensusLocal::new(input, n)),
        }
    }

    /// Next action template. Deterministic given the local state except for
    /// the write target, which the scheduler picks from
    /// [`MachineState::write_candidates`].
    pub fn request(&self, input: GroupId) -> StepRequest {
        match self {
            MachineState::WriteScan(l) => l.request(),
            MachineState::Snapshot(l) => l.request(Some(Output::View(l.view.clone()))),
            MachineState::Renaming(l) => {
                let output = if l.level as usize == l.n {
                    let name = rename_from_snapshot(&group_view(&l.view), input)
                        .expect("own input is always in the view");
                    Some(Output::Name(name))
                } else {
                    None
                };
                l.request(output)
            }
            MachineState::Consensus(c) => c.request(),
        }
    }

    /// Local registers not yet written this round.
    pub fn write_candidates(&self) -> &BTreeSet<usize> {
        match self {
            MachineState::WriteScan(l) => &l.round_remaining,
            MachineState::Snapshot(l) | MachineState::Renaming(l) => &l.round_remaining,
            MachineState::Consensus(c) => &c.inner.round_remaining,
        }
    }

    pub fn apply_write(&mut self, local: usize) {
        match self {
            MachineState::WriteScan(l) => l.apply_write(local),
            MachineState::Snapshot(l) | MachineState::Renaming(l) => l.apply_write(local),
            MachineState::Consensus(c) => c.inner.apply_write(local),
        }
    }

    pub fn apply_read(&mut self, payload: &RegisterPayload) {
        match self {
            MachineState::WriteScan(l) => l.apply_read(payload),
            MachineState::Snapshot(l) | MachineState::Renaming(l) => {
                l.apply_read(payload);
            }
            MachineState::Consensus(c) => c.apply_read(payload),
        }
    }

    /// The machine's view (for consensus, the inner snapshot's view).
    pub fn view(&self) -> &View {
        match self {
            MachineState::WriteScan(l) => &l.view,
            MachineState::Snapshot(l) | MachineState::Renaming(l) => &l.view,
            MachineState::Consensus(c) => &c.inner.view,
        }
    }

    /// Current level, if the machine has one.
    pub fn level(&self) -> Option<u32> {
        match self {
            MachineState::WriteScan(_) => None,
            MachineState::Snapshot(l) | MachineState::Renaming(l) => Some(l.level),
            MachineState::Consensus(c) => Some(c.inner.level),
        }
    }

    /// Local indices already read in the scan currently in progress, or
    /// `None` when the machine is in its write phase.
    pub fn scanned_locals(&self) -> Option<std::ops::Range<usize>> {
        let pos = match self {
            MachineState::WriteScan(l) => l.scan_pos,
            MachineState::Snapshot(l) | MachineState::Renaming(l) => {
                l.scan.as_ref().map(|s| s.pos)
            }
            MachineState::Consensus(c) => c.inner.scan.as_ref().map(|s| s.pos),
        };
        pos.map(|p| 1..p)
    }
}

impl Canonical for MachineState {
    fn feed(&self, h: &mut Hasher) {
        match self {
            MachineState::WriteScan(l) => {
                h.byte(0);
                feed_view(h, &l.view);
                feed_locals(h, &l.round_remaining);
                h.u32(l.scan_pos.map_or(0, |p| p as u32));
                h.u32(l.m as u32);
            }
            MachineState::Snapshot(l) => {
                h.byte(1);
                l.feed(h);
            }
            MachineState::Renaming(l) => {
                h.byte(2);
                l.feed(h);
            }
            MachineState::Consensus(c) => {
                h.byte(3);
                h.u32(c.pref.0);
                h.u32(c.ts);
                match c.decided {
                    None => h.bool(false),
                    Some(v) => {
                        h.bool(true);
                        h.u32(v.0);
                    }
                }
                c.inner.feed(h);
            }
        }
    }
}

impl Canonical for SnapshotLocal {
    fn feed(&self, h: &mut Hasher) {
        feed_view(h, &self.view);
        h.u32(self.level);
        feed_locals(h, &self.round_remaining);
        match &self.scan {
            None => h.bool(false),
            Some(s) => {
                h.bool(true);
                h.u32(s.pos as u32);
                match s.outcome {
                    ScanOutcome::Equal { min_level } => {
                        h.byte(0);
                        h.u32(min_level);
                    }
                    ScanOutcome::Reset => h.byte(1),
                }
            }
        }
        h.u32(self.n as u32);
    }
}
