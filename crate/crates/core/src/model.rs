//! The fully-anonymous shared-memory model.
//!
//! `N > 1` processors run identical programs and communicate through `M > 0`
//! multi-writer multi-reader atomic registers. Registers carry no agreed-upon
//! numbering: each processor `p` addresses them through a private permutation
//! `perm_p`, fixed at initialization and unknown to the program, so an
//! instruction on local register `i` touches physical register
//! `perm_p[i]`. One write or one read is one atomic step; a machine's
//! end-of-scan local update is bundled with the scan's final read.
//!
//! All indices in this module (processors, local and physical registers) are
//! 1-based, matching the on-disk trace and script formats.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::digest::{Canonical, Digest, Hasher};
use crate::machines::{MachineState, StepRequest};
use crate::rng::SplitMix64;

/// Processor index, `1..=N`.
pub type ProcId = usize;

/// Group identifier, doubling as a processor input: group `i` is the set of
/// processors whose input is `i`.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(transparent)]
pub struct GroupId(pub u32);

impl std::fmt::Display for GroupId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// An element of a view: a plain group identifier for the write-scan,
/// snapshot and renaming machines, or a value-timestamp pair inside the
/// consensus machine's long-lived snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Val {
    Group(GroupId),
    Stamped { value: GroupId, ts: u32 },
}

impl Val {
    pub fn group(id: u32) -> Self {
        Val::Group(GroupId(id))
    }

    pub fn stamped(value: u32, ts: u32) -> Self {
        Val::Stamped {
            value: GroupId(value),
            ts,
        }
    }
}

// Plain groups serialize as bare integers, pairs as `[value, ts]`.
impl Serialize for Val {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Val::Group(g) => serializer.serialize_u32(g.0),
            Val::Stamped { value, ts } => (value.0, *ts).serialize(serializer),
        }
    }
}

impl<'de> Deserialize<'de> for Val {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Group(u32),
            Pair(u32, u32),
        }
        Ok(match Raw::deserialize(deserializer)? {
            Raw::Group(g) => Val::Group(GroupId(g)),
            Raw::Pair(v, ts) => Val::Stamped {
                value: GroupId(v),
                ts,
            },
        })
    }
}

impl Canonical for Val {
    fn feed(&self, h: &mut Hasher) {
        match self {
            Val::Group(g) => {
                h.byte(0);
                h.u32(g.0);
            }
            Val::Stamped { value, ts } => {
                h.byte(1);
                h.u32(value.0);
                h.u32(*ts);
            }
        }
    }
}

/// A set of values; canonical order is ascending.
pub type View = BTreeSet<Val>;

pub(crate) fn feed_view(h: &mut Hasher, view: &View) {
    h.u32(view.len() as u32);
    for v in view {
        v.feed(h);
    }
}

pub(crate) fn feed_locals(h: &mut Hasher, set: &BTreeSet<usize>) {
    h.u32(set.len() as u32);
    for v in set {
        h.u32(*v as u32);
    }
}

/// Extracts the plain group identifiers from a view. Value-timestamp pairs
/// (consensus) have no group projection and are skipped.
pub fn group_view(view: &View) -> BTreeSet<GroupId> {
    view.iter()
        .filter_map(|v| match v {
            Val::Group(g) => Some(*g),
            Val::Stamped { .. } => None,
        })
        .collect()
}

/// One processor's private wiring to the registers: `resolve(i)` is the
/// physical register addressed by the processor's local register number `i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Permutation {
    map: Vec<usize>,
}

impl Permutation {
    /// `map[i-1]` is the physical register for local index `i`; must be a
    /// bijection on `1..=M`.
    pub fn new(map: Vec<usize>) -> Result<Self, ConfigError> {
        let m = map.len();
        if m == 0 {
            return Err(ConfigError::NotABijection { map });
        }
        let mut seen = vec![false; m];
        for &phys in &map {
            if phys < 1 || phys > m || seen[phys - 1] {
                return Err(ConfigError::NotABijection { map });
            }
            seen[phys - 1] = true;
        }
        Ok(Self { map })
    }

    pub fn identity(m: usize) -> Self {
        Self {
            map: (1..=m).collect(),
        }
    }

    pub fn random(m: usize, rng: &mut SplitMix64) -> Self {
        let mut map: Vec<usize> = (1..=m).collect();
        rng.shuffle(&mut map);
        Self { map }
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Physical register addressed by local index `local` (both 1-based).
    pub fn resolve(&self, local: usize) -> Result<usize, StepError> {
        if local < 1 || local > self.map.len() {
            return Err(StepError::IndexOutOfRange {
                local,
                m: self.map.len(),
            });
        }
        Ok(self.map[local - 1])
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.map
    }
}

impl TryFrom<Vec<usize>> for Permutation {
    type Error = ConfigError;
    fn try_from(map: Vec<usize>) -> Result<Self, ConfigError> {
        Permutation::new(map)
    }
}

impl From<Permutation> for Vec<usize> {
    fn from(p: Permutation) -> Vec<usize> {
        p.map
    }
}

/// Payload of one shared register: a view plus the level used by the
/// snapshot-family machines. The write-scan machine carries no level and
/// always writes 0.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct RegisterPayload {
    pub view: View,
    pub level: u32,
}

impl RegisterPayload {
    pub fn new(view: View, level: u32) -> Self {
        Self { view, level }
    }
}

impl Canonical for RegisterPayload {
    fn feed(&self, h: &mut Hasher) {
        feed_view(h, &self.view);
        h.u32(self.level);
    }
}

/// One shared register plus simulator-only bookkeeping.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Register {
    pub payload: RegisterPayload,
    /// Index of the processor whose write the register currently holds.
    /// Invisible to machines and excluded from digests; implements the
    /// reads-from relation.
    #[serde(skip)]
    pub last_writer: Option<ProcId>,
}

impl Register {
    fn empty() -> Self {
        Self {
            payload: RegisterPayload::default(),
            last_writer: None,
        }
    }
}

/// A processor's write-once output.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Output {
    /// Snapshot view.
    View(View),
    /// Renaming name.
    Name(u64),
    /// Consensus decision.
    Decision(GroupId),
}

impl Canonical for Output {
    fn feed(&self, h: &mut Hasher) {
        match self {
            Output::View(v) => {
                h.byte(0);
                feed_view(h, v);
            }
            Output::Name(n) => {
                h.byte(1);
                h.u64(*n);
            }
            Output::Decision(g) => {
                h.byte(2);
                h.u32(g.0);
            }
        }
    }
}

/// An atomic step of a single processor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ActionKind {
    Write { local: usize, payload: RegisterPayload },
    Read { local: usize },
    Output { output: Output },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Action {
    pub actor: ProcId,
    #[serde(flatten)]
    pub kind: ActionKind,
}

/// The algorithm every processor runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    WriteScan,
    Snapshot,
    Renaming,
    Consensus,
}

impl Algorithm {
    /// The snapshot-family algorithms use exactly `N` registers.
    pub fn requires_m_equals_n(self) -> bool {
        !matches!(self, Algorithm::WriteScan)
    }
}

/// Permutations: given explicitly, or drawn from a seeded PRNG.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PermSpec {
    Explicit(Vec<Permutation>),
    Seed(u64),
}

/// How the machines are driven through an execution.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ScheduleSpec {
    Random {
        seed: u64,
        max_steps: usize,
    },
    Script {
        path: String,
    },
    Exhaustive {
        #[serde(default)]
        depth_bound: Option<usize>,
        #[serde(default)]
        ts_cap: Option<u32>,
    },
}

/// A complete run configuration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Config {
    pub n_processors: usize,
    pub n_registers: usize,
    pub algorithm: Algorithm,
    /// One input per processor; inputs double as group identifiers.
    pub inputs: Vec<GroupId>,
    pub perms: PermSpec,
    pub schedule: ScheduleSpec,
}

impl Config {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n_processors <= 1 {
            return Err(ConfigError::TooFewProcessors(self.n_processors));
        }
        if self.n_registers == 0 {
            return Err(ConfigError::NoRegisters);
        }
        if self.algorithm.requires_m_equals_n() && self.n_registers != self.n_processors {
            return Err(ConfigError::RegisterCountMismatch {
                algorithm: self.algorithm,
                n: self.n_processors,
                m: self.n_registers,
            });
        }
        if self.inputs.len() != self.n_processors {
            return Err(ConfigError::InputCountMismatch {
                n: self.n_processors,
                inputs: self.inputs.len(),
            });
        }
        // Group identifiers live in 1..N_T for the task's processor count,
        // which may exceed N; only the lower bound is checkable here.
        for &g in &self.inputs {
            if g.0 < 1 {
                return Err(ConfigError::InputOutOfRange { input: g });
            }
        }
        if let PermSpec::Explicit(perms) = &self.perms {
            if perms.len() != self.n_processors {
                return Err(ConfigError::PermCountMismatch {
                    n: self.n_processors,
                    perms: perms.len(),
                });
            }
            for p in perms {
                if p.len() != self.n_registers {
                    return Err(ConfigError::PermLengthMismatch {
                        m: self.n_registers,
                        len: p.len(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Materializes the permutations, drawing from the seeded PRNG if needed.
    pub fn resolved_perms(&self) -> Result<Vec<Permutation>, ConfigError> {
        self.validate()?;
        Ok(match &self.perms {
            PermSpec::Explicit(perms) => perms.clone(),
            PermSpec::Seed(seed) => {
                let mut rng = SplitMix64::new(*seed);
                (0..self.n_processors)
                    .map(|_| Permutation::random(self.n_registers, &mut rng))
                    .collect()
            }
        })
    }

    /// Groups induced by the inputs: group id -> members.
    pub fn groups(&self) -> BTreeMap<GroupId, BTreeSet<ProcId>> {
        let mut groups: BTreeMap<GroupId, BTreeSet<ProcId>> = BTreeMap::new();
        for (i, &g) in self.inputs.iter().enumerate() {
            groups.entry(g).or_default().insert(i + 1);
        }
        groups
    }
}

/// One processor's state: read-only input plus mutable machine-local state.
/// The write-once output lives in [`SystemState::outputs`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProcState {
    pub input: GroupId,
    pub machine: MachineState,
}

impl ProcState {
    pub fn request(&self) -> StepRequest {
        self.machine.request(self.input)
    }
}

impl Canonical for ProcState {
    fn feed(&self, h: &mut Hasher) {
        h.u32(self.input.0);
        self.machine.feed(h);
    }
}

/// The full state of the system. Values are immutable snapshots; every step
/// produces a successor state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemState {
    pub registers: Vec<Register>,
    pub procs: Vec<ProcState>,
    /// Fixed for the lifetime of the execution; excluded from digests.
    #[serde(skip)]
    pub perms: Vec<Permutation>,
    pub outputs: BTreeMap<ProcId, Output>,
}

impl SystemState {
    pub fn n(&self) -> usize {
        self.procs.len()
    }

    pub fn m(&self) -> usize {
        self.registers.len()
    }

    /// Physical register access, 1-based.
    pub fn register(&self, phys: usize) -> &Register {
        &self.registers[phys - 1]
    }

    pub fn proc(&self, p: ProcId) -> &ProcState {
        &self.procs[p - 1]
    }

    pub fn perm(&self, p: ProcId) -> &Permutation {
        &self.perms[p - 1]
    }

    pub fn terminated(&self, p: ProcId) -> bool {
        self.outputs.contains_key(&p)
    }

    pub fn all_terminated(&self) -> bool {
        self.outputs.len() == self.procs.len()
    }

    pub fn live_procs(&self) -> impl Iterator<Item = ProcId> + '_ {
        (1..=self.n()).filter(move |p| !self.terminated(*p))
    }

    /// Union of all register views; the "memory contents" used by the
    /// atomicity witness search.
    pub fn memory_union(&self) -> View {
        let mut u = View::new();
        for r in &self.registers {
            u.extend(r.payload.view.iter().copied());
        }
        u
    }

    /// Canonical machine-visible digest. Registers in physical order, views
    /// ascending, machine fields in declared order, outputs ascending.
    /// Last-writer bookkeeping and permutations are excluded.
    pub fn digest(&self) -> Digest {
        let mut h = Hasher::new();
        h.u32(self.m() as u32);
        h.u32(self.n() as u32);
        for r in &self.registers {
            r.payload.feed(&mut h);
        }
        for p in &self.procs {
            p.feed(&mut h);
        }
        h.u32(self.outputs.len() as u32);
        for (p, out) in &self.outputs {
            h.u32(*p as u32);
            out.feed(&mut h);
        }
        h.finish()
    }

    /// Highest timestamp present anywhere in the state (consensus runs).
    pub fn max_timestamp(&self) -> u32 {
        let mut best = 0;
        let views = self
            .registers
            .iter()
            .map(|r| &r.payload.view)
            .chain(self.procs.iter().map(|p| p.machine.view()));
        for view in views {
            for v in view {
                if let Val::Stamped { ts, .. } = v {
                    best = best.max(*ts);
                }
            }
        }
        for p in &self.procs {
            if let MachineState::Consensus(c) = &p.machine {
                best = best.max(c.ts);
            }
        }
        best
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("the model requires N > 1 processors, got {0}")]
    TooFewProcessors(usize),
    #[error("the model requires M > 0 registers")]
    NoRegisters,
    #[error("{algorithm:?} uses exactly N registers, got N={n}, M={m}")]
    RegisterCountMismatch {
        algorithm: Algorithm,
        n: usize,
        m: usize,
    },
    #[error("expected {n} inputs, got {inputs}")]
    InputCountMismatch { n: usize, inputs: usize },
    #[error("input {input} must be at least 1")]
    InputOutOfRange { input: GroupId },
    #[error("expected {n} permutations, got {perms}")]
    PermCountMismatch { n: usize, perms: usize },
    #[error("permutation has length {len}, expected {m}")]
    PermLengthMismatch { m: usize, len: usize },
    #[error("not a bijection on 1..={}: {map:?}", map.len())]
    NotABijection { map: Vec<usize> },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StepError {
    #[error("no such processor {0}")]
    NoSuchProcessor(ProcId),
    #[error("processor {0} has already produced its output")]
    Terminated(ProcId),
    #[error("local register index {local} outside 1..={m}")]
    IndexOutOfRange { local: usize, m: usize },
    #[error("action not enabled for processor {actor}: {reason}")]
    NotEnabled { actor: ProcId, reason: String },
}

/// Initial system state: every register holds the default payload, every
/// machine is in its designated initial state seeded with its input, and no
/// outputs exist.
pub fn init_system(config: &Config) -> Result<SystemState, ConfigError> {
    config.validate()?;
    let perms = config.resolved_perms()?;
    let registers = vec![Register::empty(); config.n_registers];
    let procs = config
        .inputs
        .iter()
        .map(|&input| ProcState {
            input,
            machine: MachineState::initial(
                config.algorithm,
                input,
                config.n_processors,
                config.n_registers,
            ),
        })
        .collect();
    Ok(SystemState {
        registers,
        procs,
        perms,
        outputs: BTreeMap::new(),
    })
}

/// Outcome of one applied step.
#[derive(Debug, Clone)]
pub struct StepEffect {
    pub state: SystemState,
    /// Physical register touched by a read or write.
    pub physical: Option<usize>,
    /// For a read: who the actor read from (the register's last writer).
    pub reads_from: Option<Option<ProcId>>,
    /// Payload observed by a read.
    pub read_payload: Option<RegisterPayload>,
}

fn not_enabled(actor: ProcId, reason: impl Into<String>) -> StepError {
    StepError::NotEnabled {
        actor,
        reason: reason.into(),
    }
}

/// Applies one atomic step, producing the successor state.
///
/// The action must be exactly what the actor's machine requests: same kind,
/// same payload, and for writes a target the machine's fairness bookkeeping
/// still allows this round.
pub fn apply_step(state: &SystemState, action: &Action) -> Result<StepEffect, StepError> {
    let p = action.actor;
    if p < 1 || p > state.n() {
        return Err(StepError::NoSuchProcessor(p));
    }
    if state.terminated(p) {
        return Err(StepError::Terminated(p));
    }
    let request = state.proc(p).request();
    match (&action.kind, request) {
        (ActionKind::Write { local, payload }, StepRequest::Write { payload: wanted }) => {
            if *payload != wanted {
                return Err(not_enabled(p, "write payload differs from machine state"));
            }
            if !state.proc(p).machine.write_candidates().contains(local) {
                return Err(not_enabled(
                    p,
                    format!("register {local} already written this round"),
                ));
            }
            let phys = state.perm(p).resolve(*local)?;
            let mut next = state.clone();
            {
                let reg = &mut next.registers[phys - 1];
                reg.payload = payload.clone();
                reg.last_writer = Some(p);
            }
            next.procs[p - 1].machine.apply_write(*local);
            Ok(StepEffect {
                state: next,
                physical: Some(phys),
                reads_from: None,
                read_payload: None,
            })
        }
        (ActionKind::Read { local }, StepRequest::Read { local: wanted }) => {
            if *local != wanted {
                return Err(not_enabled(
                    p,
                    format!("scan is positioned at register {wanted}, not {local}"),
                ));
            }
            let phys = state.perm(p).resolve(*local)?;
            let payload = state.register(phys).payload.clone();
            let from = state.register(phys).last_writer;
            let mut next = state.clone();
            next.procs[p - 1].machine.apply_read(&payload);
            Ok(StepEffect {
                state: next,
                physical: Some(phys),
                reads_from: Some(from),
                read_payload: Some(payload),
            })
        }
        (ActionKind::Output { output }, StepRequest::Output { output: wanted }) => {
            if *output != wanted {
                return Err(not_enabled(p, "output differs from machine state"));
            }
            let mut next = state.clone();
            next.outputs.insert(p, output.clone());
            next.procs[p - 1].machine.freeze();
            Ok(StepEffect {
                state: next,
                physical: None,
                reads_from: None,
                read_payload: None,
            })
        }
        (kind, req) => Err(not_enabled(
            p,
            format!("machine requests {req:?}, action is {kind:?}"),
        )),
    }
}

/// Builds the action the actor's machine requests next. `write_target`
/// overrides the nondeterministic write pick; the default is the lowest
/// local index not yet written this round.
pub fn next_action(
    state: &SystemState,
    actor: ProcId,
    write_target: Option<usize>,
) -> Result<Action, StepError> {
    if actor < 1 || actor > state.n() {
        return Err(StepError::NoSuchProcessor(actor));
    }
    if state.terminated(actor) {
        return Err(StepError::Terminated(actor));
    }
    let kind = match state.proc(actor).request() {
        StepRequest::Write { payload } => {
            let candidates = state.proc(actor).machine.write_candidates();
            let local = match write_target {
                Some(l) => {
                    if !candidates.contains(&l) {
                        return Err(not_enabled(
                            actor,
                            format!("register {l} already written this round"),
                        ));
                    }
                    l
                }
                None => *candidates
                    .first()
                    .expect("round-remaining set is never empty"),
            };
            ActionKind::Write { local, payload }
        }
        StepRequest::Read { local } => {
            if write_target.is_some() {
                return Err(not_enabled(actor, "write target given for a read step"));
            }
            ActionKind::Read { local }
        }
        StepRequest::Output { output } => {
            if write_target.is_some() {
                return Err(not_enabled(actor, "write target given for an output step"));
            }
            ActionKind::Output { output }
        }
    };
    Ok(Action { actor, kind })
}

/// Convenience: build and apply the actor's next action.
pub fn step(
    state: &SystemState,
    actor: ProcId,
    write_target: Option<usize>,
) -> Result<(Action, StepEffect), StepError> {
    let action = next_action(state, actor, write_target)?;
    let effect = apply_step(state, &action)?;
    Ok((action, effect))
}
