//! Bit-packed exploration for the group-valued algorithms.
//!
//! For write-scan, snapshot and renaming at desk scale (N, M <= 8, group
//! identifiers <= 8) the machine-visible state fits in one packed word:
//! views become bitmasks, levels and scan positions a few bits each. The
//! transition rules here mirror [`crate::machines`] operation for
//! operation; `generic_matches_fast_exploration` in the test suite holds
//! the two paths to identical state, edge and terminal counts.
//!
//! Consensus (value-timestamp pairs), symmetry reduction, depth bounds,
//! reservoir sampling and graph sinks stay on the generic path.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::hash::{BuildHasherDefault, Hasher as StdHasher};

use crate::model::{init_system, next_action, Action, Algorithm, Config, GroupId, Output, Val, View};
use crate::schedule::{record_actions, Lasso};
use crate::trace::Trace;

use super::{
    DurabilityViolation, ExploreError, ExploreOptions, Exploration, PathAtomicityWitness,
    PickPolicy, WaitFree,
};

const MAXN: usize = 8;

/// Multiply-xorshift hasher for already-random packed keys.
#[derive(Default)]
pub(super) struct KeyHasher(u64);

impl StdHasher for KeyHasher {
    fn finish(&self) -> u64 {
        self.0
    }

    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.write_u64(b as u64);
        }
    }

    fn write_u64(&mut self, v: u64) {
        let mut x = self.0 ^ v.wrapping_mul(0x9e3779b97f4a7c15);
        x ^= x >> 29;
        x = x.wrapping_mul(0xbf58476d1ce4e5b9);
        x ^= x >> 32;
        self.0 = x;
    }
}

type KeySet = HashSet<u64, BuildHasherDefault<KeyHasher>>;
type KeyMap<V> = HashMap<u64, V, BuildHasherDefault<KeyHasher>>;

/// Scan outcome encoding: 0 = reset, 1 = equal with no read yet, k+2 =
/// equal with minimum level k.
const OUTCOME_RESET: u8 = 0;
const OUTCOME_FRESH: u8 = 1;

#[derive(Clone, Copy, PartialEq, Eq)]
struct FState {
    reg_view: [u8; MAXN],
    reg_level: [u8; MAXN],
    view: [u8; MAXN],
    level: [u8; MAXN],
    remaining: [u8; MAXN],
    /// 0 = write phase, else next local index to read.
    pos: [u8; MAXN],
    outcome: [u8; MAXN],
    /// 0 = no output, else encoded output (view mask or name).
    output: [u8; MAXN],
    out_count: u8,
}

/// One scheduling decision: which processor steps and, for writes, the
/// local register picked.
#[derive(Clone, Copy, Debug)]
struct Slim {
    actor: u8, // 0-based
    kind: SlimKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum SlimKind {
    Write { local: u8 },
    Read,
    Output,
}

struct Packing {
    group_bits: u32,
    level_bits: u32,
    pos_bits: u32,
    outcome_bits: u32,
    output_bits: u32,
    total_bits: u32,
}

fn bits_for(max_value: u64) -> u32 {
    64 - max_value.leading_zeros()
}

impl Packing {
    fn plan(config: &Config) -> Option<Packing> {
        let n = config.n_processors;
        let m = config.n_registers;
        if n > MAXN || m > MAXN {
            return None;
        }
        let max_group = config.inputs.iter().map(|g| g.0).max().unwrap_or(0);
        if max_group > 8 {
            return None;
        }
        let group_bits = u32::from(max_group as u8) as u64;
        let group_bits = group_bits.max(1) as u32; // mask width = max id
        let level_bits = bits_for(n as u64);
        let pos_bits = bits_for(m as u64);
        let outcome_bits = bits_for(n as u64 + 1);
        // Outputs are a function of the frozen view, so one presence bit
        // per processor suffices.
        let output_bits = match config.algorithm {
            Algorithm::WriteScan => 0,
            Algorithm::Snapshot | Algorithm::Renaming => 1,
            Algorithm::Consensus => return None,
        };
        let total_bits = (m as u32) * (group_bits + level_bits)
            + (n as u32) * (group_bits + level_bits + m as u32 + pos_bits + outcome_bits)
            + (n as u32) * output_bits;
        if total_bits > 64 {
            return None;
        }
        Some(Packing {
            group_bits,
            level_bits,
            pos_bits,
            outcome_bits,
            output_bits,
            total_bits,
        })
    }
}

pub(super) struct FastExplorer {
    config: Config,
    n: usize,
    m: usize,
    algorithm: Algorithm,
    /// 1-based local -> 1-based physical, per processor.
    perm: [[u8; MAXN]; MAXN],
    /// Group id per processor.
    input: [u8; MAXN],
    packing: Packing,
}

/// Whether this configuration is eligible for the packed path under the
/// given options.
pub(super) fn eligible(config: &Config, options: &ExploreOptions) -> bool {
    !options.force_generic
        && !options.symmetry
        && options.max_depth.is_none()
        && options.sample_target == 0
        && config.algorithm != Algorithm::Consensus
        && Packing::plan(config).is_some()
}

impl FastExplorer {
    pub(super) fn new(config: &Config) -> Result<FastExplorer, ExploreError> {
        let packing = Packing::plan(config).expect("eligibility checked");
        let perms = config.resolved_perms()?;
        let mut perm = [[0u8; MAXN]; MAXN];
        for (p, table) in perms.iter().enumerate() {
            for (i, &phys) in table.as_slice().iter().enumerate() {
                perm[p][i] = phys as u8;
            }
        }
        let mut input = [0u8; MAXN];
        for (p, g) in config.inputs.iter().enumerate() {
            input[p] = g.0 as u8;
        }
        Ok(FastExplorer {
            n: config.n_processors,
            m: config.n_registers,
            algorithm: config.algorithm,
            perm,
            input,
            packing,
            config: config.clone(),
        })
    }

    fn initial(&self) -> FState {
        let mut s = FState {
            reg_view: [0; MAXN],
            reg_level: [0; MAXN],
            view: [0; MAXN],
            level: [0; MAXN],
            remaining: [0; MAXN],
            pos: [0; MAXN],
            outcome: [0; MAXN],
            output: [0; MAXN],
            out_count: 0,
        };
        let full = ((1u16 << self.m) - 1) as u8;
        for p in 0..self.n {
            s.view[p] = 1 << (self.input[p] - 1);
            s.remaining[p] = full;
        }
        s
    }

    fn pack(&self, s: &FState) -> u64 {
        let pk = &self.packing;
        let mut acc = 0u64;
        let mut push = |value: u64, bits: u32| {
            if bits > 0 {
                acc = (acc << bits) | value;
            }
        };
        for r in 0..self.m {
            push(s.reg_view[r] as u64, pk.group_bits);
            push(s.reg_level[r] as u64, pk.level_bits);
        }
        for p in 0..self.n {
            push(s.view[p] as u64, pk.group_bits);
            push(s.level[p] as u64, pk.level_bits);
            push(s.remaining[p] as u64, self.m as u32);
            push(s.pos[p] as u64, pk.pos_bits);
            push(s.outcome[p] as u64, pk.outcome_bits);
            push(s.output[p] as u64, pk.output_bits);
        }
        debug_assert!(pk.total_bits <= 64);
        acc
    }

    /// Inverse of [`FastExplorer::pack`].
    fn unpack(&self, key: u64) -> FState {
        let pk = &self.packing;
        let mut bits_used = 0u32;
        let mut fields: Vec<(u32, u8)> = Vec::new(); // (width, value) in pack order
        // Recompute the widths in pack order, then peel from the top.
        let mut widths: Vec<u32> = Vec::new();
        for _ in 0..self.m {
            widths.push(pk.group_bits);
            widths.push(pk.level_bits);
        }
        for _ in 0..self.n {
            widths.push(pk.group_bits);
            widths.push(pk.level_bits);
            widths.push(self.m as u32);
            widths.push(pk.pos_bits);
            widths.push(pk.outcome_bits);
            widths.push(pk.output_bits);
        }
        let total: u32 = widths.iter().sum();
        for &w in &widths {
            bits_used += w;
            let value = if w == 0 {
                0
            } else {
                ((key >> (total - bits_used)) & ((1u64 << w) - 1)) as u8
            };
            fields.push((w, value));
        }
        let mut s = FState {
            reg_view: [0; MAXN],
            reg_level: [0; MAXN],
            view: [0; MAXN],
            level: [0; MAXN],
            remaining: [0; MAXN],
            pos: [0; MAXN],
            outcome: [0; MAXN],
            output: [0; MAXN],
            out_count: 0,
        };
        let mut it = fields.into_iter().map(|(_, v)| v);
        for r in 0..self.m {
            s.reg_view[r] = it.next().unwrap();
            s.reg_level[r] = it.next().unwrap();
        }
        for p in 0..self.n {
            s.view[p] = it.next().unwrap();
            s.level[p] = it.next().unwrap();
            s.remaining[p] = it.next().unwrap();
            s.pos[p] = it.next().unwrap();
            s.outcome[p] = it.next().unwrap();
            s.output[p] = it.next().unwrap();
            s.out_count += (s.output[p] != 0) as u8;
        }
        s
    }

    /// Monotone progress measure: processor views only grow and outputs
    /// only accumulate, so no step decreases `(sum of view sizes, output
    /// count)`. Every cycle therefore stays within one measure stratum, and
    /// a completed stratum's visited set can be discarded.
    fn measure(&self, s: &FState) -> u16 {
        let sum: u32 = (0..self.n).map(|p| s.view[p].count_ones()).sum();
        ((sum as u16) << 4) | s.out_count as u16
    }

    /// Expands the packed state back into the generic representation (for
    /// digests in reports).
    fn to_rich(&self, s: &FState) -> crate::model::SystemState {
        use crate::machines::{MachineState, ScanOutcome, ScanState, SnapshotLocal, WriteScanLocal};
        use crate::model::{ProcState, Register, RegisterPayload};
        let registers = (0..self.m)
            .map(|r| Register {
                payload: RegisterPayload::new(self.view_of_mask(s.reg_view[r]), s.reg_level[r] as u32),
                last_writer: None,
            })
            .collect();
        let procs = (0..self.n)
            .map(|p| {
                let view = self.view_of_mask(s.view[p]);
                let remaining: std::collections::BTreeSet<usize> = (0..self.m)
                    .filter(|b| s.remaining[p] & (1 << b) != 0)
                    .map(|b| b + 1)
                    .collect();
                let scan = (s.pos[p] > 0).then(|| ScanState {
                    pos: s.pos[p] as usize,
                    outcome: match s.outcome[p] {
                        OUTCOME_RESET => ScanOutcome::Reset,
                        OUTCOME_FRESH => ScanOutcome::Equal { min_level: u32::MAX },
                        enc => ScanOutcome::Equal { min_level: enc as u32 - 2 },
                    },
                });
                let machine = match self.algorithm {
                    Algorithm::WriteScan => MachineState::WriteScan(WriteScanLocal {
                        view: view.clone(),
                        round_remaining: remaining,
                        scan_pos: (s.pos[p] > 0).then_some(s.pos[p] as usize),
                        m: self.m,
                    }),
                    Algorithm::Snapshot | Algorithm::Renaming => {
                        let local = SnapshotLocal {
                            view: view.clone(),
                            level: s.level[p] as u32,
                            round_remaining: remaining,
                            scan,
                            n: self.n,
                        };
                        if self.algorithm == Algorithm::Snapshot {
                            MachineState::Snapshot(local)
                        } else {
                            MachineState::Renaming(local)
                        }
                    }
                    Algorithm::Consensus => unreachable!(),
                };
                ProcState {
                    input: GroupId(self.input[p] as u32),
                    machine,
                }
            })
            .collect();
        let outputs = (0..self.n)
            .filter(|&p| s.output[p] != 0)
            .map(|p| (p + 1, self.output_of(s, p)))
            .collect();
        crate::model::SystemState {
            registers,
            procs,
            perms: self.config.resolved_perms().expect("validated"),
            outputs,
        }
    }

    fn enabled(&self, s: &FState, picks: PickPolicy, actions: &mut Vec<Slim>) {
        actions.clear();
        for p in 0..self.n {
            if s.output[p] != 0 {
                continue;
            }
            if self.algorithm != Algorithm::WriteScan && s.level[p] as usize == self.n {
                actions.push(Slim {
                    actor: p as u8,
                    kind: SlimKind::Output,
                });
            } else if s.pos[p] == 0 {
                let mut rem = s.remaining[p];
                while rem != 0 {
                    let local = rem.trailing_zeros() as u8 + 1;
                    rem &= rem - 1;
                    actions.push(Slim {
                        actor: p as u8,
                        kind: SlimKind::Write { local },
                    });
                    if picks == PickPolicy::DefaultOnly {
                        break;
                    }
                }
            } else {
                actions.push(Slim {
                    actor: p as u8,
                    kind: SlimKind::Read,
                });
            }
        }
    }

    /// The output a terminated processor produced, derived from its frozen
    /// view; only a presence bit is stored in the packed state.
    fn output_of(&self, s: &FState, p: usize) -> Output {
        match self.algorithm {
            Algorithm::Snapshot => Output::View(self.view_of_mask(s.view[p])),
            Algorithm::Renaming => {
                let mask = s.view[p];
                let own = 1u8 << (self.input[p] - 1);
                let z = mask.count_ones() as u64;
                let rank = (mask & (own - 1)).count_ones() as u64 + 1;
                Output::Name((z - 1) * z / 2 + rank)
            }
            _ => unreachable!("write-scan never outputs"),
        }
    }

    /// Mirrors `apply_step` plus the machine transition rules.
    fn apply(&self, s: &FState, a: Slim) -> FState {
        let mut t = *s;
        let p = a.actor as usize;
        match a.kind {
            SlimKind::Write { local } => {
                let phys = self.perm[p][local as usize - 1] as usize - 1;
                t.reg_view[phys] = s.view[p];
                t.reg_level[phys] = s.level[p];
                t.remaining[p] &= !(1 << (local - 1));
                if t.remaining[p] == 0 {
                    t.remaining[p] = ((1u16 << self.m) - 1) as u8;
                }
                t.pos[p] = 1;
                t.outcome[p] = OUTCOME_FRESH;
            }
            SlimKind::Read => {
                let local = s.pos[p] as usize;
                let phys = self.perm[p][local - 1] as usize - 1;
                let pl_view = s.reg_view[phys];
                let pl_level = s.reg_level[phys];
                if self.algorithm != Algorithm::WriteScan {
                    t.outcome[p] = if s.outcome[p] == OUTCOME_RESET || pl_view != s.view[p] {
                        OUTCOME_RESET
                    } else if s.outcome[p] == OUTCOME_FRESH {
                        pl_level + 2
                    } else {
                        s.outcome[p].min(pl_level + 2)
                    };
                }
                t.view[p] |= pl_view;
                if (local) < self.m {
                    t.pos[p] += 1;
                } else {
                    t.pos[p] = 0;
                    if self.algorithm != Algorithm::WriteScan {
                        t.level[p] = match t.outcome[p] {
                            OUTCOME_RESET => 0,
                            enc => (enc - 2) + 1,
                        };
                        t.outcome[p] = 0;
                    }
                }
            }
            SlimKind::Output => {
                t.output[p] = 1;
                // Dead bookkeeping: a frozen processor never steps again.
                t.remaining[p] = ((1u16 << self.m) - 1) as u8;
                t.out_count += 1;
            }
        }
        t
    }

    fn view_of_mask(&self, mask: u8) -> View {
        (0..8)
            .filter(|b| mask & (1 << b) != 0)
            .map(|b| Val::Group(GroupId(b as u32 + 1)))
            .collect()
    }

    fn assignment_of(&self, s: &FState) -> std::collections::BTreeMap<usize, Output> {
        (0..self.n)
            .filter(|&p| s.output[p] != 0)
            .map(|p| (p + 1, self.output_of(s, p)))
            .collect()
    }

    /// Same verdict as [`durably_stored`] with `W` = the outputting
    /// processor's view mask and `Q` = all processors.
    fn durable_mask(&self, s: &FState, w: u8) -> bool {
        let mut r_w = 0u8;
        for r in 0..self.m {
            if s.reg_view[r] & w == w {
                r_w |= 1 << r;
            }
        }
        let mut evictors = 0u32;
        for q in 0..self.n {
            if s.view[q] & w == w {
                continue;
            }
            if s.pos[q] > 0 {
                let mut read_phys = 0u8;
                for local in 1..s.pos[q] {
                    read_phys |= 1 << (self.perm[q][local as usize - 1] - 1);
                }
                if r_w & !read_phys != 0 {
                    continue; // an R_W register is still ahead of its scan
                }
            }
            evictors += 1;
        }
        r_w.count_ones() > evictors
    }

    /// Reconstructs the rich trace of a slim action path from the initial
    /// state.
    fn rebuild_trace(&self, path: &[Slim]) -> Result<Trace, ExploreError> {
        let initial = init_system(&self.config)?;
        let mut actions: Vec<Action> = Vec::with_capacity(path.len());
        let mut state = initial;
        for slim in path {
            let target = match slim.kind {
                SlimKind::Write { local } => Some(local as usize),
                _ => None,
            };
            let action = next_action(&state, slim.actor as usize + 1, target)?;
            state = crate::model::apply_step(&state, &action)?.state;
            actions.push(action);
        }
        Ok(record_actions(&self.config, &actions)?)
    }

    /// Threshold below which the plain DFS (with path-dependent features)
    /// is used directly; larger exhaustive runs go through the stratified
    /// sweep, with a capped DFS side pass when a non-atomicity witness is
    /// wanted.
    const DFS_STATE_THRESHOLD: usize = 30_000_000;
    const WITNESS_SEARCH_CAP: usize = 15_000_000;

    pub(super) fn run(&self, options: &ExploreOptions) -> Result<Exploration, ExploreError> {
        if options.stop_on_cycle || options.max_states <= Self::DFS_STATE_THRESHOLD {
            return self.run_dfs(options, false);
        }
        let mut result = self.run_sweep(options)?;
        if options.find_atomicity_witness && self.algorithm == Algorithm::Snapshot {
            result.atomicity_witness =
                self.find_witness_restricted(Self::WITNESS_SEARCH_CAP)?;
        }
        Ok(result)
    }

    fn run_dfs(
        &self,
        options: &ExploreOptions,
        stop_on_witness: bool,
    ) -> Result<Exploration, ExploreError> {
        let track_atomicity =
            options.find_atomicity_witness && self.algorithm == Algorithm::Snapshot;
        let check_durability = options.check_durability
            && matches!(self.algorithm, Algorithm::Snapshot | Algorithm::Renaming);

        let mut result = Exploration {
            config: self.config.clone(),
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

        struct Frame {
            state: FState,
            key: u64,
            actions: Vec<Slim>,
            next: usize,
            union: u8,
            incoming: Option<Slim>,
        }

        let initial = self.initial();
        let initial_key = self.pack(&initial);
        let mut visited = KeySet::default();
        let mut gray = KeyMap::<u32>::default();
        visited.insert(initial_key);
        result.states = 1;

        let union0 = initial.reg_view[..self.m].iter().fold(0, |a, b| a | b);
        let mut root_actions = Vec::new();
        self.enabled(&initial, options.pick_policy, &mut root_actions);
        gray.insert(initial_key, 0);
        let mut stack: Vec<Frame> = vec![Frame {
            state: initial,
            key: initial_key,
            actions: root_actions,
            next: 0,
            union: union0,
            incoming: None,
        }];
        let mut cycle: Option<(u32, Slim, Vec<Slim>)> = None;
        let mut scratch_actions: Vec<Slim> = Vec::new();

        let progress = std::env::var_os("ANONSHM_PROGRESS").is_some();
        while !stack.is_empty() {
            if progress && result.states % (1 << 24) == 0 {
                eprintln!(
                    "progress: states={} edges={} depth={} stack={}",
                    result.states,
                    result.edges,
                    result.max_depth_seen,
                    stack.len()
                );
            }
            if result.states >= options.max_states {
                result.truncated = true;
                break;
            }
            let top = stack.last_mut().expect("nonempty");
            if top.next >= top.actions.len() {
                let frame = stack.pop().expect("nonempty");
                gray.remove(&frame.key);
                continue;
            }
            let slim = top.actions[top.next];
            top.next += 1;
            let pre_level = top.state.level[slim.actor as usize];
            let succ = self.apply(&top.state, slim);
            let key = self.pack(&succ);
            result.edges += 1;

            // A non-atomicity witness is decided right at the output edge:
            // the prefix of this DFS path is the execution, and the match
            // window is exactly the states on the stack.
            if track_atomicity && result.atomicity_witness.is_none() {
                if let SlimKind::Output = slim.kind {
                    let w = succ.view[slim.actor as usize];
                    if !stack.iter().any(|f| f.union == w) {
                        let trace_actions: Vec<Slim> = stack
                            .iter()
                            .filter_map(|f| f.incoming)
                            .chain([slim])
                            .collect();
                        result.atomicity_witness = Some(PathAtomicityWitness {
                            actor: slim.actor as usize + 1,
                            output_view: self.view_of_mask(w),
                            trace: self.rebuild_trace(&trace_actions)?,
                        });
                        if stop_on_witness {
                            result.truncated = true;
                            break;
                        }
                    }
                }
            }

            if check_durability
                && slim.kind == SlimKind::Read
                && succ.level[slim.actor as usize] as usize == self.n
                && (pre_level as usize) != self.n
            {
                let p = slim.actor as usize;
                let w = succ.view[p];
                if !self.durable_mask(&succ, w) {
                    let trace_actions: Vec<Slim> = stack
                        .iter()
                        .filter_map(|f| f.incoming)
                        .chain([slim])
                        .collect();
                    let trace = self.rebuild_trace(&trace_actions)?;
                    result.durability_violations.push(DurabilityViolation {
                        actor: p + 1,
                        output_view: self.view_of_mask(w),
                        state_digest: trace.final_digest(),
                    });
                }
            }

            if let Some(&pos) = gray.get(&key) {
                if cycle.is_none() {
                    let path: Vec<Slim> = stack.iter().filter_map(|f| f.incoming).collect();
                    cycle = Some((pos, slim, path));
                }
                if options.stop_on_cycle {
                    break;
                }
                continue;
            }
            if !visited.insert(key) {
                continue;
            }
            result.states += 1;
            let depth = stack.len();
            result.max_depth_seen = result.max_depth_seen.max(depth);

            self.enabled(&succ, options.pick_policy, &mut scratch_actions);
            let union = succ.reg_view[..self.m].iter().fold(0, |a, b| a | b);

            if scratch_actions.is_empty() {
                result.terminal_count += 1;
                result.terminal_assignments.insert(self.assignment_of(&succ));
                continue;
            }

            gray.insert(key, stack.len() as u32);
            stack.push(Frame {
                state: succ,
                key,
                actions: std::mem::take(&mut scratch_actions),
                next: 0,
                union,
                incoming: Some(slim),
            });
        }

        result.wait_free = match (cycle, result.truncated) {
            (Some((pos, back, path)), _) => {
                let mut actions = path;
                actions.push(back);
                let mut trace = self.rebuild_trace(&actions)?;
                trace.cycle_start = Some(pos as usize);
                let lasso = Lasso::analyze(trace)?;
                WaitFree::Violated {
                    witness: Some(Box::new(lasso)),
                }
            }
            (None, false) => WaitFree::Holds,
            (None, true) => WaitFree::Indeterminate,
        };
        Ok(result)
    }

    /// Exact per-candidate non-atomicity witness search. For a candidate
    /// output set `I`, every state whose memory union equals `I` is pruned;
    /// any path in the pruned graph reaching an output of `I` is an
    /// execution in which the memory never contained exactly `I` at any
    /// prefix time. Exhausting the pruned graph for a candidate proves no
    /// such execution exists for it. All write-target picks are branched.
    pub(super) fn find_witness_restricted(
        &self,
        per_candidate_cap: usize,
    ) -> Result<Option<PathAtomicityWitness>, ExploreError> {
        let universe: u8 = (0..self.n).fold(0, |a, p| a | (1 << (self.input[p] - 1)));
        // An output equal to the whole input universe cannot be a witness:
        // its final scan reads the universe in some register, and at that
        // instant the union is exactly the universe. Pairs are the likely
        // witnesses; try larger candidates first.
        let mut candidates: Vec<u8> = (1..universe).filter(|m| m & universe == *m).collect();
        candidates.sort_by_key(|m| std::cmp::Reverse(m.count_ones()));

        struct Frame {
            state: FState,
            actions: Vec<Slim>,
            next: usize,
            incoming: Option<Slim>,
        }

        let progress = std::env::var_os("ANONSHM_PROGRESS").is_some();
        for target in candidates {
            let mut visited = KeySet::default();
            let initial = self.initial();
            visited.insert(self.pack(&initial));
            let mut actions = Vec::new();
            self.enabled(&initial, PickPolicy::All, &mut actions);
            let mut stack = vec![Frame {
                state: initial,
                actions,
                next: 0,
                incoming: None,
            }];
            let mut scratch: Vec<Slim> = Vec::new();
            'dfs: while let Some(top) = stack.last_mut() {
                if visited.len() >= per_candidate_cap {
                    if progress {
                        eprintln!("witness search: candidate {target:#05b} capped at {} states", visited.len());
                    }
                    break 'dfs;
                }
                if top.next >= top.actions.len() {
                    stack.pop();
                    continue;
                }
                let slim = top.actions[top.next];
                top.next += 1;
                let succ = self.apply(&top.state, slim);
                if let SlimKind::Output = slim.kind {
                    if succ.view[slim.actor as usize] == target {
                        let trace_actions: Vec<Slim> = stack
                            .iter()
                            .filter_map(|f| f.incoming)
                            .chain([slim])
                            .collect();
                        return Ok(Some(PathAtomicityWitness {
                            actor: slim.actor as usize + 1,
                            output_view: self.view_of_mask(target),
                            trace: self.rebuild_trace(&trace_actions)?,
                        }));
                    }
                }
                let union = succ.reg_view[..self.m].iter().fold(0, |a, b| a | b);
                if union == target {
                    continue; // pruned: the memory contains exactly the candidate
                }
                if !visited.insert(self.pack(&succ)) {
                    continue;
                }
                self.enabled(&succ, PickPolicy::All, &mut scratch);
                if scratch.is_empty() {
                    continue;
                }
                // Best-first: walk first into successors where processors
                // that could still output the candidate have climbed the
                // highest, so the choreography the candidate needs is tried
                // before unrelated interleavings.
                scratch.sort_by_cached_key(|&s| {
                    let next = self.apply(&succ, s);
                    std::cmp::Reverse(self.witness_promise(&next, target))
                });
                stack.push(Frame {
                    state: succ,
                    actions: std::mem::take(&mut scratch),
                    next: 0,
                    incoming: Some(slim),
                });
            }
            if progress && visited.len() < per_candidate_cap {
                eprintln!("witness search: candidate {target:#05b} exhausted at {} states", visited.len());
            }
        }
        Ok(None)
    }

    /// Exact reachability question for one candidate: is a state where some
    /// processor is poised to output exactly `target` reachable through
    /// states whose memory union never equals `target`? Memory-bounded by
    /// the same stratified sweep as [`FastExplorer::run_sweep`]. Returns
    /// `Some(true/false)` when decided, `None` when the state budget ran
    /// out first.
    pub(super) fn witness_exists_sweep(
        &self,
        target: u8,
        picks: PickPolicy,
        max_states: usize,
        level_threshold: u8,
    ) -> Result<Option<bool>, ExploreError> {
        let initial = self.initial();
        let mut pending: std::collections::BTreeMap<u16, KeySet> =
            std::collections::BTreeMap::new();
        pending
            .entry(self.measure(&initial))
            .or_default()
            .insert(self.pack(&initial));
        let mut states = 0usize;
        let mut stack: Vec<(FState, Vec<Slim>, usize)> = Vec::new();
        let mut scratch: Vec<Slim> = Vec::new();
        while let Some((&stratum, _)) = pending.iter().next() {
            let seeds: Vec<u64> = pending
                .remove(&stratum)
                .expect("pending stratum")
                .into_iter()
                .collect();
            let mut visited = KeySet::default();
            for seed in seeds {
                if !visited.insert(seed) {
                    continue;
                }
                states += 1;
                let state = self.unpack(seed);
                self.enabled(&state, picks, &mut scratch);
                stack.push((state, std::mem::take(&mut scratch), 0));
                while let Some((state, actions, next)) = stack.last_mut() {
                    if states >= max_states {
                        return Ok(None);
                    }
                    let Some(&slim) = actions.get(*next) else {
                        stack.pop();
                        continue;
                    };
                    *next += 1;
                    let succ = self.apply(state, slim);
                    let union = succ.reg_view[..self.m].iter().fold(0, |a, b| a | b);
                    if union == target {
                        continue;
                    }
                    // A processor at the threshold level holding exactly the
                    // target view is poised to output it; the pruning above
                    // guarantees the whole prefix (this instant included)
                    // never had the memory contain exactly the target.
                    for p in 0..self.n {
                        if succ.output[p] == 0
                            && succ.view[p] == target
                            && succ.level[p] >= level_threshold
                        {
                            stack.clear();
                            return Ok(Some(true));
                        }
                    }
                    let key = self.pack(&succ);
                    let m = self.measure(&succ);
                    if m > stratum {
                        pending.entry(m).or_default().insert(key);
                        continue;
                    }
                    if !visited.insert(key) {
                        continue;
                    }
                    states += 1;
                    self.enabled(&succ, picks, &mut scratch);
                    stack.push((succ, std::mem::take(&mut scratch), 0));
                }
            }
        }
        Ok(Some(false))
    }

    /// Heuristic for the witness search: reward processors whose view can
    /// still become exactly the candidate (view inside it) for the levels
    /// they have reached, quadratically so a single high climber dominates.
    fn witness_promise(&self, s: &FState, target: u8) -> u32 {
        let mut score = 0u32;
        for p in 0..self.n {
            if s.view[p] & !target == 0 {
                let lvl = s.level[p] as u32;
                score += lvl * lvl * 4;
                if s.view[p] == target {
                    score += 8;
                }
            }
        }
        score
    }

    /// Stratified exhaustive exploration, memory-bounded by the monotone
    /// progress measure: states are processed stratum by stratum in
    /// ascending measure order. Edges never decrease the measure, so a
    /// stratum, once drained, can never be re-entered and its visited set
    /// is dropped; any cycle lies entirely within one stratum, where the
    /// depth-first walk detects it as a back edge. Path-dependent features
    /// (witness traces) are left to the capped DFS pass.
    fn run_sweep(&self, options: &ExploreOptions) -> Result<Exploration, ExploreError> {
        let check_durability = options.check_durability
            && matches!(self.algorithm, Algorithm::Snapshot | Algorithm::Renaming);

        let mut result = Exploration {
            config: self.config.clone(),
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

        struct Frame {
            state: FState,
            key: u64,
            actions: Vec<Slim>,
            next: usize,
        }

        let initial = self.initial();
        let initial_key = self.pack(&initial);
        // Discovered but unprocessed states, bucketed by measure stratum.
        let mut pending: std::collections::BTreeMap<u16, KeySet> =
            std::collections::BTreeMap::new();
        pending
            .entry(self.measure(&initial))
            .or_default()
            .insert(initial_key);

        let mut cycle_found = false;
        let mut scratch_actions: Vec<Slim> = Vec::new();
        let progress = std::env::var_os("ANONSHM_PROGRESS").is_some();

        'strata: while let Some((&stratum, _)) = pending.iter().next() {
            let seeds: Vec<u64> = pending.remove(&stratum).expect("pending stratum").into_iter().collect();
            let mut visited = KeySet::default();
            let mut gray = KeyMap::<u32>::default();
            let mut stack: Vec<Frame> = Vec::new();
            if progress {
                eprintln!(
                    "sweep: stratum {:#06x} seeds={} total_states={} edges={}",
                    stratum,
                    seeds.len(),
                    result.states,
                    result.edges
                );
            }
            for seed in seeds {
                if visited.contains(&seed) {
                    continue;
                }
                visited.insert(seed);
                result.states += 1;
                let state = self.unpack(seed);
                self.enabled(&state, options.pick_policy, &mut scratch_actions);
                if scratch_actions.is_empty() {
                    result.terminal_count += 1;
                    result.terminal_assignments.insert(self.assignment_of(&state));
                    continue;
                }
                gray.insert(seed, 0);
                stack.push(Frame {
                    state,
                    key: seed,
                    actions: std::mem::take(&mut scratch_actions),
                    next: 0,
                });
                while let Some(top) = stack.last_mut() {
                    if result.states >= options.max_states {
                        result.truncated = true;
                        break 'strata;
                    }
                    if top.next >= top.actions.len() {
                        let frame = stack.pop().expect("nonempty");
                        gray.remove(&frame.key);
                        continue;
                    }
                    let slim = top.actions[top.next];
                    top.next += 1;
                    let pre_level = top.state.level[slim.actor as usize];
                    let succ = self.apply(&top.state, slim);
                    let key = self.pack(&succ);
                    result.edges += 1;

                    if check_durability
                        && slim.kind == SlimKind::Read
                        && succ.level[slim.actor as usize] as usize == self.n
                        && (pre_level as usize) != self.n
                    {
                        let p = slim.actor as usize;
                        let w = succ.view[p];
                        if !self.durable_mask(&succ, w) && result.durability_violations.len() < 100
                        {
                            result.durability_violations.push(DurabilityViolation {
                                actor: p + 1,
                                output_view: self.view_of_mask(w),
                                state_digest: self.to_rich(&succ).digest(),
                            });
                        }
                    }

                    let succ_measure = self.measure(&succ);
                    debug_assert!(succ_measure >= stratum, "measure is monotone");
                    if succ_measure > stratum {
                        pending.entry(succ_measure).or_default().insert(key);
                        continue;
                    }
                    if gray.contains_key(&key) {
                        cycle_found = true;
                        if options.stop_on_cycle {
                            break 'strata;
                        }
                        continue;
                    }
                    if !visited.insert(key) {
                        continue;
                    }
                    result.states += 1;
                    let depth = stack.len();
                    result.max_depth_seen = result.max_depth_seen.max(depth);
                    self.enabled(&succ, options.pick_policy, &mut scratch_actions);
                    if scratch_actions.is_empty() {
                        result.terminal_count += 1;
                        result.terminal_assignments.insert(self.assignment_of(&succ));
                        continue;
                    }
                    gray.insert(key, depth as u32);
                    stack.push(Frame {
                        state: succ,
                        key,
                        actions: std::mem::take(&mut scratch_actions),
                        next: 0,
                    });
                }
            }
        }

        result.wait_free = if cycle_found {
            // Reconstruct a concrete witness with a bounded plain DFS; the
            // first back edge is typically shallow.
            let side = ExploreOptions {
                max_states: Self::WITNESS_SEARCH_CAP,
                stop_on_cycle: true,
                find_atomicity_witness: false,
                check_durability: false,
                ..options.clone()
            };
            match self.run_dfs(&side, false)?.wait_free {
                WaitFree::Violated { witness } => WaitFree::Violated { witness },
                _ => WaitFree::Violated { witness: None },
            }
        } else if result.truncated {
            WaitFree::Indeterminate
        } else {
            WaitFree::Holds
        };
        Ok(result)
    }
}
