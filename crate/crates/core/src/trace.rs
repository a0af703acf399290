//! Recorded executions and their on-disk JSON Lines format.
//!
//! Line 0 holds the configuration, the initial state and its digest; every
//! subsequent line is one atomic step: `{t, actor, action: {kind, local,
//! physical, payload}, digest}` where `digest` is the canonical post-state
//! digest. Sets serialize as ascending arrays, so traces are byte-stable
//! across runs.

use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::digest::Digest;
use crate::model::{
    apply_step, init_system, Action, ActionKind, Config, ConfigError, Output, ProcId,
    RegisterPayload, StepError, SystemState,
};

/// One recorded step.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep {
    pub action: Action,
    /// Physical register touched (reads and writes).
    pub physical: Option<usize>,
    /// Payload observed by a read.
    pub read_payload: Option<RegisterPayload>,
    /// For a read: the processor whose write was read, if any.
    pub reads_from: Option<Option<ProcId>>,
    /// Post-state digest.
    pub digest: Digest,
}

/// A recorded execution: an initial state and a step sequence, optionally
/// marked as a lasso.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub config: Config,
    pub initial: SystemState,
    pub steps: Vec<TraceStep>,
    /// Time index `t` such that `state(t)` equals the final state; the steps
    /// at times `cycle_start..len` form a cycle that can repeat forever.
    pub cycle_start: Option<usize>,
}

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("configuration invalid: {0}")]
    Config(#[from] ConfigError),
    #[error("step {t}: {source}")]
    Step { t: usize, source: StepError },
    #[error("step {t}: recorded digest {recorded} but replay produced {replayed}")]
    DigestMismatch {
        t: usize,
        recorded: Digest,
        replayed: Digest,
    },
    #[error("initial state digest {recorded} does not match configuration ({derived})")]
    InitialMismatch { recorded: Digest, derived: Digest },
}

#[derive(Debug, Error)]
pub enum TraceIoError {
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {source}")]
    Parse {
        line: usize,
        source: serde_json::Error,
    },
    #[error("trace file is empty")]
    Empty,
    #[error(transparent)]
    Replay(#[from] ReplayError),
}

impl Trace {
    pub fn new(config: Config, initial: SystemState) -> Self {
        Self {
            config,
            initial,
            steps: Vec::new(),
            cycle_start: None,
        }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Replays the recorded actions from the initial state, verifying every
    /// recorded post-state digest, and returns all states
    /// `e[0], e[1], ..., e[len]`.
    pub fn replay(&self) -> Result<Vec<SystemState>, ReplayError> {
        let mut states = Vec::with_capacity(self.steps.len() + 1);
        states.push(self.initial.clone());
        for (t, step) in self.steps.iter().enumerate() {
            let effect = apply_step(states.last().unwrap(), &step.action)
                .map_err(|source| ReplayError::Step { t, source })?;
            let replayed = effect.state.digest();
            if replayed != step.digest {
                return Err(ReplayError::DigestMismatch {
                    t,
                    recorded: step.digest,
                    replayed,
                });
            }
            states.push(effect.state);
        }
        Ok(states)
    }

    pub fn final_digest(&self) -> Digest {
        self.steps
            .last()
            .map(|s| s.digest)
            .unwrap_or_else(|| self.initial.digest())
    }

    /// Earliest time `t` whose state digest equals the final state's digest,
    /// if the final state repeats an earlier one.
    pub fn detect_cycle_start(&self) -> Option<usize> {
        if self.steps.is_empty() {
            return None;
        }
        let last = self.final_digest();
        if self.initial.digest() == last {
            return Some(0);
        }
        self.steps[..self.steps.len() - 1]
            .iter()
            .position(|s| s.digest == last)
            .map(|i| i + 1)
    }

    /// Writes the JSON Lines representation.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> io::Result<()> {
        let header = Header {
            config: &self.config,
            initial: &self.initial,
            digest: self.initial.digest(),
            cycle_start: self.cycle_start,
        };
        serde_json::to_writer(&mut w, &header)?;
        w.write_all(b"\n")?;
        for (t, step) in self.steps.iter().enumerate() {
            let line = Line {
                t,
                actor: step.action.actor,
                action: ActionJson::from_step(step),
                digest: step.digest,
            };
            serde_json::to_writer(&mut w, &line)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Reads a trace back. The initial state is rebuilt from the recorded
    /// configuration and verified against the recorded digest.
    pub fn read_jsonl<R: BufRead>(r: R) -> Result<Trace, TraceIoError> {
        let mut lines = r.lines().enumerate();
        let (_, first) = lines.next().ok_or(TraceIoError::Empty)?;
        let header: OwnedHeader = serde_json::from_str(&first?)
            .map_err(|source| TraceIoError::Parse { line: 0, source })?;
        let initial = init_system(&header.config).map_err(ReplayError::Config)?;
        let derived = initial.digest();
        if derived != header.digest {
            return Err(ReplayError::InitialMismatch {
                recorded: header.digest,
                derived,
            }
            .into());
        }
        let mut steps = Vec::new();
        for (lineno, line) in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: Line = serde_json::from_str(&line)
                .map_err(|source| TraceIoError::Parse { line: lineno, source })?;
            steps.push(parsed.into_step());
        }
        Ok(Trace {
            config: header.config,
            initial,
            steps,
            cycle_start: header.cycle_start,
        })
    }
}

#[derive(Serialize)]
struct Header<'a> {
    config: &'a Config,
    initial: &'a SystemState,
    digest: Digest,
    #[serde(skip_serializing_if = "Option::is_none")]
    cycle_start: Option<usize>,
}

#[derive(Deserialize)]
struct OwnedHeader {
    config: Config,
    digest: Digest,
    #[serde(default)]
    cycle_start: Option<usize>,
}

#[derive(Serialize, Deserialize)]
struct Line {
    t: usize,
    actor: ProcId,
    action: ActionJson,
    digest: Digest,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
enum ActionJson {
    Write {
        local: usize,
        physical: usize,
        payload: RegisterPayload,
    },
    Read {
        local: usize,
        physical: usize,
        payload: RegisterPayload,
    },
    Output {
        payload: Output,
    },
}

impl ActionJson {
    fn from_step(step: &TraceStep) -> Self {
        match &step.action.kind {
            ActionKind::Write { local, payload } => ActionJson::Write {
                local: *local,
                physical: step.physical.expect("writes record a physical register"),
                payload: payload.clone(),
            },
            ActionKind::Read { local } => ActionJson::Read {
                local: *local,
                physical: step.physical.expect("reads record a physical register"),
                payload: step
                    .read_payload
                    .clone()
                    .expect("reads record the payload read"),
            },
            ActionKind::Output { output } => ActionJson::Output {
                payload: output.clone(),
            },
        }
    }
}

impl Line {
    fn into_step(self) -> TraceStep {
        match self.action {
            ActionJson::Write {
                local,
                physical,
                payload,
            } => TraceStep {
                action: Action {
                    actor: self.actor,
                    kind: ActionKind::Write { local, payload },
                },
                physical: Some(physical),
                read_payload: None,
                reads_from: None,
                digest: self.digest,
            },
            ActionJson::Read {
                local,
                physical,
                payload,
            } => TraceStep {
                action: Action {
                    actor: self.actor,
                    kind: ActionKind::Read { local },
                },
                physical: Some(physical),
                read_payload: Some(payload),
                reads_from: None,
                digest: self.digest,
            },
            ActionJson::Output { payload } => TraceStep {
                action: Action {
                    actor: self.actor,
                    kind: ActionKind::Output { output: payload },
                },
                physical: None,
                read_payload: None,
                reads_from: None,
                digest: self.digest,
            },
        }
    }
}
