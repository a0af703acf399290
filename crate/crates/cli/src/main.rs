//! Command-line entry point: simulate, replay, explore and check executions
//! of the fully-anonymous shared-memory algorithms.
//!
//! Summaries are printed to stdout as JSON and are bit-identical across
//! repeated runs of the same configuration and seed; wall-clock timing goes
//! to stderr. The exit code is 0 when every requested check holds (or is
//! inapplicable), 2 when any check is violated, and 1 on errors.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use anonshm_core::checkers::{
    atomicity_witness, check_consensus_task, check_durability_along_trace,
    check_group_solvability, check_single_source, check_snapshot_task, check_trace_invariants,
    renaming_sample_predicate, snapshot_sample_predicate, stable_view_graph, StableViewGraph,
};
use anonshm_core::explore::{
    explore, explore_with_sink, ExploreOptions, Exploration, GraphSink, PickPolicy, WaitFree,
};
use anonshm_core::{
    build_covering_demo, fig2_script, group_view, replay_script, run_random, verify_covering,
    verify_fig2, Algorithm, Config, Digest, GroupId, Lasso, Output, ProcId, ScheduleSpec, Script,
    Trace,
};

#[derive(Parser)]
#[command(name = "anonshm", version, about = "Simulator and bounded model explorer for the fully-anonymous shared-memory model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Human-readable summary instead of JSON.
    #[arg(long, global = true)]
    pretty: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run a seeded random schedule and apply the applicable checkers.
    Simulate {
        /// Configuration file (JSON).
        config: PathBuf,
        /// Override the schedule seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the step budget.
        #[arg(long)]
        max_steps: Option<usize>,
        /// Write the execution as JSON Lines.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Write the stable-view graph (if a lasso was found) as DOT.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Replay a built-in demonstration or a scripted schedule.
    Replay {
        /// `fig2` or `covering:N`.
        #[arg(long, conflicts_with = "script")]
        builtin: Option<String>,
        /// Script file: a JSON array of {actor, writeTarget?}.
        #[arg(long, requires = "config")]
        script: Option<PathBuf>,
        /// Configuration for --script.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Write the execution as JSON Lines.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Write the stable-view graph (if a lasso was found) as DOT.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Exhaustively explore the reachable state space and check it.
    Explore {
        /// Configuration file (JSON).
        config: PathBuf,
        /// Depth bound (truncates the graph).
        #[arg(long)]
        depth: Option<usize>,
        /// Timestamp cap for consensus exploration.
        #[arg(long)]
        ts_cap: Option<u32>,
        /// State budget.
        #[arg(long, default_value_t = 200_000_000)]
        max_states: usize,
        /// Write-target branching: every legal pick, or the deterministic
        /// default pick only.
        #[arg(long, value_enum, default_value_t = PicksArg::All)]
        picks: PicksArg,
        /// Quotient renamings of processors sharing input and wiring.
        #[arg(long)]
        symmetry: bool,
        /// Stream the node/edge list as JSON Lines (uses the generic
        /// exploration engine).
        #[arg(long)]
        graph_out: Option<PathBuf>,
        /// Write the state graph as DOT (generic engine; desk-size graphs
        /// only).
        #[arg(long)]
        dot: Option<PathBuf>,
        /// State cap per candidate for the non-atomicity witness search.
        #[arg(long, default_value_t = 2_000_000)]
        witness_cap: usize,
    },
    /// Replay a recorded trace, verifying digests, and run the checkers.
    Check {
        /// Trace file (JSON Lines).
        trace: PathBuf,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PicksArg {
    All,
    Default,
}

impl From<PicksArg> for PickPolicy {
    fn from(p: PicksArg) -> PickPolicy {
        match p {
            PicksArg::All => PickPolicy::All,
            PicksArg::Default => PickPolicy::DefaultOnly,
        }
    }
}

/// One checker verdict in the run summary.
#[derive(Debug, Clone, Serialize)]
struct Report {
    check: String,
    verdict: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    witness: Option<Value>,
}

impl Report {
    fn holds(check: &str) -> Self {
        Report {
            check: check.into(),
            verdict: "HOLDS".into(),
            witness: None,
        }
    }

    fn violated(check: &str, witness: Value) -> Self {
        Report {
            check: check.into(),
            verdict: "VIOLATED".into(),
            witness: Some(witness),
        }
    }

    fn of(check: &str, ok: bool, witness: Value) -> Self {
        if ok {
            Report::holds(check)
        } else {
            Report::violated(check, witness)
        }
    }

    fn info(check: &str, verdict: &str, witness: Option<Value>) -> Self {
        Report {
            check: check.into(),
            verdict: verdict.into(),
            witness,
        }
    }

    fn counts_against_exit(&self) -> bool {
        self.verdict == "VIOLATED"
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    let outcome = match run(&cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    };
    eprintln!("elapsed: {:?}", started.elapsed());
    outcome
}

fn run(cli: &Cli) -> Result<ExitCode> {
    match &cli.command {
        Command::Simulate {
            config,
            seed,
            max_steps,
            trace,
            dot,
        } => cmd_simulate(cli, config, *seed, *max_steps, trace.as_deref(), dot.as_deref()),
        Command::Replay {
            builtin,
            script,
            config,
            trace,
            dot,
        } => cmd_replay(
            cli,
            builtin.as_deref(),
            script.as_deref(),
            config.as_deref(),
            trace.as_deref(),
            dot.as_deref(),
        ),
        Command::Explore {
            config,
            depth,
            ts_cap,
            max_states,
            picks,
            symmetry,
            graph_out,
            dot,
            witness_cap,
        } => cmd_explore(
            cli,
            config,
            *depth,
            *ts_cap,
            *max_states,
            (*picks).into(),
            *symmetry,
            graph_out.as_deref(),
            dot.as_deref(),
            *witness_cap,
        ),
        Command::Check { trace } => cmd_check(cli, trace),
    }
}

fn load_config(path: &Path) -> Result<Config> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading configuration {}", path.display()))?;
    let config: Config = serde_json::from_str(&text)
        .with_context(|| format!("parsing configuration {}", path.display()))?;
    config.validate()?;
    Ok(config)
}

fn write_trace(trace: &Trace, path: &Path) -> Result<()> {
    let file = fs::File::create(path)
        .with_context(|| format!("creating trace file {}", path.display()))?;
    trace
        .write_jsonl(BufWriter::new(file))
        .context("writing trace")?;
    Ok(())
}

fn finish(cli: &Cli, summary: Value, reports: &[Report]) -> Result<ExitCode> {
    if cli.pretty {
        print_pretty(&summary);
    } else {
        println!("{}", serde_json::to_string(&summary)?);
    }
    let bad = reports.iter().any(|r| r.counts_against_exit());
    Ok(ExitCode::from(if bad { 2 } else { 0 }))
}

fn print_pretty(summary: &Value) {
    fn walk(prefix: &str, v: &Value) {
        match v {
            Value::Object(map) => {
                for (k, val) in map {
                    let key = if prefix.is_empty() {
                        k.clone()
                    } else {
                        format!("{prefix}.{k}")
                    };
                    walk(&key, val);
                }
            }
            Value::Array(items) if prefix == "checks" => {
                for item in items {
                    let check = item.get("check").and_then(Value::as_str).unwrap_or("?");
                    let verdict = item.get("verdict").and_then(Value::as_str).unwrap_or("?");
                    println!("{check:<28} {verdict}");
                }
            }
            other => println!("{prefix:<28} {other}"),
        }
    }
    walk("", summary);
}

// ---------------------------------------------------------------------------
// simulate

fn cmd_simulate(
    cli: &Cli,
    config_path: &Path,
    seed: Option<u64>,
    max_steps: Option<usize>,
    trace_out: Option<&Path>,
    dot: Option<&Path>,
) -> Result<ExitCode> {
    let mut config = load_config(config_path)?;
    if seed.is_some() || max_steps.is_some() {
        let (old_seed, old_max) = match config.schedule {
            ScheduleSpec::Random { seed, max_steps } => (seed, max_steps),
            _ => (0, 10_000),
        };
        config.schedule = ScheduleSpec::Random {
            seed: seed.unwrap_or(old_seed),
            max_steps: max_steps.unwrap_or(old_max),
        };
    }
    if !matches!(config.schedule, ScheduleSpec::Random { .. }) {
        bail!("simulate needs a random schedule (or --seed/--max-steps overrides)");
    }
    let trace = run_random(&config)?;
    if let Some(path) = trace_out {
        write_trace(&trace, path)?;
    }
    let (reports, lasso_summary) = trace_reports(&trace)?;
    if let (Some(path), Some(graph)) = (dot, lasso_summary.graph.as_ref()) {
        fs::write(path, stable_view_dot(graph))?;
    }
    let mut note = None;
    if config.algorithm == Algorithm::WriteScan && !trace.is_empty() {
        note = Some("write-scan never outputs; the run stopped at the step budget");
    }
    let summary = json!({
        "command": "simulate",
        "config": config,
        "steps": trace.len(),
        "outputs": outputs_json(&trace),
        "note": note,
        "lasso": lasso_summary.as_json(),
        "checks": reports,
    });
    finish(cli, summary, &reports)
}

fn outputs_json(trace: &Trace) -> Value {
    let states = trace.replay().ok();
    match states.as_ref().and_then(|s| s.last()) {
        Some(last) => serde_json::to_value(&last.outputs).unwrap_or(Value::Null),
        None => Value::Null,
    }
}

#[derive(Default)]
struct LassoSummary {
    found: bool,
    flagged: bool,
    cycle_start: Option<usize>,
    cycle_len: Option<usize>,
    live_set: Vec<ProcId>,
    graph: Option<StableViewGraph>,
    single_source: Option<bool>,
}

impl LassoSummary {
    fn as_json(&self) -> Value {
        if !self.found {
            return Value::Null;
        }
        json!({
            "cycle_start": self.cycle_start,
            "cycle_len": self.cycle_len,
            "live_set": self.live_set,
            "gst_flagged": self.flagged,
            "stable_views": self.graph.as_ref().map(|g| &g.vertices),
            "single_source": self.single_source,
        })
    }
}

/// Applies every checker that makes sense for the trace's algorithm.
fn trace_reports(trace: &Trace) -> Result<(Vec<Report>, LassoSummary)> {
    let mut reports = Vec::new();
    let config = &trace.config;
    let violations = check_trace_invariants(trace)?;
    reports.push(Report::of(
        "trace_invariants",
        violations.is_empty(),
        serde_json::to_value(&violations)?,
    ));

    let states = trace.replay()?;
    let final_state = states.last().expect("replay returns the initial state");
    let groups = config.groups();
    let participants: BTreeSet<ProcId> = trace
        .steps
        .iter()
        .map(|s| s.action.actor)
        .collect();
    let all_output = final_state.outputs.len() == config.n_processors;

    match config.algorithm {
        Algorithm::Snapshot => {
            let entries: Vec<(GroupId, BTreeSet<GroupId>)> = final_state
                .outputs
                .iter()
                .filter_map(|(&p, o)| match o {
                    Output::View(v) => Some((config.inputs[p - 1], group_view(v))),
                    _ => None,
                })
                .collect();
            reports.push(Report::of(
                "snapshot_task",
                check_snapshot_task(entries.iter().map(|(g, s)| (*g, s))).is_ok(),
                json!(check_snapshot_task(entries.iter().map(|(g, s)| (*g, s))).err()),
            ));
            if all_output {
                let verdict = check_group_solvability(
                    snapshot_sample_predicate,
                    &groups,
                    &participants,
                    &final_state.outputs,
                )?;
                reports.push(group_solvability_report(&verdict));
            } else {
                reports.push(Report::info("group_solvability", "SKIPPED", None));
            }
            let durability = check_durability_along_trace(trace)?;
            reports.push(Report::of(
                "durably_stored",
                durability.is_empty(),
                json!(durability),
            ));
            let witness = atomicity_witness(trace)?;
            reports.push(Report::info(
                "atomicity_witness",
                if witness.is_some() { "FOUND" } else { "NONE" },
                witness.map(|w| json!({"actor": w.actor, "output_view": w.output_view, "t": w.t})),
            ));
        }
        Algorithm::Renaming => {
            if all_output {
                let verdict = check_group_solvability(
                    renaming_sample_predicate,
                    &groups,
                    &participants,
                    &final_state.outputs,
                )?;
                reports.push(group_solvability_report(&verdict));
            } else {
                reports.push(Report::info("group_solvability", "SKIPPED", None));
            }
            let cross = cross_group_collision(config, &final_state.outputs);
            reports.push(Report::of(
                "cross_group_uniqueness",
                cross.is_none(),
                json!(cross),
            ));
            let durability = check_durability_along_trace(trace)?;
            reports.push(Report::of(
                "durably_stored",
                durability.is_empty(),
                json!(durability),
            ));
        }
        Algorithm::Consensus => {
            let decisions: Vec<GroupId> = final_state
                .outputs
                .values()
                .filter_map(|o| match o {
                    Output::Decision(v) => Some(*v),
                    _ => None,
                })
                .collect();
            let inputs: BTreeSet<GroupId> = participants
                .iter()
                .map(|&p| config.inputs[p - 1])
                .collect();
            reports.push(Report::of(
                "consensus_task",
                check_consensus_task(&decisions, &inputs).is_ok(),
                json!(check_consensus_task(&decisions, &inputs).err()),
            ));
        }
        Algorithm::WriteScan => {}
    }

    let mut lasso_summary = LassoSummary::default();
    if config.algorithm == Algorithm::WriteScan {
        if let Some(lasso) = Lasso::from_first_revisit(trace)? {
            lasso_summary.found = true;
            lasso_summary.flagged = lasso.gst_flagged;
            lasso_summary.cycle_start = lasso.trace.cycle_start;
            lasso_summary.cycle_len = Some(lasso.cycle_len());
            lasso_summary.live_set = lasso.live_set.iter().copied().collect();
            if lasso.gst_flagged {
                reports.push(Report::info(
                    "single_source",
                    "FLAGGED",
                    Some(json!("a non-live processor's write survives the cycle")),
                ));
            } else {
                let graph = stable_view_graph(&lasso)?;
                let single = check_single_source(&graph)?;
                reports.push(Report::of(
                    "single_source",
                    single.holds(),
                    json!({"sources": single.sources}),
                ));
                lasso_summary.single_source = Some(single.holds());
                lasso_summary.graph = Some(graph);
            }
        }
    }
    Ok((reports, lasso_summary))
}

fn group_solvability_report(verdict: &anonshm_core::checkers::GroupSolvability) -> Report {
    match verdict {
        anonshm_core::checkers::GroupSolvability::Holds { samples_checked } => Report {
            check: "group_solvability".into(),
            verdict: "HOLDS".into(),
            witness: Some(json!({ "samples_checked": samples_checked })),
        },
        anonshm_core::checkers::GroupSolvability::Violated { sample } => {
            Report::violated("group_solvability", json!({ "sample": sample }))
        }
    }
}

/// First pair of processors from different groups sharing a name.
fn cross_group_collision(
    config: &Config,
    outputs: &BTreeMap<ProcId, Output>,
) -> Option<(ProcId, ProcId, u64)> {
    let names: Vec<(ProcId, u64)> = outputs
        .iter()
        .filter_map(|(&p, o)| match o {
            Output::Name(n) => Some((p, *n)),
            _ => None,
        })
        .collect();
    for (i, &(p, np)) in names.iter().enumerate() {
        for &(q, nq) in &names[i + 1..] {
            if np == nq && config.inputs[p - 1] != config.inputs[q - 1] {
                return Some((p, q, np));
            }
        }
    }
    None
}

fn stable_view_dot(graph: &StableViewGraph) -> String {
    fn label(set: &BTreeSet<GroupId>) -> String {
        let ids: Vec<String> = set.iter().map(|g| g.to_string()).collect();
        format!("{{{}}}", ids.join(","))
    }
    let mut out = String::from("digraph stable_views {\n");
    for v in &graph.vertices {
        out.push_str(&format!("  \"{}\";\n", label(v)));
    }
    for (a, b) in &graph.edges {
        out.push_str(&format!("  \"{}\" -> \"{}\";\n", label(a), label(b)));
    }
    out.push_str("}\n");
    out
}

// ---------------------------------------------------------------------------
// replay

fn cmd_replay(
    cli: &Cli,
    builtin: Option<&str>,
    script_path: Option<&Path>,
    config_path: Option<&Path>,
    trace_out: Option<&Path>,
    dot: Option<&Path>,
) -> Result<ExitCode> {
    let (config, script, builtin_name) = match (builtin, script_path) {
        (Some(name), None) => {
            let (config, script) = builtin_schedule(name)?;
            (config, script, Some(name.to_string()))
        }
        (None, Some(path)) => {
            let config = load_config(config_path.context("--script requires --config")?)?;
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading script {}", path.display()))?;
            let script: Script = serde_json::from_str(&text)
                .with_context(|| format!("parsing script {}", path.display()))?;
            (config, script, None)
        }
        _ => bail!("replay needs exactly one of --builtin or --script"),
    };

    let trace = match replay_script(&config, &script) {
        Ok(trace) => trace,
        Err(anonshm_core::schedule::ScheduleError::ScriptStep { index, source }) => {
            // Divergence report: the first step the machines refuse.
            let report = Report::violated(
                "script_replay",
                json!({ "diverges_at_step": index, "reason": source.to_string() }),
            );
            let summary = json!({
                "command": "replay",
                "builtin": builtin_name,
                "config": config,
                "checks": [&report],
            });
            return finish(cli, summary, &[report]);
        }
        Err(other) => return Err(other.into()),
    };
    if let Some(path) = trace_out {
        write_trace(&trace, path)?;
    }

    let mut reports = Vec::new();
    let mut extra = serde_json::Map::new();
    match builtin_name.as_deref() {
        Some("fig2") => {
            let fig2 = verify_fig2(&trace)?;
            extra.insert("rows_matched".into(), json!(fig2.rows.iter().filter(|&&b| b).count()));
            extra.insert("rows".into(), json!(fig2.rows));
            extra.insert("cycle_start".into(), json!(fig2.cycle_start));
            reports.push(Report::of(
                "fig2_golden",
                fig2.all_match(),
                json!(fig2.rows),
            ));
            reports.push(Report::of(
                "fig2_lasso",
                fig2.lasso_detected && fig2.cycle_start == Some(20),
                json!({"cycle_start": fig2.cycle_start}),
            ));
        }
        Some(name) if name.starts_with("covering") => {
            let holds = verify_covering(&trace)?;
            reports.push(Report::of(
                "covering_no_trace_of_p",
                holds,
                json!("a register still contains the solo processor's input"),
            ));
        }
        _ => {}
    }

    let (mut generic, lasso_summary) = trace_reports(&trace)?;
    reports.append(&mut generic);
    if let (Some(path), Some(graph)) = (dot, lasso_summary.graph.as_ref()) {
        fs::write(path, stable_view_dot(graph))?;
    }

    let mut summary = json!({
        "command": "replay",
        "builtin": builtin_name,
        "config": config,
        "steps": trace.len(),
        "cycle_start": trace.cycle_start,
        "lasso": lasso_summary.as_json(),
        "checks": reports,
    });
    summary
        .as_object_mut()
        .expect("object")
        .extend(extra);
    finish(cli, summary, &reports)
}

fn builtin_schedule(name: &str) -> Result<(Config, Script)> {
    if name == "fig2" {
        return Ok(fig2_script());
    }
    if let Some(n) = name.strip_prefix("covering:") {
        let n: usize = n.parse().context("covering:N needs an integer N")?;
        return Ok(build_covering_demo(n)?);
    }
    bail!("unknown builtin `{name}` (expected `fig2` or `covering:N`)");
}

// ---------------------------------------------------------------------------
// explore

struct JsonlSink {
    writer: BufWriter<fs::File>,
}

impl GraphSink for JsonlSink {
    fn node(&mut self, digest: Digest, terminal: bool, frontier: bool) {
        let _ = serde_json::to_writer(
            &mut self.writer,
            &json!({"type": "node", "digest": digest, "terminal": terminal, "frontier": frontier}),
        );
        let _ = self.writer.write_all(b"\n");
    }

    fn edge(&mut self, from: Digest, action: &anonshm_core::Action, to: Digest) {
        let _ = serde_json::to_writer(
            &mut self.writer,
            &json!({"type": "edge", "from": from, "action": action, "to": to}),
        );
        let _ = self.writer.write_all(b"\n");
    }
}

struct DotSink {
    writer: BufWriter<fs::File>,
}

impl GraphSink for DotSink {
    fn node(&mut self, digest: Digest, terminal: bool, _frontier: bool) {
        let shape = if terminal { "doublecircle" } else { "circle" };
        let _ = writeln!(self.writer, "  \"{digest}\" [shape={shape}];");
    }

    fn edge(&mut self, from: Digest, action: &anonshm_core::Action, to: Digest) {
        let _ = writeln!(
            self.writer,
            "  \"{from}\" -> \"{to}\" [label=\"p{}\"];",
            action.actor
        );
    }
}

struct TeeSink(Option<JsonlSink>, Option<DotSink>);

impl GraphSink for TeeSink {
    fn node(&mut self, digest: Digest, terminal: bool, frontier: bool) {
        if let Some(s) = &mut self.0 {
            s.node(digest, terminal, frontier);
        }
        if let Some(s) = &mut self.1 {
            s.node(digest, terminal, frontier);
        }
    }

    fn edge(&mut self, from: Digest, action: &anonshm_core::Action, to: Digest) {
        if let Some(s) = &mut self.0 {
            s.edge(from, action, to);
        }
        if let Some(s) = &mut self.1 {
            s.edge(from, action, to);
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_explore(
    cli: &Cli,
    config_path: &Path,
    depth: Option<usize>,
    ts_cap: Option<u32>,
    max_states: usize,
    picks: PickPolicy,
    symmetry: bool,
    graph_out: Option<&Path>,
    dot: Option<&Path>,
    witness_cap: usize,
) -> Result<ExitCode> {
    let config = load_config(config_path)?;
    let ts_cap = ts_cap.or(match config.schedule {
        ScheduleSpec::Exhaustive { ts_cap, .. } => ts_cap,
        _ => None,
    });
    let depth = depth.or(match config.schedule {
        ScheduleSpec::Exhaustive { depth_bound, .. } => depth_bound,
        _ => None,
    });
    let options = ExploreOptions {
        pick_policy: picks,
        max_states,
        max_depth: depth,
        ts_cap,
        symmetry,
        sample_target: 0,
        ..ExploreOptions::default()
    };

    let result = if graph_out.is_some() || dot.is_some() {
        let jsonl = graph_out
            .map(|p| -> Result<JsonlSink> {
                Ok(JsonlSink {
                    writer: BufWriter::new(fs::File::create(p)?),
                })
            })
            .transpose()?;
        let dot_sink = dot
            .map(|p| -> Result<DotSink> {
                let mut writer = BufWriter::new(fs::File::create(p)?);
                writeln!(writer, "digraph states {{")?;
                Ok(DotSink { writer })
            })
            .transpose()?;
        let mut tee = TeeSink(jsonl, dot_sink);
        let result = explore_with_sink(&config, &options, Some(&mut tee))?;
        if let Some(mut s) = tee.1 {
            writeln!(s.writer, "}}")?;
        }
        result
    } else {
        explore(&config, &options)?
    };

    let reports = explore_reports(&config, &result, witness_cap)?;
    let wait_free = match &result.wait_free {
        WaitFree::Holds => json!("HOLDS"),
        WaitFree::Violated { witness } => json!({
            "verdict": "VIOLATED",
            "cycle_len": witness.as_ref().map(|l| l.cycle_len()),
            "live_set": witness.as_ref().map(|l| l.live_set.iter().copied().collect::<Vec<_>>()),
        }),
        WaitFree::Indeterminate => json!("INDETERMINATE"),
    };
    let summary = json!({
        "command": "explore",
        "config": config,
        "states": result.states,
        "edges": result.edges,
        "max_depth_seen": result.max_depth_seen,
        "terminals": result.terminal_count,
        "distinct_assignments": result.terminal_assignments.len(),
        "frontier_states": result.frontier_states,
        "truncated": result.truncated,
        "wait_free": wait_free,
        "checks": reports,
    });
    finish(cli, summary, &reports)
}

fn explore_reports(
    config: &Config,
    result: &Exploration,
    witness_cap: usize,
) -> Result<Vec<Report>> {
    let mut reports = Vec::new();
    let groups = config.groups();
    let participants: BTreeSet<ProcId> = (1..=config.n_processors).collect();

    reports.push(match &result.wait_free {
        WaitFree::Holds => Report::holds("wait_free"),
        WaitFree::Violated { witness } => Report::violated(
            "wait_free",
            json!({"cycle_len": witness.as_ref().map(|l| l.cycle_len())}),
        ),
        WaitFree::Indeterminate => Report::info("wait_free", "INDETERMINATE", None),
    });

    match config.algorithm {
        Algorithm::Snapshot => {
            let mut containment_ok = true;
            let mut solvable_ok = true;
            let mut first_violation = Value::Null;
            for assignment in &result.terminal_assignments {
                let entries: Vec<(GroupId, BTreeSet<GroupId>)> = assignment
                    .iter()
                    .filter_map(|(&p, o)| match o {
                        Output::View(v) => Some((config.inputs[p - 1], group_view(v))),
                        _ => None,
                    })
                    .collect();
                if let Err(v) = check_snapshot_task(entries.iter().map(|(g, s)| (*g, s))) {
                    containment_ok = false;
                    first_violation = json!(v);
                }
                let verdict = check_group_solvability(
                    snapshot_sample_predicate,
                    &groups,
                    &participants,
                    assignment,
                )?;
                if !verdict.holds() {
                    solvable_ok = false;
                }
            }
            reports.push(Report::of("snapshot_task", containment_ok, first_violation));
            reports.push(Report::of("group_solvability", solvable_ok, Value::Null));
            reports.push(Report::of(
                "durably_stored",
                result.durability_violations.is_empty(),
                json!(result.durability_violations.len()),
            ));
            let witness = match &result.atomicity_witness {
                Some(w) => Some(w.clone()),
                None => anonshm_core::explore::find_non_atomicity_witness(config, witness_cap)?,
            };
            reports.push(Report::info(
                "atomicity_witness",
                if witness.is_some() { "FOUND" } else { "NONE" },
                witness.map(|w| json!({"actor": w.actor, "output_view": w.output_view, "trace_len": w.trace.len()})),
            ));
        }
        Algorithm::Renaming => {
            let mut solvable_ok = true;
            let mut cross_ok = true;
            let mut witness = Value::Null;
            for assignment in &result.terminal_assignments {
                let verdict = check_group_solvability(
                    renaming_sample_predicate,
                    &groups,
                    &participants,
                    assignment,
                )?;
                if !verdict.holds() {
                    solvable_ok = false;
                }
                if let Some(c) = cross_group_collision(config, assignment) {
                    cross_ok = false;
                    witness = json!(c);
                }
            }
            reports.push(Report::of("group_solvability", solvable_ok, Value::Null));
            reports.push(Report::of("cross_group_uniqueness", cross_ok, witness));
            reports.push(Report::of(
                "durably_stored",
                result.durability_violations.is_empty(),
                json!(result.durability_violations.len()),
            ));
        }
        Algorithm::Consensus => {
            reports.push(Report::of(
                "consensus_agreement",
                result.max_decisions_in_state <= 1,
                json!(result.max_decisions_in_state),
            ));
            let valid = result
                .decided_values
                .iter()
                .all(|v| config.inputs.contains(v));
            reports.push(Report::of(
                "consensus_validity",
                valid,
                json!(result.decided_values),
            ));
        }
        Algorithm::WriteScan => {}
    }
    Ok(reports)
}

// ---------------------------------------------------------------------------
// check

fn cmd_check(cli: &Cli, trace_path: &Path) -> Result<ExitCode> {
    let file = fs::File::open(trace_path)
        .with_context(|| format!("opening trace {}", trace_path.display()))?;
    let trace = Trace::read_jsonl(BufReader::new(file))?;
    // Digest verification is part of the replay done by the checkers.
    let (reports, lasso_summary) = trace_reports(&trace)?;
    let summary = json!({
        "command": "check",
        "config": trace.config,
        "steps": trace.len(),
        "outputs": outputs_json(&trace),
        "lasso": lasso_summary.as_json(),
        "checks": reports,
    });
    finish(cli, summary, &reports)
}
