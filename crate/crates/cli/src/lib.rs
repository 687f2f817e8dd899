//! `jointsmith` command implementations.

mod batch;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Deserialize;

use jointsmith_core::harness::trace::{aggregate_stats, read_traces, render_stats_table, write_traces};
use jointsmith_core::harness::{
    append_trace, open_workspace, run_session, AgentBackend, CompactionPolicy, HttpBackend, ScriptedBackend,
    SessionConfig, SessionStatus,
};
use jointsmith_core::urdf::{export_urdf, ExportOptions};
use jointsmith_core::validation::{
    compile_source, render_compile_signals, run_probe, CompileOutcome, LoopState, ProbeOptions, Status,
    ValidationOptions,
};

pub use batch::{read_batch_records, read_prompts, run_batch, BatchRecord, BatchStatus, PromptSpec, BATCH_FILE};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const TRACES_FILE: &str = "traces.jsonl";

#[derive(Debug, Parser)]
#[command(name = "jointsmith", version, about = "Compile, check and generate articulated assets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compile a program and print its compile signals.
    Compile {
        file: PathBuf,
        /// Export the URDF package here when compile is clean.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run QC and tests without exporting.
    Validate { file: PathBuf },
    /// Compile and export the URDF package.
    Export {
        file: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Write primitive visuals as meshes too.
        #[arg(long)]
        force_meshes: bool,
    },
    /// Evaluate an inspection expression against a compiled program.
    Probe {
        file: PathBuf,
        #[arg(long)]
        query: String,
    },
    /// Run one agent session.
    Run {
        #[arg(long)]
        prompt: String,
        #[arg(long, default_value = "scripted")]
        backend: String,
        #[arg(long)]
        script: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Seed model.apl with this program.
        #[arg(long)]
        initial: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run one session per prompt across parallel workers.
    Batch {
        #[arg(long)]
        prompts: PathBuf,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "scripted")]
        backend: String,
        /// Directory holding `<id>.json` scripts for the scripted backend.
        #[arg(long)]
        scripts: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Per-backend totals over a trace log.
    Stats {
        #[arg(long)]
        traces: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Attach a curator rating (1-5) to a trace.
    Rate {
        #[arg(long)]
        traces: PathBuf,
        #[arg(long)]
        id: String,
        #[arg(long)]
        score: u8,
    },
}

/// Optional TOML run settings.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSettings {
    pub max_turns: Option<usize>,
    pub prompt_price_per_mtok: Option<f64>,
    pub output_price_per_mtok: Option<f64>,
    pub compaction_threshold: Option<u64>,
}

impl RunSettings {
    pub fn load(path: Option<&Path>) -> Result<Self, String> {
        let Some(p) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
        toml::from_str(&text).map_err(|e| format!("{}: {e}", p.display()))
    }

    pub fn session_config(&self, id: &str, backend: &str, out: &Path) -> SessionConfig {
        let d = SessionConfig::default();
        SessionConfig {
            id: id.to_string(),
            backend: backend.to_string(),
            max_turns: self.max_turns.unwrap_or(d.max_turns),
            compaction: self
                .compaction_threshold
                .map_or(d.compaction, CompactionPolicy::with_threshold),
            prompt_price_per_mtok: self.prompt_price_per_mtok.unwrap_or(0.0),
            output_price_per_mtok: self.output_price_per_mtok.unwrap_or(0.0),
            out_dir: Some(out.to_path_buf()),
        }
    }
}

struct Io<'a> {
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

impl Io<'_> {
    fn usage(&mut self, msg: impl std::fmt::Display) -> i32 {
        let _ = writeln!(self.err, "error: {msg}");
        EXIT_USAGE
    }

    fn fail(&mut self, msg: impl std::fmt::Display) -> i32 {
        let _ = writeln!(self.err, "error: {msg}");
        EXIT_FAILURE
    }
}

pub fn execute<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let mut io = Io { out, err };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(io.err, "{text}")
            } else {
                write!(io.out, "{text}")
            };
            return code;
        }
    };
    match cli.command {
        Command::Compile { file, out } => compile(&mut io, &file, out.as_deref()),
        Command::Validate { file } => validate(&mut io, &file),
        Command::Export {
            file,
            out,
            force_meshes,
        } => export(&mut io, &file, &out, force_meshes),
        Command::Probe { file, query } => probe(&mut io, &file, &query),
        Command::Run {
            prompt,
            backend,
            script,
            out,
            initial,
            config,
        } => run(&mut io, &prompt, &backend, script.as_deref(), &out, initial.as_deref(), config.as_deref()),
        Command::Batch {
            prompts,
            workers,
            out,
            backend,
            scripts,
            config,
        } => batch_cmd(&mut io, &prompts, workers, &out, &backend, scripts.as_deref(), config.as_deref()),
        Command::Stats { traces, json } => stats(&mut io, &traces, json),
        Command::Rate { traces, id, score } => rate(&mut io, &traces, &id, score),
    }
}

fn load(io: &mut Io, file: &Path) -> Result<CompileOutcome, i32> {
    match std::fs::read_to_string(file) {
        Ok(src) => Ok(compile_source(&src, &ValidationOptions::default())),
        Err(e) => Err(io.usage(format!("cannot read {}: {e}", file.display()))),
    }
}

fn signals(outcome: &CompileOutcome) -> String {
    render_compile_signals(&outcome.report, &LoopState::default())
}

fn status_code(outcome: &CompileOutcome) -> i32 {
    match outcome.report.status() {
        Status::Success => EXIT_OK,
        Status::Failure => EXIT_FAILURE,
    }
}

fn compile(io: &mut Io, file: &Path, out: Option<&Path>) -> i32 {
    let mut outcome = match load(io, file) {
        Ok(o) => o,
        Err(c) => return c,
    };
    if let (Status::Success, Some(dir), Some(obj)) = (outcome.report.status(), out, &outcome.object) {
        if let Err(e) = export_urdf(obj, dir, &ExportOptions::default()) {
            return io.fail(e);
        }
        outcome.report.manifest = Some(dir.join(jointsmith_core::urdf::MANIFEST_FILE).display().to_string());
    }
    let _ = writeln!(io.out, "{}", signals(&outcome));
    status_code(&outcome)
}

fn validate(io: &mut Io, file: &Path) -> i32 {
    let outcome = match load(io, file) {
        Ok(o) => o,
        Err(c) => return c,
    };
    let _ = writeln!(io.out, "{}", signals(&outcome));
    for t in &outcome.report.tests {
        let mark = if t.passed { "pass" } else { "FAIL" };
        let _ = writeln!(io.out, "{mark} {} ({}): {}", t.label, t.kind, t.detail);
    }
    status_code(&outcome)
}

fn export(io: &mut Io, file: &Path, out: &Path, force_meshes: bool) -> i32 {
    let outcome = match load(io, file) {
        Ok(o) => o,
        Err(c) => return c,
    };
    let Some(obj) = outcome.object.as_ref().filter(|_| outcome.report.status() == Status::Success) else {
        let _ = writeln!(io.out, "{}", signals(&outcome));
        return EXIT_FAILURE;
    };
    let options = ExportOptions {
        force_meshes,
        ..ExportOptions::default()
    };
    match export_urdf(obj, out, &options) {
        Ok(m) => {
            let _ = writeln!(
                io.out,
                "exported {} ({} links, {} joints, {} mesh files) to {}",
                m.urdf,
                m.links,
                m.joints,
                m.meshes.len(),
                out.display()
            );
            EXIT_OK
        }
        Err(e) => io.fail(e),
    }
}

fn probe(io: &mut Io, file: &Path, query: &str) -> i32 {
    let outcome = match load(io, file) {
        Ok(o) => o,
        Err(c) => return c,
    };
    let (Some(obj), Some(tree), Some(meshes)) = (&outcome.object, &outcome.tree, &outcome.meshes) else {
        let _ = writeln!(io.out, "{}", signals(&outcome));
        return EXIT_FAILURE;
    };
    match run_probe(obj, tree, meshes, query, &ProbeOptions::default()) {
        Ok(v) => {
            let _ = writeln!(io.out, "{}", serde_json::to_string_pretty(&v).expect("probe output serializes"));
            EXIT_OK
        }
        Err(e) => io.fail(e),
    }
}

/// Builds the backend a session runs against.
pub fn make_backend(name: &str, script: Option<&Path>) -> Result<Box<dyn AgentBackend>, String> {
    match name {
        "scripted" => {
            let path = script.ok_or("the scripted backend needs --script")?;
            Ok(Box::new(ScriptedBackend::from_file(path).map_err(|e| e.to_string())?))
        }
        "http" => Ok(Box::new(HttpBackend::from_env().map_err(|e| e.to_string())?)),
        other => Err(format!("unknown backend '{other}'; expected scripted or http")),
    }
}

fn run(
    io: &mut Io,
    prompt: &str,
    backend: &str,
    script: Option<&Path>,
    out: &Path,
    initial: Option<&Path>,
    config: Option<&Path>,
) -> i32 {
    let settings = match RunSettings::load(config) {
        Ok(s) => s,
        Err(e) => return io.usage(e),
    };
    let initial_text = match initial.map(std::fs::read_to_string).transpose() {
        Ok(t) => t,
        Err(e) => return io.usage(format!("cannot read initial program: {e}")),
    };
    let mut b = match make_backend(backend, script) {
        Ok(b) => b,
        Err(e) => return io.usage(e),
    };
    let cfg = settings.session_config("run", backend, out);
    let (mut ws, mut state) = match open_workspace(prompt, initial_text.as_deref(), &cfg) {
        Ok(x) => x,
        Err(e) => return io.usage(e),
    };
    let outcome = run_session(&mut ws, &mut state, b.as_mut(), &cfg);
    if let Err(e) = append_trace(&out.join(TRACES_FILE), &outcome.trace) {
        return io.fail(e);
    }
    let _ = writeln!(
        io.out,
        "status={} turns={} prompt_tokens={} output_tokens={} cost={:.6}",
        outcome.status.as_str(),
        outcome.trace.turn_count,
        outcome.trace.cost.prompt_tokens,
        outcome.trace.cost.output_tokens,
        outcome.trace.cost.total_cost
    );
    if let Some(e) = &outcome.error {
        let _ = writeln!(io.err, "{e}");
    }
    match outcome.status {
        SessionStatus::Success => EXIT_OK,
        _ => EXIT_FAILURE,
    }
}

#[allow(clippy::too_many_arguments)]
fn batch_cmd(
    io: &mut Io,
    prompts: &Path,
    workers: usize,
    out: &Path,
    backend: &str,
    scripts: Option<&Path>,
    config: Option<&Path>,
) -> i32 {
    if workers == 0 {
        return io.usage("--workers must be at least 1");
    }
    if !["scripted", "http"].contains(&backend) {
        return io.usage(format!("unknown backend '{backend}'"));
    }
    let settings = match RunSettings::load(config) {
        Ok(s) => s,
        Err(e) => return io.usage(e),
    };
    let specs = match read_prompts(prompts) {
        Ok(s) => s,
        Err(e) => return io.usage(e),
    };
    let records = match run_batch(&specs, workers, out, backend, scripts, &settings) {
        Ok(r) => r,
        Err(e) => return io.fail(e),
    };
    for r in &records {
        let _ = writeln!(io.out, "{} status={} turns={}", r.id, r.status.as_str(), r.turns);
    }
    EXIT_OK
}

fn stats(io: &mut Io, traces: &Path, json: bool) -> i32 {
    let records = match read_traces(traces) {
        Ok(r) => r,
        Err(e) => return io.usage(e),
    };
    let stats = aggregate_stats(&records);
    let _ = if json {
        writeln!(io.out, "{}", serde_json::to_string_pretty(&stats).expect("stats serialize"))
    } else {
        write!(io.out, "{}", render_stats_table(&stats))
    };
    EXIT_OK
}

fn rate(io: &mut Io, traces: &Path, id: &str, score: u8) -> i32 {
    let mut records = match read_traces(traces) {
        Ok(r) => r,
        Err(e) => return io.usage(e),
    };
    let mut found = 0;
    for r in records.iter_mut().filter(|r| r.id == id) {
        if let Err(e) = r.rate(score) {
            return io.usage(e);
        }
        found += 1;
    }
    if found == 0 {
        return io.fail(format!("no trace with id '{id}' in {}", traces.display()));
    }
    if let Err(e) = write_traces(traces, &records) {
        return io.fail(e);
    }
    // keep the batch records next to the log in step
    let batch_path = traces.with_file_name(BATCH_FILE);
    if batch_path.is_file() {
        if let Err(e) = batch::rate_batch_record(&batch_path, id, score) {
            return io.fail(e);
        }
    }
    let verdict = if records.iter().any(|r| r.id == id && r.rejected_by_rating()) {
        "rejected"
    } else {
        "kept"
    };
    let _ = writeln!(io.out, "{id} rated {score}: {verdict}");
    EXIT_OK
}
