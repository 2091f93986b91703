//! Argument parsing and the `check` command.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};
use esst_core::concrete::{bounded_reach, OracleConfig};
use esst_core::esst::{run_esst_until, EsstOptions, EsstResult, Placement, PrecisionLedger};
use esst_core::frontend::Program;
use esst_core::logic::DEFAULT_MAX_PREDS;
use esst_core::por::PorMode;

use crate::bench::{bench_harness, BenchConfig};
use crate::report::{OracleOutcome, Report};
use crate::trace::{emit_trace, TraceFormat};
use crate::CliError;

pub const EXIT_SAFE: i32 = 0;
pub const EXIT_UNSAFE: i32 = 1;
pub const EXIT_UNKNOWN: i32 = 2;
pub const EXIT_ERROR: i32 = 3;

pub const DEFAULT_TIMEOUT_SECS: u64 = 60;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    None,
    Persistent,
    Sleep,
    Both,
}

impl From<Mode> for PorMode {
    fn from(m: Mode) -> PorMode {
        match m {
            Mode::None => PorMode::None,
            Mode::Persistent => PorMode::Persistent,
            Mode::Sleep => PorMode::Sleep,
            Mode::Both => PorMode::Both,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PlacementArg {
    Location,
    Thread,
}

impl From<PlacementArg> for Placement {
    fn from(p: PlacementArg) -> Placement {
        match p {
            PlacementArg::Location => Placement::Location,
            PlacementArg::Thread => Placement::Thread,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "esst-mc", version, about = "Model checker for cooperative threaded programs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check one program.
    Check(CheckArgs),
    /// Run every program in a directory under several reduction modes.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    pub file: PathBuf,
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_enum, default_value_t = Mode::Both)]
    pub por: Mode,
    /// Write the abstract reachability forest in DOT format.
    #[arg(long, value_name = "DOT-FILE")]
    pub dump_arf: Option<PathBuf>,
    /// Write the final predicates, one s-expression per line.
    #[arg(long, value_name = "FILE")]
    pub dump_smt: Option<PathBuf>,
    /// Write the key/value report.
    #[arg(long, value_name = "FILE")]
    pub report: Option<PathBuf>,
    /// Rendering of the counterexample on stdout.
    #[arg(long, value_enum, default_value_t = TraceFormat::Text)]
    pub trace_format: TraceFormat,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    pub dir: PathBuf,
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Mode::None, Mode::Persistent, Mode::Sleep, Mode::Both])]
    pub modes: Vec<Mode>,
    /// Append one run record per program and mode.
    #[arg(long, value_name = "FILE")]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Cross-check with the bounded interpreter: `<v1,v2,...>:<depth>` or `default`.
    #[arg(long, value_parser = parse_oracle, value_name = "VALUES:DEPTH")]
    pub oracle: Option<OracleConfig>,
    #[arg(long, default_value_t = DEFAULT_MAX_PREDS)]
    pub max_preds: usize,
    /// Per-run limit in seconds; 0 disables it.
    #[arg(long, default_value_t = DEFAULT_TIMEOUT_SECS, value_name = "SECS")]
    pub timeout: u64,
    #[arg(long, value_enum, default_value_t = PlacementArg::Location)]
    pub placement: PlacementArg,
}

pub fn parse_oracle(s: &str) -> Result<OracleConfig, String> {
    if s == "default" {
        return Ok(OracleConfig::default());
    }
    let (vals, depth) = s.rsplit_once(':').ok_or("expected `<v1,v2,...>:<depth>`")?;
    let value_set = vals
        .split(',')
        .map(|v| v.trim().parse::<i64>().map_err(|_| format!("bad value `{}`", v)))
        .collect::<Result<Vec<_>, _>>()?;
    let depth: usize = depth.trim().parse().map_err(|_| format!("bad depth `{}`", depth))?;
    if depth == 0 {
        return Err("depth must be at least 1".into());
    }
    Ok(OracleConfig { value_set, depth, ..OracleConfig::default() })
}

pub fn oracle_name(o: &OracleConfig) -> String {
    let vals: Vec<String> = o.value_set.iter().map(|v| v.to_string()).collect();
    format!("{}:{}", vals.join(","), o.depth)
}

/// Everything one checker run needs.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub input: PathBuf,
    pub mode: PorMode,
    pub oracle: Option<OracleConfig>,
    pub max_preds: usize,
    pub placement: Placement,
    pub timeout: Option<Duration>,
    pub dump_arf: Option<PathBuf>,
    pub dump_smt: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(input: impl Into<PathBuf>) -> Self {
        RunConfig {
            input: input.into(),
            mode: PorMode::Both,
            oracle: None,
            max_preds: DEFAULT_MAX_PREDS,
            placement: Placement::Location,
            timeout: Some(Duration::from_secs(DEFAULT_TIMEOUT_SECS)),
            dump_arf: None,
            dump_smt: None,
        }
    }

    pub fn options(&self) -> EsstOptions {
        let mut o = EsstOptions::default().with_por(self.mode);
        o.max_preds = self.max_preds;
        o.placement = self.placement;
        o
    }
}

pub fn load_program(path: &Path) -> Result<Program, CliError> {
    let src = std::fs::read_to_string(path).map_err(|e| CliError::Io { path: path.to_path_buf(), source: e })?;
    Program::from_source(&src).map_err(|e| CliError::Frontend { path: path.to_path_buf(), source: e })
}

/// Program name used in reports: the file stem.
pub fn program_name(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Runs the checker (and the oracle, if configured) on a parsed program.
pub fn check_program(p: &Program, name: &str, cfg: &RunConfig) -> (Report, EsstResult) {
    let start = Instant::now();
    let deadline = cfg.timeout.map(|t| start + t);
    let mut stop = || deadline.is_some_and(|d| Instant::now() >= d);
    let r = run_esst_until(p, &cfg.options(), &mut stop);
    let wall_ms = start.elapsed().as_millis();
    let mut report = Report::new(name, cfg.mode, cfg.max_preds, cfg.placement, &r, wall_ms);
    if report.reason.as_deref() == Some("interrupted") {
        if let Some(t) = cfg.timeout {
            report.reason = Some(format!("timeout after {} s", t.as_secs()));
        }
    }
    if let Some(o) = &cfg.oracle {
        report.oracle = Some(OracleOutcome::from_result(&bounded_reach(p, o)));
        report.oracle_config = Some(oracle_name(o));
    }
    (report, r)
}

pub fn exit_code(verdict: &str) -> i32 {
    match verdict {
        "SAFE" => EXIT_SAFE,
        "UNSAFE" => EXIT_UNSAFE,
        _ => EXIT_UNKNOWN,
    }
}

/// Predicates of a ledger as SMT-LIB-style text, grouped by comment lines.
pub fn ledger_smt(p: &Program, l: &PrecisionLedger) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "; global");
    for f in l.global.iter() {
        let _ = writeln!(s, "{}", f.to_smtlib());
    }
    for (t, th) in p.threads.iter().enumerate() {
        if !l.thread(t).is_empty() {
            let _ = writeln!(s, "; thread {}", th.name);
            for f in l.thread(t).iter() {
                let _ = writeln!(s, "{}", f.to_smtlib());
            }
        }
        for loc in l.locations_of(t).collect::<Vec<_>>() {
            let prec = l.location(t, loc);
            if prec.is_empty() {
                continue;
            }
            let _ = writeln!(s, "; thread {} location l{}", th.name, loc);
            for f in prec.iter() {
                let _ = writeln!(s, "{}", f.to_smtlib());
            }
        }
    }
    s
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Io { path: path.to_path_buf(), source: e })
}

/// The `check` command. Returns the exit code.
pub fn run_check(cfg: &RunConfig, report_path: Option<&Path>, fmt: TraceFormat, out: &mut dyn Write) -> Result<i32, CliError> {
    let p = load_program(&cfg.input)?;
    let (report, r) = check_program(&p, &program_name(&cfg.input), cfg);
    let mut text = report.render_human(&p);
    if fmt == TraceFormat::Structured {
        // Swap the numbered rendering for step records.
        if let Some(t) = &report.trace {
            let human = t.render(&p);
            text = text.replace(&human, &emit_trace(&p, t, fmt));
        }
    }
    out.write_all(text.as_bytes()).map_err(CliError::Stdout)?;
    if let Some(path) = &cfg.dump_arf {
        write_file(path, &r.arf.to_dot(&p))?;
    }
    if let Some(path) = &cfg.dump_smt {
        write_file(path, &ledger_smt(&p, &r.ledger))?;
    }
    if let Some(path) = report_path {
        write_file(path, &report.render_records(&p))?;
    }
    Ok(exit_code(report.verdict))
}

/// Parses `argv` (including the program name) and runs the command.
pub fn run_cli<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_SAFE };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(rendered.as_bytes()) } else { out.write_all(rendered.as_bytes()) };
            return code;
        }
    };
    let result = match cli.command {
        Command::Check(a) => {
            let cfg = RunConfig {
                input: a.file,
                mode: a.por.into(),
                oracle: a.common.oracle,
                max_preds: a.common.max_preds,
                placement: a.common.placement.into(),
                timeout: timeout(a.common.timeout),
                dump_arf: a.dump_arf,
                dump_smt: a.dump_smt,
            };
            run_check(&cfg, a.report.as_deref(), a.trace_format, out)
        }
        Command::Bench(a) => {
            let cfg = BenchConfig {
                modes: a.modes.into_iter().map(PorMode::from).collect(),
                oracle: a.common.oracle,
                max_preds: a.common.max_preds,
                placement: a.common.placement.into(),
                timeout: timeout(a.common.timeout),
            };
            bench_harness(&a.dir, &cfg).and_then(|table| {
                out.write_all(table.render().as_bytes()).map_err(CliError::Stdout)?;
                if let Some(path) = &a.report {
                    write_file(path, &table.render_records())?;
                }
                Ok(if table.all_ok() { 0 } else { 1 })
            })
        }
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e);
            EXIT_ERROR
        }
    }
}

fn timeout(secs: u64) -> Option<Duration> {
    (secs > 0).then(|| Duration::from_secs(secs))
}
