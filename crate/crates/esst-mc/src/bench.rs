//! Benchmark harness: every program of a directory under every mode.
//!
//! Expected verdicts come from an optional `expected.txt` in the directory,
//! one `<program> <VERDICT>` pair per line, `#` starting a comment. A row is
//! flagged when its verdict differs from the expected one, when the modes
//! disagree on a program, or when the oracle contradicts the verdict.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Duration;

use esst_core::concrete::OracleConfig;
use esst_core::esst::Placement;
use esst_core::por::PorMode;

use crate::cli::{check_program, load_program, program_name, RunConfig};
use crate::kv::Record;
use crate::report::Report;
use crate::CliError;

pub const EXPECTED_FILE: &str = "expected.txt";
pub const PROGRAM_EXT: &str = "tp";

#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub modes: Vec<PorMode>,
    pub oracle: Option<OracleConfig>,
    pub max_preds: usize,
    pub placement: Placement,
    pub timeout: Option<Duration>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        let base = RunConfig::new("");
        BenchConfig {
            modes: PorMode::ALL.to_vec(),
            oracle: None,
            max_preds: base.max_preds,
            placement: base.placement,
            timeout: base.timeout,
        }
    }
}

#[derive(Clone, Debug)]
pub struct BenchRow {
    pub report: Report,
    pub expected: Option<String>,
    pub flags: Vec<&'static str>,
}

impl BenchRow {
    pub fn ok(&self) -> bool {
        self.flags.is_empty()
    }
}

#[derive(Clone, Debug, Default)]
pub struct BenchTable {
    pub rows: Vec<BenchRow>,
}

impl BenchTable {
    pub fn all_ok(&self) -> bool {
        self.rows.iter().all(BenchRow::ok)
    }

    /// Rows of one program keyed by mode.
    pub fn by_program(&self) -> BTreeMap<&str, BTreeMap<PorMode, &BenchRow>> {
        let mut m: BTreeMap<&str, BTreeMap<PorMode, &BenchRow>> = BTreeMap::new();
        for r in &self.rows {
            m.entry(r.report.program.as_str()).or_default().insert(r.report.mode, r);
        }
        m
    }

    pub fn nodes(&self, program: &str, mode: PorMode) -> Option<usize> {
        self.rows
            .iter()
            .find(|r| r.report.program == program && r.report.mode == mode)
            .map(|r| r.report.stats.arf_nodes)
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<24} {:<10} {:<8} {:<8} {:>9} {:>6} {:>9} {:<15} flags",
            "program", "mode", "verdict", "expected", "nodes", "refs", "ms", "oracle"
        );
        for r in &self.rows {
            let rep = &r.report;
            let _ = writeln!(
                s,
                "{:<24} {:<10} {:<8} {:<8} {:>9} {:>6} {:>9} {:<15} {}",
                rep.program,
                rep.mode.name(),
                rep.verdict,
                r.expected.as_deref().unwrap_or("-"),
                rep.stats.arf_nodes,
                rep.stats.refinements,
                rep.wall_ms,
                rep.oracle.as_ref().map_or("-", |o| o.name()),
                if r.ok() { "ok".to_string() } else { r.flags.join(",") }
            );
        }
        s
    }

    pub fn render_records(&self) -> String {
        let mut s = String::new();
        for r in &self.rows {
            let mut rec: Record = r.report.run_record();
            rec.push("expected", r.expected.as_deref().unwrap_or("-"));
            rec.push("flags", if r.ok() { "ok".to_string() } else { r.flags.join(",") });
            s.push_str(&rec.render());
            s.push('\n');
        }
        s
    }
}

/// Parses an expected-verdict sidecar.
pub fn parse_expected(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut m = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        match (parts.next(), parts.next(), parts.next()) {
            (Some(p), Some(v @ ("SAFE" | "UNSAFE")), None) => {
                m.insert(p.to_string(), v.to_string());
            }
            _ => return Err(CliError::Expected { line: n + 1, text: line.to_string() }),
        }
    }
    Ok(m)
}

/// Program files of `dir`, sorted by name.
pub fn corpus_files(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let io = |e| CliError::Io { path: dir.to_path_buf(), source: e };
    let mut files = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(io)? {
        let path = entry.map_err(io)?.path();
        if path.is_file() && path.extension().is_some_and(|x| x == PROGRAM_EXT) {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

pub fn bench_harness(dir: &Path, cfg: &BenchConfig) -> Result<BenchTable, CliError> {
    let files = corpus_files(dir)?;
    let sidecar = dir.join(EXPECTED_FILE);
    let expected = if sidecar.is_file() {
        let text = std::fs::read_to_string(&sidecar).map_err(|e| CliError::Io { path: sidecar.clone(), source: e })?;
        parse_expected(&text)?
    } else {
        BTreeMap::new()
    };
    let mut table = BenchTable::default();
    for file in files {
        let name = program_name(&file);
        let p = load_program(&file)?;
        let first = table.rows.len();
        for (i, &mode) in cfg.modes.iter().enumerate() {
            let run = RunConfig {
                input: file.clone(),
                mode,
                // The oracle does not depend on the mode; run it once.
                oracle: if i == 0 { cfg.oracle.clone() } else { None },
                max_preds: cfg.max_preds,
                placement: cfg.placement,
                timeout: cfg.timeout,
                dump_arf: None,
                dump_smt: None,
            };
            let (report, _) = check_program(&p, &name, &run);
            let exp = expected.get(&name).cloned();
            let mut flags = Vec::new();
            if report.verdict == "UNKNOWN" {
                flags.push("unknown");
            }
            if exp.as_deref().is_some_and(|e| e != report.verdict) {
                flags.push("mismatch");
            }
            if report.oracle.as_ref().is_some_and(|o| o.disagrees_with(report.verdict)) {
                flags.push("oracle");
            }
            table.rows.push(BenchRow { report, expected: exp, flags });
        }
        let verdicts: Vec<&str> = table.rows[first..].iter().map(|r| r.report.verdict).collect();
        if verdicts.windows(2).any(|w| w[0] != w[1]) {
            for r in &mut table.rows[first..] {
                r.flags.push("modes-disagree");
            }
        }
    }
    Ok(table)
}
