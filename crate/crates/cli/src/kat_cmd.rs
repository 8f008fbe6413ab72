use std::path::Path;

use frodo_core::kat::{parse_rsp, replay, KatReport};
use frodo_core::SecurityLevel;
use serde::Serialize;

use crate::error::{CliError, CliResult};

#[derive(Serialize)]
struct VectorJson<'a> {
    count: usize,
    pass: bool,
    mismatches: &'a [&'static str],
    error: Option<&'a str>,
}

#[derive(Serialize)]
struct SummaryJson<'a> {
    level: String,
    total: usize,
    passed: usize,
    failed: usize,
    vectors: Vec<VectorJson<'a>>,
}

fn infer_level(sk_len: usize) -> Option<SecurityLevel> {
    SecurityLevel::ALL.into_iter().find(|l| l.params().len_sk() == sk_len)
}

/// Replays an .rsp file. Returns whether every vector passed.
pub fn run(level: Option<SecurityLevel>, rsp: &Path, json: bool) -> CliResult<bool> {
    let text = std::fs::read_to_string(rsp).map_err(|e| CliError::io(rsp, e))?;
    let vectors = parse_rsp(&text).map_err(|e| CliError::Parse(format!("{}: {e}", rsp.display())))?;
    let level = match level {
        Some(l) => l,
        None => infer_level(vectors[0].sk.len()).ok_or_else(|| {
            CliError::Length(format!(
                "cannot infer level from a {}-byte secret key; pass --level",
                vectors[0].sk.len()
            ))
        })?,
    };
    let report = replay(level, &vectors);
    if json {
        outln!("{}", to_json(&report));
    } else {
        out!("{}", to_text(&report));
    }
    Ok(report.all_passed())
}

pub fn to_text(report: &KatReport) -> String {
    let mut s = String::new();
    for o in &report.outcomes {
        if o.passed() {
            s.push_str(&format!("count {}: PASS\n", o.count));
        } else if let Some(e) = &o.error {
            s.push_str(&format!("count {}: FAIL ({e})\n", o.count));
        } else {
            s.push_str(&format!("count {}: FAIL ({})\n", o.count, o.mismatches.join(",")));
        }
    }
    let total = report.outcomes.len();
    s.push_str(&format!(
        "{}: {}/{} passed, {} failed\n",
        report.level.name(),
        report.passed(),
        total,
        total - report.passed()
    ));
    s
}

pub fn to_json(report: &KatReport) -> String {
    let total = report.outcomes.len();
    let summary = SummaryJson {
        level: report.level.to_string(),
        total,
        passed: report.passed(),
        failed: total - report.passed(),
        vectors: report
            .outcomes
            .iter()
            .map(|o| VectorJson {
                count: o.count,
                pass: o.passed(),
                mismatches: &o.mismatches,
                error: o.error.as_deref(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&summary).expect("plain data")
}
