use std::path::Path;

use frodo_core::drbg::kat_seeds;
use frodo_core::SecurityLevel;
use frodo_sim::report::{
    inputs_from_seed, published_kcycles, published_latency_ms, published_ratio_percent, reference_outputs, simulate,
    CLOCK_MHZ, KEYGEN_640_MBR, KEYGEN_640_MBW, KEYGEN_640_MUL,
};
use frodo_sim::{CycleReport, MachineConfig, Opcode, Phase, SimError};
use serde::Serialize;

use crate::error::{CliError, CliResult};

/// One comparison against a published number.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub target: f64,
    pub tolerance: String,
    pub pass: bool,
}

#[derive(Debug, Serialize)]
pub struct SimRun {
    pub report: CycleReport,
    /// The same phase and inputs with the other overlap setting.
    pub counterpart: CycleReport,
    pub checks: Vec<Check>,
}

#[derive(Serialize)]
struct Summary<'a> {
    runs: &'a [SimRun],
    passed: bool,
}

fn relative(name: String, value: f64, target: f64, tol: f64) -> Check {
    Check {
        name,
        value,
        target,
        tolerance: format!("±{}%", tol * 100.0),
        pass: (value / target - 1.0).abs() <= tol,
    }
}

fn sim_err(level: SecurityLevel, phase: Phase, e: SimError) -> CliError {
    CliError::Sim(format!("{level}/{phase}: {e}"))
}

pub fn run_one(level: SecurityLevel, phase: Phase, overlap: bool, seed: &[u8]) -> CliResult<SimRun> {
    let inputs = inputs_from_seed(level, phase, seed).map_err(|e| CliError::Length(e.to_string()))?;
    let cfg = MachineConfig::default();
    let (report, out) = simulate(level, phase, overlap, Some(&inputs), cfg).map_err(|e| sim_err(level, phase, e))?;
    let (counterpart, out2) =
        simulate(level, phase, !overlap, Some(&inputs), cfg).map_err(|e| sim_err(level, phase, e))?;
    let want = reference_outputs(level, &inputs).map_err(|e| CliError::Length(e.to_string()))?;

    let (with, without) = if overlap {
        (&report, &counterpart)
    } else {
        (&counterpart, &report)
    };
    let (kw, kwo) = published_kcycles(level, phase);
    let mut checks = vec![
        relative("total with overlap (kCC)".into(), with.total as f64 / 1e3, kw, 0.10),
        relative(
            "total without overlap (kCC)".into(),
            without.total as f64 / 1e3,
            kwo,
            0.10,
        ),
    ];
    let ratio = 100.0 * with.total as f64 / without.total as f64;
    let target = published_ratio_percent(level, phase);
    checks.push(Check {
        name: "ratio (%)".into(),
        value: ratio,
        target,
        tolerance: "±3 pp, within [57, 63]".into(),
        pass: (ratio - target).abs() <= 3.0 && (57.0..=63.0).contains(&ratio),
    });
    let (ms, _) = published_latency_ms(level, phase);
    checks.push(relative(
        format!("latency at {CLOCK_MHZ} MHz (ms)"),
        with.total as f64 / CLOCK_MHZ / 1e3,
        ms,
        0.10,
    ));
    if level == SecurityLevel::Frodo640 && phase == Phase::KeyGen {
        for (op, t) in [
            (Opcode::Mul, KEYGEN_640_MUL),
            (Opcode::Mbr, KEYGEN_640_MBR),
            (Opcode::Mbw, KEYGEN_640_MBW),
        ] {
            checks.push(relative(
                format!("{} cycles", op.mnemonic()),
                report.op(op).cycles as f64,
                t as f64,
                0.05,
            ));
        }
    }
    let matches = out.as_ref() == Some(&want) && out == out2;
    checks.push(Check {
        name: "outputs match software KEM".into(),
        value: matches as u8 as f64,
        target: 1.0,
        tolerance: "exact".into(),
        pass: matches,
    });
    let clean = report.hazards + counterpart.hazards;
    checks.push(Check {
        name: "hazards".into(),
        value: clean as f64,
        target: 0.0,
        tolerance: "exact".into(),
        pass: clean == 0,
    });
    Ok(SimRun {
        report,
        counterpart,
        checks,
    })
}

pub fn render(runs: &[SimRun]) -> String {
    let mut s = String::new();
    for r in runs {
        let rep = &r.report;
        s.push_str(&format!(
            "{} {} overlap {}: {} cycles (serial {}), digest {}\n",
            rep.level.name(),
            rep.phase,
            if rep.overlap { "on" } else { "off" },
            rep.total,
            rep.serial_total,
            rep.output_digest.as_deref().unwrap_or("-")
        ));
        for op in &rep.ops {
            if op.count > 0 {
                s.push_str(&format!(
                    "  {:<4} {:>6} x {:>9} cycles {:>6.2}%\n",
                    op.opcode.mnemonic(),
                    op.count,
                    op.cycles,
                    op.percent
                ));
            }
        }
        s.push_str(&format!("  issue overhead {}\n", rep.issue_overhead));
        for c in &r.checks {
            let delta = if c.target != 0.0 {
                format!("{:+.2}%", (c.value / c.target - 1.0) * 100.0)
            } else {
                String::from("-")
            };
            s.push_str(&format!(
                "  {:<32} {:>12.3} target {:>12.3} {:>8} {:<24} {}\n",
                c.name,
                c.value,
                c.target,
                delta,
                c.tolerance,
                if c.pass { "PASS" } else { "FAIL" }
            ));
        }
    }
    s
}

pub fn run(
    levels: &[SecurityLevel],
    phases: &[Phase],
    overlap: bool,
    seed: Option<&[u8]>,
    report_path: Option<&Path>,
    json: bool,
) -> CliResult<bool> {
    let default_seed = kat_seeds(1)[0];
    let seed = seed.unwrap_or(&default_seed);
    let combos: Vec<(SecurityLevel, Phase)> = levels
        .iter()
        .flat_map(|l| phases.iter().map(move |p| (*l, *p)))
        .collect();
    let results: Vec<CliResult<SimRun>> = std::thread::scope(|s| {
        let handles: Vec<_> = combos
            .iter()
            .map(|(l, p)| s.spawn(move || run_one(*l, *p, overlap, seed)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("worker panicked"))
            .collect()
    });
    let runs = results.into_iter().collect::<CliResult<Vec<_>>>()?;
    let passed = runs.iter().all(|r| r.checks.iter().all(|c| c.pass));
    if let Some(path) = report_path {
        let body = if json {
            let reports: Vec<&CycleReport> = runs.iter().map(|r| &r.report).collect();
            serde_json::to_string_pretty(&reports).expect("plain data")
        } else {
            runs.iter()
                .map(|r| r.report.to_text())
                .collect::<Vec<_>>()
                .join("---\n")
        };
        std::fs::write(path, body).map_err(|e| CliError::io(path, e))?;
    }
    if json {
        let summary = Summary { runs: &runs, passed };
        outln!("{}", serde_json::to_string_pretty(&summary).expect("plain data"));
    } else {
        out!("{}", render(&runs));
        outln!(
            "{}",
            if passed {
                "all checks passed"
            } else {
                "some checks failed"
            }
        );
    }
    Ok(passed)
}
