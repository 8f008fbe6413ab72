//! Cycle reports and the top-level simulation driver.

use std::fmt::Write as _;

use frodo_core::drbg::CtrDrbg;
use frodo_core::kem::{self, EncapsRandomness, KeygenRandomness};
use frodo_core::SecurityLevel;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::isa::Opcode;
use crate::machine::{Machine, MachineConfig, SimError, SimInputs, SimOutputs};
use crate::programs::{build_program, Phase};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpLine {
    pub opcode: Opcode,
    pub count: u64,
    pub cycles: u64,
    /// Share of the summed execution cycles.
    pub percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleReport {
    pub level: SecurityLevel,
    pub phase: Phase,
    pub overlap: bool,
    pub ops: Vec<OpLine>,
    /// Issue overhead summed over all instructions.
    pub issue_overhead: u64,
    pub total: u64,
    /// Sum of all latencies, as if nothing overlapped.
    pub serial_total: u64,
    pub ratio: f64,
    /// Cycles with two instructions in flight.
    pub overlap_savings: u64,
    pub output_digest: Option<String>,
    pub hazards: usize,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("report line {line}: {msg}")]
pub struct ReportParseError {
    pub line: usize,
    pub msg: String,
}

impl CycleReport {
    pub fn from_machine(m: &Machine, output_digest: Option<String>) -> Self {
        let prog = m.program().expect("program loaded");
        let exec: u64 = Opcode::ALL.iter().map(|op| m.tally(*op).cycles).sum();
        let ops = Opcode::ALL
            .iter()
            .map(|op| {
                let t = m.tally(*op);
                OpLine {
                    opcode: *op,
                    count: t.count,
                    cycles: t.cycles,
                    percent: if exec == 0 {
                        0.0
                    } else {
                        100.0 * t.cycles as f64 / exec as f64
                    },
                }
            })
            .collect();
        let issue_overhead: u64 = Opcode::ALL.iter().map(|op| m.tally(*op).overhead).sum();
        let serial_total = exec + issue_overhead;
        let total = m.cycle();
        CycleReport {
            level: prog.level,
            phase: prog.phase,
            overlap: prog.overlap,
            ops,
            issue_overhead,
            total,
            serial_total,
            ratio: if serial_total == 0 {
                1.0
            } else {
                total as f64 / serial_total as f64
            },
            overlap_savings: m.overlap_savings(),
            output_digest,
            hazards: m.hazards().len(),
        }
    }

    pub fn op(&self, op: Opcode) -> OpLine {
        *self.ops.iter().find(|l| l.opcode == op).expect("all opcodes listed")
    }

    /// Latency in microseconds at `mhz`.
    pub fn latency_us(&self, mhz: f64) -> f64 {
        self.total as f64 / mhz
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "level {}", self.level);
        let _ = writeln!(s, "phase {}", self.phase);
        let _ = writeln!(s, "overlap {}", if self.overlap { "on" } else { "off" });
        for l in &self.ops {
            let _ = writeln!(
                s,
                "op {} {} {} {:.2}",
                l.opcode.mnemonic(),
                l.count,
                l.cycles,
                l.percent
            );
        }
        let _ = writeln!(s, "issue_overhead {}", self.issue_overhead);
        let _ = writeln!(s, "total {}", self.total);
        let _ = writeln!(s, "serial_total {}", self.serial_total);
        let _ = writeln!(s, "ratio {:.4}", self.ratio);
        let _ = writeln!(s, "overlap_savings {}", self.overlap_savings);
        let _ = writeln!(s, "hazards {}", self.hazards);
        if let Some(d) = &self.output_digest {
            let _ = writeln!(s, "output_digest {d}");
        }
        s
    }

    /// Reads back the output of [`CycleReport::to_text`].
    pub fn parse_text(text: &str) -> Result<Self, ReportParseError> {
        let mut level = None;
        let mut phase = None;
        let mut overlap = None;
        let mut ops = Vec::new();
        let mut nums = std::collections::HashMap::new();
        let mut ratio = None;
        let mut digest = None;
        for (i, line) in text.lines().enumerate() {
            let err = |msg: &str| ReportParseError {
                line: i + 1,
                msg: msg.to_string(),
            };
            let mut parts = line.split_whitespace();
            let Some(key) = parts.next() else { continue };
            let rest: Vec<&str> = parts.collect();
            let one = || rest.first().copied().ok_or_else(|| err("missing value"));
            match key {
                "level" => level = Some(one()?.parse::<SecurityLevel>().map_err(|e| err(&e.to_string()))?),
                "phase" => phase = Some(one()?.parse::<Phase>().map_err(|e| err(&e))?),
                "overlap" => {
                    overlap = Some(match one()? {
                        "on" => true,
                        "off" => false,
                        _ => return Err(err("overlap must be on or off")),
                    })
                }
                "op" => {
                    if rest.len() != 4 {
                        return Err(err("op line needs four fields"));
                    }
                    let opcode = Opcode::from_mnemonic(rest[0]).ok_or_else(|| err("unknown opcode"))?;
                    let num = |s: &str| s.parse::<u64>().map_err(|_| err("bad number"));
                    ops.push(OpLine {
                        opcode,
                        count: num(rest[1])?,
                        cycles: num(rest[2])?,
                        percent: rest[3].parse().map_err(|_| err("bad percentage"))?,
                    });
                }
                "ratio" => ratio = Some(one()?.parse::<f64>().map_err(|_| err("bad ratio"))?),
                "output_digest" => digest = Some(one()?.to_string()),
                "issue_overhead" | "total" | "serial_total" | "overlap_savings" | "hazards" => {
                    let v = one()?.parse::<u64>().map_err(|_| err("bad number"))?;
                    nums.insert(key, v);
                }
                _ => return Err(err("unknown key")),
            }
        }
        let missing = |what: &str| ReportParseError {
            line: 0,
            msg: format!("missing {what}"),
        };
        let num = |k: &str| nums.get(k).copied().ok_or_else(|| missing(k));
        if ops.len() != Opcode::ALL.len() {
            return Err(missing("opcode lines"));
        }
        Ok(CycleReport {
            level: level.ok_or_else(|| missing("level"))?,
            phase: phase.ok_or_else(|| missing("phase"))?,
            overlap: overlap.ok_or_else(|| missing("overlap"))?,
            ops,
            issue_overhead: num("issue_overhead")?,
            total: num("total")?,
            serial_total: num("serial_total")?,
            ratio: ratio.ok_or_else(|| missing("ratio"))?,
            overlap_savings: num("overlap_savings")?,
            output_digest: digest,
            hazards: num("hazards")? as usize,
        })
    }
}

/// Runs one phase. Without inputs only timing is simulated.
pub fn simulate(
    level: SecurityLevel,
    phase: Phase,
    overlap: bool,
    inputs: Option<&SimInputs>,
    config: MachineConfig,
) -> Result<(CycleReport, Option<SimOutputs>), SimError> {
    let config = MachineConfig {
        functional: inputs.is_some(),
        ..config
    };
    let mut m = Machine::new(level, config);
    m.load_program(build_program(level, phase, overlap))?;
    if let Some(inputs) = inputs {
        m.load_inputs(inputs)?;
    }
    m.run_to_halt()?;
    let outputs = match inputs {
        Some(_) => Some(m.outputs()?),
        None => None,
    };
    let digest = outputs.as_ref().map(SimOutputs::digest);
    Ok((CycleReport::from_machine(&m, digest), outputs))
}

/// Derives inputs for `phase` from a 48-byte DRBG seed, the same way the
/// KAT harness draws randomness.
pub fn inputs_from_seed(level: SecurityLevel, phase: Phase, seed: &[u8]) -> frodo_core::Result<SimInputs> {
    let p = level.params();
    let mut drbg = CtrDrbg::new(seed, None)?;
    let kr_bytes = drbg.bytes(p.len_keygen_randomness());
    if phase == Phase::KeyGen {
        return Ok(SimInputs::KeyGen { randomness: kr_bytes });
    }
    let kp = kem::keygen(level, &KeygenRandomness::from_bytes(level, &kr_bytes)?)?;
    let er_bytes = drbg.bytes(p.len_encaps_randomness());
    if phase == Phase::Encaps {
        return Ok(SimInputs::Encaps {
            pk: kp.pk.as_bytes().to_vec(),
            randomness: er_bytes,
        });
    }
    let (ct, _) = kem::encaps(level, &kp.pk, &EncapsRandomness::from_bytes(level, &er_bytes)?)?;
    Ok(SimInputs::Decaps {
        sk: kp.sk.as_bytes().to_vec(),
        ct: ct.as_bytes().to_vec(),
    })
}

/// Runs the software KEM on the same inputs, for comparison.
pub fn reference_outputs(level: SecurityLevel, inputs: &SimInputs) -> frodo_core::Result<SimOutputs> {
    Ok(match inputs {
        SimInputs::KeyGen { randomness } => {
            let kp = kem::keygen(level, &KeygenRandomness::from_bytes(level, randomness)?)?;
            SimOutputs::KeyGen {
                pk: kp.pk.as_bytes().to_vec(),
                sk: kp.sk.as_bytes().to_vec(),
            }
        }
        SimInputs::Encaps { pk, randomness } => {
            let pk = kem::PublicKey::from_bytes(level, pk)?;
            let (ct, ss) = kem::encaps(level, &pk, &EncapsRandomness::from_bytes(level, randomness)?)?;
            SimOutputs::Encaps {
                ct: ct.as_bytes().to_vec(),
                ss: ss.as_bytes().to_vec(),
            }
        }
        SimInputs::Decaps { sk, ct } => {
            let sk = kem::SecretKey::from_bytes(level, sk)?;
            let ct = kem::Ciphertext::from_bytes(level, ct)?;
            SimOutputs::Decaps {
                ss: kem::decaps(level, &sk, &ct)?.as_bytes().to_vec(),
            }
        }
    })
}

/// Published totals in thousands of cycles: (dual issue, single issue).
pub fn published_kcycles(level: SecurityLevel, phase: Phase) -> (f64, f64) {
    use Phase::*;
    use SecurityLevel::*;
    match (level, phase) {
        (Frodo640, KeyGen) => (178.5, 295.3),
        (Frodo640, Encaps) => (182.0, 296.5),
        (Frodo640, Decaps) => (183.5, 298.0),
        (Frodo976, KeyGen) => (371.4, 631.5),
        (Frodo976, Encaps) => (377.2, 633.8),
        (Frodo976, Decaps) => (379.5, 636.1),
        (Frodo1344, KeyGen) => (656.6, 1114.4),
        (Frodo1344, Encaps) => (664.4, 1117.4),
        (Frodo1344, Decaps) => (667.3, 1120.4),
    }
}

/// Published with/without ratios in percent, as printed.
pub fn published_ratio_percent(level: SecurityLevel, phase: Phase) -> f64 {
    use Phase::*;
    use SecurityLevel::*;
    match (level, phase) {
        (Frodo640, KeyGen) => 60.4,
        (Frodo640, Encaps) => 61.3,
        (Frodo640, Decaps) => 61.5,
        (Frodo976, KeyGen) => 58.8,
        (Frodo976, Encaps) => 59.5,
        (Frodo976, Decaps) => 59.6,
        (Frodo1344, KeyGen) => 58.9,
        (Frodo1344, Encaps) => 59.4,
        (Frodo1344, Decaps) => 59.5,
    }
}

/// Published KeyGen-640 per-opcode cycles for the array unit.
pub const KEYGEN_640_MUL: u64 = 107_520;
pub const KEYGEN_640_MBR: u64 = 1_280;
pub const KEYGEN_640_MBW: u64 = 1_280;
pub const KEYGEN_640_TOTAL: (u64, u64) = (178_561, 295_300);

/// Clock of the reference implementation.
pub const CLOCK_MHZ: f64 = 207.0;

/// Fits the three timing parameters on KeyGen-640: the MUL fill from the
/// published MUL cycles, then absorb setup and issue overhead by grid
/// search against the totals with and without dual issue. Returns the
/// configuration and its worst relative error on the two totals.
pub fn calibrate(base: MachineConfig) -> Result<(MachineConfig, f64), SimError> {
    let level = SecurityLevel::Frodo640;
    let mut cfg = base;
    cfg.timing.mul_fill = 0;
    let (bare, _) = simulate(level, Phase::KeyGen, true, None, cfg)?;
    let mul = bare.op(Opcode::Mul);
    cfg.timing.mul_fill = KEYGEN_640_MUL.saturating_sub(mul.cycles) / mul.count.max(1);

    let mut best: Option<(MachineConfig, f64)> = None;
    for setup in 0..=120 {
        for overhead in 0..=8 {
            cfg.timing.absorb_setup = setup;
            cfg.timing.issue_overhead = overhead;
            let (with, _) = simulate(level, Phase::KeyGen, true, None, cfg)?;
            let (without, _) = simulate(level, Phase::KeyGen, false, None, cfg)?;
            let e1 = (with.total as f64 / KEYGEN_640_TOTAL.0 as f64 - 1.0).abs();
            let e2 = (without.total as f64 / KEYGEN_640_TOTAL.1 as f64 - 1.0).abs();
            let err = e1.max(e2);
            if best.as_ref().is_none_or(|(_, b)| err < *b) {
                best = Some((cfg, err));
            }
        }
    }
    Ok(best.expect("non-empty grid"))
}

/// Published latencies in ms: (207 MHz part, 501 MHz part).
pub fn published_latency_ms(level: SecurityLevel, phase: Phase) -> (f64, f64) {
    use Phase::*;
    use SecurityLevel::*;
    match (level, phase) {
        (Frodo640, KeyGen) => (0.859, 0.356),
        (Frodo640, Encaps) => (0.876, 0.363),
        (Frodo640, Decaps) => (0.883, 0.366),
        (Frodo976, KeyGen) => (1.788, 0.741),
        (Frodo976, Encaps) => (1.815, 0.753),
        (Frodo976, Decaps) => (1.826, 0.757),
        (Frodo1344, KeyGen) => (3.160, 1.310),
        (Frodo1344, Encaps) => (3.197, 1.326),
        (Frodo1344, Decaps) => (3.212, 1.332),
    }
}

pub const FAST_CLOCK_MHZ: f64 = 501.0;
