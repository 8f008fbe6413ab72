//! The cycle-stepped machine: dispatcher, hash unit, array and memory.

use frodo_core::codec::{decode, encode, pack, pack_words, unpack};
use frodo_core::kem::verify_select;
use frodo_core::matrix::{add_block, block_update, mac_block_product, Accumulate, Block2x4, Block4x4, MatrixZq};
use frodo_core::sampling::samples_from_bytes;
use frodo_core::xof::Shake;
use frodo_core::{ParameterSet, SecurityLevel, ShakeVariant};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dispatch::{
    accesses_collide, conflict_from_parts, footprint, weights_span, Access, Conflict, DispatchState,
};
use crate::isa::{HashInput, Instruction, LeftOperand, MbrTarget, MulOp, Opcode, SpongeInit, SqueezeDest};
use crate::memory::{ABuffer, ByteSlot, Layout, MatRef, Memory, MemoryMap, SmallSlot, Span, Touched, DEPTH};
use crate::programs::{Phase, Program};
use crate::timing::{self, TimingParams};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("instruction {index}: {reason}")]
    Load { index: usize, reason: String },
    #[error("no program loaded")]
    NoProgram,
    #[error("inputs are for {found}, program is {expected}")]
    InputMismatch { expected: Phase, found: Phase },
    #[error("input {what}: {reason}")]
    BadInput { what: &'static str, reason: String },
    #[error("deadlock at cycle {cycle}: instruction {head} can never issue (next: {next:?})")]
    Deadlock {
        cycle: u64,
        head: usize,
        next: Option<usize>,
    },
    #[error("instruction {index}: {reason}")]
    Exec { index: usize, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MachineConfig {
    pub timing: TimingParams,
    /// Overlap the hash unit's I/O with its permutations.
    pub hash_io_overlap: bool,
    /// Move data; when off only timing and bookkeeping run.
    pub functional: bool,
}

impl Default for MachineConfig {
    fn default() -> Self {
        MachineConfig {
            timing: TimingParams::default(),
            hash_io_overlap: true,
            functional: true,
        }
    }
}

/// Data placed in memory before cycle 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SimInputs {
    KeyGen { randomness: Vec<u8> },
    Encaps { pk: Vec<u8>, randomness: Vec<u8> },
    Decaps { sk: Vec<u8>, ct: Vec<u8> },
}

impl SimInputs {
    pub fn phase(&self) -> Phase {
        match self {
            SimInputs::KeyGen { .. } => Phase::KeyGen,
            SimInputs::Encaps { .. } => Phase::Encaps,
            SimInputs::Decaps { .. } => Phase::Decaps,
        }
    }
}

/// Results read back from memory after halt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum SimOutputs {
    KeyGen { pk: Vec<u8>, sk: Vec<u8> },
    Encaps { ct: Vec<u8>, ss: Vec<u8> },
    Decaps { ss: Vec<u8> },
}

impl SimOutputs {
    /// SHAKE256 digest over the outputs, for comparing runs.
    pub fn digest(&self) -> String {
        let parts: Vec<&[u8]> = match self {
            SimOutputs::KeyGen { pk, sk } => vec![pk, sk],
            SimOutputs::Encaps { ct, ss } => vec![ct, ss],
            SimOutputs::Decaps { ss } => vec![ss],
        };
        let d = frodo_core::xof::shake_parts(ShakeVariant::Shake256, &parts, 16);
        d.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpTally {
    pub count: u64,
    /// Execution cycles, excluding issue overhead.
    pub cycles: u64,
    pub overhead: u64,
}

/// A timing hazard found by the access monitor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hazard {
    pub cycle: u64,
    pub earlier: usize,
    pub later: usize,
    pub kind: String,
}

/// Record of one issued instruction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IssueRecord {
    pub index: usize,
    pub opcode: Opcode,
    pub issue: u64,
    pub end: u64,
    pub cycles: u64,
}

#[derive(Debug, Clone)]
struct InFlight {
    index: usize,
    end: u64,
    touched: Touched,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum AccState {
    Empty,
    Loaded(usize, usize),
    Result(usize, usize),
}

#[derive(Debug, Clone)]
struct HashUnit {
    sponge: Option<Shake>,
    saved: Option<Shake>,
    variant: ShakeVariant,
    absorbed: usize,
    saved_variant: Option<(ShakeVariant, usize)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepOutcome {
    Advanced { issued: usize },
    Halted,
}

pub struct Machine {
    p: &'static ParameterSet,
    map: MemoryMap,
    config: MachineConfig,
    program: Option<Program>,
    footprints: Vec<Vec<Access>>,
    mem: Memory,
    hash: HashUnit,
    acc: Block2x4,
    acc_state: AccState,
    weights: Block4x4,
    weights_tag: Option<(usize, usize)>,
    partition_rows: [[Option<usize>; 2]; 4],
    cycle: u64,
    pc: usize,
    in_flight: Vec<InFlight>,
    tallies: [OpTally; 8],
    dual_cycles: u64,
    idle_cycles: u64,
    hazards: Vec<Hazard>,
    history: Vec<IssueRecord>,
    halted: bool,
}

fn op_index(op: Opcode) -> usize {
    Opcode::ALL.iter().position(|o| *o == op).expect("listed")
}

fn load_err(index: usize, reason: impl Into<String>) -> SimError {
    SimError::Load {
        index,
        reason: reason.into(),
    }
}

impl Machine {
    pub fn new(level: SecurityLevel, config: MachineConfig) -> Self {
        let p = level.params();
        Machine {
            p,
            map: MemoryMap::new(p),
            config,
            program: None,
            footprints: Vec::new(),
            mem: Memory::new(),
            hash: HashUnit {
                sponge: None,
                saved: None,
                variant: p.shake,
                absorbed: 0,
                saved_variant: None,
            },
            acc: [[0; 4]; 2],
            acc_state: AccState::Empty,
            weights: [[0; 4]; 4],
            weights_tag: None,
            partition_rows: [[None; 2]; 4],
            cycle: 0,
            pc: 0,
            in_flight: Vec::new(),
            tallies: [OpTally::default(); 8],
            dual_cycles: 0,
            idle_cycles: 0,
            hazards: Vec::new(),
            history: Vec::new(),
            halted: false,
        }
    }

    pub fn level(&self) -> SecurityLevel {
        self.p.level
    }

    pub fn config(&self) -> &MachineConfig {
        &self.config
    }

    pub fn program(&self) -> Option<&Program> {
        self.program.as_ref()
    }

    /// Validates and installs a program; the machine restarts at cycle 0.
    pub fn load_program(&mut self, program: Program) -> Result<(), SimError> {
        if program.level != self.p.level {
            return Err(load_err(0, format!("program is for level {}", program.level)));
        }
        let abuf = program.a_buffer;
        if abuf.n != self.p.n || abuf.span().end > DEPTH {
            return Err(load_err(0, "row buffer does not fit"));
        }
        for (i, ins) in program.instructions.iter().enumerate() {
            self.validate(i, ins)?;
        }
        self.footprints = program
            .instructions
            .iter()
            .map(|ins| footprint(ins, self.p, &abuf))
            .collect();
        let level = self.p.level;
        let config = self.config;
        *self = Machine::new(level, config);
        self.footprints = program
            .instructions
            .iter()
            .map(|ins| footprint(ins, self.p, &abuf))
            .collect();
        self.program = Some(program);
        Ok(())
    }

    fn check_mat(&self, i: usize, m: &MatRef) -> Result<(), SimError> {
        let ok = match m.layout {
            Layout::Wide { rows } => rows > 0 && rows % 4 == 0,
            Layout::Narrow { cols } => cols > 0 && cols % 4 == 0 && !m.transposed,
        };
        if !ok || m.span().end > DEPTH {
            return Err(load_err(i, format!("matrix at {} does not fit", m.base)));
        }
        Ok(())
    }

    fn check_wide(&self, i: usize, m: &MatRef) -> Result<(usize, usize), SimError> {
        self.check_mat(i, m)?;
        match m.layout {
            Layout::Wide { .. } => Ok(m.dims()),
            Layout::Narrow { .. } => Err(load_err(i, "expected a 16-bit matrix")),
        }
    }

    fn check_narrow(&self, i: usize, m: &MatRef) -> Result<usize, SimError> {
        self.check_mat(i, m)?;
        match m.layout {
            Layout::Narrow { cols } => Ok(cols),
            Layout::Wide { .. } => Err(load_err(i, "expected an 8-bit matrix")),
        }
    }

    fn check_small(&self, i: usize, m: &MatRef) -> Result<(), SimError> {
        if self.check_wide(i, m)? != (8, 8) {
            return Err(load_err(i, "expected an 8x8 matrix"));
        }
        Ok(())
    }

    fn validate(&self, i: usize, ins: &Instruction) -> Result<(), SimError> {
        let p = self.p;
        match ins {
            Instruction::Hia { inputs, .. } => {
                for input in inputs {
                    if let HashInput::Packed(m) = input {
                        self.check_wide(i, m)?;
                    }
                }
            }
            Instruction::Hos { len, dest } => {
                let expected = match dest {
                    SqueezeDest::Bytes(slots) => slots.iter().map(|s| s.len(p)).sum(),
                    SqueezeDest::ARow { row } => {
                        if *row >= p.n {
                            return Err(load_err(i, format!("row {row} out of range")));
                        }
                        2 * p.n
                    }
                    SqueezeDest::Samples(ms) => {
                        let mut total = 0;
                        for m in ms {
                            self.check_mat(i, m)?;
                            let (r, c) = m.dims();
                            total += 2 * r * c;
                        }
                        total
                    }
                };
                if *len != expected || *len == 0 {
                    return Err(load_err(
                        i,
                        format!("squeeze of {len} bytes, destination holds {expected}"),
                    ));
                }
            }
            Instruction::Mbr(MbrTarget::Addend { src, bi, bj }) | Instruction::Mbw { dst: src, bi, bj } => {
                let (r, c) = self.check_wide(i, src)?;
                if *bi >= r / 2 || *bj >= c / 4 {
                    return Err(load_err(i, format!("block ({bi},{bj}) out of range")));
                }
            }
            Instruction::Mbr(MbrTarget::Weights { src, bk, bj }) => {
                let cols = self.check_narrow(i, src)?;
                if *bk >= cols / 4 || *bj >= 2 {
                    return Err(load_err(i, format!("weight block ({bk},{bj}) out of range")));
                }
            }
            Instruction::Mul(MulOp::Mac {
                left, right, bi, bj, ..
            }) => {
                let k = self.check_narrow(i, right)?;
                let rows = match left {
                    LeftOperand::ABuffer => {
                        if k != p.n {
                            return Err(load_err(i, "inner dimension mismatch"));
                        }
                        p.n
                    }
                    LeftOperand::Matrix(m) => {
                        let (r, c) = self.check_wide(i, m)?;
                        if c != k {
                            return Err(load_err(i, "inner dimension mismatch"));
                        }
                        r
                    }
                };
                if *bi >= rows / 2 || *bj >= 2 {
                    return Err(load_err(i, format!("block ({bi},{bj}) out of range")));
                }
            }
            Instruction::Mul(MulOp::Ma { acc, bk, bj }) => {
                if self.check_wide(i, acc)? != (p.n, 8) || *bk >= p.n / 4 || *bj >= 2 {
                    return Err(load_err(i, "MA operands out of range"));
                }
            }
            Instruction::Mul(MulOp::Add { x, y, dst }) => {
                for m in [x, y, dst] {
                    self.check_small(i, m)?;
                }
            }
            Instruction::Enc { msg, dst: m } | Instruction::Dec { src: m, msg } => {
                self.check_small(i, m)?;
                if msg.len(p) != p.len_mu {
                    return Err(load_err(i, "message slot has the wrong size"));
                }
            }
            Instruction::Cmp { ss0, ss1, ss2, dst } => {
                if [ss0, ss1, ss2, dst].iter().any(|s| s.len(p) != p.len_ss) {
                    return Err(load_err(i, "comparison slots differ in size"));
                }
            }
        }
        Ok(())
    }

    /// Places inputs in memory, as the external data driver would.
    pub fn load_inputs(&mut self, inputs: &SimInputs) -> Result<(), SimError> {
        let prog = self.program.as_ref().ok_or(SimError::NoProgram)?;
        if prog.phase != inputs.phase() {
            return Err(SimError::InputMismatch {
                expected: prog.phase,
                found: inputs.phase(),
            });
        }
        let p = self.p;
        let bad = |what: &'static str, e: frodo_core::FrodoError| SimError::BadInput {
            what,
            reason: e.to_string(),
        };
        let check = |what: &'static str, expected: usize, got: usize| {
            if expected == got {
                Ok(())
            } else {
                Err(SimError::BadInput {
                    what,
                    reason: format!("expected {expected} bytes, got {got}"),
                })
            }
        };
        match inputs {
            SimInputs::KeyGen { randomness } => {
                check("randomness", p.len_keygen_randomness(), randomness.len())?;
                let (s, rest) = randomness.split_at(p.len_s);
                let (seed_se, z) = rest.split_at(p.len_seed_se);
                self.mem.write_bytes(ByteSlot::S, s);
                self.mem.write_bytes(ByteSlot::SeedSE, seed_se);
                self.mem.write_bytes(ByteSlot::Z, z);
            }
            SimInputs::Encaps { pk, randomness } => {
                check("pk", p.len_pk(), pk.len())?;
                check("randomness", p.len_encaps_randomness(), randomness.len())?;
                self.load_public_key(pk).map_err(|e| bad("pk", e))?;
                let (mu, salt) = randomness.split_at(p.len_mu);
                self.mem.write_bytes(ByteSlot::Mu, mu);
                self.mem.write_bytes(ByteSlot::Salt, salt);
            }
            SimInputs::Decaps { sk, ct } => {
                check("sk", p.len_sk(), sk.len())?;
                check("ct", p.len_ct(), ct.len())?;
                let (s, rest) = sk.split_at(p.len_s);
                let (pk, rest) = rest.split_at(p.len_pk());
                let (st, pkh) = rest.split_at(2 * p.n * p.nbar);
                self.mem.write_bytes(ByteSlot::S, s);
                self.load_public_key(pk).map_err(|e| bad("sk", e))?;
                let space_s = self.map.space_s();
                for (idx, w) in st.chunks_exact(2).enumerate() {
                    let v = i16::from_le_bytes([w[0], w[1]]) as i8;
                    self.mem.set8(&space_s, idx / p.n, idx % p.n, v);
                }
                self.mem.write_bytes(ByteSlot::Pkh, pkh);
                let c1 = p.packed_len(p.nbar, p.n);
                let c2 = p.packed_len(p.nbar, p.nbar);
                let bp = unpack(&ct[..c1], p.nbar, p.n, p).map_err(|e| bad("ct", e))?;
                self.write_matrix(&self.map.space_ep().t(), &bp);
                let c = unpack(&ct[c1..c1 + c2], p.nbar, p.nbar, p).map_err(|e| bad("ct", e))?;
                self.write_matrix(&SmallSlot::C.mat(), &c);
                self.mem.write_bytes(ByteSlot::Salt, &ct[c1 + c2..]);
            }
        }
        Ok(())
    }

    fn load_public_key(&mut self, pk: &[u8]) -> frodo_core::Result<()> {
        let p = self.p;
        let (seed_a, packed) = pk.split_at(p.len_seed_a);
        self.mem.write_bytes(ByteSlot::SeedA, seed_a);
        let b = unpack(packed, p.n, p.nbar, p)?;
        self.write_matrix(&self.map.space_e(), &b);
        Ok(())
    }

    fn write_matrix(&mut self, m: &MatRef, v: &MatrixZq) {
        for r in 0..v.rows() {
            for c in 0..v.cols() {
                self.mem.set16(m, r, c, v.get(r, c));
            }
        }
    }

    fn read_matrix(&mut self, m: &MatRef) -> MatrixZq {
        let (rows, cols) = m.dims();
        let mut out = MatrixZq::zeros(rows, cols, self.p.log_q);
        for r in 0..rows {
            for c in 0..cols {
                let v = self.mem.get16(m, r, c);
                out.set(r, c, v);
            }
        }
        out
    }

    /// Reads the phase's results from memory.
    pub fn outputs(&mut self) -> Result<SimOutputs, SimError> {
        let prog = self.program.as_ref().ok_or(SimError::NoProgram)?;
        let p = self.p;
        let phase = prog.phase;
        self.mem.stop_tracking();
        Ok(match phase {
            Phase::KeyGen => {
                let mut pk = self.mem.read_bytes(ByteSlot::SeedA, p);
                let b = self.read_matrix(&self.map.space_e());
                pk.extend(pack(&b, p));
                let mut sk = self.mem.read_bytes(ByteSlot::S, p);
                sk.extend_from_slice(&pk);
                let s = self.map.space_s();
                for t in 0..p.nbar {
                    for c in 0..p.n {
                        let v = self.mem.get8(&s, t, c) as i16;
                        sk.extend_from_slice(&v.to_le_bytes());
                    }
                }
                sk.extend(self.mem.read_bytes(ByteSlot::Pkh, p));
                SimOutputs::KeyGen { pk, sk }
            }
            Phase::Encaps => {
                let bp = self.read_matrix(&self.map.space_ep().t());
                let mut ct = pack(&bp, p);
                let c = self.read_matrix(&SmallSlot::C.mat());
                ct.extend(pack(&c, p));
                ct.extend(self.mem.read_bytes(ByteSlot::Salt, p));
                SimOutputs::Encaps {
                    ct,
                    ss: self.mem.read_bytes(ByteSlot::Ss, p),
                }
            }
            Phase::Decaps => SimOutputs::Decaps {
                ss: self.mem.read_bytes(ByteSlot::Ss, p),
            },
        })
    }

    pub fn cycle(&self) -> u64 {
        self.cycle
    }

    pub fn is_halted(&self) -> bool {
        self.halted
    }

    pub fn state(&self) -> DispatchState {
        DispatchState::from_in_flight(self.in_flight.len())
    }

    pub fn tally(&self, op: Opcode) -> OpTally {
        self.tallies[op_index(op)]
    }

    /// Cycles during which two instructions were in flight.
    pub fn overlap_savings(&self) -> u64 {
        self.dual_cycles
    }

    pub fn idle_cycles(&self) -> u64 {
        self.idle_cycles
    }

    pub fn hazards(&self) -> &[Hazard] {
        &self.hazards
    }

    pub fn history(&self) -> &[IssueRecord] {
        &self.history
    }

    fn dual_issue(&self) -> bool {
        self.program.as_ref().is_some_and(|p| p.overlap)
    }

    fn instruction(&self, idx: usize) -> &Instruction {
        &self.program.as_ref().expect("loaded").instructions[idx]
    }

    fn input_len(&self, input: &HashInput) -> usize {
        match input {
            HashInput::Bytes(s) => s.len(self.p),
            HashInput::Literal(b) => b.len(),
            HashInput::Packed(m) => {
                let (r, c) = m.dims();
                self.p.packed_len(r, c)
            }
        }
    }

    /// Execution cycles of instruction `idx` given the current hash state.
    fn cost(&self, idx: usize) -> u64 {
        let t = &self.config.timing;
        let io = self.config.hash_io_overlap;
        match self.instruction(idx) {
            Instruction::Hia { init, inputs, .. } => {
                let (variant, offset) = match init {
                    SpongeInit::Fresh(v) => (*v, 0),
                    SpongeInit::Restore => self.hash.saved_variant.unwrap_or((self.p.shake, 0)),
                };
                let len = inputs.iter().map(|i| self.input_len(i)).sum();
                t.absorb_setup + timing::absorb_cycles(offset, len, variant, io)
            }
            Instruction::Hos { len, .. } => timing::squeeze_cycles(*len, self.hash.variant, io),
            Instruction::Mbr(MbrTarget::Addend { .. }) | Instruction::Mbw { .. } => timing::BLOCK_MOVE_CYCLES,
            Instruction::Mbr(MbrTarget::Weights { .. }) => 2 * timing::BLOCK_MOVE_CYCLES,
            Instruction::Mul(MulOp::Mac { right, .. }) => match right.layout {
                Layout::Narrow { cols } => timing::mac_cycles(cols / 4, t),
                Layout::Wide { .. } => unreachable!("validated"),
            },
            Instruction::Mul(MulOp::Ma { .. }) => timing::ma_cycles(self.p.n / 2, t),
            Instruction::Mul(MulOp::Add { .. }) => timing::add_cycles(t),
            Instruction::Enc { .. } => timing::ENC_CYCLES,
            Instruction::Dec { .. } => timing::DEC_CYCLES,
            Instruction::Cmp { .. } => timing::CMP_CYCLES,
        }
    }

    /// Whether the operands `idx` depends on have been produced.
    fn ready(&self, idx: usize) -> bool {
        let rows_at = |part: usize| self.partition_rows[part];
        match self.instruction(idx) {
            Instruction::Mul(MulOp::Mac { left, bi, bj, .. }) => {
                let operands = match left {
                    LeftOperand::ABuffer => rows_at(bi % 4) == [Some(2 * bi), Some(2 * bi + 1)],
                    LeftOperand::Matrix(_) => true,
                };
                operands && self.acc_state == AccState::Loaded(*bi, *bj)
            }
            Instruction::Mul(MulOp::Ma { bk, bj, .. }) => {
                let pair = 2 * (bk % 2);
                rows_at(pair) == [Some(4 * bk), Some(4 * bk + 1)]
                    && rows_at(pair + 1) == [Some(4 * bk + 2), Some(4 * bk + 3)]
                    && self.weights_tag == Some((*bk, *bj))
            }
            Instruction::Mbw { bi, bj, .. } => self.acc_state == AccState::Result(*bi, *bj),
            Instruction::Hia {
                init: SpongeInit::Restore,
                ..
            } => self.hash.saved_variant.is_some(),
            _ => true,
        }
    }

    fn conflicts_with_in_flight(&self, idx: usize) -> bool {
        let op = self.instruction(idx).opcode();
        self.in_flight.iter().any(|f| {
            let other = self.instruction(f.index).opcode();
            conflict_from_parts(
                op.unit() == other.unit(),
                &self.footprints[f.index],
                &self.footprints[idx],
            ) == Conflict::Serialize
        })
    }

    /// Advances one cycle: retires finished work, then issues up to two
    /// instructions in program order.
    pub fn step(&mut self) -> Result<StepOutcome, SimError> {
        let len = self.program.as_ref().ok_or(SimError::NoProgram)?.len();
        if self.halted {
            return Ok(StepOutcome::Halted);
        }
        let now = self.cycle;
        self.in_flight.retain(|f| f.end > now);
        if self.pc == len && self.in_flight.is_empty() {
            self.halted = true;
            return Ok(StepOutcome::Halted);
        }
        let cap = if self.dual_issue() { 2 } else { 1 };
        let mut issued = 0;
        while self.pc < len && self.in_flight.len() < cap {
            let idx = self.pc;
            if self.conflicts_with_in_flight(idx) {
                break;
            }
            if !self.ready(idx) {
                if self.in_flight.is_empty() {
                    return Err(SimError::Deadlock {
                        cycle: now,
                        head: idx,
                        next: (idx + 1 < len).then_some(idx + 1),
                    });
                }
                break;
            }
            self.issue(idx)?;
            issued += 1;
        }
        self.account(1);
        self.cycle += 1;
        Ok(StepOutcome::Advanced { issued })
    }

    fn account(&mut self, cycles: u64) {
        match self.in_flight.len() {
            0 => self.idle_cycles += cycles,
            1 => {}
            _ => self.dual_cycles += cycles,
        }
    }

    fn issue(&mut self, idx: usize) -> Result<(), SimError> {
        let cost = self.cost(idx);
        let op = self.instruction(idx).opcode();
        let overhead = self.config.timing.issue_overhead;
        self.mem.start_tracking();
        let result = self.execute(idx);
        let touched = self.mem.stop_tracking();
        result?;
        self.monitor(idx, &touched);
        let end = self.cycle + cost + overhead;
        let t = &mut self.tallies[op_index(op)];
        t.count += 1;
        t.cycles += cost;
        t.overhead += overhead;
        self.history.push(IssueRecord {
            index: idx,
            opcode: op,
            issue: self.cycle,
            end,
            cycles: cost,
        });
        self.in_flight.push(InFlight {
            index: idx,
            end,
            touched,
        });
        self.pc += 1;
        Ok(())
    }

    /// Checks the actual accesses of a newly issued instruction against the
    /// declared footprint and against everything still in flight.
    fn monitor(&mut self, idx: usize, touched: &Touched) {
        let declared = &self.footprints[idx];
        // spans are merged on both sides, so check against the union
        let covered = |s: &Span, write: bool| {
            (s.start..s.end).all(|addr| {
                let word = Span {
                    bank: s.bank,
                    start: addr,
                    end: addr + 1,
                };
                declared.iter().any(|a| a.write == write && a.span.contains(&word))
            })
        };
        let undeclared =
            touched.reads.iter().any(|s| !covered(s, false)) || touched.writes.iter().any(|s| !covered(s, true));
        if undeclared {
            self.hazards.push(Hazard {
                cycle: self.cycle,
                earlier: idx,
                later: idx,
                kind: "access outside declared footprint".into(),
            });
        }
        let mine = as_accesses(touched);
        for f in &self.in_flight {
            if accesses_collide(&as_accesses(&f.touched), &mine) {
                self.hazards.push(Hazard {
                    cycle: self.cycle,
                    earlier: f.index,
                    later: idx,
                    kind: "concurrent access with a writer".into(),
                });
            }
        }
    }

    /// Runs until halt, skipping cycles in which nothing can change.
    pub fn run_to_halt(&mut self) -> Result<u64, SimError> {
        loop {
            if self.step()? == StepOutcome::Halted {
                return Ok(self.cycle);
            }
            if let Some(next) = self.in_flight.iter().map(|f| f.end).min() {
                if next > self.cycle {
                    self.account(next - self.cycle);
                    self.cycle = next;
                }
            }
        }
    }

    fn exec_err(&self, idx: usize, e: impl ToString) -> SimError {
        SimError::Exec {
            index: idx,
            reason: e.to_string(),
        }
    }

    fn execute(&mut self, idx: usize) -> Result<(), SimError> {
        let ins = self.instruction(idx).clone();
        let functional = self.config.functional;
        let p = self.p;
        let abuf = self.program.as_ref().expect("loaded").a_buffer;
        match ins {
            Instruction::Hia { init, inputs, snapshot } => {
                let len: usize = inputs.iter().map(|i| self.input_len(i)).sum();
                match init {
                    SpongeInit::Fresh(v) => {
                        self.hash.variant = v;
                        self.hash.absorbed = 0;
                        self.hash.sponge = functional.then(|| Shake::new(v));
                    }
                    SpongeInit::Restore => {
                        let (v, a) = self.hash.saved_variant.expect("checked by ready");
                        self.hash.variant = v;
                        self.hash.absorbed = a;
                        self.hash.sponge = self.hash.saved.clone();
                    }
                }
                self.hash.absorbed += len;
                if functional {
                    let mut data = Vec::with_capacity(len);
                    for input in &inputs {
                        match input {
                            HashInput::Bytes(s) => data.extend(self.mem.read_bytes(*s, p)),
                            HashInput::Literal(b) => data.extend_from_slice(b),
                            HashInput::Packed(m) => {
                                let v = self.read_matrix(m);
                                data.extend(pack_words(v.as_slice(), p.log_q));
                            }
                        }
                    }
                    let sponge = self.hash.sponge.as_mut().ok_or_else(|| SimError::Exec {
                        index: idx,
                        reason: "no sponge".into(),
                    })?;
                    sponge.absorb(&data).map_err(|e| SimError::Exec {
                        index: idx,
                        reason: e.to_string(),
                    })?;
                }
                if snapshot {
                    self.hash.saved = self.hash.sponge.clone();
                    self.hash.saved_variant = Some((self.hash.variant, self.hash.absorbed));
                }
            }
            Instruction::Hos { len, dest } => {
                if let SqueezeDest::ARow { row } = dest {
                    self.partition_rows[ABuffer::partition_of_row(row)][row % 2] = Some(row);
                }
                if !functional {
                    return Ok(());
                }
                let bytes = self
                    .hash
                    .sponge
                    .as_mut()
                    .ok_or_else(|| SimError::Exec {
                        index: idx,
                        reason: "squeeze without absorb".into(),
                    })?
                    .squeeze_vec(len);
                match dest {
                    SqueezeDest::Bytes(slots) => {
                        let mut off = 0;
                        for s in slots {
                            let l = s.len(p);
                            self.mem.write_bytes(s, &bytes[off..off + l]);
                            off += l;
                        }
                    }
                    SqueezeDest::ARow { row } => {
                        let part = ABuffer::partition_of_row(row);
                        for (col, w) in bytes.chunks_exact(2).enumerate() {
                            let v = u16::from_le_bytes([w[0], w[1]]) & p.q_mask();
                            self.mem.a_set(&abuf, part, row % 2, col, v);
                        }
                    }
                    SqueezeDest::Samples(ms) => {
                        let samples = samples_from_bytes(&bytes, p);
                        let mut it = samples.into_iter();
                        for m in ms {
                            let (rows, cols) = m.dims();
                            for r in 0..rows {
                                for c in 0..cols {
                                    let v = it.next().expect("length validated");
                                    match m.layout {
                                        Layout::Narrow { .. } => self.mem.set8(&m, r, c, v),
                                        Layout::Wide { .. } => self.mem.set16(&m, r, c, (v as i16 as u16) & p.q_mask()),
                                    }
                                }
                            }
                        }
                    }
                }
            }
            Instruction::Mbr(MbrTarget::Addend { src, bi, bj }) => {
                self.acc_state = AccState::Loaded(bi, bj);
                if functional {
                    self.acc = self.read_block(&src, bi, bj);
                }
            }
            Instruction::Mbr(MbrTarget::Weights { src, bk, bj }) => {
                self.weights_tag = Some((bk, bj));
                if functional {
                    debug_assert_eq!(weights_span(&src, bk, bj).end - weights_span(&src, bk, bj).start, 1);
                    self.weights = self.right_block(&src, bk, bj);
                }
            }
            Instruction::Mbw { dst, bi, bj } => {
                self.acc_state = AccState::Empty;
                if functional {
                    let acc = self.acc;
                    self.write_block(&dst, bi, bj, &acc);
                }
            }
            Instruction::Mul(MulOp::Mac {
                left,
                right,
                bi,
                bj,
                sign,
            }) => {
                self.acc_state = AccState::Result(bi, bj);
                if functional {
                    let k_blocks = match right.layout {
                        Layout::Narrow { cols } => cols / 4,
                        Layout::Wide { .. } => unreachable!("validated"),
                    };
                    let mut a_blocks = Vec::with_capacity(k_blocks);
                    let mut s_blocks = Vec::with_capacity(k_blocks);
                    for k in 0..k_blocks {
                        let a = match left {
                            LeftOperand::ABuffer => {
                                let mut a = [[0u16; 4]; 2];
                                for (r, row) in a.iter_mut().enumerate() {
                                    for (c, v) in row.iter_mut().enumerate() {
                                        *v = self.mem.a_get(&abuf, bi % 4, r, 4 * k + c);
                                    }
                                }
                                a
                            }
                            LeftOperand::Matrix(m) => self.read_block(&m, bi, k),
                        };
                        a_blocks.push(a);
                        s_blocks.push(self.right_block(&right, k, bj));
                    }
                    self.acc = mac_block_product(&a_blocks, &s_blocks, self.acc, sign.into(), p.log_q)
                        .map_err(|e| self.exec_err(idx, e))?;
                }
            }
            Instruction::Mul(MulOp::Ma { acc, bk, bj }) => {
                if functional {
                    let pair = 2 * (bk % 2);
                    for bi in 0..p.n / 2 {
                        let mut a = [[0u16; 4]; 2];
                        for (r, row) in a.iter_mut().enumerate() {
                            for (t, v) in row.iter_mut().enumerate() {
                                // row 4bk+t of A sits in partition pair + t/2, slot t%2
                                *v = self.mem.a_get(&abuf, pair + t / 2, t % 2, 2 * bi + r);
                            }
                        }
                        let e = self.read_block(&acc, bi, bj);
                        let out = block_update(e, &a, &self.weights, Accumulate::Add, p.log_q);
                        self.write_block(&acc, bi, bj, &out);
                    }
                }
            }
            Instruction::Mul(MulOp::Add { x, y, dst }) => {
                if functional {
                    for bi in 0..4 {
                        for bj in 0..2 {
                            let bx = self.read_block(&x, bi, bj);
                            let by = self.read_block(&y, bi, bj);
                            let s = add_block(&bx, &by, p.log_q);
                            self.write_block(&dst, bi, bj, &s);
                        }
                    }
                }
            }
            Instruction::Enc { msg, dst } => {
                if functional {
                    let m = self.mem.read_bytes(msg, p);
                    let u = encode(&m, p).map_err(|e| self.exec_err(idx, e))?;
                    self.write_matrix(&dst, &u);
                }
            }
            Instruction::Dec { src, msg } => {
                if functional {
                    let m = self.read_matrix(&src);
                    let out = decode(&m, p).map_err(|e| self.exec_err(idx, e))?;
                    self.mem.write_bytes(msg, &out);
                }
            }
            Instruction::Cmp { ss0, ss1, ss2, dst } => {
                if functional {
                    let a = self.mem.read_bytes(ss0, p);
                    let b = self.mem.read_bytes(ss1, p);
                    let c = self.mem.read_bytes(ss2, p);
                    let ss = verify_select(&a, &b, &c);
                    self.mem.write_bytes(dst, ss.as_bytes());
                }
            }
        }
        Ok(())
    }

    fn read_block(&mut self, m: &MatRef, bi: usize, bj: usize) -> Block2x4 {
        let mut b = [[0u16; 4]; 2];
        for (r, row) in b.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = self.mem.get16(m, 2 * bi + r, 4 * bj + c);
            }
        }
        b
    }

    fn write_block(&mut self, m: &MatRef, bi: usize, bj: usize, b: &Block2x4) {
        for (r, row) in b.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                self.mem.set16(m, 2 * bi + r, 4 * bj + c, *v);
            }
        }
    }

    /// 4x4 block (bk, bj) of the transpose of a narrow matrix.
    fn right_block(&mut self, m: &MatRef, bk: usize, bj: usize) -> Block4x4 {
        let mut b = [[0i8; 4]; 4];
        for (r, row) in b.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = self.mem.get8(m, 4 * bj + c, 4 * bk + r);
            }
        }
        b
    }
}

fn as_accesses(t: &Touched) -> Vec<Access> {
    t.reads
        .iter()
        .map(|s| Access { span: *s, write: false })
        .chain(t.writes.iter().map(|s| Access { span: *s, write: true }))
        .collect()
}
