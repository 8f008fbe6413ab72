//! Instruction sequences for KeyGen, Encaps and Decaps.

use core::fmt;
use core::str::FromStr;

use frodo_core::params::{DOMAIN_ENCAPS, DOMAIN_KEYGEN};
use frodo_core::{ParameterSet, SecurityLevel, ShakeVariant};
use serde::{Deserialize, Serialize};

use crate::isa::{HashInput, Instruction, LeftOperand, MbrTarget, MulOp, Sign, SpongeInit, SqueezeDest};
use crate::memory::{ABuffer, BankId, ByteSlot, MatRef, MemoryMap, SmallSlot};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Phase {
    KeyGen,
    Encaps,
    Decaps,
}

impl Phase {
    pub const ALL: [Phase; 3] = [Phase::KeyGen, Phase::Encaps, Phase::Decaps];

    pub fn name(self) -> &'static str {
        match self {
            Phase::KeyGen => "keygen",
            Phase::Encaps => "encaps",
            Phase::Decaps => "decaps",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Phase {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Phase::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown phase `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Program {
    pub level: SecurityLevel,
    pub phase: Phase,
    /// Whether the dispatcher may keep two instructions in flight.
    pub overlap: bool,
    /// Where rows of A are buffered.
    pub a_buffer: ABuffer,
    pub instructions: Vec<Instruction>,
}

impl Program {
    pub fn len(&self) -> usize {
        self.instructions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instructions.is_empty()
    }

    /// One line per instruction.
    pub fn disassemble(&self) -> String {
        let mut s = format!(
            "; {} {} overlap={}\n",
            self.level.name(),
            self.phase,
            if self.overlap { "on" } else { "off" }
        );
        for (i, ins) in self.instructions.iter().enumerate() {
            s.push_str(&format!("{i:6}  {ins}\n"));
        }
        s
    }
}

struct Builder<'a> {
    p: &'a ParameterSet,
    map: MemoryMap,
    out: Vec<Instruction>,
}

impl<'a> Builder<'a> {
    fn new(p: &'a ParameterSet) -> Self {
        Builder {
            p,
            map: MemoryMap::new(p),
            out: Vec::new(),
        }
    }

    fn absorb(&mut self, variant: ShakeVariant, inputs: Vec<HashInput>) {
        self.out.push(Instruction::Hia {
            init: SpongeInit::Fresh(variant),
            inputs,
            snapshot: false,
        });
    }

    fn squeeze(&mut self, len: usize, dest: SqueezeDest) {
        self.out.push(Instruction::Hos { len, dest });
    }

    fn hash_to(&mut self, inputs: Vec<HashInput>, slots: Vec<ByteSlot>) {
        let len = slots.iter().map(|s| s.len(self.p)).sum();
        self.absorb(self.p.shake, inputs);
        self.squeeze(len, SqueezeDest::Bytes(slots));
    }

    fn a_row(&mut self, row: usize) {
        self.absorb(
            ShakeVariant::Shake128,
            vec![
                HashInput::Literal((row as u16).to_le_bytes().to_vec()),
                HashInput::Bytes(ByteSlot::SeedA),
            ],
        );
        self.squeeze(2 * self.p.n, SqueezeDest::ARow { row });
    }

    fn sample(&mut self, domain: u8, dests: Vec<MatRef>) {
        let count: usize = dests.iter().map(|m| m.dims().0 * m.dims().1).sum();
        self.absorb(
            self.p.shake,
            vec![HashInput::Literal(vec![domain]), HashInput::Bytes(ByteSlot::SeedSE)],
        );
        self.squeeze(2 * count, SqueezeDest::Samples(dests));
    }

    /// One MAC phase with its addend read and result write.
    #[allow(clippy::too_many_arguments)]
    fn mac_block(
        &mut self,
        left: LeftOperand,
        right: MatRef,
        addend: MatRef,
        dst: MatRef,
        bi: usize,
        bj: usize,
        sign: Sign,
    ) {
        self.out
            .push(Instruction::Mbr(MbrTarget::Addend { src: addend, bi, bj }));
        self.out.push(Instruction::Mul(MulOp::Mac {
            left,
            right,
            bi,
            bj,
            sign,
        }));
        self.out.push(Instruction::Mbw { dst, bi, bj });
    }

    /// 8x8 result over all eight 2x4 blocks.
    fn mac_small(&mut self, left: MatRef, right: MatRef, addend: MatRef, dst: MatRef, sign: Sign) {
        for bi in 0..4 {
            for bj in 0..2 {
                self.mac_block(LeftOperand::Matrix(left), right, addend, dst, bi, bj, sign);
            }
        }
    }

    /// B = A S + E, streaming A row pairs through the partitions while the
    /// next rows are squeezed.
    fn keygen_product(&mut self) {
        let n = self.p.n;
        let (s, e) = (self.map.space_s(), self.map.space_e());
        self.a_row(0);
        self.a_row(1);
        for pair in 0..n / 2 {
            for bj in 0..2 {
                let next = 2 * pair + 2 + bj;
                if next < n {
                    self.a_row(next);
                }
                self.mac_block(LeftOperand::ABuffer, s, e, e, pair, bj, Sign::Add);
            }
        }
    }

    /// B'^T = A^T S'^T + E'^T in MA mode. Slice k uses rows 4k..4k+3 from one
    /// partition pair while the other pair fills.
    fn encaps_product(&mut self) {
        let n = self.p.n;
        let (s, ep) = (self.map.space_s(), self.map.space_ep());
        for row in 0..4 {
            self.a_row(row);
        }
        for bk in 0..n / 4 {
            for bj in 0..2 {
                self.out.push(Instruction::Mbr(MbrTarget::Weights { src: s, bk, bj }));
                self.out.push(Instruction::Mul(MulOp::Ma { acc: ep, bk, bj }));
                for t in 0..2 {
                    let row = 4 * bk + 4 + 2 * bj + t;
                    if row < n {
                        self.a_row(row);
                    }
                }
            }
        }
    }

    /// Shared tail of Encaps and Decaps from the seedSE/k derivation to B'.
    /// C is produced before B' so that B's space can hold rows of A.
    fn encrypt(&mut self, c_dst: MatRef) {
        let (s, e, ep) = (self.map.space_s(), self.map.space_e(), self.map.space_ep());
        self.hash_to(
            vec![
                HashInput::Bytes(ByteSlot::Pkh),
                HashInput::Bytes(ByteSlot::Mu),
                HashInput::Bytes(ByteSlot::Salt),
            ],
            vec![ByteSlot::SeedSE, ByteSlot::K],
        );
        let e2 = SmallSlot::E2.mat();
        let work = SmallSlot::Work.mat();
        // S' is 8 x n, E' is 8 x n stored transposed, E'' is 8 x 8
        self.sample(DOMAIN_ENCAPS, vec![s, ep.t(), e2]);
        self.out.push(Instruction::Enc {
            msg: ByteSlot::Mu,
            dst: work,
        });
        self.out.push(Instruction::Mul(MulOp::Add {
            x: e2,
            y: work,
            dst: work,
        }));
        // C^T = B^T S'^T + (E'' + U)^T
        self.mac_small(e.t(), s, work.t(), c_dst.t(), Sign::Add);
        self.encaps_product();
    }
}

fn keygen_program(p: &ParameterSet) -> Vec<Instruction> {
    let mut b = Builder::new(p);
    b.hash_to(vec![HashInput::Bytes(ByteSlot::Z)], vec![ByteSlot::SeedA]);
    let (s, e) = (b.map.space_s(), b.map.space_e());
    b.sample(DOMAIN_KEYGEN, vec![s, e]);
    b.keygen_product();
    b.hash_to(
        vec![HashInput::Bytes(ByteSlot::SeedA), HashInput::Packed(e)],
        vec![ByteSlot::Pkh],
    );
    b.out
}

fn encaps_program(p: &ParameterSet) -> Vec<Instruction> {
    let mut b = Builder::new(p);
    let e = b.map.space_e();
    b.hash_to(
        vec![HashInput::Bytes(ByteSlot::SeedA), HashInput::Packed(e)],
        vec![ByteSlot::Pkh],
    );
    let c = SmallSlot::C.mat();
    b.encrypt(c);
    let ep = b.map.space_ep();
    b.hash_to(
        vec![
            HashInput::Packed(ep.t()),
            HashInput::Packed(c),
            HashInput::Bytes(ByteSlot::Salt),
            HashInput::Bytes(ByteSlot::K),
        ],
        vec![ByteSlot::Ss],
    );
    b.out
}

fn decaps_program(p: &ParameterSet) -> Vec<Instruction> {
    let mut b = Builder::new(p);
    let (s, ep) = (b.map.space_s(), b.map.space_ep());
    let c = SmallSlot::C.mat();
    let work = SmallSlot::Work.mat();
    // M = C - B' S
    b.mac_small(ep.t(), s, c, work, Sign::Subtract);
    b.out.push(Instruction::Dec {
        src: work,
        msg: ByteSlot::Mu,
    });
    // absorb the received B' || C || salt once and keep the state for ss0/ss1
    b.out.push(Instruction::Hia {
        init: SpongeInit::Fresh(p.shake),
        inputs: vec![
            HashInput::Packed(ep.t()),
            HashInput::Packed(c),
            HashInput::Bytes(ByteSlot::Salt),
        ],
        snapshot: true,
    });
    let c2 = SmallSlot::CPrime.mat();
    b.encrypt(c2);
    for (tail, slot) in [(ByteSlot::K, ByteSlot::Ss0), (ByteSlot::S, ByteSlot::Ss1)] {
        b.out.push(Instruction::Hia {
            init: SpongeInit::Restore,
            inputs: vec![HashInput::Bytes(tail)],
            snapshot: false,
        });
        b.squeeze(p.len_ss, SqueezeDest::Bytes(vec![slot]));
    }
    b.hash_to(
        vec![
            HashInput::Packed(ep.t()),
            HashInput::Packed(c2),
            HashInput::Bytes(ByteSlot::Salt),
            HashInput::Bytes(ByteSlot::K),
        ],
        vec![ByteSlot::Ss2],
    );
    b.out.push(Instruction::Cmp {
        ss0: ByteSlot::Ss0,
        ss1: ByteSlot::Ss1,
        ss2: ByteSlot::Ss2,
        dst: ByteSlot::Ss,
    });
    b.out
}

/// Builds the program for one level and phase. With `overlap` off the same
/// sequence is issued one instruction at a time.
pub fn build_program(level: SecurityLevel, phase: Phase, overlap: bool) -> Program {
    let p = level.params();
    let map = MemoryMap::new(p);
    let (instructions, a_bank) = match phase {
        Phase::KeyGen => (keygen_program(p), BankId::Bank1),
        Phase::Encaps => (encaps_program(p), BankId::Bank0),
        Phase::Decaps => (decaps_program(p), BankId::Bank0),
    };
    Program {
        level,
        phase,
        overlap,
        a_buffer: map.a_buffer(a_bank),
        instructions,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::isa::Opcode;

    fn count(p: &Program, op: Opcode) -> usize {
        p.instructions.iter().filter(|i| i.opcode() == op).count()
    }

    #[test]
    fn keygen_has_one_mac_phase_per_block_column_and_row_pair() {
        for level in SecurityLevel::ALL {
            let n = level.params().n;
            let prog = build_program(level, Phase::KeyGen, true);
            assert_eq!(count(&prog, Opcode::Mul), n);
            assert_eq!(count(&prog, Opcode::Mbr), n);
            assert_eq!(count(&prog, Opcode::Mbw), n);
            // one absorb per A row plus seedA, samples and pkh
            assert_eq!(count(&prog, Opcode::Hia), n + 3);
        }
    }

    #[test]
    fn decaps_computes_c_before_b_prime() {
        let prog = build_program(SecurityLevel::Frodo640, Phase::Decaps, true);
        let first_ma = prog
            .instructions
            .iter()
            .position(|i| matches!(i, Instruction::Mul(MulOp::Ma { .. })))
            .unwrap();
        let last_c = prog
            .instructions
            .iter()
            .rposition(|i| matches!(i, Instruction::Mbw { dst, .. } if dst.base == SmallSlot::CPrime.mat().base))
            .unwrap();
        assert!(last_c < first_ma);
        assert_eq!(count(&prog, Opcode::Cmp), 1);
        assert_eq!(count(&prog, Opcode::Dec), 1);
    }

    #[test]
    fn overlap_flag_does_not_change_the_sequence() {
        for phase in Phase::ALL {
            let a = build_program(SecurityLevel::Frodo976, phase, true);
            let b = build_program(SecurityLevel::Frodo976, phase, false);
            assert_eq!(a.instructions, b.instructions);
        }
    }

    #[test]
    fn disassembly_has_a_line_per_instruction() {
        let prog = build_program(SecurityLevel::Frodo640, Phase::Encaps, true);
        assert_eq!(prog.disassemble().lines().count(), prog.len() + 1);
    }
}
