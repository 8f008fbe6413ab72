//! Instruction set of the coprocessor.

use core::fmt;

use frodo_core::matrix::Accumulate;
use frodo_core::ShakeVariant;
use serde::{Deserialize, Serialize};

use crate::memory::{ByteSlot, MatRef};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Opcode {
    /// Hash input/absorb.
    Hia,
    /// Hash output/squeeze, optionally through the samplers.
    Hos,
    /// Memory block read into the array.
    Mbr,
    /// Memory block write from the array.
    Mbw,
    /// Array operation.
    Mul,
    /// Message encode.
    Enc,
    /// Message decode.
    Dec,
    /// Shared-secret comparison and selection.
    Cmp,
}

impl Opcode {
    pub const ALL: [Opcode; 8] = [
        Opcode::Hia,
        Opcode::Hos,
        Opcode::Mbr,
        Opcode::Mbw,
        Opcode::Mul,
        Opcode::Enc,
        Opcode::Dec,
        Opcode::Cmp,
    ];

    pub fn mnemonic(self) -> &'static str {
        match self {
            Opcode::Hia => "HIA",
            Opcode::Hos => "HOS",
            Opcode::Mbr => "MBR",
            Opcode::Mbw => "MBW",
            Opcode::Mul => "MUL",
            Opcode::Enc => "ENC",
            Opcode::Dec => "DEC",
            Opcode::Cmp => "CMP",
        }
    }

    pub fn from_mnemonic(s: &str) -> Option<Opcode> {
        Self::ALL.into_iter().find(|o| o.mnemonic().eq_ignore_ascii_case(s))
    }

    /// Execution resource the opcode occupies. Encode and decode share the
    /// hash unit's data interface.
    pub fn unit(self) -> Unit {
        match self {
            Opcode::Hia | Opcode::Hos | Opcode::Enc | Opcode::Dec => Unit::Hash,
            Opcode::Mbr | Opcode::Mbw | Opcode::Mul => Unit::Array,
            Opcode::Cmp => Unit::Compare,
        }
    }
}

impl fmt::Display for Opcode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.mnemonic())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Unit {
    Hash,
    Array,
    Compare,
}

/// One item fed to the sponge.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum HashInput {
    Bytes(ByteSlot),
    Literal(Vec<u8>),
    /// A matrix packed to D bits per entry in logical row-major order.
    Packed(MatRef),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpongeInit {
    Fresh(ShakeVariant),
    /// Continue from the state saved by an earlier snapshot.
    Restore,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum SqueezeDest {
    /// Split the output across byte slots in order.
    Bytes(Vec<ByteSlot>),
    /// One row of A into the row buffer.
    ARow { row: usize },
    /// Sampler output, filling each matrix in logical row-major order.
    Samples(Vec<MatRef>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MbrTarget {
    /// 2x4 block into the accumulator register.
    Addend { src: MatRef, bi: usize, bj: usize },
    /// 4x4 block of the transposed signed matrix into the weight register.
    Weights { src: MatRef, bk: usize, bj: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LeftOperand {
    /// Rows 2bi, 2bi+1 from the A row buffer.
    ABuffer,
    Matrix(MatRef),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    Add,
    Subtract,
}

impl From<Sign> for Accumulate {
    fn from(s: Sign) -> Accumulate {
        match s {
            Sign::Add => Accumulate::Add,
            Sign::Subtract => Accumulate::Subtract,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MulOp {
    /// One MAC phase producing result block (bi, bj) in the accumulator.
    Mac {
        left: LeftOperand,
        right: MatRef,
        bi: usize,
        bj: usize,
        sign: Sign,
    },
    /// One MA phase: slice bk of the A buffer against the loaded weights,
    /// updating column block bj of `acc` for every row pair.
    Ma { acc: MatRef, bk: usize, bj: usize },
    /// Block-wise addition dst = x + y over 8x8 matrices.
    Add { x: MatRef, y: MatRef, dst: MatRef },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Instruction {
    Hia {
        init: SpongeInit,
        inputs: Vec<HashInput>,
        snapshot: bool,
    },
    Hos {
        len: usize,
        dest: SqueezeDest,
    },
    Mbr(MbrTarget),
    Mbw {
        dst: MatRef,
        bi: usize,
        bj: usize,
    },
    Mul(MulOp),
    Enc {
        msg: ByteSlot,
        dst: MatRef,
    },
    Dec {
        src: MatRef,
        msg: ByteSlot,
    },
    Cmp {
        ss0: ByteSlot,
        ss1: ByteSlot,
        ss2: ByteSlot,
        dst: ByteSlot,
    },
}

impl Instruction {
    pub fn opcode(&self) -> Opcode {
        match self {
            Instruction::Hia { .. } => Opcode::Hia,
            Instruction::Hos { .. } => Opcode::Hos,
            Instruction::Mbr(_) => Opcode::Mbr,
            Instruction::Mbw { .. } => Opcode::Mbw,
            Instruction::Mul(_) => Opcode::Mul,
            Instruction::Enc { .. } => Opcode::Enc,
            Instruction::Dec { .. } => Opcode::Dec,
            Instruction::Cmp { .. } => Opcode::Cmp,
        }
    }
}

struct M<'a>(&'a MatRef);

impl fmt::Display for M<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = self.0;
        let bank = match m.bank {
            crate::memory::BankId::Bank0 => 0,
            crate::memory::BankId::Bank1 => 1,
        };
        let (r, c) = m.dims();
        write!(f, "b{bank}@{}[{r}x{c}]{}", m.base, if m.transposed { "'" } else { "" })
    }
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:<4}", self.opcode().mnemonic())?;
        match self {
            Instruction::Hia { init, inputs, snapshot } => {
                match init {
                    SpongeInit::Fresh(ShakeVariant::Shake128) => write!(f, "new128")?,
                    SpongeInit::Fresh(ShakeVariant::Shake256) => write!(f, "new256")?,
                    SpongeInit::Restore => write!(f, "restore")?,
                }
                for i in inputs {
                    match i {
                        HashInput::Bytes(s) => write!(f, " {}", s.name())?,
                        HashInput::Literal(b) => {
                            write!(f, " #")?;
                            for x in b {
                                write!(f, "{x:02x}")?;
                            }
                        }
                        HashInput::Packed(m) => write!(f, " pack({})", M(m))?,
                    }
                }
                if *snapshot {
                    write!(f, " ; save")?;
                }
                Ok(())
            }
            Instruction::Hos { len, dest } => {
                write!(f, "{len} ->")?;
                match dest {
                    SqueezeDest::Bytes(slots) => {
                        for s in slots {
                            write!(f, " {}", s.name())?;
                        }
                        Ok(())
                    }
                    SqueezeDest::ARow { row } => write!(f, " arow {row}"),
                    SqueezeDest::Samples(ms) => {
                        write!(f, " sample")?;
                        for m in ms {
                            write!(f, " {}", M(m))?;
                        }
                        Ok(())
                    }
                }
            }
            Instruction::Mbr(MbrTarget::Addend { src, bi, bj }) => {
                write!(f, "acc <- {} ({bi},{bj})", M(src))
            }
            Instruction::Mbr(MbrTarget::Weights { src, bk, bj }) => {
                write!(f, "wgt <- {}^T ({bk},{bj})", M(src))
            }
            Instruction::Mbw { dst, bi, bj } => write!(f, "{} ({bi},{bj}) <- acc", M(dst)),
            Instruction::Mul(MulOp::Mac {
                left,
                right,
                bi,
                bj,
                sign,
            }) => {
                let op = if *sign == Sign::Add { "mac" } else { "msc" };
                match left {
                    LeftOperand::ABuffer => write!(f, "{op} abuf")?,
                    LeftOperand::Matrix(m) => write!(f, "{op} {}", M(m))?,
                }
                write!(f, " x {}^T ({bi},{bj})", M(right))
            }
            Instruction::Mul(MulOp::Ma { acc, bk, bj }) => {
                write!(f, "ma abuf slice {bk} col {bj} -> {}", M(acc))
            }
            Instruction::Mul(MulOp::Add { x, y, dst }) => {
                write!(f, "add {} + {} -> {}", M(x), M(y), M(dst))
            }
            Instruction::Enc { msg, dst } => write!(f, "{} -> {}", msg.name(), M(dst)),
            Instruction::Dec { src, msg } => write!(f, "{} -> {}", M(src), msg.name()),
            Instruction::Cmp { ss0, ss1, ss2, dst } => write!(
                f,
                "{} == {} ? {} : {} -> {}",
                ss0.name(),
                ss2.name(),
                ss0.name(),
                ss1.name(),
                dst.name()
            ),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mnemonics_roundtrip() {
        for op in Opcode::ALL {
            assert_eq!(Opcode::from_mnemonic(op.mnemonic()), Some(op));
        }
        assert_eq!(Opcode::from_mnemonic("nop"), None);
    }

    #[test]
    fn encode_and_decode_share_the_hash_unit() {
        assert_eq!(Opcode::Enc.unit(), Opcode::Hia.unit());
        assert_eq!(Opcode::Dec.unit(), Opcode::Hos.unit());
        assert_eq!(Opcode::Mbr.unit(), Opcode::Mul.unit());
        assert_ne!(Opcode::Cmp.unit(), Opcode::Mul.unit());
    }
}
