//! Conflict detection for the dual-instruction buffer.

use frodo_core::ParameterSet;
use serde::{Deserialize, Serialize};

use crate::isa::{HashInput, Instruction, LeftOperand, MbrTarget, MulOp, SqueezeDest};
use crate::memory::{ABuffer, MatRef, Span};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Conflict {
    Parallel,
    Serialize,
}

/// Issue state of the dual-instruction buffer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DispatchState {
    Idle,
    Single,
    Dual,
}

impl DispatchState {
    pub fn from_in_flight(count: usize) -> Self {
        match count {
            0 => DispatchState::Idle,
            1 => DispatchState::Single,
            _ => DispatchState::Dual,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Access {
    pub span: Span,
    pub write: bool,
}

fn rd(span: Span) -> Access {
    Access { span, write: false }
}

fn wr(span: Span) -> Access {
    Access { span, write: true }
}

/// Span of the 4x4 block (bk, bj) of the transpose of a narrow matrix.
pub fn weights_span(m: &MatRef, bk: usize, bj: usize) -> Span {
    let l = m.loc(4 * bj, 4 * bk);
    Span {
        bank: m.bank,
        start: l.addr,
        end: l.addr + 1,
    }
}

/// Memory ranges an instruction reads and writes.
pub fn footprint(ins: &Instruction, p: &ParameterSet, abuf: &ABuffer) -> Vec<Access> {
    match ins {
        Instruction::Hia { inputs, .. } => inputs
            .iter()
            .filter_map(|i| match i {
                HashInput::Bytes(s) => Some(rd(s.span(p))),
                HashInput::Packed(m) => Some(rd(m.span())),
                HashInput::Literal(_) => None,
            })
            .collect(),
        Instruction::Hos { dest, .. } => match dest {
            SqueezeDest::Bytes(slots) => slots.iter().map(|s| wr(s.span(p))).collect(),
            SqueezeDest::ARow { row } => vec![wr(abuf.partition_span(ABuffer::partition_of_row(*row)))],
            SqueezeDest::Samples(ms) => ms.iter().map(|m| wr(m.span())).collect(),
        },
        Instruction::Mbr(MbrTarget::Addend { src, bi, bj }) => vec![rd(src.block_span(*bi, *bj))],
        Instruction::Mbr(MbrTarget::Weights { src, bk, bj }) => vec![rd(weights_span(src, *bk, *bj))],
        Instruction::Mbw { dst, bi, bj } => vec![wr(dst.block_span(*bi, *bj))],
        Instruction::Mul(MulOp::Mac { left, right, bi, .. }) => {
            let l = match left {
                LeftOperand::ABuffer => abuf.partition_span(bi % 4),
                LeftOperand::Matrix(m) => m.span(),
            };
            vec![rd(l), rd(right.span())]
        }
        Instruction::Mul(MulOp::Ma { acc, bk, .. }) => {
            let pair = 2 * (bk % 2);
            vec![
                rd(abuf.partition_span(pair)),
                rd(abuf.partition_span(pair + 1)),
                rd(acc.span()),
                wr(acc.span()),
            ]
        }
        Instruction::Mul(MulOp::Add { x, y, dst }) => vec![rd(x.span()), rd(y.span()), wr(dst.span())],
        Instruction::Enc { msg, dst } => vec![rd(msg.span(p)), wr(dst.span())],
        Instruction::Dec { src, msg } => vec![rd(src.span()), wr(msg.span(p))],
        Instruction::Cmp { ss0, ss1, ss2, dst } => {
            vec![rd(ss0.span(p)), rd(ss1.span(p)), rd(ss2.span(p)), wr(dst.span(p))]
        }
    }
}

/// True when two access lists touch a common address and one of them writes it.
pub fn accesses_collide(a: &[Access], b: &[Access]) -> bool {
    a.iter()
        .any(|x| b.iter().any(|y| (x.write || y.write) && x.span.overlaps(&y.span)))
}

/// Decides whether `b` may execute while `a` is in flight.
pub fn detect_conflict(a: &Instruction, b: &Instruction, p: &ParameterSet, abuf: &ABuffer) -> Conflict {
    conflict_from_parts(
        a.opcode().unit() == b.opcode().unit(),
        &footprint(a, p, abuf),
        &footprint(b, p, abuf),
    )
}

pub(crate) fn conflict_from_parts(same_unit: bool, fa: &[Access], fb: &[Access]) -> Conflict {
    if same_unit || accesses_collide(fa, fb) {
        Conflict::Serialize
    } else {
        Conflict::Parallel
    }
}
