//! Cycle-level model of a FrodoKEM co-processor: a SHAKE hash unit, a
//! systolic matrix array and a small compare unit behind a dual-issue
//! in-order dispatcher.

pub mod dispatch;
pub mod isa;
pub mod machine;
pub mod memory;
pub mod programs;
pub mod report;
pub mod timing;

pub use isa::{Instruction, Opcode};
pub use machine::{Machine, MachineConfig, SimError, SimInputs, SimOutputs};
pub use programs::{build_program, Phase, Program};
pub use report::{simulate, CycleReport};
