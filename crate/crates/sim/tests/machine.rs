use frodo_core::SecurityLevel;
use frodo_core::ShakeVariant;
use frodo_sim::isa::{HashInput, Instruction, LeftOperand, MbrTarget, MulOp, Sign, SpongeInit, SqueezeDest};
use frodo_sim::machine::StepOutcome;
use frodo_sim::memory::{BankId, ByteSlot, MatRef, MemoryMap, SmallSlot, DEPTH};
use frodo_sim::report::{inputs_from_seed, reference_outputs};
use frodo_sim::*;

const L: SecurityLevel = SecurityLevel::Frodo640;

fn program(overlap: bool, instructions: Vec<Instruction>) -> Program {
    let map = MemoryMap::new(L.params());
    Program {
        level: L,
        phase: Phase::Decaps,
        overlap,
        a_buffer: map.a_buffer(BankId::Bank1),
        instructions,
    }
}

fn machine(cfg: MachineConfig, p: Program) -> Machine {
    let mut m = Machine::new(L, cfg);
    m.load_program(p).unwrap();
    m
}

fn timing_only() -> MachineConfig {
    MachineConfig {
        functional: false,
        ..MachineConfig::default()
    }
}

fn cmp() -> Instruction {
    Instruction::Cmp {
        ss0: ByteSlot::Ss0,
        ss1: ByteSlot::Ss1,
        ss2: ByteSlot::Ss2,
        dst: ByteSlot::Ss,
    }
}

#[test]
fn empty_program_halts_at_zero() {
    let mut m = machine(timing_only(), program(true, vec![]));
    assert_eq!(m.run_to_halt().unwrap(), 0);
    assert!(m.is_halted());
}

#[test]
fn single_cmp_takes_nine_cycles_plus_issue() {
    let mut cfg = timing_only();
    cfg.timing.issue_overhead = 0;
    let mut m = machine(cfg, program(true, vec![cmp()]));
    assert_eq!(m.run_to_halt().unwrap(), 9);
    assert_eq!(m.tally(Opcode::Cmp).cycles, 9);

    let mut m = machine(timing_only(), program(true, vec![cmp()]));
    let o = timing_only().timing.issue_overhead;
    assert_eq!(m.run_to_halt().unwrap(), 9 + o);
    assert_eq!(m.tally(Opcode::Cmp).cycles, 9);
    assert_eq!(m.tally(Opcode::Cmp).overhead, o);
}

#[test]
fn malformed_operands_rejected_at_load() {
    let mut m = Machine::new(L, timing_only());
    let off_end = MatRef::wide(BankId::Bank0, (DEPTH - 4) as u16, 8);
    let bad = program(
        true,
        vec![Instruction::Mbw {
            dst: off_end,
            bi: 0,
            bj: 0,
        }],
    );
    assert!(matches!(m.load_program(bad), Err(SimError::Load { index: 0, .. })));

    let block = program(
        true,
        vec![Instruction::Mbw {
            dst: SmallSlot::C.mat(),
            bi: 4,
            bj: 0,
        }],
    );
    assert!(m.load_program(block).is_err());

    let row = program(
        true,
        vec![Instruction::Hos {
            len: 1280,
            dest: SqueezeDest::ARow { row: 640 },
        }],
    );
    assert!(m.load_program(row).is_err());

    let short = program(
        true,
        vec![
            cmp(),
            Instruction::Hos {
                len: 3,
                dest: SqueezeDest::Bytes(vec![ByteSlot::Ss]),
            },
        ],
    );
    assert!(matches!(m.load_program(short), Err(SimError::Load { index: 1, .. })));
}

fn absorb() -> Instruction {
    Instruction::Hia {
        init: SpongeInit::Fresh(ShakeVariant::Shake128),
        inputs: vec![HashInput::Bytes(ByteSlot::Z)],
        snapshot: false,
    }
}

fn squeeze_row(row: usize) -> Instruction {
    Instruction::Hos {
        len: 2 * L.params().n,
        dest: SqueezeDest::ARow { row },
    }
}

fn mac(bi: usize, bj: usize) -> [Instruction; 3] {
    let map = MemoryMap::new(L.params());
    let e = map.space_e();
    [
        Instruction::Mbr(MbrTarget::Addend { src: e, bi, bj }),
        Instruction::Mul(MulOp::Mac {
            left: LeftOperand::ABuffer,
            right: map.space_s(),
            bi,
            bj,
            sign: Sign::Add,
        }),
        Instruction::Mbw { dst: e, bi, bj },
    ]
}

#[test]
fn squeeze_overlaps_multiply_on_other_partition() {
    // rows 0 and 1 first, then row 2 is squeezed while block row 0 multiplies
    let mut ins = vec![absorb(), squeeze_row(0), absorb(), squeeze_row(1), absorb()];
    let [r, mul, w] = mac(0, 0);
    ins.extend([r, squeeze_row(2), mul, w]);
    let mut m = machine(timing_only(), program(true, ins));
    m.run_to_halt().unwrap();
    let h = m.history();
    let hos = h.iter().find(|r| r.index == 6).unwrap();
    let mul = h.iter().find(|r| r.index == 7).unwrap();
    assert!(mul.issue < hos.end, "MUL waited for the HOS");
    assert!(hos.issue < mul.end);
    assert!(m.overlap_savings() > 0);
    assert!(m.hazards().is_empty());
}

#[test]
fn absorb_then_squeeze_serializes() {
    let ins = vec![absorb(), squeeze_row(0)];
    let mut m = machine(timing_only(), program(true, ins));
    m.run_to_halt().unwrap();
    let h = m.history();
    assert!(h[1].issue >= h[0].end);
    assert_eq!(m.overlap_savings(), 0);
}

#[test]
fn multiply_waits_for_its_rows() {
    // the MUL of block row 1 needs rows 2 and 3, which come from the HOS
    // issued just before it
    let mut ins = vec![absorb(), squeeze_row(2), absorb(), squeeze_row(3)];
    let [r, mul, w] = mac(1, 0);
    ins.extend([r, mul, w]);
    let mut m = machine(timing_only(), program(true, ins));
    m.run_to_halt().unwrap();
    let h = m.history();
    assert!(h[5].issue >= h[3].end);
}

#[test]
fn missing_producer_is_a_deadlock() {
    let [r, mul, w] = mac(3, 1);
    let mut m = machine(timing_only(), program(true, vec![r, mul, w]));
    match m.run_to_halt() {
        Err(SimError::Deadlock { head, next, .. }) => {
            assert_eq!(head, 1);
            assert_eq!(next, Some(2));
        }
        other => panic!("expected deadlock, got {other:?}"),
    }
}

#[test]
fn serial_total_is_sum_of_latencies() {
    for phase in Phase::ALL {
        let (r, _) = simulate(L, phase, false, None, MachineConfig::default()).unwrap();
        assert_eq!(r.total, r.serial_total);
        assert_eq!(r.overlap_savings, 0);
    }
}

#[test]
fn tallies_conserve_cycles() {
    for level in SecurityLevel::ALL {
        for phase in Phase::ALL {
            let mut m = Machine::new(level, timing_only());
            m.load_program(build_program(level, phase, true)).unwrap();
            let total = m.run_to_halt().unwrap();
            let busy: u64 = Opcode::ALL
                .iter()
                .map(|o| m.tally(*o).cycles + m.tally(*o).overhead)
                .sum();
            assert_eq!(busy - m.overlap_savings() + m.idle_cycles(), total);
            assert_eq!(m.idle_cycles(), 0, "{level} {phase}");
        }
    }
}

#[test]
fn overlap_never_slower() {
    for level in SecurityLevel::ALL {
        for phase in Phase::ALL {
            let (on, _) = simulate(level, phase, true, None, MachineConfig::default()).unwrap();
            let (off, _) = simulate(level, phase, false, None, MachineConfig::default()).unwrap();
            assert!(on.total <= off.total);
        }
    }
}

#[test]
fn stepping_matches_event_skipping() {
    let prog = build_program(L, Phase::Encaps, true);
    let mut a = Machine::new(L, timing_only());
    a.load_program(prog.clone()).unwrap();
    let total = a.run_to_halt().unwrap();
    let mut b = Machine::new(L, timing_only());
    b.load_program(prog).unwrap();
    while b.step().unwrap() != StepOutcome::Halted {}
    assert_eq!(b.cycle(), total);
    assert_eq!(a.history(), b.history());
    assert_eq!(a.overlap_savings(), b.overlap_savings());
}

#[test]
fn same_outputs_with_and_without_overlap() {
    let seed = [7u8; 48];
    for phase in Phase::ALL {
        let inputs = inputs_from_seed(L, phase, &seed).unwrap();
        let (on, out_on) = simulate(L, phase, true, Some(&inputs), MachineConfig::default()).unwrap();
        let (off, out_off) = simulate(L, phase, false, Some(&inputs), MachineConfig::default()).unwrap();
        assert_eq!(out_on, out_off);
        assert_eq!(on.output_digest, off.output_digest);
        assert_eq!(out_on.unwrap(), reference_outputs(L, &inputs).unwrap());
        assert_eq!(on.hazards, 0);
    }
}

#[test]
fn inputs_must_match_phase() {
    let mut m = Machine::new(L, MachineConfig::default());
    m.load_program(build_program(L, Phase::KeyGen, true)).unwrap();
    let enc = inputs_from_seed(L, Phase::Encaps, &[1u8; 48]).unwrap();
    assert!(matches!(m.load_inputs(&enc), Err(SimError::InputMismatch { .. })));
    let short = SimInputs::KeyGen {
        randomness: vec![0; 10],
    };
    assert!(matches!(m.load_inputs(&short), Err(SimError::BadInput { .. })));
}

#[test]
fn io_overlap_off_is_slower() {
    let slow = MachineConfig {
        hash_io_overlap: false,
        ..MachineConfig::default()
    };
    let (a, _) = simulate(L, Phase::KeyGen, true, None, MachineConfig::default()).unwrap();
    let (b, _) = simulate(L, Phase::KeyGen, true, None, slow).unwrap();
    assert!(b.op(Opcode::Hos).cycles > a.op(Opcode::Hos).cycles);
}

#[test]
fn keygen_640_array_tallies() {
    let (r, _) = simulate(L, Phase::KeyGen, true, None, MachineConfig::default()).unwrap();
    assert_eq!(r.op(Opcode::Mul).cycles, 107_520);
    assert_eq!(r.op(Opcode::Mbr).cycles, 1_280);
    assert_eq!(r.op(Opcode::Mbw).cycles, 1_280);
    assert_eq!(r.op(Opcode::Mul).count, 640);
}

#[test]
fn runs_are_deterministic() {
    let (a, _) = simulate(
        SecurityLevel::Frodo976,
        Phase::Decaps,
        true,
        None,
        MachineConfig::default(),
    )
    .unwrap();
    let (b, _) = simulate(
        SecurityLevel::Frodo976,
        Phase::Decaps,
        true,
        None,
        MachineConfig::default(),
    )
    .unwrap();
    assert_eq!(a, b);
}

mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn program_prefixes_run_clean(phase_idx in 0usize..3, cut in 0usize..4000) {
            let phase = Phase::ALL[phase_idx];
            let mut on = build_program(L, phase, true);
            let cut = cut % (on.len() + 1);
            on.instructions.truncate(cut);
            let mut off = on.clone();
            off.overlap = false;

            let mut a = Machine::new(L, timing_only());
            a.load_program(on).unwrap();
            let t_on = a.run_to_halt().unwrap();
            let mut b = Machine::new(L, timing_only());
            b.load_program(off).unwrap();
            let t_off = b.run_to_halt().unwrap();

            prop_assert!(t_on <= t_off);
            let busy: u64 = Opcode::ALL.iter().map(|o| a.tally(*o).cycles + a.tally(*o).overhead).sum();
            prop_assert_eq!(busy - a.overlap_savings() + a.idle_cycles(), t_on);
            prop_assert_eq!(busy, t_off);
            prop_assert_eq!(a.history().len(), cut);
            for r in a.history() {
                prop_assert!(r.end - r.issue >= r.cycles);
            }
        }
    }
}

#[test]
fn decaps_640_tallies() {
    let (r, _) = simulate(L, Phase::Decaps, true, None, MachineConfig::default()).unwrap();
    assert_eq!(r.op(Opcode::Mul).cycles, 110_232);
    assert_eq!(r.op(Opcode::Mbw).cycles, 32);
    assert!((r.op(Opcode::Mbr).cycles as i64 - 1_314).abs() <= 13);
    assert_eq!(r.op(Opcode::Enc).cycles, 23);
    assert_eq!(r.op(Opcode::Dec).cycles, 23);
    assert_eq!(r.op(Opcode::Cmp).cycles, 9);
}
