//! Cycle costs of the execution units.

use frodo_core::ShakeVariant;
use serde::{Deserialize, Serialize};

/// Keccak-f[1600] latency in the hash unit.
pub const PERMUTATION_CYCLES: u64 = 24;
/// Bytes moved per cycle on the hash unit's data interface.
pub const IO_BYTES_PER_CYCLE: usize = 8;
pub const ENC_CYCLES: u64 = 23;
pub const DEC_CYCLES: u64 = 23;
pub const CMP_CYCLES: u64 = 9;
/// Cycles to move one 2x4 block between memory and the array.
pub const BLOCK_MOVE_CYCLES: u64 = 2;

/// The three fitted parameters of the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimingParams {
    /// Pipeline fill and drain per MUL phase.
    pub mul_fill: u64,
    /// Added to the latency of every issued instruction.
    pub issue_overhead: u64,
    /// Fixed start-up cost of an absorb.
    pub absorb_setup: u64,
}

impl Default for TimingParams {
    fn default() -> Self {
        TimingParams {
            mul_fill: 8,
            issue_overhead: 4,
            absorb_setup: 55,
        }
    }
}

/// Data-interface words for one full rate block (21 or 17).
pub fn io_latency(v: ShakeVariant) -> u64 {
    (v.rate() / IO_BYTES_PER_CYCLE) as u64
}

fn words(bytes: usize) -> u64 {
    bytes.div_ceil(IO_BYTES_PER_CYCLE) as u64
}

/// Cycles to absorb `len` bytes into a sponge already holding `offset`
/// bytes of a partial block, excluding setup. The padding permutation is
/// charged to the first squeeze.
pub fn absorb_cycles(offset: usize, len: usize, v: ShakeVariant, io_overlap: bool) -> u64 {
    let rate = v.rate();
    let perms = ((offset % rate + len) / rate) as u64;
    let w = words(len);
    if io_overlap {
        // only the first block's transfer is exposed; later transfers hide
        // under the permutation of the previous block
        w.min(io_latency(v)) + perms * PERMUTATION_CYCLES
    } else {
        w + perms * PERMUTATION_CYCLES
    }
}

/// Cycles to squeeze `len` bytes after absorbing, including the padding
/// permutation.
pub fn squeeze_cycles(len: usize, v: ShakeVariant, io_overlap: bool) -> u64 {
    if len == 0 {
        return 0;
    }
    let rate = v.rate();
    let blocks = len.div_ceil(rate) as u64;
    let w = words(len);
    if io_overlap {
        let last = w - (blocks - 1) * io_latency(v);
        blocks * PERMUTATION_CYCLES + last
    } else {
        w + blocks * PERMUTATION_CYCLES
    }
}

/// Hash-unit data path cost of one absorb followed by one squeeze.
pub fn hash_cycles(absorbed: usize, squeezed: usize, v: ShakeVariant, io_overlap: bool) -> u64 {
    absorb_cycles(0, absorbed, v, io_overlap) + squeeze_cycles(squeezed, v, io_overlap)
}

/// Throughput gain of I/O overlap for a squeeze of `blocks` full blocks.
pub fn squeeze_overlap_gain(blocks: usize, v: ShakeVariant) -> f64 {
    let len = blocks * v.rate();
    squeeze_cycles(len, v, false) as f64 / squeeze_cycles(len, v, true) as f64
}

/// MAC phase over `len` block products.
pub fn mac_cycles(len: usize, t: &TimingParams) -> u64 {
    len as u64 + t.mul_fill
}

/// MA phase over `len` row pairs. Reading and writing the partial sums
/// every cycle costs a second fill/drain.
pub fn ma_cycles(len: usize, t: &TimingParams) -> u64 {
    len as u64 + 2 * t.mul_fill
}

/// Block-wise addition of two 8x8 matrices (eight 2x4 blocks).
pub fn add_cycles(t: &TimingParams) -> u64 {
    8 + 2 * t.mul_fill
}
