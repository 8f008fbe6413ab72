//! Keccak-f[1600] and the SHAKE128 / SHAKE256 sponges.

use crate::error::{FrodoError, Result};
use crate::params::ShakeVariant;

const ROUND_CONSTANTS: [u64; 24] = [
    0x0000000000000001,
    0x0000000000008082,
    0x800000000000808a,
    0x8000000080008000,
    0x000000000000808b,
    0x0000000080000001,
    0x8000000080008081,
    0x8000000000008009,
    0x000000000000008a,
    0x0000000000000088,
    0x0000000080008009,
    0x000000008000000a,
    0x000000008000808b,
    0x800000000000008b,
    0x8000000000008089,
    0x8000000000008003,
    0x8000000000008002,
    0x8000000000000080,
    0x000000000000800a,
    0x800000008000000a,
    0x8000000080008081,
    0x8000000000008080,
    0x0000000080000001,
    0x8000000080008008,
];

// rho offsets and pi destinations, walked along the pi cycle starting at lane 1
const RHO: [u32; 24] = [
    1, 3, 6, 10, 15, 21, 28, 36, 45, 55, 2, 14, 27, 41, 56, 8, 25, 43, 62, 18, 39, 61, 20, 44,
];
const PI: [usize; 24] = [
    10, 7, 11, 17, 18, 3, 5, 16, 8, 21, 24, 4, 15, 23, 19, 13, 12, 2, 20, 14, 22, 9, 6, 1,
];

/// Number of rounds in one permutation.
pub const KECCAK_ROUNDS: usize = 24;

/// Applies Keccak-f[1600] in place. Lane (x, y) is `state[x + 5 * y]`.
pub fn keccak_f1600(state: &mut [u64; 25]) {
    for rc in ROUND_CONSTANTS {
        // theta
        let mut c = [0u64; 5];
        for x in 0..5 {
            c[x] = state[x] ^ state[x + 5] ^ state[x + 10] ^ state[x + 15] ^ state[x + 20];
        }
        for x in 0..5 {
            let d = c[(x + 4) % 5] ^ c[(x + 1) % 5].rotate_left(1);
            for y in 0..5 {
                state[x + 5 * y] ^= d;
            }
        }
        // rho and pi
        let mut last = state[1];
        for i in 0..24 {
            let j = PI[i];
            let tmp = state[j];
            state[j] = last.rotate_left(RHO[i]);
            last = tmp;
        }
        // chi
        for y in 0..5 {
            let row = [
                state[5 * y],
                state[5 * y + 1],
                state[5 * y + 2],
                state[5 * y + 3],
                state[5 * y + 4],
            ];
            for x in 0..5 {
                state[5 * y + x] = row[x] ^ (!row[(x + 1) % 5] & row[(x + 2) % 5]);
            }
        }
        // iota
        state[0] ^= rc;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpongePhase {
    Absorbing,
    Squeezing,
}

/// Incremental SHAKE sponge.
///
/// Absorbing is allowed until the first squeeze; after that the state is
/// finalized and further absorbs fail.
#[derive(Clone, PartialEq, Eq)]
pub struct Shake {
    variant: ShakeVariant,
    state: [u64; 25],
    offset: usize,
    phase: SpongePhase,
    permutations: u64,
}

impl core::fmt::Debug for Shake {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("Shake")
            .field("variant", &self.variant)
            .field("offset", &self.offset)
            .field("phase", &self.phase)
            .finish_non_exhaustive()
    }
}

impl Shake {
    pub fn new(variant: ShakeVariant) -> Self {
        Shake {
            variant,
            state: [0; 25],
            offset: 0,
            phase: SpongePhase::Absorbing,
            permutations: 0,
        }
    }

    pub fn variant(&self) -> ShakeVariant {
        self.variant
    }

    pub fn phase(&self) -> SpongePhase {
        self.phase
    }

    /// Permutations applied so far.
    pub fn permutations(&self) -> u64 {
        self.permutations
    }

    fn rate(&self) -> usize {
        self.variant.rate()
    }

    fn xor_byte(&mut self, pos: usize, b: u8) {
        self.state[pos / 8] ^= (b as u64) << (8 * (pos % 8));
    }

    fn byte(&self, pos: usize) -> u8 {
        (self.state[pos / 8] >> (8 * (pos % 8))) as u8
    }

    fn permute(&mut self) {
        keccak_f1600(&mut self.state);
        self.permutations += 1;
    }

    pub fn absorb(&mut self, data: &[u8]) -> Result<()> {
        if self.phase == SpongePhase::Squeezing {
            return Err(FrodoError::AbsorbAfterSqueeze);
        }
        let rate = self.rate();
        for &b in data {
            self.xor_byte(self.offset, b);
            self.offset += 1;
            if self.offset == rate {
                self.permute();
                self.offset = 0;
            }
        }
        Ok(())
    }

    fn finalize(&mut self) {
        let rate = self.rate();
        self.xor_byte(self.offset, 0x1F);
        self.xor_byte(rate - 1, 0x80);
        self.permute();
        self.offset = 0;
        self.phase = SpongePhase::Squeezing;
    }

    pub fn squeeze(&mut self, out: &mut [u8]) {
        if self.phase == SpongePhase::Absorbing {
            self.finalize();
        }
        let rate = self.rate();
        for o in out.iter_mut() {
            if self.offset == rate {
                self.permute();
                self.offset = 0;
            }
            *o = self.byte(self.offset);
            self.offset += 1;
        }
    }

    pub fn squeeze_vec(&mut self, len: usize) -> Vec<u8> {
        let mut out = vec![0u8; len];
        self.squeeze(&mut out);
        out
    }
}

/// One-shot SHAKE over the concatenation of `parts`.
pub fn shake_parts(variant: ShakeVariant, parts: &[&[u8]], out_len: usize) -> Vec<u8> {
    let mut s = Shake::new(variant);
    for p in parts {
        s.absorb(p).expect("fresh sponge");
    }
    s.squeeze_vec(out_len)
}

pub fn shake(variant: ShakeVariant, input: &[u8], out_len: usize) -> Vec<u8> {
    shake_parts(variant, &[input], out_len)
}

pub fn shake128(input: &[u8], out_len: usize) -> Vec<u8> {
    shake(ShakeVariant::Shake128, input, out_len)
}

pub fn shake256(input: &[u8], out_len: usize) -> Vec<u8> {
    shake(ShakeVariant::Shake256, input, out_len)
}
