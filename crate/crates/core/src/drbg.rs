//! AES-256 CTR DRBG as used by the NIST known-answer test harness.

use aes::cipher::{BlockCipherEncrypt, KeyInit};
use aes::{Aes256, Block};

use crate::error::{FrodoError, Result};

pub const SEED_LEN: usize = 48;

pub struct CtrDrbg {
    key: [u8; 32],
    v: [u8; 16],
    reseed_counter: u64,
}

fn increment(v: &mut [u8; 16]) {
    for b in v.iter_mut().rev() {
        *b = b.wrapping_add(1);
        if *b != 0 {
            break;
        }
    }
}

impl CtrDrbg {
    /// Instantiates from 48 bytes of entropy and an optional personalization string.
    pub fn new(entropy: &[u8], personalization: Option<&[u8; SEED_LEN]>) -> Result<Self> {
        if entropy.len() != SEED_LEN {
            return Err(FrodoError::InvalidLength {
                what: "DRBG seed",
                expected: SEED_LEN,
                actual: entropy.len(),
            });
        }
        let mut material = [0u8; SEED_LEN];
        material.copy_from_slice(entropy);
        if let Some(ps) = personalization {
            for (m, p) in material.iter_mut().zip(ps) {
                *m ^= p;
            }
        }
        let mut d = CtrDrbg {
            key: [0; 32],
            v: [0; 16],
            reseed_counter: 0,
        };
        d.update(Some(&material));
        d.reseed_counter = 1;
        Ok(d)
    }

    fn encrypt(&self, v: &[u8; 16]) -> [u8; 16] {
        let cipher = Aes256::new_from_slice(&self.key).expect("32-byte key");
        let mut block = Block::from(*v);
        cipher.encrypt_block(&mut block);
        block.into()
    }

    fn update(&mut self, provided: Option<&[u8; SEED_LEN]>) {
        let mut temp = [0u8; SEED_LEN];
        for i in 0..3 {
            increment(&mut self.v);
            temp[16 * i..16 * (i + 1)].copy_from_slice(&self.encrypt(&self.v));
        }
        if let Some(p) = provided {
            for (t, x) in temp.iter_mut().zip(p) {
                *t ^= x;
            }
        }
        self.key.copy_from_slice(&temp[..32]);
        self.v.copy_from_slice(&temp[32..]);
    }

    pub fn fill(&mut self, out: &mut [u8]) {
        for chunk in out.chunks_mut(16) {
            increment(&mut self.v);
            let block = self.encrypt(&self.v);
            chunk.copy_from_slice(&block[..chunk.len()]);
        }
        self.update(None);
        self.reseed_counter += 1;
    }

    pub fn bytes(&mut self, len: usize) -> Vec<u8> {
        let mut out = vec![0u8; len];
        self.fill(&mut out);
        out
    }
}

/// The harness master seed: bytes 0, 1, ..., 47.
pub fn master_entropy() -> [u8; SEED_LEN] {
    core::array::from_fn(|i| i as u8)
}

/// The per-vector seeds the harness derives from the master seed.
pub fn kat_seeds(count: usize) -> Vec<[u8; SEED_LEN]> {
    let mut d = CtrDrbg::new(&master_entropy(), None).expect("48-byte seed");
    (0..count)
        .map(|_| {
            let mut s = [0u8; SEED_LEN];
            d.fill(&mut s);
            s
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_harness_seeds() {
        let seeds = kat_seeds(2);
        assert_eq!(
            hex::encode_upper(seeds[0]),
            "061550234D158C5EC95595FE04EF7A25767F2E24CC2BC479D09D86DC9ABCFDE7056A8C266F9EF97ED08541DBD2E1FFA1"
        );
        assert_eq!(
            hex::encode_upper(seeds[1]),
            "D81C4D8D734FCBFBEADE3D3F8A039FAA2A2C9957E835AD55B22E75BF57BB556AC81ADDE6AEEB4A5A875C3BFCADFA958F"
        );
    }

    #[test]
    fn fips197_aes256_block() {
        let d = CtrDrbg {
            key: core::array::from_fn(|i| i as u8),
            v: [0; 16],
            reseed_counter: 0,
        };
        let pt: [u8; 16] = core::array::from_fn(|i| (i as u8) * 0x11);
        assert_eq!(hex::encode(d.encrypt(&pt)), "8ea2b7ca516745bfeafc49904b496089");
    }

    #[test]
    fn rejects_short_seed() {
        assert!(CtrDrbg::new(&[0u8; 47], None).is_err());
    }
}
