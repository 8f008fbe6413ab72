//! Pseudorandom matrix A and the CDF noise sampler.

use crate::error::{FrodoError, Result};
use crate::matrix::RowSource;
use crate::params::{ParameterSet, ShakeVariant};
use crate::xof::{shake_parts, Shake};

/// Generates row `row` of A: SHAKE128(u16_le(row) || seed_a) read as
/// little-endian 16-bit words, reduced mod q.
pub fn gen_a_row(seed_a: &[u8], row: usize, p: &ParameterSet) -> Result<Vec<u16>> {
    if row >= p.n {
        return Err(FrodoError::RowOutOfRange { row, n: p.n });
    }
    if seed_a.len() != p.len_seed_a {
        return Err(FrodoError::InvalidLength {
            what: "seedA",
            expected: p.len_seed_a,
            actual: seed_a.len(),
        });
    }
    let tag = (row as u16).to_le_bytes();
    let bytes = shake_parts(ShakeVariant::Shake128, &[&tag, seed_a], 2 * p.n);
    let m = p.q_mask();
    Ok(bytes
        .chunks_exact(2)
        .map(|c| u16::from_le_bytes([c[0], c[1]]) & m)
        .collect())
}

/// Streams the rows of A in ascending order, generating each on demand.
pub struct RowStream<'a> {
    seed_a: Vec<u8>,
    p: &'a ParameterSet,
    next: usize,
}

impl<'a> RowStream<'a> {
    pub fn new(seed_a: &[u8], p: &'a ParameterSet) -> Result<Self> {
        if seed_a.len() != p.len_seed_a {
            return Err(FrodoError::InvalidLength {
                what: "seedA",
                expected: p.len_seed_a,
                actual: seed_a.len(),
            });
        }
        Ok(RowStream {
            seed_a: seed_a.to_vec(),
            p,
            next: 0,
        })
    }
}

impl RowSource for RowStream<'_> {
    fn rows(&self) -> usize {
        self.p.n
    }

    fn row_len(&self) -> usize {
        self.p.n
    }

    fn next_row(&mut self) -> Result<Vec<u16>> {
        if self.next >= self.p.n {
            return Err(FrodoError::ProviderExhausted(self.next));
        }
        let r = gen_a_row(&self.seed_a, self.next, self.p)?;
        self.next += 1;
        Ok(r)
    }
}

impl Iterator for RowStream<'_> {
    type Item = Vec<u16>;

    fn next(&mut self) -> Option<Vec<u16>> {
        self.next_row().ok()
    }
}

/// Maps one 16-bit random word to a sample in [-d, d].
///
/// Every table entry is compared on every call; the loop shape does not
/// depend on the input.
pub fn sample_cdf(r: u16, p: &ParameterSet) -> i8 {
    sample_cdf_counted(r, p.cdf_table).0
}

/// Same as [`sample_cdf`] against an explicit table, also returning the
/// number of table comparisons performed.
pub fn sample_cdf_counted(r: u16, table: &[u16]) -> (i8, usize) {
    let prnd = r >> 1;
    let sign = r & 1;
    let mut sample: u16 = 0;
    let mut comparisons = 0;
    for &t in &table[..table.len() - 1] {
        sample = sample.wrapping_add(t.wrapping_sub(prnd) >> 15);
        comparisons += 1;
    }
    let v = ((0u16.wrapping_sub(sign)) ^ sample).wrapping_add(sign);
    (v as i16 as i8, comparisons)
}

/// Converts squeezed bytes to samples, two bytes per sample.
pub fn samples_from_bytes(bytes: &[u8], p: &ParameterSet) -> Vec<i8> {
    bytes
        .chunks_exact(2)
        .map(|c| sample_cdf(u16::from_le_bytes([c[0], c[1]]), p))
        .collect()
}

/// Draws `count` samples from SHAKE(domain || seed_se). The count must be
/// 2*n*nbar (KeyGen) or 2*n*nbar + nbar^2 (Encaps/Decaps).
pub fn sample_matrix(seed_se: &[u8], domain: u8, count: usize, p: &ParameterSet) -> Result<Vec<i8>> {
    let base = 2 * p.n * p.nbar;
    if count != base && count != base + p.nbar * p.nbar {
        return Err(FrodoError::SampleCount { count });
    }
    if seed_se.len() != p.len_seed_se {
        return Err(FrodoError::InvalidLength {
            what: "seedSE",
            expected: p.len_seed_se,
            actual: seed_se.len(),
        });
    }
    let mut sponge = Shake::new(p.shake);
    sponge.absorb(&[domain])?;
    sponge.absorb(seed_se)?;
    let bytes = sponge.squeeze_vec(2 * count);
    Ok(samples_from_bytes(&bytes, p))
}
