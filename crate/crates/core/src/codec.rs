//! Message encoding and D-bit packing.

use crate::error::{FrodoError, Result};
use crate::matrix::MatrixZq;
use crate::params::ParameterSet;

/// Encodes a len_mu byte message into an nbar x nbar matrix. The message is
/// read as a little-endian bit string; each B-bit chunk lands in the top B
/// bits of one entry, row-major.
pub fn encode(msg: &[u8], p: &ParameterSet) -> Result<MatrixZq> {
    if msg.len() != p.len_mu {
        return Err(FrodoError::InvalidLength {
            what: "message",
            expected: p.len_mu,
            actual: msg.len(),
        });
    }
    let b = p.extracted_bits as usize;
    let shift = p.log_q - p.extracted_bits;
    let entries = p.nbar * p.nbar;
    let mut data = Vec::with_capacity(entries);
    for k in 0..entries {
        let mut chunk = 0u16;
        for t in 0..b {
            let bit = k * b + t;
            chunk |= (((msg[bit / 8] >> (bit % 8)) & 1) as u16) << t;
        }
        data.push(chunk << shift);
    }
    MatrixZq::from_vec(p.nbar, p.nbar, p.log_q, data)
}

/// Rounds each entry to its top B bits and reassembles the message.
pub fn decode(m: &MatrixZq, p: &ParameterSet) -> Result<Vec<u8>> {
    if m.rows() != p.nbar || m.cols() != p.nbar {
        return Err(FrodoError::Shape(format!(
            "decode expects {0}x{0}, got {1}x{2}",
            p.nbar,
            m.rows(),
            m.cols()
        )));
    }
    let b = p.extracted_bits as usize;
    let shift = p.log_q - p.extracted_bits;
    let bmask = (1u32 << b) - 1;
    let mut out = vec![0u8; p.len_mu];
    for (k, &v) in m.as_slice().iter().enumerate() {
        let x = ((v & p.q_mask()) as u32 + (1 << (shift - 1))) >> shift;
        let chunk = x & bmask;
        for t in 0..b {
            let bit = k * b + t;
            out[bit / 8] |= (((chunk >> t) & 1) as u8) << (bit % 8);
        }
    }
    Ok(out)
}

/// Packs entries as D-bit fields, most significant bit first.
pub fn pack(m: &MatrixZq, p: &ParameterSet) -> Vec<u8> {
    pack_words(m.as_slice(), p.log_q)
}

pub fn pack_words(words: &[u16], log_q: u32) -> Vec<u8> {
    let d = log_q as usize;
    let mut out = vec![0u8; words.len() * d / 8];
    let mut acc: u32 = 0;
    let mut bits = 0usize;
    let mut pos = 0;
    for &w in words {
        let w = w as u32 & ((1u32 << d) - 1);
        acc = (acc << d) | w;
        bits += d;
        while bits >= 8 {
            bits -= 8;
            out[pos] = (acc >> bits) as u8;
            pos += 1;
        }
        acc &= (1u32 << bits) - 1;
    }
    out
}

/// Inverse of [`pack`] for a rows x cols matrix.
pub fn unpack(bytes: &[u8], rows: usize, cols: usize, p: &ParameterSet) -> Result<MatrixZq> {
    let expected = p.packed_len(rows, cols);
    if bytes.len() != expected {
        return Err(FrodoError::InvalidLength {
            what: "packed matrix",
            expected,
            actual: bytes.len(),
        });
    }
    let d = p.log_q as usize;
    let mut data = Vec::with_capacity(rows * cols);
    let mut acc: u32 = 0;
    let mut bits = 0usize;
    for &b in bytes {
        acc = (acc << 8) | b as u32;
        bits += 8;
        if bits >= d {
            bits -= d;
            data.push((acc >> bits) as u16);
            acc &= (1u32 << bits) - 1;
        }
    }
    MatrixZq::from_vec(rows, cols, p.log_q, data)
}
