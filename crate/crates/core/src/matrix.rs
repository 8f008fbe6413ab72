//! Matrices over Z_q and the block-level multiply engine.
//!
//! The engine works on 2x4 blocks of the left operand and 4x4 blocks of the
//! small signed right operand. Two traversal orders are provided: MAC mode,
//! which finishes one 2x4 result block per phase, and MA mode, which fixes a
//! 4-row slice of the left operand per phase and updates every result block
//! with a partial sum.

use crate::error::{FrodoError, Result};

/// Dense matrix of D-bit unsigned entries stored in 16-bit words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatrixZq {
    rows: usize,
    cols: usize,
    log_q: u32,
    data: Vec<u16>,
}

/// Dense matrix of small signed sampler outputs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignedMatrix {
    rows: usize,
    cols: usize,
    data: Vec<i8>,
}

pub type Block2x4 = [[u16; 4]; 2];
pub type Block4x4 = [[i8; 4]; 4];

/// Block shapes moved between memory and the array.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BlockShape {
    /// Left operand / result block.
    B2x4,
    /// Signed right-operand block.
    B4x4,
    /// Column-pair read of a row-major wide matrix, used for transposed operands.
    B4x2,
    /// One encoder output row.
    B1x4,
}

/// Sign handling for the accumulate path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Accumulate {
    Add,
    Subtract,
}

const fn mask(log_q: u32) -> u16 {
    if log_q >= 16 {
        u16::MAX
    } else {
        (1u16 << log_q) - 1
    }
}

impl MatrixZq {
    pub fn zeros(rows: usize, cols: usize, log_q: u32) -> Self {
        MatrixZq {
            rows,
            cols,
            log_q,
            data: vec![0; rows * cols],
        }
    }

    /// Builds a matrix from row-major data, reducing every entry mod q.
    pub fn from_vec(rows: usize, cols: usize, log_q: u32, mut data: Vec<u16>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(FrodoError::Shape(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        let m = mask(log_q);
        for v in &mut data {
            *v &= m;
        }
        Ok(MatrixZq {
            rows,
            cols,
            log_q,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn log_q(&self) -> u32 {
        self.log_q
    }

    pub fn q_mask(&self) -> u16 {
        mask(self.log_q)
    }

    pub fn get(&self, r: usize, c: usize) -> u16 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: u16) {
        self.data[r * self.cols + c] = v & mask(self.log_q);
    }

    pub fn row(&self, r: usize) -> &[u16] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[u16] {
        &self.data
    }

    pub fn transpose(&self) -> MatrixZq {
        let mut t = MatrixZq::zeros(self.cols, self.rows, self.log_q);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        t
    }

    /// True when every entry is below q.
    pub fn is_reduced(&self) -> bool {
        let m = mask(self.log_q);
        self.data.iter().all(|&v| v & !m == 0)
    }

    /// Reads the 2x4 block at block coordinates (bi, bj).
    pub fn block2x4(&self, bi: usize, bj: usize) -> Block2x4 {
        let mut b = [[0u16; 4]; 2];
        for (r, row) in b.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = self.get(2 * bi + r, 4 * bj + c);
            }
        }
        b
    }

    pub fn set_block2x4(&mut self, bi: usize, bj: usize, b: &Block2x4) {
        for (r, row) in b.iter().enumerate() {
            for (c, &v) in row.iter().enumerate() {
                self.set(2 * bi + r, 4 * bj + c, v);
            }
        }
    }
}

impl SignedMatrix {
    pub fn from_vec(rows: usize, cols: usize, data: Vec<i8>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(FrodoError::Shape(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(SignedMatrix { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> i8 {
        self.data[r * self.cols + c]
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.data
    }

    pub fn transpose(&self) -> SignedMatrix {
        let mut data = vec![0i8; self.data.len()];
        for r in 0..self.rows {
            for c in 0..self.cols {
                data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        SignedMatrix {
            rows: self.cols,
            cols: self.rows,
            data,
        }
    }

    /// Lifts entries into Z_q (two's complement, masked).
    pub fn to_zq(&self, log_q: u32) -> MatrixZq {
        let data = self.data.iter().map(|&v| v as i16 as u16).collect();
        MatrixZq::from_vec(self.rows, self.cols, log_q, data).expect("shape preserved")
    }

    pub fn block4x4(&self, bk: usize, bj: usize) -> Block4x4 {
        let mut b = [[0i8; 4]; 4];
        for (r, row) in b.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = self.get(4 * bk + r, 4 * bj + c);
            }
        }
        b
    }
}

/// Computes (x * s) mod 2^log_q using only an unsigned x * |s| product and a
/// conditional two's-complement negation. `s` must lie in [-15, 15].
#[inline]
pub fn mul_sign_extract(x: u16, s: i8, log_q: u32) -> u16 {
    mul_sign_extract_with(x, s, Accumulate::Add, log_q)
}

#[inline]
pub fn mul_sign_extract_with(x: u16, s: i8, acc: Accumulate, log_q: u32) -> u16 {
    debug_assert!((-15..=15).contains(&s));
    let magnitude = (s.unsigned_abs() & 0x0F) as u16;
    let product = x.wrapping_mul(magnitude);
    let negate = (s < 0) ^ (acc == Accumulate::Subtract);
    let m = 0u16.wrapping_sub(negate as u16);
    ((product ^ m).wrapping_add(negate as u16)) & mask(log_q)
}

/// One MAC phase: `e (+/-)= sum_k a[k] * s[k]` over a stream of 2x4 left
/// blocks and 4x4 right blocks.
pub fn mac_block_product(
    a_blocks: &[Block2x4],
    s_blocks: &[Block4x4],
    e: Block2x4,
    acc: Accumulate,
    log_q: u32,
) -> Result<Block2x4> {
    if a_blocks.len() != s_blocks.len() {
        return Err(FrodoError::Shape(format!(
            "{} left blocks against {} right blocks",
            a_blocks.len(),
            s_blocks.len()
        )));
    }
    let mut out = e;
    for (a, s) in a_blocks.iter().zip(s_blocks) {
        out = block_update(out, a, s, acc, log_q);
    }
    Ok(out)
}

/// out = e (+/-) a * s for one 2x4 by 4x4 block pair.
#[inline]
pub fn block_update(e: Block2x4, a: &Block2x4, s: &Block4x4, acc: Accumulate, log_q: u32) -> Block2x4 {
    let m = mask(log_q);
    let mut out = e;
    for r in 0..2 {
        for c in 0..4 {
            let mut v = out[r][c];
            for t in 0..4 {
                v = v.wrapping_add(mul_sign_extract_with(a[r][t], s[t][c], acc, log_q));
            }
            out[r][c] = v & m;
        }
    }
    out
}

/// Element-wise sum of two 2x4 blocks.
pub fn add_block(x: &Block2x4, y: &Block2x4, log_q: u32) -> Block2x4 {
    let m = mask(log_q);
    let mut out = [[0u16; 4]; 2];
    for r in 0..2 {
        for c in 0..4 {
            out[r][c] = x[r][c].wrapping_add(y[r][c]) & m;
        }
    }
    out
}

/// Supplies rows of a left operand in ascending order.
pub trait RowSource {
    fn rows(&self) -> usize;
    fn row_len(&self) -> usize;
    fn next_row(&mut self) -> Result<Vec<u16>>;
}

/// Row source over a matrix held in memory.
pub struct MaterializedRows<'a> {
    m: &'a MatrixZq,
    next: usize,
}

impl<'a> MaterializedRows<'a> {
    pub fn new(m: &'a MatrixZq) -> Self {
        MaterializedRows { m, next: 0 }
    }
}

impl RowSource for MaterializedRows<'_> {
    fn rows(&self) -> usize {
        self.m.rows()
    }

    fn row_len(&self) -> usize {
        self.m.cols()
    }

    fn next_row(&mut self) -> Result<Vec<u16>> {
        if self.next >= self.m.rows() {
            return Err(FrodoError::ProviderExhausted(self.next));
        }
        let r = self.m.row(self.next).to_vec();
        self.next += 1;
        Ok(r)
    }
}

/// Hooks into the engine's traversal.
pub trait EngineObserver {
    /// A result block (bi, bj) was written back.
    fn block_written(&mut self, _bi: usize, _bj: usize) {}
    /// MA mode finished the phase for left slice `k` (all column blocks).
    fn ma_slice_done(&mut self, _k: usize, _partial: &MatrixZq) {}
}

impl EngineObserver for () {}

fn fetch_rows<R: RowSource + ?Sized>(src: &mut R, count: usize) -> Result<Vec<Vec<u16>>> {
    (0..count).map(|_| src.next_row()).collect()
}

fn check_dims(m: usize, n: usize, right: &SignedMatrix, addend: &MatrixZq) -> Result<()> {
    let nbar = right.cols();
    if !m.is_multiple_of(2) || !n.is_multiple_of(4) || !nbar.is_multiple_of(4) {
        return Err(FrodoError::Shape(format!(
            "dimensions {m}x{n}x{nbar} are not multiples of the block shape"
        )));
    }
    if right.rows() != n || addend.rows() != m || addend.cols() != nbar {
        return Err(FrodoError::Shape(format!(
            "operands {m}x{n}, {}x{}, addend {}x{}",
            right.rows(),
            right.cols(),
            addend.rows(),
            addend.cols()
        )));
    }
    Ok(())
}

/// MAC mode: returns `L * R (+/-) E` where the m x n left operand streams in
/// row pairs. Each 2x4 result block is produced by one phase of n/4 block
/// products and written once.
pub fn matmul_mac<R: RowSource + ?Sized>(
    left: &mut R,
    right: &SignedMatrix,
    addend: &MatrixZq,
    acc: Accumulate,
    obs: &mut dyn EngineObserver,
) -> Result<MatrixZq> {
    let (m, n) = (left.rows(), left.row_len());
    check_dims(m, n, right, addend)?;
    let log_q = addend.log_q();
    let nbar = right.cols();
    let mut out = MatrixZq::zeros(m, nbar, log_q);
    let s_blocks: Vec<Vec<Block4x4>> = (0..nbar / 4)
        .map(|bj| (0..n / 4).map(|bk| right.block4x4(bk, bj)).collect())
        .collect();
    for bi in 0..m / 2 {
        let rows = fetch_rows(left, 2)?;
        let a_blocks: Vec<Block2x4> = (0..n / 4)
            .map(|bk| {
                let mut b = [[0u16; 4]; 2];
                for r in 0..2 {
                    b[r].copy_from_slice(&rows[r][4 * bk..4 * bk + 4]);
                }
                b
            })
            .collect();
        for (bj, sb) in s_blocks.iter().enumerate() {
            let e = addend.block2x4(bi, bj);
            let res = mac_block_product(&a_blocks, sb, e, acc, log_q)?;
            out.set_block2x4(bi, bj, &res);
            obs.block_written(bi, bj);
        }
    }
    Ok(out)
}

/// MA mode: returns `L^T * R + E` for an n x m left operand that streams in
/// slices of four rows. Each phase fixes one slice and one column block of R
/// and sweeps every result row pair, writing the partial sum back.
pub fn matmul_ma<R: RowSource + ?Sized>(
    left: &mut R,
    right: &SignedMatrix,
    addend: &MatrixZq,
    obs: &mut dyn EngineObserver,
) -> Result<MatrixZq> {
    let (n, m) = (left.rows(), left.row_len());
    check_dims(m, n, right, addend)?;
    let log_q = addend.log_q();
    let nbar = right.cols();
    let mut out = addend.clone();
    for bk in 0..n / 4 {
        let rows = fetch_rows(left, 4)?;
        for bj in 0..nbar / 4 {
            let s = right.block4x4(bk, bj);
            for bi in 0..m / 2 {
                // 2x4 block of L^T: rows 2bi, 2bi+1 of L^T are columns of the slice
                let mut a = [[0u16; 4]; 2];
                for r in 0..2 {
                    for t in 0..4 {
                        a[r][t] = rows[t][2 * bi + r];
                    }
                }
                let e = out.block2x4(bi, bj);
                let res = block_update(e, &a, &s, Accumulate::Add, log_q);
                out.set_block2x4(bi, bj, &res);
                obs.block_written(bi, bj);
            }
        }
        obs.ma_slice_done(bk, &out);
    }
    Ok(out)
}

/// `C - B' * S` for the decryption step, via the subtracting MAC path.
pub fn mat_sub_mul(c: &MatrixZq, b_prime: &MatrixZq, s: &SignedMatrix) -> Result<MatrixZq> {
    matmul_mac(&mut MaterializedRows::new(b_prime), s, c, Accumulate::Subtract, &mut ())
}

/// Block-wise sum of two matrices with matching shape.
pub fn mat_add_blocks(x: &MatrixZq, y: &MatrixZq) -> Result<MatrixZq> {
    if x.rows() != y.rows() || x.cols() != y.cols() || !x.rows().is_multiple_of(2) || !x.cols().is_multiple_of(4) {
        return Err(FrodoError::Shape(format!(
            "cannot add {}x{} and {}x{}",
            x.rows(),
            x.cols(),
            y.rows(),
            y.cols()
        )));
    }
    let mut out = MatrixZq::zeros(x.rows(), x.cols(), x.log_q());
    for bi in 0..x.rows() / 2 {
        for bj in 0..x.cols() / 4 {
            let b = add_block(&x.block2x4(bi, bj), &y.block2x4(bi, bj), x.log_q());
            out.set_block2x4(bi, bj, &b);
        }
    }
    Ok(out)
}
