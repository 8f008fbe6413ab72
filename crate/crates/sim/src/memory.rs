//! Two banks of four 32-bit RAMs and the data layouts placed in them.
//!
//! Bank 0 holds E/B (`SPACE_E`), the signed secret (`SPACE_S`) and four small
//! 8x8 matrices. Bank 1 holds E'/B' (`SPACE_EP`) and a byte area for seeds,
//! messages and hash outputs. The A row buffer aliases `SPACE_EP` during
//! KeyGen and `SPACE_E` during the B' product.

use frodo_core::ParameterSet;
use serde::{Deserialize, Serialize};

pub const RAMS: usize = 4;
pub const DEPTH: usize = 2048;

pub const SPACE_E: u16 = 0;
pub const SPACE_S: u16 = 1344;
pub const AUX0: u16 = 2016;
pub const SPACE_EP: u16 = 0;
pub const AUX1: u16 = 1344;
/// Words per RAM of one small 8x8 matrix.
pub const SMALL_WORDS: u16 = 8;
/// Byte offsets inside the bank 1 byte area are aligned to this.
pub const SLOT_ALIGN: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BankId {
    Bank0,
    Bank1,
}

impl BankId {
    fn index(self) -> usize {
        match self {
            BankId::Bank0 => 0,
            BankId::Bank1 => 1,
        }
    }
}

/// How a matrix is laid out across the four RAMs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Layout {
    /// `rows x 8` matrix of 16-bit entries, two entries per word. Any 2x4 or
    /// 4x2 block touches each RAM once.
    Wide { rows: usize },
    /// `8 x cols` matrix of 8-bit entries, four per word, row t in RAM t mod 4.
    /// Any 4x4 block of its transpose is a single address across the RAMs.
    Narrow { cols: usize },
}

/// A matrix placed in memory. `transposed` swaps the logical view of a
/// `Wide` matrix; the storage order does not change.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MatRef {
    pub bank: BankId,
    pub base: u16,
    pub layout: Layout,
    pub transposed: bool,
}

/// Physical position of one matrix entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Loc {
    pub ram: usize,
    pub addr: usize,
    /// Lane inside the 32-bit word: 0..2 for 16-bit entries, 0..4 for bytes.
    pub lane: usize,
}

/// A contiguous address range across all four RAMs of a bank.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Span {
    pub bank: BankId,
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn overlaps(&self, other: &Span) -> bool {
        self.bank == other.bank && self.start < other.end && other.start < self.end
    }

    pub fn contains(&self, other: &Span) -> bool {
        self.bank == other.bank && self.start <= other.start && other.end <= self.end
    }
}

impl MatRef {
    pub const fn wide(bank: BankId, base: u16, rows: usize) -> Self {
        MatRef {
            bank,
            base,
            layout: Layout::Wide { rows },
            transposed: false,
        }
    }

    pub const fn narrow(bank: BankId, base: u16, cols: usize) -> Self {
        MatRef {
            bank,
            base,
            layout: Layout::Narrow { cols },
            transposed: false,
        }
    }

    pub const fn t(mut self) -> Self {
        self.transposed = !self.transposed;
        self
    }

    fn stored_dims(&self) -> (usize, usize) {
        match self.layout {
            Layout::Wide { rows } => (rows, 8),
            Layout::Narrow { cols } => (8, cols),
        }
    }

    /// Logical (rows, cols).
    pub fn dims(&self) -> (usize, usize) {
        let (r, c) = self.stored_dims();
        if self.transposed {
            (c, r)
        } else {
            (r, c)
        }
    }

    pub fn words_per_ram(&self) -> usize {
        match self.layout {
            Layout::Wide { rows } => rows,
            Layout::Narrow { cols } => 2 * cols / 4,
        }
    }

    pub fn span(&self) -> Span {
        Span {
            bank: self.bank,
            start: self.base as usize,
            end: self.base as usize + self.words_per_ram(),
        }
    }

    /// Location of logical entry (r, c).
    pub fn loc(&self, r: usize, c: usize) -> Loc {
        let (r, c) = if self.transposed { (c, r) } else { (r, c) };
        let base = self.base as usize;
        match self.layout {
            Layout::Wide { .. } => {
                let cp = c >> 1;
                Loc {
                    ram: ((cp & 1) ^ ((r >> 1) & 1)) | ((r & 1) << 1),
                    addr: base + (r >> 1) * 2 + (cp >> 1),
                    lane: c & 1,
                }
            }
            Layout::Narrow { cols } => Loc {
                ram: r % 4,
                addr: base + (r / 4) * (cols / 4) + c / 4,
                lane: c % 4,
            },
        }
    }

    /// Span covering the logical 2x4 block (bi, bj).
    pub fn block_span(&self, bi: usize, bj: usize) -> Span {
        let mut lo = usize::MAX;
        let mut hi = 0;
        for r in 0..2 {
            for c in 0..4 {
                let l = self.loc(2 * bi + r, 4 * bj + c);
                lo = lo.min(l.addr);
                hi = hi.max(l.addr + 1);
            }
        }
        Span {
            bank: self.bank,
            start: lo,
            end: hi,
        }
    }
}

/// The four-partition ping-pong buffer that holds rows of A.
///
/// Partition p holds two rows. MAC mode reads one partition per row pair;
/// MA mode reads partitions 2m and 2m+1 together, and their RAM assignment is
/// complementary so a 4x2 column read hits each RAM once.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ABuffer {
    pub bank: BankId,
    pub base: u16,
    pub n: usize,
}

pub const A_PARTITIONS: usize = 4;

impl ABuffer {
    pub fn partition_of_row(row: usize) -> usize {
        (row / 2) % A_PARTITIONS
    }

    pub fn partition_words(&self) -> usize {
        self.n / 4
    }

    pub fn loc(&self, partition: usize, rho: usize, col: usize) -> Loc {
        let m = col >> 1;
        Loc {
            ram: ((m & 1) ^ (partition & 1)) | (rho << 1),
            addr: self.base as usize + partition * self.partition_words() + (m >> 1),
            lane: col & 1,
        }
    }

    pub fn partition_span(&self, partition: usize) -> Span {
        let start = self.base as usize + partition * self.partition_words();
        Span {
            bank: self.bank,
            start,
            end: start + self.partition_words(),
        }
    }

    pub fn span(&self) -> Span {
        Span {
            bank: self.bank,
            start: self.base as usize,
            end: self.base as usize + A_PARTITIONS * self.partition_words(),
        }
    }
}

/// Named byte regions in the bank 1 byte area.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ByteSlot {
    SeedA,
    SeedSE,
    Z,
    S,
    Mu,
    Salt,
    K,
    Pkh,
    Ss,
    Ss0,
    Ss1,
    Ss2,
}

impl ByteSlot {
    pub const ALL: [ByteSlot; 12] = [
        ByteSlot::SeedA,
        ByteSlot::SeedSE,
        ByteSlot::Z,
        ByteSlot::S,
        ByteSlot::Mu,
        ByteSlot::Salt,
        ByteSlot::K,
        ByteSlot::Pkh,
        ByteSlot::Ss,
        ByteSlot::Ss0,
        ByteSlot::Ss1,
        ByteSlot::Ss2,
    ];

    pub fn len(self, p: &ParameterSet) -> usize {
        match self {
            ByteSlot::SeedA => p.len_seed_a,
            ByteSlot::SeedSE => p.len_seed_se,
            ByteSlot::Z => p.len_z,
            ByteSlot::S => p.len_s,
            ByteSlot::Mu => p.len_mu,
            ByteSlot::Salt => p.len_salt,
            ByteSlot::K => p.len_k,
            ByteSlot::Pkh => p.len_pkh,
            ByteSlot::Ss | ByteSlot::Ss0 | ByteSlot::Ss1 | ByteSlot::Ss2 => p.len_ss,
        }
    }

    /// Byte offset inside the byte area.
    pub fn offset(self) -> usize {
        SLOT_ALIGN * Self::ALL.iter().position(|s| *s == self).expect("listed")
    }

    pub fn span(self, p: &ParameterSet) -> Span {
        let start = AUX1 as usize + self.offset() / 16;
        Span {
            bank: BankId::Bank1,
            start,
            end: start + self.len(p).div_ceil(16),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ByteSlot::SeedA => "seedA",
            ByteSlot::SeedSE => "seedSE",
            ByteSlot::Z => "z",
            ByteSlot::S => "s",
            ByteSlot::Mu => "mu",
            ByteSlot::Salt => "salt",
            ByteSlot::K => "k",
            ByteSlot::Pkh => "pkh",
            ByteSlot::Ss => "ss",
            ByteSlot::Ss0 => "ss0",
            ByteSlot::Ss1 => "ss1",
            ByteSlot::Ss2 => "ss2",
        }
    }
}

/// Small 8x8 matrices in bank 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SmallSlot {
    /// C from the ciphertext, or the C being produced.
    C,
    /// M, then the encoded message, then E'' + encoded message.
    Work,
    E2,
    /// Re-encrypted C during decapsulation.
    CPrime,
}

impl SmallSlot {
    pub fn mat(self) -> MatRef {
        let i = match self {
            SmallSlot::C => 0,
            SmallSlot::Work => 1,
            SmallSlot::E2 => 2,
            SmallSlot::CPrime => 3,
        };
        MatRef::wide(BankId::Bank0, AUX0 + i * SMALL_WORDS, 8)
    }
}

/// Standard placements for one parameter set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MemoryMap {
    pub n: usize,
}

impl MemoryMap {
    pub fn new(p: &ParameterSet) -> Self {
        MemoryMap { n: p.n }
    }

    /// n x 8 matrix in bank 0 (E, then B).
    pub fn space_e(&self) -> MatRef {
        MatRef::wide(BankId::Bank0, SPACE_E, self.n)
    }

    /// 8 x n signed matrix in bank 0 (S^T or S').
    pub fn space_s(&self) -> MatRef {
        MatRef::narrow(BankId::Bank0, SPACE_S, self.n)
    }

    /// n x 8 matrix in bank 1 (E'^T, then B'^T).
    pub fn space_ep(&self) -> MatRef {
        MatRef::wide(BankId::Bank1, SPACE_EP, self.n)
    }

    pub fn a_buffer(&self, bank: BankId) -> ABuffer {
        ABuffer {
            bank,
            base: 0,
            n: self.n,
        }
    }
}

#[derive(Debug, Clone)]
struct Bank {
    rams: [Vec<u32>; RAMS],
}

/// Word-addressed storage with access-range tracking.
#[derive(Debug, Clone)]
pub struct Memory {
    banks: [Bank; 2],
    tracking: Option<Touched>,
}

/// Address ranges touched while tracking was on.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Touched {
    pub reads: Vec<Span>,
    pub writes: Vec<Span>,
}

fn touch(list: &mut Vec<Span>, bank: BankId, addr: usize) {
    if let Some(s) = list
        .iter_mut()
        .rev()
        .find(|s| s.bank == bank && s.start <= addr + 1 && addr <= s.end)
    {
        s.start = s.start.min(addr);
        s.end = s.end.max(addr + 1);
        return;
    }
    list.push(Span {
        bank,
        start: addr,
        end: addr + 1,
    });
}

impl Default for Memory {
    fn default() -> Self {
        Self::new()
    }
}

impl Memory {
    pub fn new() -> Self {
        let bank = || Bank {
            rams: core::array::from_fn(|_| vec![0u32; DEPTH]),
        };
        Memory {
            banks: [bank(), bank()],
            tracking: None,
        }
    }

    pub fn start_tracking(&mut self) {
        self.tracking = Some(Touched::default());
    }

    pub fn stop_tracking(&mut self) -> Touched {
        self.tracking.take().unwrap_or_default()
    }

    pub fn read_word(&mut self, bank: BankId, ram: usize, addr: usize) -> u32 {
        if let Some(t) = &mut self.tracking {
            touch(&mut t.reads, bank, addr);
        }
        self.banks[bank.index()].rams[ram][addr]
    }

    pub fn write_word(&mut self, bank: BankId, ram: usize, addr: usize, v: u32) {
        if let Some(t) = &mut self.tracking {
            touch(&mut t.writes, bank, addr);
        }
        self.banks[bank.index()].rams[ram][addr] = v;
    }

    fn read_lane16(&mut self, bank: BankId, l: Loc) -> u16 {
        (self.read_word(bank, l.ram, l.addr) >> (16 * l.lane)) as u16
    }

    fn write_lane16(&mut self, bank: BankId, l: Loc, v: u16) {
        let w = self.read_word_untracked(bank, l);
        let shift = 16 * l.lane;
        let w = (w & !(0xFFFF << shift)) | ((v as u32) << shift);
        self.write_word(bank, l.ram, l.addr, w);
    }

    fn read_word_untracked(&self, bank: BankId, l: Loc) -> u32 {
        self.banks[bank.index()].rams[l.ram][l.addr]
    }

    fn read_lane8(&mut self, bank: BankId, l: Loc) -> u8 {
        (self.read_word(bank, l.ram, l.addr) >> (8 * l.lane)) as u8
    }

    fn write_lane8(&mut self, bank: BankId, l: Loc, v: u8) {
        let w = self.read_word_untracked(bank, l);
        let shift = 8 * l.lane;
        let w = (w & !(0xFF << shift)) | ((v as u32) << shift);
        self.write_word(bank, l.ram, l.addr, w);
    }

    /// Reads a logical entry of a `Wide` matrix.
    pub fn get16(&mut self, m: &MatRef, r: usize, c: usize) -> u16 {
        self.read_lane16(m.bank, m.loc(r, c))
    }

    pub fn set16(&mut self, m: &MatRef, r: usize, c: usize, v: u16) {
        self.write_lane16(m.bank, m.loc(r, c), v)
    }

    /// Reads a logical entry of a `Narrow` matrix.
    pub fn get8(&mut self, m: &MatRef, r: usize, c: usize) -> i8 {
        self.read_lane8(m.bank, m.loc(r, c)) as i8
    }

    pub fn set8(&mut self, m: &MatRef, r: usize, c: usize, v: i8) {
        self.write_lane8(m.bank, m.loc(r, c), v as u8)
    }

    pub fn a_get(&mut self, a: &ABuffer, partition: usize, rho: usize, col: usize) -> u16 {
        self.read_lane16(a.bank, a.loc(partition, rho, col))
    }

    pub fn a_set(&mut self, a: &ABuffer, partition: usize, rho: usize, col: usize, v: u16) {
        self.write_lane16(a.bank, a.loc(partition, rho, col), v)
    }

    fn byte_loc(offset: usize) -> Loc {
        let word = offset / 4;
        Loc {
            ram: word % RAMS,
            addr: AUX1 as usize + word / RAMS,
            lane: offset % 4,
        }
    }

    pub fn read_bytes(&mut self, slot: ByteSlot, p: &ParameterSet) -> Vec<u8> {
        let off = slot.offset();
        (0..slot.len(p))
            .map(|i| self.read_lane8(BankId::Bank1, Self::byte_loc(off + i)))
            .collect()
    }

    pub fn write_bytes(&mut self, slot: ByteSlot, data: &[u8]) {
        let off = slot.offset();
        for (i, &b) in data.iter().enumerate() {
            self.write_lane8(BankId::Bank1, Self::byte_loc(off + i), b);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn wide_blocks_hit_each_ram_once() {
        let m = MatRef::wide(BankId::Bank0, 0, 64);
        for view in [m, m.t()] {
            let (rows, cols) = view.dims();
            for bi in 0..rows / 2 {
                for bj in 0..cols / 4 {
                    let rams: HashSet<usize> = (0..8).map(|e| view.loc(2 * bi + e / 4, 4 * bj + e % 4).ram).collect();
                    let words: HashSet<(usize, usize)> = (0..8)
                        .map(|e| {
                            let l = view.loc(2 * bi + e / 4, 4 * bj + e % 4);
                            (l.ram, l.addr)
                        })
                        .collect();
                    assert_eq!(rams.len(), 4);
                    assert_eq!(words.len(), 4);
                }
            }
        }
    }

    #[test]
    fn two_by_four_shares_address_and_four_by_two_splits() {
        let m = MatRef::wide(BankId::Bank0, 0, 16);
        let addrs: HashSet<usize> = (0..8).map(|e| m.loc(e / 4, e % 4).addr).collect();
        assert_eq!(addrs, HashSet::from([0]));
        // a 4x2 block of the stored matrix
        let mut by_ram = [usize::MAX; 4];
        for r in 0..4 {
            for c in 0..2 {
                let l = m.loc(r, c);
                by_ram[l.ram] = l.addr;
            }
        }
        assert_eq!(by_ram, [0, 2, 0, 2]);
    }

    #[test]
    fn narrow_four_by_four_is_one_address() {
        let n = 64;
        let s = MatRef::narrow(BankId::Bank0, SPACE_S, n);
        for t0 in (0..8).step_by(4) {
            for c0 in (0..n).step_by(4) {
                let locs: Vec<Loc> = (0..16).map(|e| s.loc(t0 + e / 4, c0 + e % 4)).collect();
                let addrs: HashSet<usize> = locs.iter().map(|l| l.addr).collect();
                let rams: HashSet<usize> = locs.iter().map(|l| l.ram).collect();
                assert_eq!(addrs.len(), 1);
                assert_eq!(rams.len(), 4);
            }
        }
    }

    #[test]
    fn a_buffer_blocks_hit_each_ram_once() {
        let a = ABuffer {
            bank: BankId::Bank1,
            base: 0,
            n: 64,
        };
        for p in 0..4 {
            for k in 0..16 {
                let rams: HashSet<usize> = (0..8).map(|e| a.loc(p, e / 4, 4 * k + e % 4).ram).collect();
                assert_eq!(rams.len(), 4);
            }
        }
        for pair in [0, 2] {
            for i in 0..32 {
                let words: HashSet<(usize, usize)> = (0..8)
                    .map(|e| {
                        let l = a.loc(pair + (e / 2) / 2, (e / 2) % 2, 2 * i + e % 2);
                        (l.ram, l.addr)
                    })
                    .collect();
                let rams: HashSet<usize> = words.iter().map(|w| w.0).collect();
                assert_eq!(rams.len(), 4);
                assert_eq!(words.len(), 4);
            }
        }
    }

    #[test]
    fn regions_fit_largest_level() {
        let p = frodo_core::SecurityLevel::Frodo1344.params();
        let map = MemoryMap::new(p);
        assert!(map.space_e().span().end <= SPACE_S as usize);
        assert!(map.space_s().span().end <= AUX0 as usize);
        assert!(SmallSlot::CPrime.mat().span().end <= DEPTH);
        assert!(map.space_ep().span().end <= AUX1 as usize);
        for s in ByteSlot::ALL {
            assert!(s.len(p) <= SLOT_ALIGN);
            assert!(s.span(p).end <= DEPTH);
        }
        assert!(map.a_buffer(BankId::Bank0).span().end <= map.space_e().span().end);
    }

    #[test]
    fn byte_slots_roundtrip() {
        let p = frodo_core::SecurityLevel::Frodo976.params();
        let mut m = Memory::new();
        let data: Vec<u8> = (0..p.len_salt as u8).collect();
        m.write_bytes(ByteSlot::Salt, &data);
        m.write_bytes(ByteSlot::Mu, &vec![0xAA; p.len_mu]);
        assert_eq!(m.read_bytes(ByteSlot::Salt, p), data);
    }

    #[test]
    fn tracking_merges_ranges() {
        let mut m = Memory::new();
        m.start_tracking();
        let e = MatRef::wide(BankId::Bank0, 0, 16);
        for r in 0..16 {
            for c in 0..8 {
                m.set16(&e, r, c, 1);
            }
        }
        let t = m.stop_tracking();
        assert_eq!(t.writes, vec![e.span()]);
    }
}
