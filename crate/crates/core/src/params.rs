//! Parameter sets for the three security levels (SHAKE variant).

use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::FrodoError;

/// Which SHAKE instance a level uses for its non-matrix hashing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ShakeVariant {
    Shake128,
    Shake256,
}

impl ShakeVariant {
    /// Sponge rate in bytes.
    pub const fn rate(self) -> usize {
        match self {
            ShakeVariant::Shake128 => 168,
            ShakeVariant::Shake256 => 136,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SecurityLevel {
    Frodo640,
    Frodo976,
    Frodo1344,
}

impl SecurityLevel {
    pub const ALL: [SecurityLevel; 3] = [
        SecurityLevel::Frodo640,
        SecurityLevel::Frodo976,
        SecurityLevel::Frodo1344,
    ];

    pub fn params(self) -> &'static ParameterSet {
        params_for(self)
    }

    /// The matrix dimension n, which is also the level's name.
    pub const fn n(self) -> u32 {
        match self {
            SecurityLevel::Frodo640 => 640,
            SecurityLevel::Frodo976 => 976,
            SecurityLevel::Frodo1344 => 1344,
        }
    }

    pub fn from_n(n: u32) -> Option<Self> {
        Self::ALL.into_iter().find(|l| l.n() == n)
    }

    pub fn name(self) -> &'static str {
        match self {
            SecurityLevel::Frodo640 => "FrodoKEM-640-SHAKE",
            SecurityLevel::Frodo976 => "FrodoKEM-976-SHAKE",
            SecurityLevel::Frodo1344 => "FrodoKEM-1344-SHAKE",
        }
    }
}

impl fmt::Display for SecurityLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.n())
    }
}

impl FromStr for SecurityLevel {
    type Err = FrodoError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let digits = t
            .trim_start_matches("FrodoKEM-")
            .trim_start_matches("frodo")
            .trim_end_matches("-SHAKE");
        digits
            .parse::<u32>()
            .ok()
            .and_then(SecurityLevel::from_n)
            .ok_or_else(|| FrodoError::UnknownLevel(s.to_string()))
    }
}

/// Static description of one level. Byte lengths follow the salted construction.
#[derive(Debug, PartialEq, Eq)]
pub struct ParameterSet {
    pub level: SecurityLevel,
    pub n: usize,
    pub nbar: usize,
    /// D, with q = 2^D.
    pub log_q: u32,
    /// B, bits encoded per matrix entry.
    pub extracted_bits: u32,
    /// Sampler support is [-d, d].
    pub d: i8,
    pub cdf_table: &'static [u16],
    pub shake: ShakeVariant,
    pub len_seed_a: usize,
    pub len_seed_se: usize,
    pub len_s: usize,
    pub len_z: usize,
    pub len_salt: usize,
    pub len_k: usize,
    pub len_ss: usize,
    pub len_pkh: usize,
    pub len_mu: usize,
}

pub const CDF_640: [u16; 13] = [
    4643, 13363, 20579, 25843, 29227, 31145, 32103, 32525, 32689, 32745, 32762, 32766, 32767,
];
pub const CDF_976: [u16; 11] = [
    5638, 15915, 23689, 28571, 31116, 32217, 32613, 32731, 32760, 32766, 32767,
];
pub const CDF_1344: [u16; 7] = [9142, 23462, 30338, 32361, 32725, 32765, 32767];

/// Domain separator for the KeyGen (S, E) sample stream.
pub const DOMAIN_KEYGEN: u8 = 0x5F;
/// Domain separator for the Encaps/Decaps (S', E', E'') sample stream.
pub const DOMAIN_ENCAPS: u8 = 0x96;

pub static FRODO_640: ParameterSet = ParameterSet {
    level: SecurityLevel::Frodo640,
    n: 640,
    nbar: 8,
    log_q: 15,
    extracted_bits: 2,
    d: 12,
    cdf_table: &CDF_640,
    shake: ShakeVariant::Shake128,
    len_seed_a: 16,
    len_seed_se: 32,
    len_s: 16,
    len_z: 16,
    len_salt: 32,
    len_k: 16,
    len_ss: 16,
    len_pkh: 16,
    len_mu: 16,
};

pub static FRODO_976: ParameterSet = ParameterSet {
    level: SecurityLevel::Frodo976,
    n: 976,
    nbar: 8,
    log_q: 16,
    extracted_bits: 3,
    d: 10,
    cdf_table: &CDF_976,
    shake: ShakeVariant::Shake256,
    len_seed_a: 16,
    len_seed_se: 48,
    len_s: 24,
    len_z: 16,
    len_salt: 48,
    len_k: 24,
    len_ss: 24,
    len_pkh: 24,
    len_mu: 24,
};

pub static FRODO_1344: ParameterSet = ParameterSet {
    level: SecurityLevel::Frodo1344,
    n: 1344,
    nbar: 8,
    log_q: 16,
    extracted_bits: 4,
    d: 6,
    cdf_table: &CDF_1344,
    shake: ShakeVariant::Shake256,
    len_seed_a: 16,
    len_seed_se: 64,
    len_s: 32,
    len_z: 16,
    len_salt: 64,
    len_k: 32,
    len_ss: 32,
    len_pkh: 32,
    len_mu: 32,
};

pub fn params_for(level: SecurityLevel) -> &'static ParameterSet {
    match level {
        SecurityLevel::Frodo640 => &FRODO_640,
        SecurityLevel::Frodo976 => &FRODO_976,
        SecurityLevel::Frodo1344 => &FRODO_1344,
    }
}

impl ParameterSet {
    pub const fn q_mask(&self) -> u16 {
        if self.log_q >= 16 {
            u16::MAX
        } else {
            (1u16 << self.log_q) - 1
        }
    }

    /// Packed size of an rows x cols matrix.
    pub const fn packed_len(&self, rows: usize, cols: usize) -> usize {
        rows * cols * self.log_q as usize / 8
    }

    pub const fn len_pk(&self) -> usize {
        self.len_seed_a + self.packed_len(self.n, self.nbar)
    }

    pub const fn len_sk(&self) -> usize {
        self.len_s + self.len_pk() + 2 * self.n * self.nbar + self.len_pkh
    }

    pub const fn len_ct(&self) -> usize {
        self.packed_len(self.nbar, self.n) + self.packed_len(self.nbar, self.nbar) + self.len_salt
    }

    pub const fn len_keygen_randomness(&self) -> usize {
        self.len_s + self.len_seed_se + self.len_z
    }

    pub const fn len_encaps_randomness(&self) -> usize {
        self.len_mu + self.len_salt
    }
}
