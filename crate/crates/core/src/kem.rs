//! KeyGen, Encaps and Decaps with the salted Fujisaki-Okamoto transform.

use rand_core::CryptoRng;

use crate::codec::{decode, encode, pack, unpack};
use crate::error::{FrodoError, Result};
use crate::matrix::{
    mat_add_blocks, mat_sub_mul, matmul_ma, matmul_mac, Accumulate, MaterializedRows, MatrixZq, SignedMatrix,
};
use crate::params::{ParameterSet, SecurityLevel, DOMAIN_ENCAPS, DOMAIN_KEYGEN};
use crate::sampling::{sample_matrix, RowStream};
use crate::xof::shake_parts;

fn check_len(what: &'static str, expected: usize, bytes: &[u8]) -> Result<()> {
    if bytes.len() != expected {
        return Err(FrodoError::InvalidLength {
            what,
            expected,
            actual: bytes.len(),
        });
    }
    Ok(())
}

macro_rules! byte_object {
    ($name:ident, $what:literal, $len:ident) => {
        #[derive(Debug, Clone, PartialEq, Eq)]
        pub struct $name {
            level: SecurityLevel,
            bytes: Vec<u8>,
        }

        impl $name {
            pub fn from_bytes(level: SecurityLevel, bytes: &[u8]) -> Result<Self> {
                check_len($what, level.params().$len(), bytes)?;
                Ok($name {
                    level,
                    bytes: bytes.to_vec(),
                })
            }

            pub fn level(&self) -> SecurityLevel {
                self.level
            }

            pub fn as_bytes(&self) -> &[u8] {
                &self.bytes
            }
        }

        impl AsRef<[u8]> for $name {
            fn as_ref(&self) -> &[u8] {
                &self.bytes
            }
        }
    };
}

byte_object!(PublicKey, "public key", len_pk);
byte_object!(SecretKey, "secret key", len_sk);
byte_object!(Ciphertext, "ciphertext", len_ct);

impl SecretKey {
    pub fn s(&self) -> &[u8] {
        &self.bytes[..self.level.params().len_s]
    }

    pub fn public_key_bytes(&self) -> &[u8] {
        let p = self.level.params();
        &self.bytes[p.len_s..p.len_s + p.len_pk()]
    }

    /// S^T as stored: nbar*n little-endian 16-bit words.
    pub fn s_transpose_bytes(&self) -> &[u8] {
        let p = self.level.params();
        let start = p.len_s + p.len_pk();
        &self.bytes[start..start + 2 * p.n * p.nbar]
    }

    pub fn pkh(&self) -> &[u8] {
        let p = self.level.params();
        &self.bytes[p.len_sk() - p.len_pkh..]
    }
}

impl Ciphertext {
    /// The packed B' and C parts together.
    pub fn matrices(&self) -> &[u8] {
        let p = self.level.params();
        &self.bytes[..p.len_ct() - p.len_salt]
    }

    pub fn salt(&self) -> &[u8] {
        let p = self.level.params();
        &self.bytes[p.len_ct() - p.len_salt..]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SharedSecret(Vec<u8>);

impl SharedSecret {
    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }
}

impl AsRef<[u8]> for SharedSecret {
    fn as_ref(&self) -> &[u8] {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyPair {
    pub pk: PublicKey,
    pub sk: SecretKey,
}

/// KeyGen randomness, drawn as one s || seedSE || z string.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeygenRandomness {
    pub s: Vec<u8>,
    pub seed_se: Vec<u8>,
    pub z: Vec<u8>,
}

impl KeygenRandomness {
    pub fn from_bytes(level: SecurityLevel, bytes: &[u8]) -> Result<Self> {
        let p = level.params();
        check_len("keygen randomness", p.len_keygen_randomness(), bytes)?;
        let (s, rest) = bytes.split_at(p.len_s);
        let (seed_se, z) = rest.split_at(p.len_seed_se);
        Ok(KeygenRandomness {
            s: s.to_vec(),
            seed_se: seed_se.to_vec(),
            z: z.to_vec(),
        })
    }

    fn validate(&self, p: &ParameterSet) -> Result<()> {
        check_len("s", p.len_s, &self.s)?;
        check_len("seedSE", p.len_seed_se, &self.seed_se)?;
        check_len("z", p.len_z, &self.z)
    }
}

/// Encaps randomness, drawn as one mu || salt string.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncapsRandomness {
    pub mu: Vec<u8>,
    pub salt: Vec<u8>,
}

impl EncapsRandomness {
    pub fn from_bytes(level: SecurityLevel, bytes: &[u8]) -> Result<Self> {
        let p = level.params();
        check_len("encaps randomness", p.len_encaps_randomness(), bytes)?;
        let (mu, salt) = bytes.split_at(p.len_mu);
        Ok(EncapsRandomness {
            mu: mu.to_vec(),
            salt: salt.to_vec(),
        })
    }

    fn validate(&self, p: &ParameterSet) -> Result<()> {
        check_len("mu", p.len_mu, &self.mu)?;
        check_len("salt", p.len_salt, &self.salt)
    }
}

fn hash(p: &ParameterSet, parts: &[&[u8]], len: usize) -> Vec<u8> {
    shake_parts(p.shake, parts, len)
}

/// Splits a sample stream into the nbar x n matrix and the remaining parts.
struct Noise {
    s_t: SignedMatrix,
    e: Vec<i8>,
    e2: Vec<i8>,
}

fn split_noise(samples: Vec<i8>, p: &ParameterSet) -> Noise {
    let block = p.n * p.nbar;
    let s_t = SignedMatrix::from_vec(p.nbar, p.n, samples[..block].to_vec()).expect("sized");
    Noise {
        s_t,
        e: samples[block..2 * block].to_vec(),
        e2: samples[2 * block..].to_vec(),
    }
}

pub fn keygen(level: SecurityLevel, rand: &KeygenRandomness) -> Result<KeyPair> {
    let p = level.params();
    rand.validate(p)?;
    let seed_a = hash(p, &[&rand.z], p.len_seed_a);
    let noise = split_noise(sample_matrix(&rand.seed_se, DOMAIN_KEYGEN, 2 * p.n * p.nbar, p)?, p);
    let e = SignedMatrix::from_vec(p.n, p.nbar, noise.e)?.to_zq(p.log_q);
    let b = matmul_mac(
        &mut RowStream::new(&seed_a, p)?,
        &noise.s_t.transpose(),
        &e,
        Accumulate::Add,
        &mut (),
    )?;
    let mut pk = seed_a;
    pk.extend(pack(&b, p));
    let pkh = hash(p, &[&pk], p.len_pkh);
    let mut sk = Vec::with_capacity(p.len_sk());
    sk.extend_from_slice(&rand.s);
    sk.extend_from_slice(&pk);
    for &v in noise.s_t.as_slice() {
        sk.extend_from_slice(&(v as i16).to_le_bytes());
    }
    sk.extend_from_slice(&pkh);
    Ok(KeyPair {
        pk: PublicKey { level, bytes: pk },
        sk: SecretKey { level, bytes: sk },
    })
}

/// The public-key encryption core shared by Encaps and Decaps.
struct Encrypted {
    b_prime: MatrixZq,
    c: MatrixZq,
}

fn encrypt(p: &ParameterSet, pk: &[u8], seed_se: &[u8], mu: &[u8]) -> Result<Encrypted> {
    let (seed_a, b_packed) = pk.split_at(p.len_seed_a);
    let b = unpack(b_packed, p.n, p.nbar, p)?;
    let samples = sample_matrix(seed_se, DOMAIN_ENCAPS, 2 * p.n * p.nbar + p.nbar * p.nbar, p)?;
    let noise = split_noise(samples, p);
    let sp_t = noise.s_t.transpose();
    // B'^T = A^T S'^T + E'^T in MA mode
    let ep_t = SignedMatrix::from_vec(p.nbar, p.n, noise.e)?.to_zq(p.log_q).transpose();
    let b_prime_t = matmul_ma(&mut RowStream::new(seed_a, p)?, &sp_t, &ep_t, &mut ())?;
    // C^T = B^T S'^T + (E'' + Encode(mu))^T in MAC mode
    let e2 = SignedMatrix::from_vec(p.nbar, p.nbar, noise.e2)?.to_zq(p.log_q);
    let eu = mat_add_blocks(&e2, &encode(mu, p)?)?;
    let b_t = b.transpose();
    let c_t = matmul_mac(
        &mut MaterializedRows::new(&b_t),
        &sp_t,
        &eu.transpose(),
        Accumulate::Add,
        &mut (),
    )?;
    Ok(Encrypted {
        b_prime: b_prime_t.transpose(),
        c: c_t.transpose(),
    })
}

pub fn encaps(level: SecurityLevel, pk: &PublicKey, rand: &EncapsRandomness) -> Result<(Ciphertext, SharedSecret)> {
    let p = level.params();
    if pk.level != level {
        return Err(FrodoError::LevelMismatch {
            expected: level.n(),
            found: pk.level.n(),
        });
    }
    rand.validate(p)?;
    let pkh = hash(p, &[&pk.bytes], p.len_pkh);
    let g = hash(p, &[&pkh, &rand.mu, &rand.salt], p.len_seed_se + p.len_k);
    let (seed_se, k) = g.split_at(p.len_seed_se);
    let enc = encrypt(p, &pk.bytes, seed_se, &rand.mu)?;
    let mut ct = pack(&enc.b_prime, p);
    ct.extend(pack(&enc.c, p));
    ct.extend_from_slice(&rand.salt);
    let ss = hash(p, &[&ct, k], p.len_ss);
    Ok((Ciphertext { level, bytes: ct }, SharedSecret(ss)))
}

/// Intermediate values of one decapsulation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecapsTrace {
    pub mu_prime: Vec<u8>,
    pub ss0: Vec<u8>,
    pub ss1: Vec<u8>,
    pub ss2: Vec<u8>,
    pub ss: SharedSecret,
}

pub fn decaps(level: SecurityLevel, sk: &SecretKey, ct: &Ciphertext) -> Result<SharedSecret> {
    Ok(decaps_traced(level, sk, ct)?.ss)
}

pub fn decaps_traced(level: SecurityLevel, sk: &SecretKey, ct: &Ciphertext) -> Result<DecapsTrace> {
    let p = level.params();
    for found in [sk.level, ct.level] {
        if found != level {
            return Err(FrodoError::LevelMismatch {
                expected: level.n(),
                found: found.n(),
            });
        }
    }
    let c1_len = p.packed_len(p.nbar, p.n);
    let c2_len = p.packed_len(p.nbar, p.nbar);
    let b_prime = unpack(&ct.bytes[..c1_len], p.nbar, p.n, p)?;
    let c = unpack(&ct.bytes[c1_len..c1_len + c2_len], p.nbar, p.nbar, p)?;
    let salt = ct.salt();
    let s_t: Vec<i8> = sk
        .s_transpose_bytes()
        .chunks_exact(2)
        .map(|w| i16::from_le_bytes([w[0], w[1]]) as i8)
        .collect();
    let s = SignedMatrix::from_vec(p.nbar, p.n, s_t)?.transpose();
    let m = mat_sub_mul(&c, &b_prime, &s)?;
    let mu_prime = decode(&m, p)?;
    let g = hash(p, &[sk.pkh(), &mu_prime, salt], p.len_seed_se + p.len_k);
    let (seed_se, k) = g.split_at(p.len_seed_se);
    let enc = encrypt(p, sk.public_key_bytes(), seed_se, &mu_prime)?;
    let prefix = ct.matrices();
    let ss0 = hash(p, &[prefix, salt, k], p.len_ss);
    let ss1 = hash(p, &[prefix, salt, sk.s()], p.len_ss);
    let ss2 = hash(p, &[&pack(&enc.b_prime, p), &pack(&enc.c, p), salt, k], p.len_ss);
    let ss = verify_select(&ss0, &ss1, &ss2);
    Ok(DecapsTrace {
        mu_prime,
        ss0,
        ss1,
        ss2,
        ss,
    })
}

/// Returns ss0 if ss0 == ss2 and ss1 otherwise, without branching on the
/// comparison.
pub fn verify_select(ss0: &[u8], ss1: &[u8], ss2: &[u8]) -> SharedSecret {
    assert!(ss0.len() == ss1.len() && ss0.len() == ss2.len());
    let diff = ss0.iter().zip(ss2).fold(0u8, |acc, (a, b)| acc | (a ^ b));
    // 0xFF when equal, 0x00 otherwise
    let eq = ((diff as u16).wrapping_sub(1) >> 8) as u8;
    SharedSecret(ss0.iter().zip(ss1).map(|(a, b)| (a & eq) | (b & !eq)).collect())
}

/// KeyGen with fresh randomness from `rng`.
pub fn keygen_with_rng<R: CryptoRng>(level: SecurityLevel, rng: &mut R) -> Result<KeyPair> {
    let mut buf = vec![0u8; level.params().len_keygen_randomness()];
    rng.fill_bytes(&mut buf);
    keygen(level, &KeygenRandomness::from_bytes(level, &buf)?)
}

/// Encaps with fresh randomness from `rng`.
pub fn encaps_with_rng<R: CryptoRng>(
    level: SecurityLevel,
    pk: &PublicKey,
    rng: &mut R,
) -> Result<(Ciphertext, SharedSecret)> {
    let mut buf = vec![0u8; level.params().len_encaps_randomness()];
    rng.fill_bytes(&mut buf);
    encaps(level, pk, &EncapsRandomness::from_bytes(level, &buf)?)
}
