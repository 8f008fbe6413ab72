use std::path::{Path, PathBuf};

use frodo_core::drbg::CtrDrbg;
use frodo_core::kem::{self, Ciphertext, EncapsRandomness, KeygenRandomness, PublicKey, SecretKey};
use frodo_core::xof::shake_parts;
use frodo_core::{SecurityLevel, ShakeVariant};
use rand::RngCore;

use crate::error::{CliError, CliResult};

/// Where operation randomness comes from.
pub enum Randomness {
    Os,
    Drbg(CtrDrbg),
}

impl Randomness {
    pub fn from_seed(seed: Option<&str>) -> CliResult<Self> {
        match seed {
            None => Ok(Randomness::Os),
            Some(s) => Ok(Randomness::Drbg(drbg_from_hex(s)?)),
        }
    }

    fn bytes(&mut self, len: usize) -> Vec<u8> {
        match self {
            Randomness::Os => {
                let mut buf = vec![0u8; len];
                rand::rng().fill_bytes(&mut buf);
                buf
            }
            Randomness::Drbg(d) => d.bytes(len),
        }
    }
}

pub fn parse_seed(s: &str) -> CliResult<Vec<u8>> {
    let seed = hex::decode(s.trim()).map_err(|e| CliError::Parse(format!("seed: {e}")))?;
    if seed.len() != 48 {
        return Err(CliError::Length(format!("seed: expected 48 bytes, got {}", seed.len())));
    }
    Ok(seed)
}

fn drbg_from_hex(s: &str) -> CliResult<CtrDrbg> {
    let seed = parse_seed(s)?;
    CtrDrbg::new(&seed, None).map_err(|e| CliError::Length(format!("seed: {e}")))
}

pub fn digest(bytes: &[u8]) -> String {
    hex::encode(shake_parts(ShakeVariant::Shake256, &[bytes], 16))
}

fn read(path: &Path) -> CliResult<Vec<u8>> {
    std::fs::read(path).map_err(|e| CliError::io(path, e))
}

fn write(path: &Path, bytes: &[u8]) -> CliResult<()> {
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

fn expect_len(what: &str, bytes: &[u8], expected: usize) -> CliResult<()> {
    if bytes.len() != expected {
        return Err(CliError::Length(format!(
            "{what}: expected {expected} bytes, got {}",
            bytes.len()
        )));
    }
    Ok(())
}

fn internal(e: frodo_core::FrodoError) -> CliError {
    CliError::Length(e.to_string())
}

pub fn keygen(level: SecurityLevel, mut rand: Randomness, pk_path: &Path, sk_path: &Path) -> CliResult<()> {
    let p = level.params();
    let kr = KeygenRandomness::from_bytes(level, &rand.bytes(p.len_keygen_randomness())).map_err(internal)?;
    let kp = kem::keygen(level, &kr).map_err(internal)?;
    write(pk_path, kp.pk.as_bytes())?;
    write(sk_path, kp.sk.as_bytes())?;
    outln!("pk {} {}", kp.pk.as_bytes().len(), digest(kp.pk.as_bytes()));
    outln!("sk {} {}", kp.sk.as_bytes().len(), digest(kp.sk.as_bytes()));
    Ok(())
}

pub fn encaps(
    level: SecurityLevel,
    mut rand: Randomness,
    pk_path: &Path,
    ct_path: &Path,
    ss_path: Option<&PathBuf>,
) -> CliResult<()> {
    let p = level.params();
    let pk_bytes = read(pk_path)?;
    expect_len("pk", &pk_bytes, p.len_pk())?;
    let pk = PublicKey::from_bytes(level, &pk_bytes).map_err(internal)?;
    let er = EncapsRandomness::from_bytes(level, &rand.bytes(p.len_encaps_randomness())).map_err(internal)?;
    let (ct, ss) = kem::encaps(level, &pk, &er).map_err(internal)?;
    write(ct_path, ct.as_bytes())?;
    if let Some(path) = ss_path {
        write(path, ss.as_bytes())?;
    }
    outln!("ct {} {}", ct.as_bytes().len(), digest(ct.as_bytes()));
    outln!("ss {}", hex::encode(ss.as_bytes()));
    Ok(())
}

pub fn decaps(level: SecurityLevel, sk_path: &Path, ct_path: &Path, ss_path: Option<&PathBuf>) -> CliResult<()> {
    let p = level.params();
    let sk_bytes = read(sk_path)?;
    let ct_bytes = read(ct_path)?;
    expect_len("sk", &sk_bytes, p.len_sk())?;
    expect_len("ct", &ct_bytes, p.len_ct())?;
    let sk = SecretKey::from_bytes(level, &sk_bytes).map_err(internal)?;
    let ct = Ciphertext::from_bytes(level, &ct_bytes).map_err(internal)?;
    let ss = kem::decaps(level, &sk, &ct).map_err(internal)?;
    if let Some(path) = ss_path {
        write(path, ss.as_bytes())?;
    }
    outln!("ss {}", hex::encode(ss.as_bytes()));
    Ok(())
}
