//! Reading, writing and replaying NIST-style `.rsp` known-answer files.

use core::fmt::Write as _;

use thiserror::Error;

use crate::drbg::{CtrDrbg, SEED_LEN};
use crate::kem::{self, EncapsRandomness, KeygenRandomness};
use crate::params::SecurityLevel;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KatError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("record {count}: {msg}")]
    Record { count: usize, msg: String },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KatVector {
    pub count: usize,
    pub seed: Vec<u8>,
    pub pk: Vec<u8>,
    pub sk: Vec<u8>,
    pub ct: Vec<u8>,
    pub ss: Vec<u8>,
}

const FIELDS: [&str; 6] = ["count", "seed", "pk", "sk", "ct", "ss"];

/// Parses `.rsp` text. Header comments and blank lines are skipped; every
/// record must carry all six fields.
pub fn parse_rsp(text: &str) -> Result<Vec<KatVector>, KatError> {
    let mut out = Vec::new();
    let mut cur: Option<(KatVector, [bool; 6])> = None;
    let finish = |cur: Option<(KatVector, [bool; 6])>, out: &mut Vec<KatVector>| {
        if let Some((v, seen)) = cur {
            if let Some(i) = seen.iter().position(|s| !s) {
                return Err(KatError::Record {
                    count: v.count,
                    msg: format!("missing field {}", FIELDS[i]),
                });
            }
            out.push(v);
        }
        Ok(())
    };
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let l = raw.trim();
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        let (key, value) = l.split_once('=').ok_or_else(|| KatError::Parse {
            line,
            msg: format!("expected `key = value`, found `{l}`"),
        })?;
        let (key, value) = (key.trim(), value.trim());
        let field = FIELDS.iter().position(|f| *f == key).ok_or_else(|| KatError::Parse {
            line,
            msg: format!("unknown field `{key}`"),
        })?;
        if field == 0 {
            finish(cur.take(), &mut out)?;
            let count = value.parse().map_err(|_| KatError::Parse {
                line,
                msg: format!("bad count `{value}`"),
            })?;
            cur = Some((
                KatVector {
                    count,
                    ..Default::default()
                },
                [true, false, false, false, false, false],
            ));
            continue;
        }
        let (v, seen) = cur.as_mut().ok_or_else(|| KatError::Parse {
            line,
            msg: "field before the first count".into(),
        })?;
        let bytes = hex::decode(value).map_err(|e| KatError::Parse {
            line,
            msg: format!("bad hex in {key}: {e}"),
        })?;
        let slot = match field {
            1 => &mut v.seed,
            2 => &mut v.pk,
            3 => &mut v.sk,
            4 => &mut v.ct,
            _ => &mut v.ss,
        };
        *slot = bytes;
        seen[field] = true;
    }
    finish(cur, &mut out)?;
    if out.is_empty() {
        return Err(KatError::Parse {
            line: text.lines().count().max(1),
            msg: "no records".into(),
        });
    }
    Ok(out)
}

pub fn write_rsp(level: SecurityLevel, vectors: &[KatVector]) -> String {
    let mut s = format!("# {}\n\n", level.name());
    for v in vectors {
        let _ = writeln!(s, "count = {}", v.count);
        for (k, b) in [
            ("seed", &v.seed),
            ("pk", &v.pk),
            ("sk", &v.sk),
            ("ct", &v.ct),
            ("ss", &v.ss),
        ] {
            let _ = writeln!(s, "{k} = {}", hex::encode_upper(b));
        }
        s.push('\n');
    }
    s
}

/// Produces the vector the harness would print for `seed`, using this crate.
pub fn generate_vector(level: SecurityLevel, count: usize, seed: &[u8]) -> Result<KatVector, KatError> {
    let rec = |msg: String| KatError::Record { count, msg };
    let p = level.params();
    let mut drbg = CtrDrbg::new(seed, None).map_err(|e| rec(e.to_string()))?;
    let kr =
        KeygenRandomness::from_bytes(level, &drbg.bytes(p.len_keygen_randomness())).map_err(|e| rec(e.to_string()))?;
    let kp = kem::keygen(level, &kr).map_err(|e| rec(e.to_string()))?;
    let er =
        EncapsRandomness::from_bytes(level, &drbg.bytes(p.len_encaps_randomness())).map_err(|e| rec(e.to_string()))?;
    let (ct, ss) = kem::encaps(level, &kp.pk, &er).map_err(|e| rec(e.to_string()))?;
    let ss_dec = kem::decaps(level, &kp.sk, &ct).map_err(|e| rec(e.to_string()))?;
    if ss_dec != ss {
        return Err(rec("decapsulation disagrees with encapsulation".into()));
    }
    Ok(KatVector {
        count,
        seed: seed.to_vec(),
        pk: kp.pk.as_bytes().to_vec(),
        sk: kp.sk.as_bytes().to_vec(),
        ct: ct.as_bytes().to_vec(),
        ss: ss.as_bytes().to_vec(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VectorOutcome {
    pub count: usize,
    /// Names of the fields that differ; empty on success.
    pub mismatches: Vec<&'static str>,
    pub error: Option<String>,
}

impl VectorOutcome {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty() && self.error.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KatReport {
    pub level: SecurityLevel,
    pub outcomes: Vec<VectorOutcome>,
}

impl KatReport {
    pub fn passed(&self) -> usize {
        self.outcomes.iter().filter(|o| o.passed()).count()
    }

    pub fn all_passed(&self) -> bool {
        !self.outcomes.is_empty() && self.passed() == self.outcomes.len()
    }
}

/// Recomputes every vector from its seed and compares pk, sk, ct and ss.
pub fn replay(level: SecurityLevel, vectors: &[KatVector]) -> KatReport {
    let outcomes = vectors
        .iter()
        .map(|v| {
            if v.seed.len() != SEED_LEN {
                return VectorOutcome {
                    count: v.count,
                    mismatches: vec![],
                    error: Some(format!("seed has {} bytes", v.seed.len())),
                };
            }
            match generate_vector(level, v.count, &v.seed) {
                Ok(got) => {
                    let mut mismatches = Vec::new();
                    for (name, a, b) in [
                        ("pk", &got.pk, &v.pk),
                        ("sk", &got.sk, &v.sk),
                        ("ct", &got.ct, &v.ct),
                        ("ss", &got.ss, &v.ss),
                    ] {
                        if a != b {
                            mismatches.push(name);
                        }
                    }
                    VectorOutcome {
                        count: v.count,
                        mismatches,
                        error: None,
                    }
                }
                Err(e) => VectorOutcome {
                    count: v.count,
                    mismatches: vec![],
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    KatReport { level, outcomes }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_write_roundtrip() {
        let v = vec![KatVector {
            count: 0,
            seed: vec![1; 48],
            pk: vec![2, 3],
            sk: vec![4],
            ct: vec![5],
            ss: vec![6],
        }];
        let text = write_rsp(SecurityLevel::Frodo640, &v);
        assert_eq!(parse_rsp(&text).unwrap(), v);
    }

    #[test]
    fn malformed_line_reports_number() {
        let text = "# hdr\n\ncount = 0\nseed = 00\npk = zz\n";
        match parse_rsp(text) {
            Err(KatError::Parse { line, .. }) => assert_eq!(line, 5),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn empty_file_is_an_error() {
        assert!(matches!(parse_rsp(""), Err(KatError::Parse { .. })));
        assert!(matches!(
            parse_rsp("# header only\n\n"),
            Err(KatError::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn missing_field_is_reported() {
        let text = "count = 3\nseed = 00\npk = 00\nsk = 00\nct = 00\n";
        assert!(matches!(parse_rsp(text), Err(KatError::Record { count: 3, .. })));
    }

    #[test]
    fn self_generated_vector_replays() {
        let seed: Vec<u8> = (0..48).collect();
        let v = generate_vector(SecurityLevel::Frodo640, 0, &seed).unwrap();
        assert!(replay(SecurityLevel::Frodo640, std::slice::from_ref(&v)).all_passed());
        let mut bad = v;
        bad.ss[0] ^= 1;
        let r = replay(SecurityLevel::Frodo640, &[bad]);
        assert_eq!(r.outcomes[0].mismatches, vec!["ss"]);
    }
}
