//! Cross-checks against an independently written FrodoKEM implementation.

use frodo_core::drbg::{kat_seeds, CtrDrbg};
use frodo_core::kat::generate_vector;
use frodo_core::SecurityLevel;
use frodo_kem_rs::Algorithm;

fn reference(level: SecurityLevel) -> Algorithm {
    match level {
        SecurityLevel::Frodo640 => Algorithm::FrodoKem640Shake,
        SecurityLevel::Frodo976 => Algorithm::FrodoKem976Shake,
        SecurityLevel::Frodo1344 => Algorithm::FrodoKem1344Shake,
    }
}

#[test]
fn first_harness_vectors_match_reference() {
    let seeds = kat_seeds(3);
    for level in SecurityLevel::ALL {
        let p = level.params();
        let alg = reference(level);
        for (count, seed) in seeds.iter().enumerate() {
            let mut d = CtrDrbg::new(seed, None).unwrap();
            let (pk, sk) = alg
                .generate_keypair_from_seed(d.bytes(p.len_keygen_randomness()))
                .unwrap();
            let er = d.bytes(p.len_encaps_randomness());
            let (ct, ss) = alg.encapsulate(&pk, &er[..p.len_mu], &er[p.len_mu..]).unwrap();
            let ours = generate_vector(level, count, seed).unwrap();
            assert_eq!(ours.pk, pk.value(), "{level} pk #{count}");
            assert_eq!(ours.sk, sk.value(), "{level} sk #{count}");
            assert_eq!(ours.ct, ct.value(), "{level} ct #{count}");
            assert_eq!(ours.ss, ss.value(), "{level} ss #{count}");
        }
    }
}
