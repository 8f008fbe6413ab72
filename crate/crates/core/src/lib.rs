//! FrodoKEM (SHAKE variant) built on a block-level matrix engine.
//!
//! The matrix products run through the same 2x4 / 4x4 block schedule a
//! hardware array would use, so the `frodo-sim` crate can replay them
//! instruction by instruction against these functions.

pub mod codec;
pub mod drbg;
pub mod error;
pub mod kat;
pub mod kem;
pub mod matrix;
pub mod params;
pub mod sampling;
pub mod xof;

pub use error::{FrodoError, Result};
pub use kem::{
    decaps, encaps, keygen, Ciphertext, EncapsRandomness, KeyPair, KeygenRandomness, PublicKey, SecretKey, SharedSecret,
};
pub use params::{params_for, ParameterSet, SecurityLevel, ShakeVariant};
