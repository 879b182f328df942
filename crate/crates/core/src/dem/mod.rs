//! Data encapsulation: ChaCha20-Poly1305 (RFC 8439) and the HKDF-SHA-256
//! step that turns a KEM secret into an AEAD key.

mod chacha20;
pub mod kat;
mod poly1305;
mod vectors;

use std::fmt;

use hkdf::Hkdf;
use rand::{CryptoRng, RngCore};
use sha2::Sha256;
use subtle::ConstantTimeEq;
use thiserror::Error;
use zeroize::{Zeroize, ZeroizeOnDrop};

use crate::kem::SharedSecret;
use crate::wire::SchemeId;

pub use chacha20::BLOCK_LEN;
pub use poly1305::TAG_LEN;

pub const KEY_LEN: usize = 32;
pub const NONCE_LEN: usize = 12;

/// Prefix of every HKDF `info` string produced by this crate.
pub const KDF_LABEL: &[u8] = b"pqhb-v1";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DemError {
    #[error("authentication failed")]
    AuthFailure,
    #[error("sealed input is {0} bytes, shorter than the tag")]
    TooShort(usize),
    #[error("entropy source failed: {0}")]
    EntropyFailure(String),
}

/// A 256-bit AEAD key.
#[derive(Clone, PartialEq, Eq, Zeroize, ZeroizeOnDrop)]
pub struct DemKey([u8; KEY_LEN]);

impl DemKey {
    pub fn from_bytes(bytes: [u8; KEY_LEN]) -> Self {
        DemKey(bytes)
    }

    pub fn as_bytes(&self) -> &[u8; KEY_LEN] {
        &self.0
    }
}

impl fmt::Debug for DemKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("DemKey(..)")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Nonce([u8; NONCE_LEN]);

impl Nonce {
    pub fn from_bytes(bytes: [u8; NONCE_LEN]) -> Self {
        Nonce(bytes)
    }

    pub fn random<R: RngCore + CryptoRng + ?Sized>(rng: &mut R) -> Result<Self, DemError> {
        let mut n = [0u8; NONCE_LEN];
        rng.try_fill_bytes(&mut n)
            .map_err(|e| DemError::EntropyFailure(e.to_string()))?;
        Ok(Nonce(n))
    }

    pub fn as_bytes(&self) -> &[u8; NONCE_LEN] {
        &self.0
    }
}

pub fn chacha20_block(key: &DemKey, counter: u32, nonce: &Nonce) -> [u8; BLOCK_LEN] {
    chacha20::block(&key.0, counter, &nonce.0)
}

pub fn poly1305_tag(key_material: &[u8; 32], message: &[u8]) -> [u8; TAG_LEN] {
    poly1305::tag(key_material, message)
}

fn one_time_key(key: &DemKey, nonce: &Nonce) -> [u8; 32] {
    let mut block = chacha20::block(&key.0, 0, &nonce.0);
    let mut otk = [0u8; 32];
    otk.copy_from_slice(&block[..32]);
    block.zeroize();
    otk
}

fn compute_tag(key: &DemKey, nonce: &Nonce, aad: &[u8], ciphertext: &[u8]) -> [u8; TAG_LEN] {
    let mut otk = one_time_key(key, nonce);
    let mut mac = poly1305::Poly1305::new(&otk);
    otk.zeroize();
    mac.update(aad);
    mac.pad_to_block();
    mac.update(ciphertext);
    mac.pad_to_block();
    mac.update(&(aad.len() as u64).to_le_bytes());
    mac.update(&(ciphertext.len() as u64).to_le_bytes());
    mac.finalize()
}

/// Encrypts and authenticates; returns `ciphertext || tag`.
pub fn seal(key: &DemKey, nonce: &Nonce, aad: &[u8], plaintext: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(plaintext.len() + TAG_LEN);
    out.extend_from_slice(plaintext);
    chacha20::apply_keystream(&key.0, 1, &nonce.0, &mut out);
    let tag = compute_tag(key, nonce, aad, &out);
    out.extend_from_slice(&tag);
    out
}

/// Verifies the tag in constant time, then decrypts.
pub fn open(key: &DemKey, nonce: &Nonce, aad: &[u8], sealed: &[u8]) -> Result<Vec<u8>, DemError> {
    if sealed.len() < TAG_LEN {
        return Err(DemError::TooShort(sealed.len()));
    }
    let (ciphertext, tag) = sealed.split_at(sealed.len() - TAG_LEN);
    let expected = compute_tag(key, nonce, aad, ciphertext);
    if !bool::from(expected.ct_eq(tag)) {
        return Err(DemError::AuthFailure);
    }
    let mut plaintext = ciphertext.to_vec();
    chacha20::apply_keystream(&key.0, 1, &nonce.0, &mut plaintext);
    Ok(plaintext)
}

/// HKDF-SHA-256 extract-then-expand with an empty salt, producing 32 bytes.
pub(crate) fn hkdf_sha256(ikm: &[u8], info: &[&[u8]]) -> [u8; 32] {
    let hk = Hkdf::<Sha256>::new(None, ikm);
    let mut okm = [0u8; 32];
    hk.expand_multi_info(info, &mut okm)
        .expect("32 bytes is a valid HKDF-SHA-256 output length");
    okm
}

/// Derives the AEAD key for one envelope. `info = "pqhb-v1" || scheme_tag || context`.
pub fn derive_dem_key(secret: &SharedSecret, scheme: SchemeId, context: &[u8]) -> DemKey {
    DemKey(hkdf_sha256(
        secret.as_bytes(),
        &[KDF_LABEL, &[scheme.tag()], context],
    ))
}
