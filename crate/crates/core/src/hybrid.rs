//! KEM → KDF → DEM composition over the envelope format.
//!
//! Each engine is bound to one local keypair and one peer public key. The DEM
//! key context is the recipient's public key, so keys are directional: the
//! key that seals A→B traffic differs from the one for B→A.

use std::fmt;
use std::sync::{Mutex, OnceLock};

use rand::rngs::OsRng;
use rand::{CryptoRng, RngCore};
use thiserror::Error;

use crate::dem::{self, DemError, Nonce};
use crate::kem::{self, KemError, KeyPair, SharedSecret};
use crate::wire::{envelope_header, Envelope, SchemeId, WireError};

/// Any cryptographic RNG the engine can own.
pub trait EntropySource: RngCore + CryptoRng + Send {}

impl<T: RngCore + CryptoRng + Send> EntropySource for T {}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HybridError {
    #[error("envelope is for {actual}, engine speaks {expected}")]
    SchemeMismatch { expected: SchemeId, actual: SchemeId },
    #[error("authentication failed")]
    AuthFailure,
    #[error("entropy source failed: {0}")]
    EntropyFailure(String),
    #[error(transparent)]
    Kem(#[from] KemError),
    #[error(transparent)]
    Wire(#[from] WireError),
}

impl From<DemError> for HybridError {
    fn from(e: DemError) -> Self {
        match e {
            DemError::AuthFailure => HybridError::AuthFailure,
            DemError::TooShort(n) => HybridError::Wire(WireError::PayloadTooShort(n)),
            DemError::EntropyFailure(msg) => HybridError::EntropyFailure(msg),
        }
    }
}

pub struct HybridEngine {
    scheme: SchemeId,
    local: KeyPair,
    peer_public: Vec<u8>,
    entropy: Mutex<Box<dyn EntropySource>>,
    static_secret: OnceLock<SharedSecret>,
}

impl fmt::Debug for HybridEngine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HybridEngine")
            .field("scheme", &self.scheme)
            .field("local", &self.local)
            .finish_non_exhaustive()
    }
}

impl HybridEngine {
    pub fn new(
        local: KeyPair,
        peer_public: &[u8],
        entropy: impl EntropySource + 'static,
    ) -> Result<Self, HybridError> {
        let scheme = local.scheme();
        kem::validate_public_key(scheme, peer_public)?;
        Ok(HybridEngine {
            scheme,
            local,
            peer_public: peer_public.to_vec(),
            entropy: Mutex::new(Box::new(entropy)),
            static_secret: OnceLock::new(),
        })
    }

    /// Engine drawing nonces and KEM randomness from the operating system.
    pub fn with_os_entropy(local: KeyPair, peer_public: &[u8]) -> Result<Self, HybridError> {
        Self::new(local, peer_public, OsRng)
    }

    pub fn scheme(&self) -> SchemeId {
        self.scheme
    }

    pub fn local(&self) -> &KeyPair {
        &self.local
    }

    pub fn peer_public(&self) -> &[u8] {
        &self.peer_public
    }

    fn p384_secret(&self, rng: &mut dyn EntropySource) -> Result<SharedSecret, HybridError> {
        if let Some(s) = self.static_secret.get() {
            return Ok(s.clone());
        }
        let enc = kem::encap(self.scheme, &self.peer_public, Some(&self.local), rng)?;
        Ok(self.static_secret.get_or_init(|| enc.secret).clone())
    }

    pub fn encrypt(&self, plaintext: &[u8]) -> Result<Envelope, HybridError> {
        let mut guard = self.entropy.lock().unwrap_or_else(|e| e.into_inner());
        let rng: &mut dyn EntropySource = guard.as_mut();

        let (key_transport, secret) = match self.scheme {
            SchemeId::P384 => (Vec::new(), self.p384_secret(rng)?),
            _ => {
                let enc = kem::encap(self.scheme, &self.peer_public, None, rng)?;
                (enc.key_transport, enc.secret)
            }
        };
        let key = dem::derive_dem_key(&secret, self.scheme, &self.peer_public);
        let nonce = Nonce::random(rng)?;
        drop(guard);

        let payload = dem::seal(&key, &nonce, &envelope_header(self.scheme), plaintext);
        Ok(Envelope::new(self.scheme, key_transport, *nonce.as_bytes(), payload)?)
    }

    pub fn decrypt(&self, envelope: &Envelope) -> Result<Vec<u8>, HybridError> {
        if envelope.scheme() != self.scheme {
            return Err(HybridError::SchemeMismatch {
                expected: self.scheme,
                actual: envelope.scheme(),
            });
        }
        let secret = match self.scheme {
            SchemeId::P384 => {
                let mut guard = self.entropy.lock().unwrap_or_else(|e| e.into_inner());
                self.p384_secret(guard.as_mut())?
            }
            _ => kem::decap(self.scheme, &self.local, envelope.key_transport(), None)?,
        };
        let key = dem::derive_dem_key(&secret, self.scheme, self.local.public_key());
        let nonce = Nonce::from_bytes(*envelope.nonce());
        Ok(dem::open(&key, &nonce, &envelope.header(), envelope.payload())?)
    }

    /// Encrypts and encodes in one step.
    pub fn encrypt_to_bytes(&self, plaintext: &[u8]) -> Result<Vec<u8>, HybridError> {
        Ok(self.encrypt(plaintext)?.to_bytes())
    }

    /// Decodes and decrypts in one step. Framing errors are reported before
    /// any cryptographic work.
    pub fn decrypt_bytes(&self, bytes: &[u8]) -> Result<Vec<u8>, HybridError> {
        self.decrypt(&Envelope::from_bytes(bytes)?)
    }
}

/// A matched pair of engines: `.0` talks to `.1` and vice versa.
pub fn engine_pair<R: RngCore + CryptoRng + ?Sized>(
    scheme: SchemeId,
    rng: &mut R,
) -> Result<(HybridEngine, HybridEngine), HybridError> {
    let a = kem::keygen(scheme, rng)?;
    let b = kem::keygen(scheme, rng)?;
    let a_pub = a.public_key().to_vec();
    let b_pub = b.public_key().to_vec();
    Ok((
        HybridEngine::with_os_entropy(a, &b_pub)?,
        HybridEngine::with_os_entropy(b, &a_pub)?,
    ))
}
