//! Key encapsulation over three backends behind one interface: `keygen`,
//! `encap` (outgoing secret) and `decap` (incoming secret).
//!
//! | scheme   | public key | key transport            | secret            |
//! |----------|------------|--------------------------|-------------------|
//! | MLKEM768 | 1184 bytes | 1088-byte KEM ciphertext | backend output    |
//! | RSA7680  | 960 bytes  | 960-byte OAEP wrap       | fresh random key  |
//! | P384     | 97 bytes   | none                     | HKDF(ECDH x-coord)|

mod mlkem;
pub mod p384;
pub mod rsa;

use std::fmt;
use std::sync::Arc;

use rand::{CryptoRng, RngCore};
use subtle::ConstantTimeEq;
use thiserror::Error;
use zeroize::{Zeroize, ZeroizeOnDrop, Zeroizing};

use crate::wire::SchemeId;

pub const SECRET_LEN: usize = 32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KemError {
    #[error("entropy source failed: {0}")]
    EntropyFailure(String),
    #[error("backend failure: {0}")]
    BackendFailure(String),
    #[error("malformed public key: {0}")]
    MalformedPublicKey(String),
    #[error("malformed private key: {0}")]
    MalformedPrivateKey(String),
    #[error("P-384 agreement needs the peer's static key")]
    MissingSenderKey,
    #[error("encapsulation failed: {0}")]
    EncapsulationFailure(String),
    #[error("key transport is {actual} bytes, expected {expected}")]
    MalformedTransport { expected: usize, actual: usize },
    #[error("decapsulation failed")]
    DecapsulationFailure,
    #[error("key belongs to {actual}, expected {expected}")]
    SchemeMismatch { expected: SchemeId, actual: SchemeId },
}

pub(crate) fn fill_random<R: RngCore + CryptoRng + ?Sized>(
    rng: &mut R,
    buf: &mut [u8],
) -> Result<(), KemError> {
    rng.try_fill_bytes(buf)
        .map_err(|e| KemError::EntropyFailure(e.to_string()))
}

/// The 32-byte secret every scheme produces.
#[derive(Clone, Zeroize, ZeroizeOnDrop)]
pub struct SharedSecret([u8; SECRET_LEN]);

impl SharedSecret {
    pub fn from_bytes(bytes: [u8; SECRET_LEN]) -> Self {
        SharedSecret(bytes)
    }

    pub fn as_bytes(&self) -> &[u8; SECRET_LEN] {
        &self.0
    }
}

impl PartialEq for SharedSecret {
    fn eq(&self, other: &Self) -> bool {
        self.0.ct_eq(&other.0).into()
    }
}

impl Eq for SharedSecret {}

impl fmt::Debug for SharedSecret {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SharedSecret(..)")
    }
}

#[derive(Debug, Clone)]
pub struct Encapsulation {
    pub key_transport: Vec<u8>,
    pub secret: SharedSecret,
}

enum Backend {
    /// Decapsulation reads the keypair's own private-key bytes.
    MlKem,
    Rsa(Box<rsa::RsaPrivate>),
    P384(::p384::SecretKey),
}

/// Asymmetric key material for one scheme. Cloning shares the parsed
/// backend key.
#[derive(Clone)]
pub struct KeyPair {
    scheme: SchemeId,
    public_key: Vec<u8>,
    private_key: Zeroizing<Vec<u8>>,
    backend: Arc<Backend>,
}

impl fmt::Debug for KeyPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KeyPair")
            .field("scheme", &self.scheme)
            .field("public_key", &format_args!("{} bytes", self.public_key.len()))
            .finish_non_exhaustive()
    }
}

impl KeyPair {
    pub fn scheme(&self) -> SchemeId {
        self.scheme
    }

    pub fn public_key(&self) -> &[u8] {
        &self.public_key
    }

    /// Raw private key: the ML-KEM decapsulation key, `p || q` for RSA, or
    /// the 48-byte P-384 scalar.
    pub fn private_key(&self) -> &[u8] {
        &self.private_key
    }

    /// Rebuilds a keypair from its exported bytes, checking that the halves
    /// belong together.
    pub fn from_bytes(scheme: SchemeId, public_key: &[u8], private_key: &[u8]) -> Result<Self, KemError> {
        let backend = match scheme {
            SchemeId::MlKem768 => {
                mlkem::validate_public(public_key)?;
                mlkem::validate_private(private_key, public_key)?;
                Backend::MlKem
            }
            SchemeId::Rsa7680 => {
                rsa::parse_public(public_key)?;
                let key = rsa::RsaPrivate::from_bytes(private_key)?;
                if key.public_bytes() != public_key {
                    return Err(KemError::MalformedPrivateKey(
                        "RSA primes do not match the modulus".into(),
                    ));
                }
                Backend::Rsa(Box::new(key))
            }
            SchemeId::P384 => {
                p384::parse_public(public_key)?;
                let sk = p384::parse_private(private_key)?;
                if p384::public_bytes(&sk) != public_key {
                    return Err(KemError::MalformedPrivateKey(
                        "P-384 scalar does not match the public point".into(),
                    ));
                }
                Backend::P384(sk)
            }
        };
        Ok(KeyPair {
            scheme,
            public_key: public_key.to_vec(),
            private_key: Zeroizing::new(private_key.to_vec()),
            backend: Arc::new(backend),
        })
    }

    fn expect_scheme(&self, scheme: SchemeId) -> Result<(), KemError> {
        if self.scheme != scheme {
            return Err(KemError::SchemeMismatch {
                expected: scheme,
                actual: self.scheme,
            });
        }
        Ok(())
    }

    fn p384_secret(&self) -> Option<&::p384::SecretKey> {
        match self.backend.as_ref() {
            Backend::P384(sk) => Some(sk),
            _ => None,
        }
    }
}

/// Checks that `bytes` is a well-formed public key for `scheme`.
pub fn validate_public_key(scheme: SchemeId, bytes: &[u8]) -> Result<(), KemError> {
    match scheme {
        SchemeId::MlKem768 => mlkem::validate_public(bytes),
        SchemeId::Rsa7680 => rsa::parse_public(bytes).map(|_| ()),
        SchemeId::P384 => p384::parse_public(bytes).map(|_| ()),
    }
}

pub fn keygen<R: RngCore + CryptoRng + ?Sized>(scheme: SchemeId, rng: &mut R) -> Result<KeyPair, KemError> {
    let (public_key, private_key, backend) = match scheme {
        SchemeId::MlKem768 => {
            let (ek, dk) = mlkem::generate(rng)?;
            (ek, dk, Backend::MlKem)
        }
        SchemeId::Rsa7680 => {
            let key = rsa::generate(rng)?;
            (key.public_bytes(), key.to_bytes(), Backend::Rsa(Box::new(key)))
        }
        SchemeId::P384 => {
            let sk = p384::generate(rng)?;
            let secret = Zeroizing::new(sk.to_bytes().to_vec());
            (p384::public_bytes(&sk), secret, Backend::P384(sk))
        }
    };
    Ok(KeyPair {
        scheme,
        public_key,
        private_key,
        backend: Arc::new(backend),
    })
}

/// Outgoing secret derivation toward `recipient_public`. P-384 needs the
/// sender's static keypair and produces no transport bytes.
pub fn encap<R: RngCore + CryptoRng + ?Sized>(
    scheme: SchemeId,
    recipient_public: &[u8],
    sender: Option<&KeyPair>,
    rng: &mut R,
) -> Result<Encapsulation, KemError> {
    match scheme {
        SchemeId::MlKem768 => {
            let (key_transport, secret) = mlkem::encapsulate(recipient_public, rng)?;
            Ok(Encapsulation {
                key_transport,
                secret,
            })
        }
        SchemeId::Rsa7680 => {
            let n = rsa::parse_public(recipient_public)?;
            let mut fresh = [0u8; SECRET_LEN];
            fill_random(rng, &mut fresh)?;
            let secret = SharedSecret::from_bytes(fresh);
            fresh.zeroize();
            let key_transport = rsa::oaep_encrypt(&n, secret.as_bytes(), rng)?;
            Ok(Encapsulation {
                key_transport,
                secret,
            })
        }
        SchemeId::P384 => {
            let sender = sender.ok_or(KemError::MissingSenderKey)?;
            sender.expect_scheme(scheme)?;
            let peer = p384::parse_public(recipient_public)?;
            let sk = sender.p384_secret().expect("P384 keypair holds a P384 key");
            Ok(Encapsulation {
                key_transport: Vec::new(),
                secret: p384::agree(sk, &peer),
            })
        }
    }
}

/// Incoming secret derivation. RSA padding failures all surface as the same
/// `DecapsulationFailure`; ML-KEM never fails on a well-sized ciphertext.
pub fn decap(
    scheme: SchemeId,
    recipient: &KeyPair,
    key_transport: &[u8],
    sender_public: Option<&[u8]>,
) -> Result<SharedSecret, KemError> {
    recipient.expect_scheme(scheme)?;
    if key_transport.len() != scheme.key_transport_len() {
        return Err(KemError::MalformedTransport {
            expected: scheme.key_transport_len(),
            actual: key_transport.len(),
        });
    }
    match recipient.backend.as_ref() {
        Backend::MlKem => mlkem::decapsulate(&recipient.private_key, key_transport),
        Backend::Rsa(key) => {
            let secret = rsa::oaep_decrypt(key, key_transport)?;
            let bytes: [u8; SECRET_LEN] = secret
                .as_slice()
                .try_into()
                .map_err(|_| KemError::DecapsulationFailure)?;
            Ok(SharedSecret::from_bytes(bytes))
        }
        Backend::P384(sk) => {
            let peer = p384::parse_public(sender_public.ok_or(KemError::MissingSenderKey)?)?;
            Ok(p384::agree(sk, &peer))
        }
    }
}
