//! Canonical envelope format and storage-overhead accounting.
//!
//! Every hybrid ciphertext is serialized as
//!
//! ```text
//! version(1) || scheme_tag(1) || key_transport_len(2, BE) || key_transport || nonce(12) || payload
//! ```
//!
//! where `payload` is the AEAD ciphertext followed by its 16-byte tag. The
//! first four bytes form the envelope header, which is also bound into the
//! AEAD as associated data.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const ENVELOPE_VERSION: u8 = 0x01;
pub const HEADER_LEN: usize = 4;
pub const NONCE_LEN: usize = 12;
pub const TAG_LEN: usize = 16;

/// Bytes every envelope adds on top of the plaintext, regardless of scheme.
pub const DEM_OVERHEAD: usize = HEADER_LEN + NONCE_LEN + TAG_LEN;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WireError {
    #[error("unknown envelope version 0x{0:02x}")]
    UnknownVersion(u8),
    #[error("unknown scheme tag 0x{0:02x}")]
    UnknownScheme(u8),
    #[error("length mismatch: expected {expected} bytes, found {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("payload is {0} bytes, shorter than the 16-byte tag")]
    PayloadTooShort(usize),
}

/// The three hybrid schemes at the 192-bit security level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SchemeId {
    #[serde(rename = "MLKEM768")]
    MlKem768,
    #[serde(rename = "RSA7680")]
    Rsa7680,
    #[serde(rename = "P384")]
    P384,
}

impl SchemeId {
    pub const ALL: [SchemeId; 3] = [SchemeId::MlKem768, SchemeId::Rsa7680, SchemeId::P384];

    pub const fn tag(self) -> u8 {
        match self {
            SchemeId::MlKem768 => 0x01,
            SchemeId::Rsa7680 => 0x02,
            SchemeId::P384 => 0x03,
        }
    }

    pub const fn from_tag(tag: u8) -> Option<SchemeId> {
        match tag {
            0x01 => Some(SchemeId::MlKem768),
            0x02 => Some(SchemeId::Rsa7680),
            0x03 => Some(SchemeId::P384),
            _ => None,
        }
    }

    /// Size of the key-transport blob carried in every envelope.
    pub const fn key_transport_len(self) -> usize {
        match self {
            SchemeId::MlKem768 => 1088,
            SchemeId::Rsa7680 => 960,
            SchemeId::P384 => 0,
        }
    }

    /// Size of the raw public key (ML-KEM encapsulation key, RSA modulus,
    /// uncompressed SEC1 point).
    pub const fn public_key_len(self) -> usize {
        match self {
            SchemeId::MlKem768 => 1184,
            SchemeId::Rsa7680 => 960,
            SchemeId::P384 => 97,
        }
    }

    pub const fn name(self) -> &'static str {
        match self {
            SchemeId::MlKem768 => "MLKEM768",
            SchemeId::Rsa7680 => "RSA7680",
            SchemeId::P384 => "P384",
        }
    }

    /// Name used for this scheme in benchmark tables.
    pub const fn algorithm_label(self) -> &'static str {
        match self {
            SchemeId::MlKem768 => "Kyber",
            SchemeId::Rsa7680 => "RSA",
            SchemeId::P384 => "SECP384R1",
        }
    }
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "kyber" | "mlkem768" | "mlkem" | "kyber768" => Ok(SchemeId::MlKem768),
            "rsa" | "rsa7680" => Ok(SchemeId::Rsa7680),
            "p384" | "secp384r1" | "ecc" | "ecdh" => Ok(SchemeId::P384),
            _ => Err(format!("unknown scheme `{s}`")),
        }
    }
}

/// A validated hybrid ciphertext.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Envelope {
    version: u8,
    scheme: SchemeId,
    key_transport: Vec<u8>,
    nonce: [u8; NONCE_LEN],
    payload: Vec<u8>,
}

impl Envelope {
    pub fn new(
        scheme: SchemeId,
        key_transport: Vec<u8>,
        nonce: [u8; NONCE_LEN],
        payload: Vec<u8>,
    ) -> Result<Self, WireError> {
        if key_transport.len() != scheme.key_transport_len() {
            return Err(WireError::LengthMismatch {
                expected: scheme.key_transport_len(),
                actual: key_transport.len(),
            });
        }
        if payload.len() < TAG_LEN {
            return Err(WireError::PayloadTooShort(payload.len()));
        }
        Ok(Envelope {
            version: ENVELOPE_VERSION,
            scheme,
            key_transport,
            nonce,
            payload,
        })
    }

    pub fn version(&self) -> u8 {
        self.version
    }

    pub fn scheme(&self) -> SchemeId {
        self.scheme
    }

    pub fn key_transport(&self) -> &[u8] {
        &self.key_transport
    }

    pub fn nonce(&self) -> &[u8; NONCE_LEN] {
        &self.nonce
    }

    pub fn payload(&self) -> &[u8] {
        &self.payload
    }

    /// Mutable access to the sealed payload, for tamper tests.
    pub fn payload_mut(&mut self) -> &mut [u8] {
        &mut self.payload
    }

    pub fn header(&self) -> [u8; HEADER_LEN] {
        envelope_header(self.scheme)
    }

    pub fn encoded_len(&self) -> usize {
        HEADER_LEN + self.key_transport.len() + NONCE_LEN + self.payload.len()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        encode_envelope(self)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, WireError> {
        decode_envelope(bytes)
    }
}

/// The four header bytes for an envelope of `scheme`.
pub fn envelope_header(scheme: SchemeId) -> [u8; HEADER_LEN] {
    let len = (scheme.key_transport_len() as u16).to_be_bytes();
    [ENVELOPE_VERSION, scheme.tag(), len[0], len[1]]
}

pub fn encode_envelope(e: &Envelope) -> Vec<u8> {
    let mut out = Vec::with_capacity(e.encoded_len());
    out.push(e.version);
    out.push(e.scheme.tag());
    out.extend_from_slice(&(e.key_transport.len() as u16).to_be_bytes());
    out.extend_from_slice(&e.key_transport);
    out.extend_from_slice(&e.nonce);
    out.extend_from_slice(&e.payload);
    out
}

pub fn decode_envelope(bytes: &[u8]) -> Result<Envelope, WireError> {
    if bytes.len() < HEADER_LEN {
        return Err(WireError::LengthMismatch {
            expected: HEADER_LEN,
            actual: bytes.len(),
        });
    }
    let version = bytes[0];
    if version != ENVELOPE_VERSION {
        return Err(WireError::UnknownVersion(version));
    }
    let scheme = SchemeId::from_tag(bytes[1]).ok_or(WireError::UnknownScheme(bytes[1]))?;
    let declared = u16::from_be_bytes([bytes[2], bytes[3]]) as usize;
    if declared != scheme.key_transport_len() {
        return Err(WireError::LengthMismatch {
            expected: scheme.key_transport_len(),
            actual: declared,
        });
    }

    let rest = &bytes[HEADER_LEN..];
    if rest.len() < declared + NONCE_LEN {
        return Err(WireError::LengthMismatch {
            expected: HEADER_LEN + declared + NONCE_LEN + TAG_LEN,
            actual: bytes.len(),
        });
    }
    let (key_transport, rest) = rest.split_at(declared);
    let (nonce, payload) = rest.split_at(NONCE_LEN);
    if payload.len() < TAG_LEN {
        return Err(WireError::PayloadTooShort(payload.len()));
    }

    Ok(Envelope {
        version,
        scheme,
        key_transport: key_transport.to_vec(),
        nonce: nonce.try_into().expect("split at NONCE_LEN"),
        payload: payload.to_vec(),
    })
}

/// Bytes a scheme adds to a plaintext, split into fixed DEM framing and the
/// scheme's key transport.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverheadBreakdown {
    pub dem_overhead: usize,
    pub key_transport: usize,
    pub total_added: usize,
}

/// The overhead is constant per scheme; `plaintext_len` does not affect it.
pub fn added_overhead(scheme: SchemeId, _plaintext_len: usize) -> OverheadBreakdown {
    let key_transport = scheme.key_transport_len();
    OverheadBreakdown {
        dem_overhead: DEM_OVERHEAD,
        key_transport,
        total_added: DEM_OVERHEAD + key_transport,
    }
}
