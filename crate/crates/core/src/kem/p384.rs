//! Static-static ECDH over NIST P-384. Nothing is transported; both sides
//! derive the same secret from their own private key and the peer's
//! uncompressed public point.

use p384::elliptic_curve::sec1::ToEncodedPoint;
use p384::{PublicKey, SecretKey};
use rand::{CryptoRng, RngCore};
use zeroize::Zeroizing;

use super::{fill_random, KemError, SharedSecret};
use crate::dem::{hkdf_sha256, KDF_LABEL};

pub const SCALAR_LEN: usize = 48;
pub const POINT_LEN: usize = 97;

/// HKDF info for the raw agreement; distinct from every DEM-key info string
/// because the byte after the label is never a scheme tag.
const ECDH_INFO: &[u8] = b"-ecdh-p384";

pub(crate) fn generate<R: RngCore + CryptoRng + ?Sized>(rng: &mut R) -> Result<SecretKey, KemError> {
    // rejection sampling into [1, n-1]
    let mut buf = Zeroizing::new([0u8; SCALAR_LEN]);
    loop {
        fill_random(rng, buf.as_mut())?;
        if let Ok(sk) = SecretKey::from_slice(buf.as_ref()) {
            return Ok(sk);
        }
    }
}

pub(crate) fn public_bytes(sk: &SecretKey) -> Vec<u8> {
    sk.public_key().to_encoded_point(false).as_bytes().to_vec()
}

pub(crate) fn parse_public(bytes: &[u8]) -> Result<PublicKey, KemError> {
    if bytes.len() != POINT_LEN || bytes[0] != 0x04 {
        return Err(KemError::MalformedPublicKey(
            "P-384 public key must be a 97-byte uncompressed SEC1 point".into(),
        ));
    }
    PublicKey::from_sec1_bytes(bytes)
        .map_err(|_| KemError::MalformedPublicKey("point is not on P-384".into()))
}

pub(crate) fn parse_private(bytes: &[u8]) -> Result<SecretKey, KemError> {
    if bytes.len() != SCALAR_LEN {
        return Err(KemError::MalformedPrivateKey(format!(
            "P-384 scalar must be {SCALAR_LEN} bytes, got {}",
            bytes.len()
        )));
    }
    SecretKey::from_slice(bytes)
        .map_err(|_| KemError::MalformedPrivateKey("scalar out of range".into()))
}

/// ECDH followed by HKDF-SHA-256 of the 48-byte x-coordinate.
pub(crate) fn agree(local: &SecretKey, peer: &PublicKey) -> SharedSecret {
    let shared = p384::ecdh::diffie_hellman(local.to_nonzero_scalar(), peer.as_affine());
    SharedSecret::from_bytes(hkdf_sha256(
        shared.raw_secret_bytes().as_slice(),
        &[KDF_LABEL, ECDH_INFO],
    ))
}
