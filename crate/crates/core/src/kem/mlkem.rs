//! ML-KEM-768 through libcrux, which selects an AVX2 or NEON code path at
//! runtime. Randomness is drawn here and passed in explicitly so entropy
//! failures surface as errors.

use libcrux_ml_kem::mlkem768::{
    self, MlKem768Ciphertext, MlKem768PrivateKey, MlKem768PublicKey,
};
use libcrux_ml_kem::{ENCAPS_SEED_SIZE, KEY_GENERATION_SEED_SIZE};
use rand::{CryptoRng, RngCore};
use zeroize::{Zeroize, Zeroizing};

use super::{fill_random, KemError, SharedSecret};

pub const PUBLIC_KEY_LEN: usize = 1184;
pub const PRIVATE_KEY_LEN: usize = 2400;
pub const CIPHERTEXT_LEN: usize = 1088;

// dk = dk_pke || ek || H(ek) || z
const EMBEDDED_EK: std::ops::Range<usize> = 1152..1152 + PUBLIC_KEY_LEN;

pub(crate) fn generate<R: RngCore + CryptoRng + ?Sized>(
    rng: &mut R,
) -> Result<(Vec<u8>, Zeroizing<Vec<u8>>), KemError> {
    let mut seed = Zeroizing::new([0u8; KEY_GENERATION_SEED_SIZE]);
    fill_random(rng, seed.as_mut())?;
    let (sk, pk) = mlkem768::generate_key_pair(*seed).into_parts();
    let mut raw: [u8; PRIVATE_KEY_LEN] = sk.into();
    let private = Zeroizing::new(raw.to_vec());
    raw.zeroize();
    Ok((pk.as_slice().to_vec(), private))
}

fn parse_public(bytes: &[u8]) -> Result<MlKem768PublicKey, KemError> {
    let pk = MlKem768PublicKey::try_from(bytes).map_err(|_| {
        KemError::MalformedPublicKey(format!(
            "ML-KEM-768 public key must be {PUBLIC_KEY_LEN} bytes, got {}",
            bytes.len()
        ))
    })?;
    // modulus check: every coefficient must decode below q
    if !mlkem768::validate_public_key(&pk) {
        return Err(KemError::MalformedPublicKey(
            "ML-KEM-768 public key has coefficients out of range".into(),
        ));
    }
    Ok(pk)
}

pub(crate) fn validate_public(bytes: &[u8]) -> Result<(), KemError> {
    parse_public(bytes).map(|_| ())
}

/// Checks length, the embedded public key and its hash.
pub(crate) fn validate_private(bytes: &[u8], public: &[u8]) -> Result<(), KemError> {
    if bytes.len() != PRIVATE_KEY_LEN {
        return Err(KemError::MalformedPrivateKey(format!(
            "ML-KEM-768 private key must be {PRIVATE_KEY_LEN} bytes, got {}",
            bytes.len()
        )));
    }
    if bytes[EMBEDDED_EK] != *public {
        return Err(KemError::MalformedPrivateKey(
            "ML-KEM-768 private key does not embed the given public key".into(),
        ));
    }
    let sk = MlKem768PrivateKey::try_from(bytes).expect("length checked");
    let ok = mlkem768::validate_private_key(&sk, &MlKem768Ciphertext::default());
    let mut raw: [u8; PRIVATE_KEY_LEN] = sk.into();
    raw.zeroize();
    if !ok {
        return Err(KemError::MalformedPrivateKey(
            "ML-KEM-768 private key has a corrupted public-key hash".into(),
        ));
    }
    Ok(())
}

pub(crate) fn encapsulate<R: RngCore + CryptoRng + ?Sized>(
    public: &[u8],
    rng: &mut R,
) -> Result<(Vec<u8>, SharedSecret), KemError> {
    let pk = parse_public(public)?;
    let mut m = Zeroizing::new([0u8; ENCAPS_SEED_SIZE]);
    fill_random(rng, m.as_mut())?;
    let (ct, mut ss) = mlkem768::encapsulate(&pk, *m);
    let secret = SharedSecret::from_bytes(ss);
    ss.zeroize();
    Ok((ct.as_slice().to_vec(), secret))
}

/// Implicit rejection: a corrupted ciphertext yields an unrelated secret, not an error.
pub(crate) fn decapsulate(private: &[u8], transport: &[u8]) -> Result<SharedSecret, KemError> {
    let ct = MlKem768Ciphertext::try_from(transport).map_err(|_| KemError::MalformedTransport {
        expected: CIPHERTEXT_LEN,
        actual: transport.len(),
    })?;
    let sk = MlKem768PrivateKey::try_from(private)
        .map_err(|_| KemError::MalformedPrivateKey("ML-KEM-768 private key has the wrong length".into()))?;
    let mut ss = mlkem768::decapsulate(&sk, &ct);
    let mut raw: [u8; PRIVATE_KEY_LEN] = sk.into();
    raw.zeroize();
    let secret = SharedSecret::from_bytes(ss);
    ss.zeroize();
    Ok(secret)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn out_of_range_coefficient_is_rejected() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let (mut pk, _) = generate(&mut rng).unwrap();
        // first 12-bit coefficient = 0xfff >= q
        pk[0] = 0xff;
        pk[1] |= 0x0f;
        assert!(matches!(validate_public(&pk), Err(KemError::MalformedPublicKey(_))));
    }

    #[test]
    fn private_key_hash_is_checked() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let (pk, sk) = generate(&mut rng).unwrap();
        validate_private(&sk, &pk).unwrap();
        let mut bad = sk.to_vec();
        bad[EMBEDDED_EK.end] ^= 1;
        assert!(validate_private(&bad, &pk).is_err());
        assert!(validate_private(&sk[..100], &pk).is_err());
    }
}
