//! RSA-7680 key transport: OAEP (SHA-256, MGF1-SHA-256, empty label) wrapping
//! a fresh 32-byte secret.
//!
//! Primes come from a sieved random search followed by 64 Miller-Rabin rounds.
//! Arithmetic is variable-time.

use std::sync::OnceLock;

use num_bigint::{BigUint, RandBigInt};
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::{CryptoRng, RngCore};
use sha2::{Digest, Sha256};
use subtle::{Choice, ConditionallySelectable, ConstantTimeEq};
use zeroize::Zeroizing;

use super::{fill_random, KemError};

pub const MODULUS_BITS: u64 = 7680;
pub const MODULUS_LEN: usize = 960;
pub const PRIME_LEN: usize = MODULUS_LEN / 2;
pub const PUBLIC_EXPONENT: u32 = 65_537;
pub const MILLER_RABIN_ROUNDS: usize = 64;

const HASH_LEN: usize = 32;
const SIEVE_LIMIT: u32 = 1 << 14;
const MAX_SIEVE_STEP: u32 = 1 << 16;

fn small_primes() -> &'static [u32] {
    static PRIMES: OnceLock<Vec<u32>> = OnceLock::new();
    PRIMES.get_or_init(|| {
        let n = SIEVE_LIMIT as usize;
        let mut composite = vec![false; n];
        let mut primes = Vec::new();
        for i in 2..n {
            if !composite[i] {
                primes.push(i as u32);
                for j in (i * i..n).step_by(i) {
                    composite[j] = true;
                }
            }
        }
        // 2 is handled by forcing odd candidates
        primes.remove(0);
        primes
    })
}

fn random_biguint<R: RngCore + CryptoRng + ?Sized>(
    rng: &mut R,
    bytes: usize,
) -> Result<BigUint, KemError> {
    let mut buf = Zeroizing::new(vec![0u8; bytes]);
    fill_random(rng, &mut buf)?;
    Ok(BigUint::from_bytes_be(&buf))
}

/// Miller-Rabin with base 2 first, then `rounds - 1` random bases in [2, n-2].
pub fn is_probable_prime<R: RngCore + CryptoRng + ?Sized>(
    n: &BigUint,
    rounds: usize,
    rng: &mut R,
) -> bool {
    let two = BigUint::from(2u32);
    if *n < two {
        return false;
    }
    for &p in small_primes().iter().take(64) {
        let p = BigUint::from(p);
        if *n == p {
            return true;
        }
        if (n % &p).is_zero() {
            return false;
        }
    }
    if n.is_even() {
        return false;
    }

    let n_minus_one = n - 1u32;
    let s = n_minus_one.trailing_zeros().unwrap_or(0);
    let d = &n_minus_one >> s;

    let witness = |a: &BigUint| -> bool {
        let mut x = a.modpow(&d, n);
        if x.is_one() || x == n_minus_one {
            return false;
        }
        for _ in 1..s {
            x = x.modpow(&two, n);
            if x == n_minus_one {
                return false;
            }
        }
        true
    };

    if witness(&two) {
        return false;
    }
    let upper = n - 1u32;
    for _ in 1..rounds {
        let a = rng.gen_biguint_range(&two, &upper);
        if witness(&a) {
            return false;
        }
    }
    true
}

/// A random prime of exactly `bits` bits with its top two bits set and
/// `p - 1` coprime to the public exponent.
pub fn random_prime<R: RngCore + CryptoRng + ?Sized>(
    bits: u64,
    rng: &mut R,
) -> Result<BigUint, KemError> {
    let primes = small_primes();
    let bytes = bits.div_ceil(8) as usize;
    loop {
        let mut base = random_biguint(rng, bytes)?;
        let excess = (bytes as u64) * 8 - bits;
        base >>= excess;
        base.set_bit(bits - 1, true);
        base.set_bit(bits - 2, true);
        base.set_bit(0, true);

        let residues: Vec<u32> = primes
            .iter()
            .map(|&p| (&base % p).try_into().expect("residue below a u32 modulus"))
            .collect();

        let mut delta = 0u32;
        while delta < MAX_SIEVE_STEP {
            let sieved = primes
                .iter()
                .zip(&residues)
                .all(|(&p, &r)| (r + delta) % p != 0);
            if sieved {
                let candidate = &base + delta;
                if candidate.bits() != bits {
                    break;
                }
                let e_ok = (&candidate % PUBLIC_EXPONENT) != BigUint::one();
                if e_ok && is_probable_prime(&candidate, MILLER_RABIN_ROUNDS, rng) {
                    return Ok(candidate);
                }
            }
            delta += 2;
        }
    }
}

/// Private key with CRT parameters.
#[derive(Clone)]
pub(crate) struct RsaPrivate {
    pub n: BigUint,
    pub p: BigUint,
    pub q: BigUint,
    dp: BigUint,
    dq: BigUint,
    qinv: BigUint,
}

impl RsaPrivate {
    pub fn from_primes(p: BigUint, q: BigUint) -> Result<Self, KemError> {
        let malformed = || KemError::MalformedPrivateKey("inconsistent RSA primes".into());
        if p == q || p.is_zero() || q.is_zero() {
            return Err(malformed());
        }
        let n = &p * &q;
        if n.bits() != MODULUS_BITS {
            return Err(malformed());
        }
        let e = BigUint::from(PUBLIC_EXPONENT);
        let p1 = &p - 1u32;
        let q1 = &q - 1u32;
        let lambda = p1.lcm(&q1);
        let d = e.modinv(&lambda).ok_or_else(malformed)?;
        let qinv = q.modinv(&p).ok_or_else(malformed)?;
        Ok(RsaPrivate {
            dp: &d % &p1,
            dq: &d % &q1,
            n,
            p,
            q,
            qinv,
        })
    }

    /// `p || q`, each left-padded to 480 bytes.
    pub fn to_bytes(&self) -> Zeroizing<Vec<u8>> {
        let mut out = Zeroizing::new(vec![0u8; 2 * PRIME_LEN]);
        write_padded(&self.p, &mut out[..PRIME_LEN]);
        write_padded(&self.q, &mut out[PRIME_LEN..]);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, KemError> {
        if bytes.len() != 2 * PRIME_LEN {
            return Err(KemError::MalformedPrivateKey(format!(
                "RSA private key must be {} bytes, got {}",
                2 * PRIME_LEN,
                bytes.len()
            )));
        }
        let p = BigUint::from_bytes_be(&bytes[..PRIME_LEN]);
        let q = BigUint::from_bytes_be(&bytes[PRIME_LEN..]);
        Self::from_primes(p, q)
    }

    pub fn public_bytes(&self) -> Vec<u8> {
        let mut out = vec![0u8; MODULUS_LEN];
        write_padded(&self.n, &mut out);
        out
    }

    fn raw_decrypt(&self, c: &BigUint) -> BigUint {
        let m1 = c.modpow(&self.dp, &self.p);
        let m2 = c.modpow(&self.dq, &self.q);
        let diff = if m1 >= m2 {
            m1 - &m2
        } else {
            &self.p - ((m2.clone() - m1) % &self.p)
        };
        let h = (&self.qinv * diff) % &self.p;
        m2 + h * &self.q
    }
}

fn write_padded(x: &BigUint, out: &mut [u8]) {
    let bytes = x.to_bytes_be();
    let start = out.len() - bytes.len();
    out[..start].fill(0);
    out[start..].copy_from_slice(&bytes);
}

pub(crate) fn generate<R: RngCore + CryptoRng + ?Sized>(rng: &mut R) -> Result<RsaPrivate, KemError> {
    let half = MODULUS_BITS / 2;
    loop {
        let p = random_prime(half, rng)?;
        let q = random_prime(half, rng)?;
        // |p - q| must exceed 2^(half - 100)
        let gap = if p > q { &p - &q } else { &q - &p };
        if gap.bits() <= half - 100 {
            continue;
        }
        return RsaPrivate::from_primes(p, q);
    }
}

/// Parses a 960-byte big-endian modulus.
pub(crate) fn parse_public(bytes: &[u8]) -> Result<BigUint, KemError> {
    if bytes.len() != MODULUS_LEN {
        return Err(KemError::MalformedPublicKey(format!(
            "RSA modulus must be {MODULUS_LEN} bytes, got {}",
            bytes.len()
        )));
    }
    let n = BigUint::from_bytes_be(bytes);
    if n.bits() != MODULUS_BITS || n.is_even() {
        return Err(KemError::MalformedPublicKey(
            "RSA modulus is not an odd 7680-bit integer".into(),
        ));
    }
    Ok(n)
}

fn mgf1_xor(seed: &[u8], out: &mut [u8]) {
    for (counter, chunk) in out.chunks_mut(HASH_LEN).enumerate() {
        let mask = Sha256::new()
            .chain_update(seed)
            .chain_update((counter as u32).to_be_bytes())
            .finalize();
        for (o, m) in chunk.iter_mut().zip(mask.iter()) {
            *o ^= m;
        }
    }
}

fn label_hash() -> [u8; HASH_LEN] {
    Sha256::digest(b"").into()
}

/// RSAES-OAEP-ENCRYPT with SHA-256 and an empty label.
pub(crate) fn oaep_encrypt<R: RngCore + CryptoRng + ?Sized>(
    n: &BigUint,
    message: &[u8],
    rng: &mut R,
) -> Result<Vec<u8>, KemError> {
    let k = MODULUS_LEN;
    if message.len() > k - 2 * HASH_LEN - 2 {
        return Err(KemError::EncapsulationFailure("message too long for OAEP".into()));
    }
    let mut em = Zeroizing::new(vec![0u8; k]);
    let (seed, db) = em[1..].split_at_mut(HASH_LEN);
    db[..HASH_LEN].copy_from_slice(&label_hash());
    let sep = db.len() - message.len() - 1;
    db[sep] = 0x01;
    db[sep + 1..].copy_from_slice(message);
    fill_random(rng, seed)?;

    mgf1_xor(seed, db);
    mgf1_xor(db, seed);

    let m = BigUint::from_bytes_be(&em);
    let c = m.modpow(&BigUint::from(PUBLIC_EXPONENT), n);
    let mut out = vec![0u8; k];
    write_padded(&c, &mut out);
    Ok(out)
}

/// RSAES-OAEP-DECRYPT. Every failure maps to the same error.
pub(crate) fn oaep_decrypt(key: &RsaPrivate, ciphertext: &[u8]) -> Result<Zeroizing<Vec<u8>>, KemError> {
    let k = MODULUS_LEN;
    if ciphertext.len() != k {
        return Err(KemError::MalformedTransport {
            expected: k,
            actual: ciphertext.len(),
        });
    }
    let c = BigUint::from_bytes_be(ciphertext);
    if c >= key.n {
        return Err(KemError::DecapsulationFailure);
    }
    let m = key.raw_decrypt(&c);
    let mut em = Zeroizing::new(vec![0u8; k]);
    write_padded(&m, &mut em);

    let y = em[0];
    let (seed, db) = em[1..].split_at_mut(HASH_LEN);
    mgf1_xor(db, seed);
    mgf1_xor(seed, db);

    let mut ok = y.ct_eq(&0);
    ok &= db[..HASH_LEN].ct_eq(&label_hash());

    // locate the 0x01 separator; only zero bytes may precede it
    let mut found = Choice::from(0);
    let mut index = 0u32;
    let mut bad_padding = Choice::from(0);
    for (i, &b) in db.iter().enumerate().skip(HASH_LEN) {
        let is_zero = b.ct_eq(&0);
        let is_one = b.ct_eq(&1);
        let first_one = !found & is_one;
        index.conditional_assign(&(i as u32), first_one);
        bad_padding |= !found & !is_zero & !is_one;
        found |= is_one;
    }
    ok &= found & !bad_padding;

    if !bool::from(ok) {
        return Err(KemError::DecapsulationFailure);
    }
    Ok(Zeroizing::new(db[index as usize + 1..].to_vec()))
}
