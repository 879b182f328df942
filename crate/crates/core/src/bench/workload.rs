use rand::{CryptoRng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::{run_benchmark, BenchError, BenchLabel, BenchRecord, Clock, Operation};
use crate::hybrid::{engine_pair, HybridError};
use crate::kem;
use crate::wire::SchemeId;

/// Plaintext size used by the encrypt/decrypt workloads.
pub const PAYLOAD_LEN: usize = 1024;

type Step = Box<dyn FnMut() -> Result<(), HybridError> + Send>;

/// A prepared (scheme, operation) pair: all setup (peer keys, transports,
/// envelopes) happens once in `prepare`, each `step` is one timed unit.
pub struct Workload {
    scheme: SchemeId,
    operation: Operation,
    step: Step,
}

impl std::fmt::Debug for Workload {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Workload")
            .field("scheme", &self.scheme)
            .field("operation", &self.operation)
            .finish_non_exhaustive()
    }
}

impl Workload {
    pub fn prepare<R: RngCore + CryptoRng + ?Sized>(
        scheme: SchemeId,
        operation: Operation,
        rng: &mut R,
    ) -> Result<Self, HybridError> {
        let mut seed = [0u8; 32];
        rng.try_fill_bytes(&mut seed)
            .map_err(|e| HybridError::EntropyFailure(e.to_string()))?;
        let mut r = ChaCha20Rng::from_seed(seed);

        let step: Step = match operation {
            Operation::Keygen => Box::new(move || {
                kem::keygen(scheme, &mut r)?;
                Ok(())
            }),
            Operation::Outgoing => {
                let recipient = kem::keygen(scheme, rng)?;
                let sender = match scheme {
                    SchemeId::P384 => Some(kem::keygen(scheme, rng)?),
                    _ => None,
                };
                let public = recipient.public_key().to_vec();
                Box::new(move || {
                    kem::encap(scheme, &public, sender.as_ref(), &mut r)?;
                    Ok(())
                })
            }
            Operation::Incoming => {
                let recipient = kem::keygen(scheme, rng)?;
                let sender = match scheme {
                    SchemeId::P384 => Some(kem::keygen(scheme, rng)?),
                    _ => None,
                };
                let enc = kem::encap(scheme, recipient.public_key(), sender.as_ref(), rng)?;
                let sender_public = sender.map(|s| s.public_key().to_vec());
                Box::new(move || {
                    kem::decap(scheme, &recipient, &enc.key_transport, sender_public.as_deref())?;
                    Ok(())
                })
            }
            Operation::Encrypt => {
                let (a, _) = engine_pair(scheme, rng)?;
                let msg = vec![0xa5; PAYLOAD_LEN];
                Box::new(move || {
                    a.encrypt(&msg)?;
                    Ok(())
                })
            }
            Operation::Decrypt => {
                let (a, b) = engine_pair(scheme, rng)?;
                let env = a.encrypt(&[0xa5; PAYLOAD_LEN])?;
                Box::new(move || {
                    b.decrypt(&env)?;
                    Ok(())
                })
            }
        };
        Ok(Workload { scheme, operation, step })
    }

    pub fn scheme(&self) -> SchemeId {
        self.scheme
    }

    pub fn operation(&self) -> Operation {
        self.operation
    }

    pub fn step(&mut self) -> Result<(), HybridError> {
        (self.step)()
    }

    /// Times this workload on the current host. Records are labelled with
    /// the algorithm names used by the reference dataset.
    pub fn measure<C: Clock + ?Sized>(
        &mut self,
        warmup: usize,
        iters: usize,
        clock: &C,
    ) -> Result<BenchRecord, BenchError> {
        let label = BenchLabel {
            algorithm: self.scheme.algorithm_label().to_owned(),
            operation: self.operation,
            arch: std::env::consts::ARCH.to_owned(),
        };
        run_benchmark(label, &mut self.step, warmup, iters, clock)
    }
}
