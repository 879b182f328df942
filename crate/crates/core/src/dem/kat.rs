//! Known-answer tests for the block function, the MAC and the AEAD, runnable
//! outside `cargo test` (the CLI's `vectors` subcommand).

use serde::Serialize;

use super::{chacha20, open, poly1305, seal, vectors, DemKey, Nonce};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VectorKind {
    /// One 64-byte keystream block.
    Block,
    /// Keystream XOR over an arbitrary-length input.
    Stream,
    /// Poly1305 over `input` with a 32-byte key.
    Mac,
    /// Poly1305 one-time key (first 32 bytes of block 0).
    OneTimeKey,
    /// AEAD seal; `expected` is ciphertext || tag.
    Seal,
    /// AEAD open; `input` is ciphertext || tag, `expected` the plaintext.
    Open,
}

#[derive(Debug)]
pub(crate) struct Vector {
    pub kind: VectorKind,
    pub name: &'static str,
    pub key: &'static str,
    pub nonce: &'static str,
    pub counter: u32,
    pub aad: &'static str,
    pub input: &'static str,
    pub expected: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct KatOutcome {
    pub name: &'static str,
    pub kind: VectorKind,
    pub passed: bool,
}

fn unhex(s: &str) -> Vec<u8> {
    hex::decode(s).expect("vector table holds valid hex")
}

fn fixed<const N: usize>(s: &str) -> [u8; N] {
    unhex(s).try_into().expect("vector field has the wrong width")
}

impl Vector {
    fn actual(&self) -> Option<Vec<u8>> {
        let key: [u8; 32] = fixed(self.key);
        let input = unhex(self.input);
        let nonce = || Nonce::from_bytes(fixed(self.nonce));
        let out = match self.kind {
            VectorKind::Block => chacha20::block(&key, self.counter, nonce().as_bytes()).to_vec(),
            VectorKind::Stream => {
                let mut data = input;
                chacha20::apply_keystream(&key, self.counter, nonce().as_bytes(), &mut data);
                data
            }
            VectorKind::Mac => poly1305::tag(&key, &input).to_vec(),
            VectorKind::OneTimeKey => chacha20::block(&key, 0, nonce().as_bytes())[..32].to_vec(),
            VectorKind::Seal => seal(&DemKey::from_bytes(key), &nonce(), &unhex(self.aad), &input),
            VectorKind::Open => {
                open(&DemKey::from_bytes(key), &nonce(), &unhex(self.aad), &input).ok()?
            }
        };
        Some(out)
    }

    fn check(&self) -> bool {
        self.actual().is_some_and(|out| out == unhex(self.expected))
    }
}

/// Runs every RFC 8439 vector and reports one outcome per vector.
pub fn run_all() -> Vec<KatOutcome> {
    vectors::RFC8439
        .iter()
        .map(|v| KatOutcome {
            name: v.name,
            kind: v.kind,
            passed: v.check(),
        })
        .collect()
}
