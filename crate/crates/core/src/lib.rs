//! Hybrid public-key encryption over three key-establishment schemes
//! (ML-KEM-768, RSA-7680 OAEP, static P-384 ECDH), each feeding
//! HKDF-SHA-256 into ChaCha20-Poly1305, plus a benchmark harness with an
//! estimated-cycles cost model and report generation.
//!
//! ```
//! use pqhybrid_core::{engine_pair, SchemeId};
//! use rand::rngs::OsRng;
//!
//! let (alice, bob) = engine_pair(SchemeId::MlKem768, &mut OsRng).unwrap();
//! let wire = alice.encrypt_to_bytes(b"hello").unwrap();
//! assert_eq!(wire.len(), 5 + 1120);
//! assert_eq!(bob.decrypt_bytes(&wire).unwrap(), b"hello");
//! ```

pub mod bench;
pub mod dem;
pub mod hybrid;
pub mod kem;
pub mod report;
pub mod wire;

pub use bench::{
    capture_environment, estimate_cycles, ingest_events, run_benchmark, BenchError, BenchRecord,
    CostModel, Environment, EventCounts, Operation, Workload,
};
pub use dem::{DemError, DemKey, Nonce};
pub use hybrid::{engine_pair, HybridEngine, HybridError};
pub use kem::{KemError, KeyPair, SharedSecret};
pub use report::{emit, overhead_table, speedup_matrix, ComparisonReport, Format, ReportError};
pub use wire::{added_overhead, Envelope, OverheadBreakdown, SchemeId, WireError};
