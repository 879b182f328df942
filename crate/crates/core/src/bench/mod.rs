//! Measurement harness and the estimated-cycles cost model.
//!
//! Profiler event counts (L1/L2/RAM hits) are folded into a single cycle
//! estimate with fixed weights; in-process runs produce wall-clock samples.

mod environment;
mod workload;

use std::fmt;
use std::io::Read;
use std::ops::Add;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use environment::{capture_environment, features_from_cpuinfo, Arch, Environment, Feature};
pub use workload::{Workload, PAYLOAD_LEN};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BenchError {
    #[error("cycle estimate overflows")]
    Overflow,
    #[error("row {row}: {message}")]
    ParseError { row: usize, message: String },
    #[error("row {row}: `{field}` is negative")]
    NegativeCount { row: usize, field: &'static str },
    #[error("iteration count must be at least 1")]
    NoIterations,
    #[error("operation failed: {0}")]
    Operation(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Operation {
    Keygen,
    Outgoing,
    Incoming,
    Encrypt,
    Decrypt,
}

impl Operation {
    pub const ALL: [Operation; 5] = [
        Operation::Keygen,
        Operation::Outgoing,
        Operation::Incoming,
        Operation::Encrypt,
        Operation::Decrypt,
    ];

    pub const fn name(self) -> &'static str {
        match self {
            Operation::Keygen => "keygen",
            Operation::Outgoing => "outgoing",
            Operation::Incoming => "incoming",
            Operation::Encrypt => "encrypt",
            Operation::Decrypt => "decrypt",
        }
    }
}

impl fmt::Display for Operation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Operation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Operation::ALL
            .into_iter()
            .find(|op| op.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown operation `{s}`"))
    }
}

/// Cache-simulation event counts for one operation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct EventCounts {
    pub instructions: u64,
    pub l1_hits: u64,
    pub l2_hits: u64,
    pub ram_hits: u64,
}

impl EventCounts {
    pub const fn new(instructions: u64, l1_hits: u64, l2_hits: u64, ram_hits: u64) -> Self {
        EventCounts { instructions, l1_hits, l2_hits, ram_hits }
    }

    pub fn checked_add(self, other: Self) -> Option<Self> {
        Some(EventCounts {
            instructions: self.instructions.checked_add(other.instructions)?,
            l1_hits: self.l1_hits.checked_add(other.l1_hits)?,
            l2_hits: self.l2_hits.checked_add(other.l2_hits)?,
            ram_hits: self.ram_hits.checked_add(other.ram_hits)?,
        })
    }
}

impl Add for EventCounts {
    type Output = EventCounts;

    fn add(self, other: Self) -> Self {
        self.checked_add(other).expect("event count overflow")
    }
}

/// Per-level cycle weights. The defaults (1, 5, 35) reproduce every row of
/// the reference appendix table exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostModel {
    pub l1: u64,
    pub l2: u64,
    pub ram: u64,
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel { l1: 1, l2: 5, ram: 35 }
    }
}

impl CostModel {
    /// The instruction column is not part of the estimate.
    pub fn estimate(&self, e: &EventCounts) -> Result<u128, BenchError> {
        let term = |w: u64, n: u64| (w as u128).checked_mul(n as u128);
        term(self.l1, e.l1_hits)
            .zip(term(self.l2, e.l2_hits))
            .zip(term(self.ram, e.ram_hits))
            .and_then(|((a, b), c)| a.checked_add(b)?.checked_add(c))
            .ok_or(BenchError::Overflow)
    }
}

pub fn estimate_cycles(events: &EventCounts) -> Result<u128, BenchError> {
    CostModel::default().estimate(events)
}

/// One measured or ingested (algorithm, operation, arch) data point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchRecord {
    algorithm: String,
    operation: Operation,
    arch: String,
    events: Option<EventCounts>,
    estimated_cycles: Option<u128>,
    wall_samples: Vec<u64>,
}

impl BenchRecord {
    pub fn from_events(
        algorithm: impl Into<String>,
        operation: Operation,
        arch: impl Into<String>,
        events: EventCounts,
        model: &CostModel,
    ) -> Result<Self, BenchError> {
        Ok(BenchRecord {
            algorithm: algorithm.into(),
            operation,
            arch: arch.into(),
            estimated_cycles: Some(model.estimate(&events)?),
            events: Some(events),
            wall_samples: Vec::new(),
        })
    }

    /// Panics if `wall_samples` is empty.
    pub fn from_samples(
        algorithm: impl Into<String>,
        operation: Operation,
        arch: impl Into<String>,
        wall_samples: Vec<u64>,
    ) -> Self {
        assert!(!wall_samples.is_empty(), "a record needs events or samples");
        BenchRecord {
            algorithm: algorithm.into(),
            operation,
            arch: arch.into(),
            events: None,
            estimated_cycles: None,
            wall_samples,
        }
    }

    pub fn algorithm(&self) -> &str {
        &self.algorithm
    }

    pub fn operation(&self) -> Operation {
        self.operation
    }

    pub fn arch(&self) -> &str {
        &self.arch
    }

    pub fn events(&self) -> Option<&EventCounts> {
        self.events.as_ref()
    }

    pub fn estimated_cycles(&self) -> Option<u128> {
        self.estimated_cycles
    }

    pub fn wall_samples(&self) -> &[u64] {
        &self.wall_samples
    }

    /// Lower median of the wall samples.
    pub fn median_ns(&self) -> Option<u64> {
        let mut s = self.wall_samples.clone();
        s.sort_unstable();
        s.get(s.len().saturating_sub(1) / 2).copied()
    }

    pub fn min_ns(&self) -> Option<u64> {
        self.wall_samples.iter().copied().min()
    }
}

/// JSON shape shared by ingestion and emission.
#[derive(Debug, Serialize, Deserialize)]
struct RecordRow {
    algorithm: String,
    operation: Operation,
    arch: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    instr: Option<i128>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    l1_hits: Option<i128>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    l2_hits: Option<i128>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ram_hits: Option<i128>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    estimated_cycles: Option<u128>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    wall_ns: Option<Vec<u64>>,
}

impl From<&BenchRecord> for RecordRow {
    fn from(r: &BenchRecord) -> Self {
        let ev = r.events;
        RecordRow {
            algorithm: r.algorithm.clone(),
            operation: r.operation,
            arch: r.arch.clone(),
            instr: ev.map(|e| e.instructions.into()),
            l1_hits: ev.map(|e| e.l1_hits.into()),
            l2_hits: ev.map(|e| e.l2_hits.into()),
            ram_hits: ev.map(|e| e.ram_hits.into()),
            estimated_cycles: r.estimated_cycles,
            wall_ns: (!r.wall_samples.is_empty()).then(|| r.wall_samples.clone()),
        }
    }
}

impl Serialize for BenchRecord {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        RecordRow::from(self).serialize(s)
    }
}

fn count(row: usize, field: &'static str, v: Option<i128>) -> Result<Option<u64>, BenchError> {
    match v {
        None => Ok(None),
        Some(n) if n < 0 => Err(BenchError::NegativeCount { row, field }),
        Some(n) => u64::try_from(n).map(Some).map_err(|_| BenchError::ParseError {
            row,
            message: format!("`{field}` exceeds the supported range"),
        }),
    }
}

fn row_to_record(row: usize, r: RecordRow, model: &CostModel) -> Result<BenchRecord, BenchError> {
    let fields = [
        count(row, "instr", r.instr)?,
        count(row, "l1_hits", r.l1_hits)?,
        count(row, "l2_hits", r.l2_hits)?,
        count(row, "ram_hits", r.ram_hits)?,
    ];
    let events = match fields {
        [Some(i), Some(l1), Some(l2), Some(ram)] => Some(EventCounts::new(i, l1, l2, ram)),
        [None, None, None, None] => None,
        _ => {
            return Err(BenchError::ParseError {
                row,
                message: "event counts must be all present or all absent".into(),
            })
        }
    };
    let wall = r.wall_ns.unwrap_or_default();
    match events {
        Some(ev) => {
            let mut rec = BenchRecord::from_events(r.algorithm, r.operation, r.arch, ev, model)
                .map_err(|_| BenchError::Overflow)?;
            rec.wall_samples = wall;
            Ok(rec)
        }
        None if !wall.is_empty() => {
            Ok(BenchRecord::from_samples(r.algorithm, r.operation, r.arch, wall))
        }
        None => Err(BenchError::ParseError {
            row,
            message: "row has neither event counts nor wall_ns samples".into(),
        }),
    }
}

/// Parses a JSON array of event rows. Any `estimated_cycles` in the input is
/// recomputed, never trusted.
pub fn ingest_events<R: Read>(source: R) -> Result<Vec<BenchRecord>, BenchError> {
    ingest_events_with(source, &CostModel::default())
}

pub fn ingest_events_with<R: Read>(
    source: R,
    model: &CostModel,
) -> Result<Vec<BenchRecord>, BenchError> {
    let rows: Vec<serde_json::Value> =
        serde_json::from_reader(source).map_err(|e| BenchError::ParseError {
            row: 0,
            message: format!("expected a JSON array of records: {e}"),
        })?;
    rows.into_iter()
        .enumerate()
        .map(|(i, v)| {
            let r: RecordRow = serde_json::from_value(v).map_err(|e| BenchError::ParseError {
                row: i,
                message: e.to_string(),
            })?;
            row_to_record(i, r, model)
        })
        .collect()
}

/// Records as a pretty JSON array that `ingest_events` reads back unchanged.
pub fn records_to_json(records: &[BenchRecord]) -> String {
    let mut s = serde_json::to_string_pretty(records).expect("records serialize");
    s.push('\n');
    s
}

/// Monotonic nanosecond time source.
pub trait Clock {
    fn now_ns(&self) -> u64;
}

#[derive(Debug, Clone, Copy)]
pub struct MonotonicClock {
    origin: Instant,
}

impl MonotonicClock {
    pub fn new() -> Self {
        MonotonicClock { origin: Instant::now() }
    }
}

impl Default for MonotonicClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for MonotonicClock {
    fn now_ns(&self) -> u64 {
        self.origin.elapsed().as_nanos() as u64
    }
}

pub const DEFAULT_WARMUP: usize = 5;
pub const DEFAULT_ITERS: usize = 30;

/// What a benchmark run is labelled with.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchLabel {
    pub algorithm: String,
    pub operation: Operation,
    pub arch: String,
}

/// Runs `op` `warmup` times untimed, then `iters` times timed, on the
/// calling thread. The first failing call aborts the run.
pub fn run_benchmark<F, E, C>(
    label: BenchLabel,
    mut op: F,
    warmup: usize,
    iters: usize,
    clock: &C,
) -> Result<BenchRecord, BenchError>
where
    F: FnMut() -> Result<(), E>,
    E: fmt::Display,
    C: Clock + ?Sized,
{
    if iters == 0 {
        return Err(BenchError::NoIterations);
    }
    let fail = |e: E| BenchError::Operation(e.to_string());
    for _ in 0..warmup {
        op().map_err(fail)?;
    }
    let mut samples = Vec::with_capacity(iters);
    for _ in 0..iters {
        let start = clock.now_ns();
        op().map_err(fail)?;
        samples.push(clock.now_ns().saturating_sub(start));
    }
    Ok(BenchRecord::from_samples(label.algorithm, label.operation, label.arch, samples))
}
