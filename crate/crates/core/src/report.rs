//! Comparison reports over benchmark records, storage-overhead tables, and
//! their JSON/CSV serializations.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::bench::{BenchRecord, Operation};
use crate::wire::{added_overhead, SchemeId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReportError {
    #[error("no records to compare")]
    NoRecords,
    #[error("baseline `{baseline}` has no {operation} record for {arch}")]
    MissingBaseline { baseline: String, operation: Operation, arch: String },
    #[error("records mix cycle estimates and wall-clock timings")]
    MixedUnits,
    #[error("{algorithm} {operation} on {arch} has a zero measurement")]
    ZeroMeasurement { algorithm: String, operation: Operation, arch: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Unit {
    Cycles,
    MedianNs,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub algorithm: String,
    pub operation: Operation,
    pub arch: String,
    pub value: u128,
    pub ratio_vs_baseline: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub baseline: String,
    pub unit: Unit,
    pub log_scale_hint: bool,
    pub rows: Vec<ComparisonRow>,
}

/// Rounds to `digits` significant figures.
pub fn round_sig(x: f64, digits: i32) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let scale = 10f64.powi(digits - 1 - x.abs().log10().floor() as i32);
    (x * scale).round() / scale
}

fn same_algorithm(a: &str, b: &str) -> bool {
    match (a.parse::<SchemeId>(), b.parse::<SchemeId>()) {
        (Ok(x), Ok(y)) => x == y,
        _ => a.eq_ignore_ascii_case(b),
    }
}

/// Ratio of each record's cost to the baseline's at the same (operation,
/// arch). Cycle estimates are used when every record has them, otherwise
/// wall-clock medians; a mix is rejected.
pub fn speedup_matrix(records: &[BenchRecord], baseline: &str) -> Result<ComparisonReport, ReportError> {
    if records.is_empty() {
        return Err(ReportError::NoRecords);
    }
    let unit = if records.iter().all(|r| r.estimated_cycles().is_some()) {
        Unit::Cycles
    } else if records.iter().all(|r| !r.wall_samples().is_empty()) {
        Unit::MedianNs
    } else {
        return Err(ReportError::MixedUnits);
    };
    let value = |r: &BenchRecord| -> Result<u128, ReportError> {
        let v = match unit {
            Unit::Cycles => r.estimated_cycles().unwrap_or(0),
            Unit::MedianNs => r.median_ns().unwrap_or(0) as u128,
        };
        if v == 0 {
            return Err(ReportError::ZeroMeasurement {
                algorithm: r.algorithm().to_owned(),
                operation: r.operation(),
                arch: r.arch().to_owned(),
            });
        }
        Ok(v)
    };

    let mut base: BTreeMap<(Operation, &str), u128> = BTreeMap::new();
    for r in records.iter().filter(|r| same_algorithm(r.algorithm(), baseline)) {
        if let std::collections::btree_map::Entry::Vacant(e) = base.entry((r.operation(), r.arch())) {
            e.insert(value(r)?);
        }
    }

    let rows = records
        .iter()
        .map(|r| {
            let b = *base.get(&(r.operation(), r.arch())).ok_or_else(|| {
                ReportError::MissingBaseline {
                    baseline: baseline.to_owned(),
                    operation: r.operation(),
                    arch: r.arch().to_owned(),
                }
            })?;
            let v = value(r)?;
            Ok(ComparisonRow {
                algorithm: r.algorithm().to_owned(),
                operation: r.operation(),
                arch: r.arch().to_owned(),
                value: v,
                ratio_vs_baseline: v as f64 / b as f64,
            })
        })
        .collect::<Result<Vec<_>, ReportError>>()?;

    let (lo, hi) = rows.iter().fold((u128::MAX, 0), |(lo, hi), r| (lo.min(r.value), hi.max(r.value)));
    Ok(ComparisonReport {
        baseline: baseline.to_owned(),
        unit,
        log_scale_hint: hi >= lo.saturating_mul(100),
        rows,
    })
}

/// Reference totals from the source storage table, for side-by-side display.
pub const fn reference_total(scheme: SchemeId) -> usize {
    match scheme {
        SchemeId::P384 => 30,
        SchemeId::Rsa7680 => 993,
        SchemeId::MlKem768 => 1121,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OverheadRow {
    pub scheme: SchemeId,
    pub dem_overhead: usize,
    pub key_transport: usize,
    pub total_added: usize,
    pub envelope_len: usize,
    pub reference_total: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OverheadTable {
    pub plaintext_len: usize,
    pub rows: Vec<OverheadRow>,
}

pub fn overhead_table(plaintext_len: usize) -> OverheadTable {
    let rows = [SchemeId::P384, SchemeId::Rsa7680, SchemeId::MlKem768]
        .into_iter()
        .map(|scheme| {
            let o = added_overhead(scheme, plaintext_len);
            OverheadRow {
                scheme,
                dem_overhead: o.dem_overhead,
                key_transport: o.key_transport,
                total_added: o.total_added,
                envelope_len: plaintext_len + o.total_added,
                reference_total: reference_total(scheme),
            }
        })
        .collect();
    OverheadTable { plaintext_len, rows }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            _ => Err(format!("unknown format `{s}` (expected json or csv)")),
        }
    }
}

/// Anything that can be laid out as a header plus rows of cells.
pub trait Tabular: Serialize {
    fn header(&self) -> Vec<&'static str>;
    fn cells(&self) -> Vec<Vec<String>>;
}

impl Tabular for ComparisonReport {
    fn header(&self) -> Vec<&'static str> {
        vec!["algorithm", "operation", "arch", "unit", "value", "baseline", "ratio_vs_baseline", "log_scale_hint"]
    }

    fn cells(&self) -> Vec<Vec<String>> {
        let unit = match self.unit {
            Unit::Cycles => "cycles",
            Unit::MedianNs => "median_ns",
        };
        self.rows
            .iter()
            .map(|r| {
                vec![
                    r.algorithm.clone(),
                    r.operation.to_string(),
                    r.arch.clone(),
                    unit.to_owned(),
                    r.value.to_string(),
                    self.baseline.clone(),
                    round_sig(r.ratio_vs_baseline, 4).to_string(),
                    self.log_scale_hint.to_string(),
                ]
            })
            .collect()
    }
}

impl Tabular for OverheadTable {
    fn header(&self) -> Vec<&'static str> {
        vec!["scheme", "plaintext_len", "dem_overhead", "key_transport", "total_added", "envelope_len", "reference_total"]
    }

    fn cells(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| {
                vec![
                    r.scheme.to_string(),
                    self.plaintext_len.to_string(),
                    r.dem_overhead.to_string(),
                    r.key_transport.to_string(),
                    r.total_added.to_string(),
                    r.envelope_len.to_string(),
                    r.reference_total.to_string(),
                ]
            })
            .collect()
    }
}

/// Deterministic serialization. JSON objects have sorted keys and ratios are
/// rounded to 4 significant figures; CSV has a header row and `\n` endings.
pub fn emit<T: Tabular>(report: &T, format: Format) -> Vec<u8> {
    match format {
        Format::Json => {
            let mut v = serde_json::to_value(report).expect("report serializes");
            round_ratios(&mut v);
            // serde_json's default map is ordered by key
            let mut out = serde_json::to_vec_pretty(&v).expect("value serializes");
            out.push(b'\n');
            out
        }
        Format::Csv => {
            let mut w = csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .from_writer(Vec::new());
            w.write_record(report.header()).expect("in-memory write");
            for row in report.cells() {
                w.write_record(&row).expect("in-memory write");
            }
            w.into_inner().expect("in-memory flush")
        }
    }
}

fn round_ratios(v: &mut serde_json::Value) {
    match v {
        serde_json::Value::Object(map) => {
            for (k, val) in map.iter_mut() {
                match val.as_f64() {
                    Some(x) if k == "ratio_vs_baseline" => *val = serde_json::json!(round_sig(x, 4)),
                    _ => round_ratios(val),
                }
            }
        }
        serde_json::Value::Array(items) => items.iter_mut().for_each(round_ratios),
        _ => {}
    }
}

/// A ratio the source text states in prose, and the table cells it comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProseClaim {
    pub text: &'static str,
    pub algorithm: &'static str,
    pub operation: Operation,
    pub arch: &'static str,
    /// Stated figure; a range when the text gives one.
    pub stated: (f64, f64),
}

pub const CLAIM_TOLERANCE: f64 = 0.10;

pub const PROSE_CLAIMS: [ProseClaim; 8] = [
    ProseClaim { text: "outgoing: RSA roughly 25x Kyber", algorithm: "RSA", operation: Operation::Outgoing, arch: "x86_64", stated: (25.0, 25.0) },
    ProseClaim { text: "outgoing: SECP384R1 about 72x Kyber", algorithm: "SECP384R1", operation: Operation::Outgoing, arch: "x86_64", stated: (72.0, 72.0) },
    ProseClaim { text: "incoming: SECP384R1 roughly 64x Kyber", algorithm: "SECP384R1", operation: Operation::Incoming, arch: "x86_64", stated: (64.0, 64.0) },
    ProseClaim { text: "incoming: RSA roughly 3,200x Kyber", algorithm: "RSA", operation: Operation::Incoming, arch: "x86_64", stated: (3200.0, 3200.0) },
    ProseClaim { text: "outgoing ARM64: SECP384R1 47x Kyber", algorithm: "SECP384R1", operation: Operation::Outgoing, arch: "ARM64", stated: (47.0, 47.0) },
    ProseClaim { text: "keygen: SECP384R1 2.7 to 3x Kyber (x86_64)", algorithm: "SECP384R1", operation: Operation::Keygen, arch: "x86_64", stated: (2.7, 3.0) },
    ProseClaim { text: "keygen: SECP384R1 2.7 to 3x Kyber (ARM64)", algorithm: "SECP384R1", operation: Operation::Keygen, arch: "ARM64", stated: (2.7, 3.0) },
    ProseClaim { text: "keygen: RSA roughly 20,500x Kyber", algorithm: "RSA", operation: Operation::Keygen, arch: "x86_64", stated: (20500.0, 20500.0) },
];

#[derive(Debug, Clone, PartialEq)]
pub struct ClaimCheck {
    pub claim: ProseClaim,
    pub computed: Option<f64>,
    pub passed: bool,
}

/// Checks each prose claim against a report (baseline Kyber) within ±10%.
pub fn audit_claims(report: &ComparisonReport) -> Vec<ClaimCheck> {
    PROSE_CLAIMS
        .iter()
        .map(|&claim| {
            let computed = report
                .rows
                .iter()
                .find(|r| {
                    r.algorithm == claim.algorithm && r.operation == claim.operation && r.arch == claim.arch
                })
                .map(|r| r.ratio_vs_baseline);
            let (lo, hi) = claim.stated;
            let passed = computed
                .is_some_and(|x| x >= lo * (1.0 - CLAIM_TOLERANCE) && x <= hi * (1.0 + CLAIM_TOLERANCE));
            ClaimCheck { claim, computed, passed }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::ingest_events;

    const REFERENCE_ROWS: &str = include_str!("../../../data/paper_metrics.json");

    fn reference_rows() -> Vec<BenchRecord> {
        ingest_events(REFERENCE_ROWS.as_bytes()).unwrap()
    }

    fn ratio(r: &ComparisonReport, alg: &str, op: Operation, arch: &str) -> f64 {
        r.rows
            .iter()
            .find(|x| x.algorithm == alg && x.operation == op && x.arch == arch)
            .unwrap()
            .ratio_vs_baseline
    }

    #[test]
    fn reference_ratios() {
        let r = speedup_matrix(&reference_rows(), "Kyber").unwrap();
        assert_eq!(r.unit, Unit::Cycles);
        assert_eq!(ratio(&r, "RSA", Operation::Outgoing, "x86_64"), 5189283.0 / 210768.0);
        assert_eq!(round_sig(ratio(&r, "RSA", Operation::Outgoing, "x86_64"), 4), 24.62);
        assert_eq!(round_sig(ratio(&r, "SECP384R1", Operation::Keygen, "x86_64"), 4), 2.868);
        assert!(r.log_scale_hint);
    }

    #[test]
    fn baseline_against_itself_is_one() {
        let r = speedup_matrix(&reference_rows(), "kyber").unwrap();
        for row in r.rows.iter().filter(|x| x.algorithm == "Kyber") {
            assert_eq!(row.ratio_vs_baseline, 1.0);
        }
        let only: Vec<_> = reference_rows().into_iter().filter(|x| x.algorithm() == "RSA").collect();
        assert!(speedup_matrix(&only, "RSA").unwrap().rows.iter().all(|x| x.ratio_vs_baseline == 1.0));
    }

    #[test]
    fn ratios_are_reciprocal() {
        let recs = reference_rows();
        for (a, b) in [("Kyber", "RSA"), ("Kyber", "SECP384R1"), ("RSA", "SECP384R1")] {
            let ra = speedup_matrix(&recs, a).unwrap();
            let rb = speedup_matrix(&recs, b).unwrap();
            for row in ra.rows.iter().filter(|x| x.algorithm == b) {
                let back = ratio(&rb, a, row.operation, &row.arch);
                assert!((row.ratio_vs_baseline * back - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn missing_baseline_and_mixed_units() {
        let recs = reference_rows();
        assert!(matches!(
            speedup_matrix(&recs, "DSA"),
            Err(ReportError::MissingBaseline { .. })
        ));
        let mut mixed = recs.clone();
        mixed.push(BenchRecord::from_samples("Kyber", Operation::Keygen, "x86_64", vec![5]));
        assert_eq!(speedup_matrix(&mixed, "Kyber"), Err(ReportError::MixedUnits));
        assert_eq!(speedup_matrix(&[], "Kyber"), Err(ReportError::NoRecords));
    }

    #[test]
    fn wall_clock_reports_use_medians() {
        let recs = vec![
            BenchRecord::from_samples("Kyber", Operation::Keygen, "x86_64", vec![10, 30, 20]),
            BenchRecord::from_samples("RSA", Operation::Keygen, "x86_64", vec![2000, 1000, 3000]),
        ];
        let r = speedup_matrix(&recs, "Kyber").unwrap();
        assert_eq!(r.unit, Unit::MedianNs);
        assert_eq!(r.rows[1].ratio_vs_baseline, 100.0);
    }

    #[test]
    fn every_prose_claim_holds() {
        let r = speedup_matrix(&reference_rows(), "Kyber").unwrap();
        for c in audit_claims(&r) {
            assert!(c.passed, "{}: {:?}", c.claim.text, c.computed);
        }
    }

    #[test]
    fn overhead_rows() {
        let t = overhead_table(0);
        let totals: Vec<_> = t.rows.iter().map(|r| (r.total_added, r.reference_total)).collect();
        assert_eq!(totals, [(32, 30), (992, 993), (1120, 1121)]);
        assert_eq!(t.rows[2].key_transport - t.rows[1].key_transport, 128);
        assert_eq!(t.rows[0].key_transport, 0);
        assert_eq!(overhead_table(500).rows[0].envelope_len, 532);
    }

    #[test]
    fn emission_is_deterministic() {
        let r = speedup_matrix(&reference_rows(), "Kyber").unwrap();
        for f in [Format::Json, Format::Csv] {
            assert_eq!(emit(&r, f), emit(&r, f));
        }
        let t = overhead_table(64);
        assert_eq!(emit(&t, Format::Json), emit(&t, Format::Json));
    }

    #[test]
    fn csv_layout() {
        let empty = ComparisonReport { baseline: "Kyber".into(), unit: Unit::Cycles, log_scale_hint: false, rows: vec![] };
        let out = String::from_utf8(emit(&empty, Format::Csv)).unwrap();
        assert_eq!(out, "algorithm,operation,arch,unit,value,baseline,ratio_vs_baseline,log_scale_hint\n");

        let r = speedup_matrix(&reference_rows(), "Kyber").unwrap();
        let out = String::from_utf8(emit(&r, Format::Csv)).unwrap();
        assert!(!out.contains('\r'));
        assert_eq!(out.lines().count(), 19);
        assert!(out.contains("RSA,outgoing,x86_64,cycles,5189283,Kyber,24.62,true\n"));
    }

    #[test]
    fn json_keys_are_sorted_and_ratios_rounded() {
        let r = speedup_matrix(&reference_rows(), "Kyber").unwrap();
        let out = String::from_utf8(emit(&r, Format::Json)).unwrap();
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        let keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        assert!(out.contains("\"ratio_vs_baseline\": 24.62"));
    }

    #[test]
    fn round_sig_examples() {
        assert_eq!(round_sig(3228.1326, 4), 3228.0);
        assert_eq!(round_sig(0.012345, 4), 0.01235);
        assert_eq!(round_sig(0.0, 4), 0.0);
    }
}
