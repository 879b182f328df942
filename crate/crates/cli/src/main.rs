use std::fs::{self, File};
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use pqhybrid_core::bench::{self, records_to_json, MonotonicClock, DEFAULT_ITERS, DEFAULT_WARMUP};
use pqhybrid_core::dem::kat;
use pqhybrid_core::report::{self, audit_claims, Format};
use pqhybrid_core::{Operation, SchemeId, Workload};
use rand::rngs::OsRng;

/// Hybrid KEM/DEM benchmark and analysis toolkit.
#[derive(Debug, Parser)]
#[command(name = "pqhybrid", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Time one operation of one scheme on this machine.
    Run {
        /// kyber, rsa or p384
        #[arg(long)]
        scheme: SchemeId,
        /// keygen, outgoing, incoming, encrypt or decrypt
        #[arg(long)]
        op: Operation,
        #[arg(long, default_value_t = DEFAULT_ITERS as u32, value_parser = clap::value_parser!(u32).range(1..))]
        iters: u32,
        #[arg(long, default_value_t = DEFAULT_WARMUP)]
        warmup: usize,
        /// Write the record as JSON here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute estimated cycles and speedup ratios from event counts.
    Analyze {
        /// JSON array of event rows.
        #[arg(long)]
        events: PathBuf,
        #[arg(long, default_value = "Kyber")]
        baseline: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "json")]
        format: Format,
        /// Also check the published prose ratios (baseline must be Kyber).
        #[arg(long)]
        audit: bool,
    },
    /// Print per-scheme ciphertext overhead for a plaintext length.
    Overhead {
        #[arg(long, default_value_t = 0)]
        len: usize,
        #[arg(long, default_value = "csv")]
        format: Format,
    },
    /// Run every ChaCha20-Poly1305 known-answer vector.
    Vectors,
    /// Print the detected hardware environment as JSON.
    Env,
}

fn write_output(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(p) => fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => io::stdout().write_all(bytes).context("writing stdout"),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { scheme, op, iters, warmup, out } => {
            let mut w = Workload::prepare(scheme, op, &mut OsRng)?;
            let rec = w.measure(warmup, iters as usize, &MonotonicClock::new())?;
            eprintln!(
                "{} {} {}: median {} ns, min {} ns over {} iterations",
                rec.algorithm(),
                rec.operation(),
                rec.arch(),
                rec.median_ns().unwrap_or(0),
                rec.min_ns().unwrap_or(0),
                rec.wall_samples().len()
            );
            write_output(out.as_deref(), records_to_json(&[rec]).as_bytes())
        }
        Command::Analyze { events, baseline, out, format, audit } => {
            let file = File::open(&events).with_context(|| format!("opening {}", events.display()))?;
            let records = bench::ingest_events(BufReader::new(file))?;
            let report = report::speedup_matrix(&records, &baseline)?;
            write_output(out.as_deref(), &report::emit(&report, format))?;
            if audit {
                let checks = audit_claims(&report);
                for c in &checks {
                    let verdict = if c.passed { "ok  " } else { "FAIL" };
                    match c.computed {
                        Some(x) => eprintln!("{verdict} {} -> {:.4}", c.claim.text, x),
                        None => eprintln!("{verdict} {} -> no data", c.claim.text),
                    }
                }
                if checks.iter().any(|c| !c.passed) {
                    bail!("prose-claim audit failed");
                }
            }
            Ok(())
        }
        Command::Overhead { len, format } => {
            write_output(None, &report::emit(&report::overhead_table(len), format))
        }
        Command::Vectors => {
            let outcomes = kat::run_all();
            for o in &outcomes {
                println!("{} {:?} {}", if o.passed { "PASS" } else { "FAIL" }, o.kind, o.name);
            }
            let failed = outcomes.iter().filter(|o| !o.passed).count();
            println!("{} vectors, {} failed", outcomes.len(), failed);
            if failed > 0 {
                bail!("{failed} known-answer vectors failed");
            }
            Ok(())
        }
        Command::Env => {
            let mut s = serde_json::to_string_pretty(&bench::capture_environment())?;
            s.push('\n');
            write_output(None, s.as_bytes())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
