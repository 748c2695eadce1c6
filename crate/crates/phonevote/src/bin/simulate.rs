//! Election simulation CLI: replicated runs, parameter sweeps,
//! commitment tooling, and result reports.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use phonevote::harness::{
    report_file, run_election_detailed, sweep, sweep_csv, SimConfig, SweepAxis,
};
use phonevote::stoptime::{commit, verify_commitment, CommitTag};

#[derive(Parser)]
#[command(name = "simulate", about = "Phone-voting protocol simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run replicated elections and write JSON-lines results.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Public trace export (first replication only).
        #[arg(long)]
        trace_out: Option<PathBuf>,
        /// Audit-grade trace export (first replication only).
        #[arg(long)]
        audit_out: Option<PathBuf>,
        /// Receipt set as CSV (first replication only).
        #[arg(long)]
        receipts_out: Option<PathBuf>,
    },
    /// Sweep one parameter axis and write JSON-lines rows plus a CSV table.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// One of: n_voters, bribe, sequester_end, eer.
        #[arg(long)]
        axis: String,
        /// Comma-separated axis values.
        #[arg(long)]
        values: String,
        #[arg(long)]
        out: PathBuf,
        /// CSV output path; defaults to `<out>.csv`.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Commit to a payload; prints digest and nonce as lowercase hex.
    Commit {
        #[arg(long)]
        payload: String,
        /// Commitment context: stop-time or count.
        #[arg(long, default_value = "stop-time")]
        tag: String,
    },
    /// Verify a revealed (payload, nonce) pair against a digest.
    VerifyCommit {
        #[arg(long)]
        digest: String,
        #[arg(long)]
        payload: String,
        #[arg(long)]
        nonce: String,
        #[arg(long, default_value = "stop-time")]
        tag: String,
    },
    /// Summarize a results file.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

fn parse_tag(tag: &str) -> Result<CommitTag, String> {
    match tag {
        "stop-time" => Ok(CommitTag::StopTime),
        "count" => Ok(CommitTag::Count),
        other => Err(format!("unknown tag {other:?} (expected stop-time or count)")),
    }
}

fn run(cli: Cli) -> Result<(), String> {
    match cli.command {
        Command::Run { config, out, trace_out, audit_out, receipts_out } => {
            let raw = fs::read_to_string(&config)
                .map_err(|e| format!("cannot read {}: {e}", config.display()))?;
            let cfg: SimConfig =
                serde_json::from_str(&raw).map_err(|e| format!("config parse error: {e}"))?;
            cfg.validate().map_err(|errs| errs.join("\n"))?;
            let mut file =
                fs::File::create(&out).map_err(|e| format!("cannot create {}: {e}", out.display()))?;
            for rep in 0..cfg.replications {
                let detail = run_election_detailed(&cfg, rep).map_err(|e| e.to_string())?;
                let line = serde_json::to_string(&detail.result).map_err(|e| e.to_string())?;
                writeln!(file, "{line}").map_err(|e| e.to_string())?;
                if rep == 0 {
                    if let Some(p) = &trace_out {
                        fs::write(p, &detail.public_jsonl).map_err(|e| e.to_string())?;
                    }
                    if let Some(p) = &audit_out {
                        fs::write(p, &detail.audit_jsonl).map_err(|e| e.to_string())?;
                    }
                    if let Some(p) = &receipts_out {
                        fs::write(p, &detail.receipts_csv).map_err(|e| e.to_string())?;
                    }
                }
            }
            println!("wrote {} replications to {}", cfg.replications, out.display());
            Ok(())
        }
        Command::Sweep { config, axis, values, out, csv } => {
            let raw = fs::read_to_string(&config)
                .map_err(|e| format!("cannot read {}: {e}", config.display()))?;
            let cfg: SimConfig =
                serde_json::from_str(&raw).map_err(|e| format!("config parse error: {e}"))?;
            let axis = SweepAxis::parse(&axis)
                .ok_or_else(|| format!("unknown axis {axis:?} (expected n_voters, bribe, sequester_end, or eer)"))?;
            let parsed: Result<Vec<f64>, _> =
                values.split(',').map(|v| v.trim().parse::<f64>()).collect();
            let parsed = parsed.map_err(|e| format!("bad axis value: {e}"))?;
            let rows = sweep(&cfg, axis, &parsed).map_err(|e| e.to_string())?;
            let mut jsonl = String::new();
            for row in &rows {
                jsonl.push_str(&serde_json::to_string(row).map_err(|e| e.to_string())?);
                jsonl.push('\n');
            }
            fs::write(&out, jsonl).map_err(|e| e.to_string())?;
            let csv_path = csv.unwrap_or_else(|| {
                let mut p = out.clone();
                p.set_extension("csv");
                p
            });
            fs::write(&csv_path, sweep_csv(&rows)).map_err(|e| e.to_string())?;
            println!("wrote {} rows to {} and {}", rows.len(), out.display(), csv_path.display());
            Ok(())
        }
        Command::Commit { payload, tag } => {
            let tag = parse_tag(&tag)?;
            let mut rng = rand::thread_rng();
            let c = commit(tag, payload.as_bytes(), &mut rng).map_err(|e| e.to_string())?;
            println!("digest: {}", c.digest_hex());
            println!("nonce: {}", c.nonce_hex());
            Ok(())
        }
        Command::VerifyCommit { digest, payload, nonce, tag } => {
            let tag = parse_tag(&tag)?;
            let digest: [u8; 32] = hex::decode(&digest)
                .map_err(|e| format!("bad digest hex: {e}"))?
                .try_into()
                .map_err(|_| "digest must be 32 bytes".to_string())?;
            let nonce: [u8; 32] = hex::decode(&nonce)
                .map_err(|e| format!("bad nonce hex: {e}"))?
                .try_into()
                .map_err(|_| "nonce must be 32 bytes".to_string())?;
            if verify_commitment(tag, &digest, payload.as_bytes(), &nonce) {
                println!("valid");
                Ok(())
            } else {
                Err("commitment does not verify".to_string())
            }
        }
        Command::Report { input } => {
            let text = report_file(&input).map_err(|e| e.to_string())?;
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
