//! Human-readable summary of a results file (JSON-lines, one
//! `ElectionResult` per line).

use std::fmt::Write as _;
use std::path::Path;

use super::engine::{ElectionResult, SimError};

fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let idx = ((sorted.len() - 1) as f64 * q).round() as usize;
    sorted[idx]
}

/// Load a results file and render the summary text.
pub fn report_file(path: &Path) -> Result<String, SimError> {
    let raw = std::fs::read_to_string(path)?;
    let mut results = Vec::new();
    for line in raw.lines() {
        if line.trim().is_empty() {
            continue;
        }
        results.push(serde_json::from_str::<ElectionResult>(line)?);
    }
    Ok(render(&results))
}

pub fn render(results: &[ElectionResult]) -> String {
    let mut out = String::new();
    let n = results.len();
    writeln!(out, "replications: {n}").unwrap();
    if n == 0 {
        writeln!(out, "no results to summarize").unwrap();
        return out;
    }

    let n_candidates = results[0].official_tally.len();
    let mut tally = vec![0u64; n_candidates];
    for r in results {
        for (i, &c) in r.official_tally.iter().enumerate() {
            tally[i] += c;
        }
    }
    writeln!(out, "aggregate tally:").unwrap();
    for (i, c) in tally.iter().enumerate() {
        writeln!(out, "  candidate {i}: {c}").unwrap();
    }

    let flips = results.iter().filter(|r| r.flipped).count();
    writeln!(out, "flips: {flips} ({:.4} of runs)", flips as f64 / n as f64).unwrap();

    let mut costs: Vec<f64> = results.iter().map(|r| r.adversary_cost).collect();
    costs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    writeln!(
        out,
        "adversary cost: min {:.2}, p50 {:.2}, p90 {:.2}, max {:.2}",
        quantile(&costs, 0.0),
        quantile(&costs, 0.5),
        quantile(&costs, 0.9),
        quantile(&costs, 1.0)
    )
    .unwrap();

    let receipts: u64 = results.iter().map(|r| r.receipts_sent).sum();
    writeln!(out, "receipts sent (total): {receipts}").unwrap();

    let detected = results.iter().filter(|r| r.detections.any()).count();
    writeln!(out, "runs with detections: {detected}").unwrap();
    for r in results {
        for (d, c, t) in &r.detections.device_flags {
            writeln!(out, "  [rep {}] device {d}: {c} events (threshold {t})", r.replication)
                .unwrap();
        }
        for (s, c, t) in &r.detections.signature_flags {
            writeln!(out, "  [rep {}] signature {s}: {c} events (threshold {t})", r.replication)
                .unwrap();
        }
        for (region, pop, min) in &r.detections.silent_regions {
            writeln!(
                out,
                "  [rep {}] silent region {region}: population {pop} (min expected {min})",
                r.replication
            )
            .unwrap();
        }
        for (v, note) in &r.detections.scrutiny_findings {
            writeln!(out, "  [rep {}] scrutiny voter {v}: {note}", r.replication).unwrap();
        }
        for a in &r.detections.false_counters {
            writeln!(out, "  [rep {}] authority {a} flagged as false counter", r.replication)
                .unwrap();
        }
    }

    let all_committed = results.iter().all(|r| r.commitments.iter().all(|&b| b));
    writeln!(out, "all commitments verified: {all_committed}").unwrap();
    out
}
