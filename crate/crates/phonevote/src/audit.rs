//! Post-election fraud detection: device and forgery-signature
//! clustering, silent-region detection, scrutiny findings, and
//! multi-authority partitioned counting with commit-reveal plus a robust
//! outlier test on the revealed counts.
//!
//! All detectors are pure functions over the audit-grade trace; none of
//! them reads secret numbers or caller transcripts.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::authority::tally_events;
use crate::domain::{CandidateId, DeviceId, Time, VoteEvent, VoterId};
use crate::stoptime::{commit, verify_commitment, CommitTag, CommitmentRecord, StopTimeError};

#[derive(Debug, Error, PartialEq)]
pub enum AuditError {
    #[error("need at least 2 authorities, got {0}")]
    TooFewAuthorities(u32),
    #[error("cannot partition {n_voters} voters among {m} authorities")]
    PartitionTooFine { n_voters: u32, m: u32 },
    #[error("outlier test needs at least 3 authorities, got {0}")]
    InsufficientAuthorities(usize),
    #[error("authority {0} revealed a count that does not match its commitment")]
    RevealMismatch(u32),
    #[error(transparent)]
    Commitment(#[from] StopTimeError),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeviceFlag {
    pub device: DeviceId,
    pub count: u64,
    pub threshold: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SignatureFlag {
    pub signature_tag: u32,
    pub count: u64,
    pub threshold: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegionFlag {
    pub region: u32,
    pub population: u32,
    pub min_expected: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScrutinyFinding {
    pub voter: VoterId,
    pub events: u64,
    pub distinct_devices: u64,
    pub note: String,
}

/// Thresholds echoed into every report so each flag cites the rule that
/// produced it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AuditParams {
    pub k_device: u64,
    pub k_sig: u64,
    pub min_expected: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FraudReport {
    pub flagged_devices: Vec<DeviceFlag>,
    pub flagged_signatures: Vec<SignatureFlag>,
    pub silent_regions: Vec<RegionFlag>,
    pub scrutiny_findings: Vec<ScrutinyFinding>,
    pub params: AuditParams,
}

impl FraudReport {
    pub fn any_flag(&self) -> bool {
        !self.flagged_devices.is_empty()
            || !self.flagged_signatures.is_empty()
            || !self.silent_regions.is_empty()
            || !self.scrutiny_findings.is_empty()
    }
}

/// Halved threshold (rounded up) applied wherever a high-scrutiny id is
/// involved.
fn scrutiny_threshold(k: u64) -> u64 {
    k.div_ceil(2)
}

/// Flag devices with unreasonably many vote events (authentic or not).
/// Devices that carried votes claiming a high-scrutiny id face the halved
/// threshold.
pub fn cluster_by_device(
    trace: &[VoteEvent],
    k_device: u64,
    scrutiny: &BTreeSet<VoterId>,
) -> Vec<DeviceFlag> {
    let mut counts: BTreeMap<DeviceId, (u64, bool)> = BTreeMap::new();
    for ev in trace {
        let entry = counts.entry(ev.device).or_insert((0, false));
        entry.0 += 1;
        if scrutiny.contains(&ev.claimed) {
            entry.1 = true;
        }
    }
    counts
        .into_iter()
        .filter_map(|(device, (count, sensitive))| {
            let threshold = if sensitive { scrutiny_threshold(k_device) } else { k_device };
            (count >= threshold).then_some(DeviceFlag { device, count, threshold })
        })
        .collect()
}

/// Flag forgery signature tags shared by at least `k_sig` events. Events
/// without forgery metadata never contribute.
pub fn cluster_by_signature(trace: &[VoteEvent], k_sig: u64) -> Vec<SignatureFlag> {
    let mut counts: BTreeMap<u32, u64> = BTreeMap::new();
    for ev in trace {
        if let Some(tag) = ev.forgery_meta.and_then(|f| f.signature_tag) {
            *counts.entry(tag).or_insert(0) += 1;
        }
    }
    counts
        .into_iter()
        .filter_map(|(signature_tag, count)| {
            (count >= k_sig).then_some(SignatureFlag { signature_tag, count, threshold: k_sig })
        })
        .collect()
}

/// Flag populous regions from which no votes at all were cast.
pub fn silent_regions(
    trace: &[VoteEvent],
    region_populations: &[u32],
    min_expected: u32,
) -> Vec<RegionFlag> {
    let mut seen = vec![false; region_populations.len()];
    for ev in trace {
        if let Some(s) = seen.get_mut(ev.device.region as usize) {
            *s = true;
        }
    }
    region_populations
        .iter()
        .enumerate()
        .filter_map(|(region, &population)| {
            (!seen[region] && population >= min_expected).then_some(RegionFlag {
                region: region as u32,
                population,
                min_expected,
            })
        })
        .collect()
}

/// Per-voter anomaly notes for ids under high scrutiny: flagged when the
/// id's events hit the halved device threshold or span several devices.
pub fn scrutiny_findings(
    trace: &[VoteEvent],
    k_device: u64,
    scrutiny: &BTreeSet<VoterId>,
) -> Vec<ScrutinyFinding> {
    let mut findings = Vec::new();
    for &voter in scrutiny {
        let events: Vec<&VoteEvent> = trace.iter().filter(|e| e.claimed == voter).collect();
        let devices: BTreeSet<DeviceId> = events.iter().map(|e| e.device).collect();
        let threshold = scrutiny_threshold(k_device);
        if events.len() as u64 >= threshold || devices.len() >= 2 {
            findings.push(ScrutinyFinding {
                voter,
                events: events.len() as u64,
                distinct_devices: devices.len() as u64,
                note: format!(
                    "{} events over {} devices (threshold {} events or 2 devices)",
                    events.len(),
                    devices.len(),
                    threshold
                ),
            });
        }
    }
    findings
}

/// Full step-9 style report over the audit-grade trace.
pub fn fraud_report(
    trace: &[VoteEvent],
    scrutiny: &BTreeSet<VoterId>,
    region_populations: &[u32],
    params: AuditParams,
) -> FraudReport {
    FraudReport {
        flagged_devices: cluster_by_device(trace, params.k_device, scrutiny),
        flagged_signatures: cluster_by_signature(trace, params.k_sig),
        silent_regions: silent_regions(trace, region_populations, params.min_expected),
        scrutiny_findings: scrutiny_findings(trace, params.k_device, scrutiny),
        params,
    }
}

/// Uniform random balanced assignment of voters to authorities.
#[derive(Clone, Debug, PartialEq)]
pub struct AuthorityPartition {
    pub m: u32,
    /// `assignment[voter_index]` is the authority index.
    pub assignment: Vec<u32>,
}

impl AuthorityPartition {
    pub fn sizes(&self) -> Vec<u32> {
        let mut sizes = vec![0u32; self.m as usize];
        for &a in &self.assignment {
            sizes[a as usize] += 1;
        }
        sizes
    }
}

/// Shuffle the voter indices and deal them round-robin, so partition
/// sizes differ by at most one.
pub fn partition_voters<R: Rng + ?Sized>(
    n_voters: u32,
    m: u32,
    rng: &mut R,
) -> Result<AuthorityPartition, AuditError> {
    if m < 2 {
        return Err(AuditError::TooFewAuthorities(m));
    }
    if m > n_voters {
        return Err(AuditError::PartitionTooFine { n_voters, m });
    }
    let mut order: Vec<u32> = (0..n_voters).collect();
    order.shuffle(rng);
    let mut assignment = vec![0u32; n_voters as usize];
    for (deal, &voter) in order.iter().enumerate() {
        assignment[voter as usize] = (deal as u32) % m;
    }
    Ok(AuthorityPartition { m, assignment })
}

/// One authority's tally together with its published commitment.
#[derive(Clone, Debug, PartialEq)]
pub struct AuthorityCount {
    pub authority: u32,
    pub tally: BTreeMap<CandidateId, u64>,
    pub commitment: CommitmentRecord,
}

/// Canonical committed payload for a count vector.
pub fn count_payload(tally: &BTreeMap<CandidateId, u64>, n_candidates: u32) -> Vec<u8> {
    let parts: Vec<String> = (0..n_candidates)
        .map(|c| format!("{}:{}", c, tally.get(&CandidateId(c)).copied().unwrap_or(0)))
        .collect();
    parts.join(",").into_bytes()
}

/// Each authority tallies only its own voters (last-vote-counts rule) and
/// commits its count vector before any reveal.
pub fn multi_authority_count<R: Rng + ?Sized>(
    trace: &[VoteEvent],
    partition: &AuthorityPartition,
    stop_time: Time,
    n_candidates: u32,
    rng: &mut R,
) -> Result<Vec<AuthorityCount>, AuditError> {
    let mut counts = Vec::with_capacity(partition.m as usize);
    for authority in 0..partition.m {
        let events: Vec<VoteEvent> = trace
            .iter()
            .filter(|e| {
                partition
                    .assignment
                    .get(e.claimed.0 as usize)
                    .map_or(false, |&a| a == authority)
            })
            .cloned()
            .collect();
        let tally = tally_events(&events, stop_time);
        let commitment = commit(CommitTag::Count, &count_payload(&tally, n_candidates), rng)?;
        counts.push(AuthorityCount { authority, tally, commitment });
    }
    Ok(counts)
}

/// Re-verify every authority's revealed count vector against its
/// commitment; the first mismatch names the authority.
pub fn check_reveals(counts: &[AuthorityCount], n_candidates: u32) -> Result<(), AuditError> {
    for c in counts {
        let payload = count_payload(&c.tally, n_candidates);
        if payload != c.commitment.payload
            || !verify_commitment(
                CommitTag::Count,
                &c.commitment.digest,
                &payload,
                &c.commitment.nonce,
            )
        {
            return Err(AuditError::RevealMismatch(c.authority));
        }
    }
    Ok(())
}

/// Sum of the per-authority reveals.
pub fn combine_counts(counts: &[AuthorityCount]) -> BTreeMap<CandidateId, u64> {
    let mut total = BTreeMap::new();
    for c in counts {
        for (&cand, &n) in &c.tally {
            *total.entry(cand).or_insert(0) += n;
        }
    }
    total
}

/// Robust outlier test on revealed counts: each authority's share of the
/// globally leading candidate is compared against the median share of
/// the other authorities, in units of the binomial standard error at its
/// own size; deviations beyond `z_crit` are flagged.
pub fn detect_false_counter(
    counts: &[AuthorityCount],
    z_crit: f64,
) -> Result<Vec<u32>, AuditError> {
    if counts.len() < 3 {
        return Err(AuditError::InsufficientAuthorities(counts.len()));
    }
    let total = combine_counts(counts);
    let leading = match total.iter().max_by_key(|(c, n)| (**n, std::cmp::Reverse(c.0))) {
        Some((&c, _)) => c,
        None => return Ok(Vec::new()),
    };
    let shares: Vec<(f64, f64)> = counts
        .iter()
        .map(|c| {
            let n: u64 = c.tally.values().sum();
            let lead = c.tally.get(&leading).copied().unwrap_or(0);
            if n == 0 {
                (0.0, 0.0)
            } else {
                (lead as f64 / n as f64, n as f64)
            }
        })
        .collect();
    let mut flags = Vec::new();
    for (i, &(share, n)) in shares.iter().enumerate() {
        if n == 0.0 {
            continue;
        }
        let mut others: Vec<f64> = shares
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, &(s, _))| s)
            .collect();
        others.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let med = if others.len() % 2 == 1 {
            others[others.len() / 2]
        } else {
            (others[others.len() / 2 - 1] + others[others.len() / 2]) / 2.0
        };
        let se = (med * (1.0 - med) / n).sqrt().max(1e-12);
        if ((share - med).abs() / se) > z_crit {
            flags.push(counts[i].authority);
        }
    }
    Ok(flags)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{ForgeryMeta, ReceiptInput};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn event(time: f64, seq: u64, claimed: u32, device: u32, region: u32, auth: bool, cand: u32) -> VoteEvent {
        VoteEvent {
            time: Time::hours(time),
            seq,
            claimed: VoterId(claimed),
            device: DeviceId { device, region },
            auth_ok: auth,
            candidate: CandidateId(cand),
            receipt_input: ReceiptInput::Skip,
            scrutiny_requested: false,
            forgery_meta: None,
        }
    }

    fn forged_event(seq: u64, claimed: u32, tag: Option<u32>) -> VoteEvent {
        let mut ev = event(10.0 + seq as f64, seq, claimed, 500, 0, false, 0);
        ev.forgery_meta =
            Some(ForgeryMeta { forger_id: 0, signature_tag: tag, tuned_against: None, automated: false });
        ev
    }

    #[test]
    fn device_threshold_semantics() {
        let scrutiny = BTreeSet::new();
        let seven: Vec<VoteEvent> = (0..7).map(|i| event(i as f64, i, i as u32, 1, 0, true, 0)).collect();
        let flags = cluster_by_device(&seven, 5, &scrutiny);
        assert_eq!(flags.len(), 1);
        assert_eq!(flags[0].count, 7);
        assert_eq!(flags[0].threshold, 5);

        let four: Vec<VoteEvent> = (0..4).map(|i| event(i as f64, i, i as u32, 1, 0, true, 0)).collect();
        assert!(cluster_by_device(&four, 5, &scrutiny).is_empty());
    }

    #[test]
    fn scrutiny_halves_the_device_threshold() {
        let scrutiny: BTreeSet<VoterId> = [VoterId(0)].into();
        let three: Vec<VoteEvent> = (0..3).map(|i| event(i as f64, i, 0, 1, 0, false, 0)).collect();
        let flags = cluster_by_device(&three, 5, &scrutiny);
        assert_eq!(flags.len(), 1);
        assert_eq!(flags[0].threshold, 3);
    }

    #[test]
    fn signature_threshold_semantics() {
        let ten: Vec<VoteEvent> = (0..10).map(|i| forged_event(i, 0, Some(7))).collect();
        let flags = cluster_by_signature(&ten, 10);
        assert_eq!(flags.len(), 1);
        assert_eq!(flags[0].signature_tag, 7);
        assert_eq!(flags[0].count, 10);

        let nine: Vec<VoteEvent> = (0..9).map(|i| forged_event(i, 0, Some(7))).collect();
        assert!(cluster_by_signature(&nine, 10).is_empty());

        let genuine: Vec<VoteEvent> = (0..20).map(|i| event(i as f64, i, i as u32, i as u32, 0, true, 0)).collect();
        assert!(cluster_by_signature(&genuine, 2).is_empty());
    }

    #[test]
    fn silent_region_flags_respect_population_floor() {
        // Region 0 has 500 voters and no votes, region 1 has 10 and no
        // votes, region 2 voted.
        let trace = vec![event(1.0, 0, 0, 0, 2, true, 0)];
        let flags = silent_regions(&trace, &[500, 10, 100], 50);
        assert_eq!(flags.len(), 1);
        assert_eq!(flags[0].region, 0);
        assert_eq!(flags[0].population, 500);
    }

    #[test]
    fn partition_sizes_are_balanced() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = partition_voters(9, 3, &mut rng).unwrap();
        assert_eq!(p.sizes(), vec![3, 3, 3]);
        let mut sizes = partition_voters(10, 3, &mut rng).unwrap().sizes();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![3, 3, 4]);
        assert!(partition_voters(2, 3, &mut rng).is_err());
        assert!(partition_voters(10, 1, &mut rng).is_err());
    }

    fn trace_for(n: u32) -> Vec<VoteEvent> {
        (0..n).map(|i| event(10.0, i as u64, i, i, 0, true, i % 2)).collect()
    }

    #[test]
    fn partition_additivity_and_reveal_binding() {
        let trace = trace_for(100);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = partition_voters(100, 3, &mut rng).unwrap();
        let stop = Time::hours(100.0);
        let mut counts = multi_authority_count(&trace, &p, stop, 2, &mut rng).unwrap();
        assert_eq!(combine_counts(&counts), tally_events(&trace, stop));
        assert!(check_reveals(&counts, 2).is_ok());
        // Altering one authority's revealed count breaks exactly it.
        *counts[1].tally.entry(CandidateId(0)).or_insert(0) += 5;
        assert_eq!(check_reveals(&counts, 2), Err(AuditError::RevealMismatch(1)));
    }

    fn synthetic_counts(shares: &[(u64, u64)]) -> Vec<AuthorityCount> {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        shares
            .iter()
            .enumerate()
            .map(|(i, &(c0, n))| {
                let mut tally = BTreeMap::new();
                tally.insert(CandidateId(0), c0);
                tally.insert(CandidateId(1), n - c0);
                let commitment =
                    commit(CommitTag::Count, &count_payload(&tally, 2), &mut rng).unwrap();
                AuthorityCount { authority: i as u32, tally, commitment }
            })
            .collect()
    }

    #[test]
    fn identical_shares_are_never_flagged() {
        let counts = synthetic_counts(&[(5000, 10000), (5000, 10000), (5000, 10000)]);
        assert!(detect_false_counter(&counts, 4.0).unwrap().is_empty());
        let two = synthetic_counts(&[(5000, 10000), (5000, 10000)]);
        assert!(detect_false_counter(&two, 4.0).is_err());
    }

    #[test]
    fn detection_probability_grows_with_inflation() {
        use rand_distr::{Binomial, Distribution};
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut detect_rate = |inflation: f64| {
            let reps = 200;
            let mut hits = 0;
            for _ in 0..reps {
                let honest = Binomial::new(10_000, 0.5).unwrap();
                let skew = Binomial::new(10_000, 0.5 + inflation).unwrap();
                let counts = synthetic_counts(&[
                    (skew.sample(&mut rng), 10_000),
                    (honest.sample(&mut rng), 10_000),
                    (honest.sample(&mut rng), 10_000),
                ]);
                if detect_false_counter(&counts, 4.0).unwrap().contains(&0) {
                    hits += 1;
                }
            }
            hits as f64 / 200.0
        };
        let rates: Vec<f64> = [0.01, 0.03, 0.05].iter().map(|&i| detect_rate(i)).collect();
        assert!(rates[0] <= rates[1] && rates[1] <= rates[2], "{rates:?}");
        assert!(rates[2] > 0.99);
    }
}
