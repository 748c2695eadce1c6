//! One replicated election end to end: stop-time sampling and
//! commitment, population and adversary planning, time-ordered session
//! execution, tallying, receipts, audit, and cost settlement.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::adversary::{plan_actions, settle_cost, AdversaryError, AdversaryPlan, Strategy};
use crate::audit::{
    check_reveals, fraud_report, multi_authority_count, partition_voters, AuditError, AuditParams,
    FraudReport,
};
use crate::authority::{receipts_csv, AuthMode, AuthorityState};
use crate::domain::{CandidateId, SecretNumber, Speaker, Time, Utterance, VoterId};
use crate::population::{
    generate_population, region_populations, schedule_honest, SessionIntent,
};
use crate::stoptime::{
    commit, sample_stop, stop_time_payload, verify_commitment, CommitTag, StopTimeError,
};
use crate::verify::{PromptCorpus, RepetitionParams, VerifierEnsemble, VerifyError};

use super::config::{Mode, SimConfig};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid configuration:\n{}", .0.join("\n"))]
    Config(Vec<String>),
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error(transparent)]
    StopTime(#[from] StopTimeError),
    #[error(transparent)]
    Adversary(#[from] AdversaryError),
    #[error(transparent)]
    Audit(#[from] AuditError),
    #[error("population error: {0}")]
    Population(#[from] crate::population::PopulationError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Derive an independent, reproducible rng stream keyed by
/// (master seed, replication index, stream name).
pub fn derive_stream(master: u64, replication: u32, name: &str) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update(replication.to_le_bytes());
    h.update(name.as_bytes());
    ChaCha8Rng::from_seed(h.finalize().into())
}

/// Aggregated outcome of one replication.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElectionResult {
    pub replication: u32,
    /// Counts per candidate index (last-vote-counts rule).
    pub official_tally: Vec<u64>,
    /// Histogram of true preferences over the whole electorate.
    pub true_preference_tally: Vec<u64>,
    /// Max count, lowest candidate index on ties.
    pub winner: u32,
    /// Official winner differs from the true-preference winner.
    pub flipped: bool,
    pub adversary_cost: f64,
    pub detections: DetectionReport,
    pub receipts_sent: u64,
    pub stop_time: f64,
    /// Stop-time commitment first, then one per authority count.
    pub commitments: Vec<bool>,
}

/// Detection outcomes carried in the result: the step-9 fraud report plus
/// any authorities flagged by the count outlier test.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub device_flags: Vec<(u32, u64, u64)>,
    pub signature_flags: Vec<(u32, u64, u64)>,
    pub silent_regions: Vec<(u32, u32, u32)>,
    pub scrutiny_findings: Vec<(u32, String)>,
    pub false_counters: Vec<u32>,
}

impl DetectionReport {
    fn from_report(report: &FraudReport, false_counters: Vec<u32>) -> Self {
        DetectionReport {
            device_flags: report
                .flagged_devices
                .iter()
                .map(|f| (f.device.device, f.count, f.threshold))
                .collect(),
            signature_flags: report
                .flagged_signatures
                .iter()
                .map(|f| (f.signature_tag, f.count, f.threshold))
                .collect(),
            silent_regions: report
                .silent_regions
                .iter()
                .map(|f| (f.region, f.population, f.min_expected))
                .collect(),
            scrutiny_findings: report
                .scrutiny_findings
                .iter()
                .map(|f| (f.voter.0, f.note.clone()))
                .collect(),
            false_counters,
        }
    }

    pub fn any(&self) -> bool {
        !self.device_flags.is_empty()
            || !self.signature_flags.is_empty()
            || !self.silent_regions.is_empty()
            || !self.scrutiny_findings.is_empty()
            || !self.false_counters.is_empty()
    }
}

/// The result plus the heavyweight exports (used by the CLI flags).
pub struct ElectionDetail {
    pub result: ElectionResult,
    pub audit_jsonl: String,
    pub public_jsonl: String,
    pub receipts_csv: String,
}

fn winner_of(tally: &[u64]) -> u32 {
    let mut best = 0u32;
    for (i, &n) in tally.iter().enumerate() {
        if n > tally[best as usize] {
            best = i as u32;
        }
    }
    best
}

fn voter_secret(master: u64, voter: VoterId) -> SecretNumber {
    // Registry secrets derived from the master seed; values are large
    // enough that their decimal form cannot collide with small ids in
    // leak checks.
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update(voter.0.to_le_bytes());
    h.update(b"secret");
    let bytes: [u8; 32] = h.finalize().into();
    SecretNumber(u64::from_le_bytes(bytes[..8].try_into().unwrap()) | (1 << 63))
}

/// Deterministic function of (config, replication index): executes the
/// full event stream in time order and runs tallying, receipts, audit,
/// and commitment verification.
pub fn run_election(config: &SimConfig, replication: u32) -> Result<ElectionResult, SimError> {
    Ok(run_election_detailed(config, replication)?.result)
}

pub fn run_election_detailed(
    config: &SimConfig,
    replication: u32,
) -> Result<ElectionDetail, SimError> {
    config.validate().map_err(SimError::Config)?;
    let master = config.seeds.master;
    let mut stop_rng = derive_stream(master, replication, "stop");
    let mut commit_rng = derive_stream(master, replication, "commit");
    let mut pop_rng = derive_stream(master, replication, "population");
    let mut adv_rng = derive_stream(master, replication, "adversary");
    let mut verify_rng = derive_stream(master, replication, "verify");
    let mut partition_rng = derive_stream(master, replication, "partition");

    let tau = config.tau_hours;
    let window = config.window_hours;

    // Step 2: sample and commit the secret stopping time.
    let plan = sample_stop(Time::hours(tau), Time::hours(window), &mut stop_rng)?;
    let stop_time = plan.stop_time;
    let stop_commitment =
        commit(CommitTag::StopTime, &stop_time_payload(stop_time), &mut commit_rng)?;

    // Set-up: population and registry.
    let mut agents = generate_population(
        config.n_voters,
        config.n_candidates,
        &config.preference_weights,
        config.p_receipt,
        config.defection_prob,
        config.revote_rate,
        config.n_regions,
        &mut pop_rng,
    )?;

    // Adversary planning happens against the pre-election population; the
    // plan may deny phone access, which the reaction generator must see.
    let strategy: Option<Strategy> = config.resolve_strategy(&mut adv_rng);
    let adv_plan: AdversaryPlan = match &strategy {
        Some(s) => {
            if let Strategy::Sequester { targets, start, end, .. } = s {
                for t in targets {
                    agents[t.0 as usize].phone_denied.push((*start, *end));
                }
            }
            plan_actions(s, &agents, tau, window, &mut adv_rng)?
        }
        None => AdversaryPlan::default(),
    };

    // Honest schedules, minus replaced voters and jammed calls.
    let mut intents: Vec<SessionIntent> = Vec::with_capacity(agents.len());
    for agent in &agents {
        if adv_plan.replaced.contains(&agent.voter) {
            continue;
        }
        intents.push(schedule_honest(agent, tau, &config.vote_time_dist, &mut pop_rng));
    }
    intents.extend(adv_plan.intents.iter().cloned());
    let jammed = |i: &SessionIntent| {
        matches!(i.actor, Speaker::Voter(_))
            && adv_plan.jams.iter().any(|j| {
                j.region == i.device.region && i.time >= j.start && i.time < j.end
            })
    };
    intents.retain(|i| !jammed(i));
    intents.sort_by(|a, b| a.time.partial_cmp(&b.time).unwrap());

    // Authority set-up.
    let ensemble = VerifierEnsemble::calibrate(
        config.n_verifier_instances,
        config.eer,
        config.sigma,
        config.mismatch_penalty * config.sigma,
        &mut verify_rng,
    )?;
    let corpus = PromptCorpus::new(config.corpus_size, config.corpus_size.min(10_000))?;
    let repetition =
        RepetitionParams::new(config.p_human, config.p_machine, Time::hours(1.0))
            .map_err(SimError::Verify)?;
    let mode = match config.mode {
        Mode::FinalProtocol => AuthMode::FinalProtocol,
        Mode::PasswordOnly => AuthMode::PasswordOnly,
    };
    let mut state = AuthorityState::new(mode, ensemble, corpus, repetition);
    for agent in &agents {
        state.register(agent.voter, voter_secret(master, agent.voter));
    }

    // Execute sessions in time order; the election abruptly stops at the
    // secret stopping time.
    for intent in &intents {
        if !(intent.time < stop_time.as_hours()) {
            continue;
        }
        let secret = if intent.knows_secret {
            voter_secret(master, intent.claimed)
        } else {
            SecretNumber(0)
        };
        let mut session = state.begin_session(
            intent.claimed,
            secret,
            intent.device,
            Time::hours(intent.time),
        );
        let utterance = match (intent.actor, intent.forgery) {
            (Speaker::Voter(v), None) => Utterance::own_voice(v),
            (Speaker::Adversary(a), None) => Utterance::impostor(a),
            (Speaker::Adversary(a), Some(meta)) => Utterance::forged(a, meta),
            (Speaker::Voter(v), Some(meta)) => Utterance::forged(v.0, meta),
        };
        state.authenticate(&mut session, &utterance, &mut verify_rng);
        state.cast_vote(&mut session, intent.candidate);
        state.set_receipt_preference(&mut session, intent.receipt_input);
        if intent.scrutiny_request {
            state.set_high_scrutiny(&mut session);
        }
        state.complete_session(session);
    }

    // Tally and outcome.
    let tally_map = state.tally(stop_time);
    let official_tally: Vec<u64> = (0..config.n_candidates)
        .map(|c| tally_map.get(&CandidateId(c)).copied().unwrap_or(0))
        .collect();
    let mut true_preference_tally = vec![0u64; config.n_candidates as usize];
    for agent in &agents {
        true_preference_tally[agent.true_choice.0 as usize] += 1;
    }
    let winner = winner_of(&official_tally);
    let flipped = winner != winner_of(&true_preference_tally);

    // Receipts.
    let receipts = state.dispatch_receipts(stop_time);

    // Audit.
    let scrutiny = state.scrutiny_set();
    let pops = region_populations(&agents, config.n_regions);
    let report = fraud_report(
        state.trace(),
        &scrutiny,
        &pops,
        AuditParams {
            k_device: config.k_device,
            k_sig: config.k_sig,
            min_expected: config.min_expected,
        },
    );

    // Multi-authority partitioned counting with commit-reveal.
    let mut commitments = vec![verify_commitment(
        CommitTag::StopTime,
        &stop_commitment.digest,
        &stop_commitment.payload,
        &stop_commitment.nonce,
    )];
    let mut false_counters = Vec::new();
    if config.n_authorities >= 2 && config.n_authorities <= config.n_voters {
        let partition =
            partition_voters(config.n_voters, config.n_authorities, &mut partition_rng)?;
        let counts = multi_authority_count(
            state.trace(),
            &partition,
            stop_time,
            config.n_candidates,
            &mut commit_rng,
        )?;
        let reveal_ok = check_reveals(&counts, config.n_candidates).is_ok();
        commitments.extend(counts.iter().map(|_| reveal_ok));
        if config.n_authorities >= 3 {
            false_counters = detect_or_empty(&counts, config.z_crit);
        }
    }

    // Cost settlement, with detection events copied from the audit.
    let mut ledger = settle_cost(&adv_plan.actions, &config.effective_unit_costs());
    let detections = DetectionReport::from_report(&report, false_counters);
    for (d, c, t) in &detections.device_flags {
        ledger.detection_events.push(format!("device {d}: {c} events >= threshold {t}"));
    }
    for (s, c, t) in &detections.signature_flags {
        ledger.detection_events.push(format!("signature {s}: {c} events >= threshold {t}"));
    }

    let result = ElectionResult {
        replication,
        official_tally,
        true_preference_tally,
        winner,
        flipped,
        adversary_cost: ledger.total,
        detections,
        receipts_sent: receipts.len() as u64,
        stop_time: stop_time.as_hours(),
        commitments,
    };
    Ok(ElectionDetail {
        result,
        audit_jsonl: state.export_audit_jsonl(),
        public_jsonl: state.export_public_jsonl(),
        receipts_csv: receipts_csv(&receipts),
    })
}

fn detect_or_empty(counts: &[crate::audit::AuthorityCount], z_crit: f64) -> Vec<u32> {
    crate::audit::detect_false_counter(counts, z_crit).unwrap_or_default()
}

/// Expose the registry secrets used by the engine; only tests need this.
#[doc(hidden)]
pub fn secret_for(master: u64, voter: VoterId) -> SecretNumber {
    voter_secret(master, voter)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::{AdversaryConfig, AdversaryParams, TargetSpec};

    fn honest_noiseless(n: u32) -> SimConfig {
        SimConfig {
            n_voters: n,
            eer: 0.0,
            p_human: 1.0,
            revote_rate: 0.0,
            preference_weights: vec![0.6, 0.4],
            ..Default::default()
        }
    }

    #[test]
    fn noiseless_honest_run_matches_true_preferences() {
        let cfg = honest_noiseless(1000);
        let r = run_election(&cfg, 0).unwrap();
        assert_eq!(r.official_tally, r.true_preference_tally);
        assert!(!r.flipped);
        assert!(r.commitments.iter().all(|&b| b));
    }

    #[test]
    fn same_seed_gives_identical_results() {
        let cfg = honest_noiseless(200);
        let a = run_election(&cfg, 3).unwrap();
        let b = run_election(&cfg, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn replications_are_independent() {
        // Replication i is a pure function of (config, i); running others
        // around it changes nothing.
        let cfg = honest_noiseless(100);
        let alone = run_election(&cfg, 1).unwrap();
        let _ = run_election(&cfg, 0).unwrap();
        let again = run_election(&cfg, 1).unwrap();
        assert_eq!(alone, again);
    }

    #[test]
    fn honest_receipts_match_wanting_voters() {
        let mut cfg = honest_noiseless(500);
        cfg.p_receipt = 0.3;
        let detail = run_election_detailed(&cfg, 0).unwrap();
        // With eer=0 and p_human=1 every voter authenticates once, so the
        // receipt count equals the number who want one.
        let mut pop_rng = derive_stream(cfg.seeds.master, 0, "population");
        let agents = generate_population(
            cfg.n_voters,
            cfg.n_candidates,
            &cfg.preference_weights,
            cfg.p_receipt,
            cfg.defection_prob,
            cfg.revote_rate,
            cfg.n_regions,
            &mut pop_rng,
        )
        .unwrap();
        let wanting = agents.iter().filter(|a| a.wants_receipt).count() as u64;
        assert_eq!(detail.result.receipts_sent, wanting);
    }

    #[test]
    fn vote_buying_with_full_defection_recovers_the_tally() {
        let mut cfg = honest_noiseless(300);
        cfg.defection_prob = 1.0;
        let baseline = run_election(&cfg, 0).unwrap();
        cfg.adversary = Some(AdversaryConfig {
            variant: "vote_buying".into(),
            targets: TargetSpec::Count(50),
            params: AdversaryParams::default(),
            unit_costs: None,
        });
        let bought = run_election(&cfg, 0).unwrap();
        assert_eq!(bought.official_tally, baseline.official_tally);
        assert!(bought.adversary_cost > 0.0);
    }

    #[test]
    fn automated_forger_with_p_machine_zero_never_authenticates() {
        let mut cfg = honest_noiseless(50);
        cfg.p_machine = 0.0;
        cfg.revote_rate = 0.0;
        cfg.adversary = Some(AdversaryConfig {
            variant: "voice_forgery".into(),
            targets: TargetSpec::Count(10),
            params: AdversaryParams {
                automated: Some(true),
                forge_rate: Some(0.1),
                tuned_against: Some(0),
                ..Default::default()
            },
            unit_costs: None,
        });
        let baseline_cfg = honest_noiseless(50);
        let baseline = run_election(&baseline_cfg, 0).unwrap();
        let attacked = run_election(&cfg, 0).unwrap();
        assert_eq!(attacked.official_tally, baseline.official_tally);
    }

    #[test]
    fn denial_jam_silences_a_region() {
        let mut cfg = honest_noiseless(2000);
        cfg.n_regions = 4;
        cfg.min_expected = 50;
        cfg.adversary = Some(AdversaryConfig {
            variant: "denial".into(),
            targets: TargetSpec::Regions(vec![2]),
            params: AdversaryParams::default(),
            unit_costs: None,
        });
        let r = run_election(&cfg, 0).unwrap();
        assert!(r.detections.silent_regions.iter().any(|&(region, _, _)| region == 2));
        assert!(r.adversary_cost > 0.0);
    }
}
