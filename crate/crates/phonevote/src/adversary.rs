//! Attack strategies with explicit cost accounting: password-proxy
//! baseline, vote buying with defection, voice-forgery revote wars,
//! sequester manipulation, denial-of-vote jamming, and bluff.
//!
//! Strategies never read authority-internal state. The adversary knows
//! tau and the window but not the sampled stop time; his default belief
//! is the worst case `tau + window`, so he must cover the whole window.

use std::collections::BTreeSet;

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{CandidateId, DeviceId, ForgeryMeta, ReceiptInput, Speaker, VoterId};
use crate::population::{react_revote, SessionIntent, VoterAgent};

#[derive(Debug, Error, PartialEq)]
pub enum AdversaryError {
    #[error("strategy targets unregistered voter {0:?}")]
    UnknownTarget(VoterId),
    #[error("interval end {end} must exceed start {start}")]
    BadInterval { start: f64, end: f64 },
    #[error("{0} must be non-negative")]
    NegativeParam(&'static str),
}

/// Device numbers used by adversary-operated phones, clear of the voter
/// device range.
pub const ADVERSARY_DEVICE_BASE: u32 = 1_000_000_000;

/// An adversary plan: variant, targets, and per-variant parameters.
#[derive(Clone, Debug)]
pub enum Strategy {
    /// Steal secrets and vote as a proxy. Only effective in the
    /// password-only baseline mode.
    ProxyBaseline { targets: Vec<VoterId>, candidate: CandidateId, vote_time: f64 },
    /// Pay targets to vote the adversary's way at an agreed time; each
    /// may defect back to her true choice.
    VoteBuying { targets: Vec<VoterId>, candidate: CandidateId, agreed_time: f64, bribe: f64 },
    /// Forge targets' voices and keep revoting on their behalf.
    VoiceForgery {
        targets: Vec<VoterId>,
        candidate: CandidateId,
        /// Forged calls per hour per target.
        forge_rate: f64,
        start: f64,
        /// The adversary's belief about when voting closes.
        believed_stop: f64,
        automated: bool,
        signature_tag: Option<u32>,
        /// Probability each forged call carries the signature tag.
        signature_rate: f64,
        tuned_against: Option<u32>,
        n_devices: u32,
        /// Hours until a target notices the manipulation and reacts.
        awareness_delay: f64,
    },
    /// Force a compliant vote, then deny phone access until `end`.
    Sequester { targets: Vec<VoterId>, candidate: CandidateId, start: f64, end: f64 },
    /// Suppress all calls from target regions during the jam interval.
    Denial { regions: Vec<u32>, start: f64, end: f64 },
    /// Pure intimidation; changes no votes at all.
    Bluff { targets: Vec<VoterId> },
}

/// A region-wide call suppression interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jam {
    pub region: u32,
    pub start: f64,
    pub end: f64,
}

/// Volumes of what the adversary actually did, for cost settlement.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ExecutedActions {
    pub bribes: u32,
    /// Sum of bribes actually paid (the per-target amount is a strategy
    /// parameter, not a unit cost).
    pub bribe_paid: f64,
    pub proxy_votes: u32,
    pub forged_calls: u32,
    pub sequester_voter_hours: f64,
    pub jam_region_hours: f64,
    pub intimidations: u32,
}

/// The materialized plan handed to the simulation engine.
#[derive(Clone, Debug, Default)]
pub struct AdversaryPlan {
    /// Calls placed by the adversary or by coerced/bought voters.
    pub intents: Vec<SessionIntent>,
    /// Voters whose honest schedule is dropped (sold or sequestered).
    pub replaced: BTreeSet<VoterId>,
    /// Phone-denial windows applied to targeted voters.
    pub phone_denials: Vec<(VoterId, (f64, f64))>,
    pub jams: Vec<Jam>,
    pub actions: ExecutedActions,
}

/// Per-unit prices of adversary actions. The interesting claims are
/// about how costs scale, not their absolute level, so the numbers are
/// configuration inputs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct UnitCosts {
    pub bribe: f64,
    pub proxy_per_vote: f64,
    pub per_forged_call: f64,
    pub sequester_per_voter_hour: f64,
    pub jam_per_region_hour: f64,
    pub intimidation: f64,
}

impl Default for UnitCosts {
    fn default() -> Self {
        UnitCosts {
            bribe: 10.0,
            proxy_per_vote: 1.0,
            per_forged_call: 1.0,
            sequester_per_voter_hour: 1.0,
            jam_per_region_hour: 100.0,
            intimidation: 1.0,
        }
    }
}

/// Accumulated cost of an executed strategy plus any detection events
/// copied from the audit.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct CostLedger {
    pub total: f64,
    pub breakdown: Vec<(String, f64)>,
    pub detection_events: Vec<String>,
}

fn check_targets(targets: &[VoterId], agents: &[VoterAgent]) -> Result<(), AdversaryError> {
    let n = agents.len() as u32;
    for t in targets {
        if t.0 >= n {
            return Err(AdversaryError::UnknownTarget(*t));
        }
    }
    Ok(())
}

fn check_interval(start: f64, end: f64) -> Result<(), AdversaryError> {
    if end <= start {
        return Err(AdversaryError::BadInterval { start, end });
    }
    Ok(())
}

/// Expand a strategy into concrete session intents and behavior
/// overrides. Pure given the rng stream; never consults authority state.
pub fn plan_actions<R: Rng + ?Sized>(
    strategy: &Strategy,
    agents: &[VoterAgent],
    tau: f64,
    window: f64,
    rng: &mut R,
) -> Result<AdversaryPlan, AdversaryError> {
    let mut plan = AdversaryPlan::default();
    let believed_stop_default = tau + window;
    match strategy {
        Strategy::ProxyBaseline { targets, candidate, vote_time } => {
            check_targets(targets, agents)?;
            if *vote_time < 0.0 {
                return Err(AdversaryError::NegativeParam("vote_time"));
            }
            for (i, &t) in targets.iter().enumerate() {
                plan.replaced.insert(t);
                plan.intents.push(SessionIntent {
                    time: *vote_time,
                    actor: Speaker::Adversary(0),
                    claimed: t,
                    knows_secret: true,
                    candidate: *candidate,
                    receipt_input: ReceiptInput::Skip,
                    scrutiny_request: false,
                    forgery: None,
                    device: DeviceId {
                        device: ADVERSARY_DEVICE_BASE + i as u32,
                        region: 0,
                    },
                });
                plan.actions.proxy_votes += 1;
            }
        }
        Strategy::VoteBuying { targets, candidate, agreed_time, bribe } => {
            check_targets(targets, agents)?;
            if *bribe < 0.0 {
                return Err(AdversaryError::NegativeParam("bribe"));
            }
            for &t in targets {
                let agent = &agents[t.0 as usize];
                plan.replaced.insert(t);
                plan.actions.bribes += 1;
                plan.actions.bribe_paid += *bribe;
                plan.intents.push(SessionIntent {
                    time: *agreed_time,
                    actor: Speaker::Voter(t),
                    claimed: t,
                    knows_secret: true,
                    candidate: *candidate,
                    receipt_input: ReceiptInput::Skip,
                    scrutiny_request: false,
                    forgery: None,
                    device: agent.device(),
                });
                if rng.gen::<f64>() < agent.defection_prob {
                    // Immediate quiet recovery vote, then an optional war.
                    plan.intents.push(SessionIntent {
                        time: agreed_time + 1.0,
                        actor: Speaker::Voter(t),
                        claimed: t,
                        knows_secret: true,
                        candidate: agent.true_choice,
                        receipt_input: ReceiptInput::Skip,
                        scrutiny_request: false,
                        forgery: None,
                        device: agent.device(),
                    });
                    plan.intents.extend(react_revote(
                        agent,
                        agreed_time + 1.0,
                        believed_stop_default,
                        rng,
                    ));
                }
            }
        }
        Strategy::VoiceForgery {
            targets,
            candidate,
            forge_rate,
            start,
            believed_stop,
            automated,
            signature_tag,
            signature_rate,
            tuned_against,
            n_devices,
            awareness_delay,
        } => {
            check_targets(targets, agents)?;
            if *forge_rate < 0.0 {
                return Err(AdversaryError::NegativeParam("forge_rate"));
            }
            let n_devices = (*n_devices).max(1);
            for (i, &t) in targets.iter().enumerate() {
                let agent = &agents[t.0 as usize];
                if *forge_rate > 0.0 && believed_stop > start {
                    let exp = Exp::new(*forge_rate).expect("positive rate");
                    let mut time = *start;
                    loop {
                        time += exp.sample(rng);
                        if time >= *believed_stop {
                            break;
                        }
                        let stamped = signature_tag
                            .filter(|_| rng.gen::<f64>() < *signature_rate);
                        plan.intents.push(SessionIntent {
                            time,
                            actor: Speaker::Adversary(0),
                            claimed: t,
                            knows_secret: true,
                            candidate: *candidate,
                            receipt_input: ReceiptInput::Skip,
                            scrutiny_request: false,
                            forgery: Some(ForgeryMeta {
                                forger_id: 0,
                                signature_tag: stamped,
                                tuned_against: *tuned_against,
                                automated: *automated,
                            }),
                            device: DeviceId {
                                device: ADVERSARY_DEVICE_BASE + (i as u32 % n_devices),
                                region: 0,
                            },
                        });
                        plan.actions.forged_calls += 1;
                    }
                }
                // The target notices the war after a delay and fights back.
                plan.intents.extend(react_revote(
                    agent,
                    start + awareness_delay,
                    *believed_stop,
                    rng,
                ));
            }
        }
        Strategy::Sequester { targets, candidate, start, end } => {
            check_targets(targets, agents)?;
            check_interval(*start, *end)?;
            for &t in targets {
                let agent = &agents[t.0 as usize];
                plan.replaced.insert(t);
                plan.phone_denials.push((t, (*start, *end)));
                plan.actions.sequester_voter_hours += end - start;
                // The coerced vote, placed under supervision at the start.
                plan.intents.push(SessionIntent {
                    time: *start,
                    actor: Speaker::Voter(t),
                    knows_secret: true,
                    claimed: t,
                    candidate: *candidate,
                    receipt_input: ReceiptInput::Skip,
                    scrutiny_request: false,
                    forgery: None,
                    device: agent.device(),
                });
                // Recovery vote the instant the phone comes back. Admitted
                // only if the election is still open at `end`.
                plan.intents.push(SessionIntent {
                    time: *end,
                    actor: Speaker::Voter(t),
                    knows_secret: true,
                    claimed: t,
                    candidate: agent.true_choice,
                    receipt_input: ReceiptInput::Skip,
                    scrutiny_request: true,
                    forgery: None,
                    device: agent.device(),
                });
            }
        }
        Strategy::Denial { regions, start, end } => {
            check_interval(*start, *end)?;
            for &region in regions {
                plan.jams.push(Jam { region, start: *start, end: *end });
                plan.actions.jam_region_hours += end - start;
            }
        }
        Strategy::Bluff { targets } => {
            check_targets(targets, agents)?;
            plan.actions.intimidations = targets.len() as u32;
        }
    }
    Ok(plan)
}

/// Price the executed actions: `total = sum(unit cost x volume)`.
pub fn settle_cost(actions: &ExecutedActions, costs: &UnitCosts) -> CostLedger {
    let items = [
        ("bribes", if actions.bribe_paid > 0.0 { actions.bribe_paid } else { actions.bribes as f64 * costs.bribe }),
        ("proxy_votes", actions.proxy_votes as f64 * costs.proxy_per_vote),
        ("forged_calls", actions.forged_calls as f64 * costs.per_forged_call),
        (
            "sequester_voter_hours",
            actions.sequester_voter_hours * costs.sequester_per_voter_hour,
        ),
        ("jam_region_hours", actions.jam_region_hours * costs.jam_per_region_hour),
        ("intimidations", actions.intimidations as f64 * costs.intimidation),
    ];
    let breakdown: Vec<(String, f64)> = items
        .iter()
        .filter(|(_, v)| *v != 0.0)
        .map(|(k, v)| (k.to_string(), *v))
        .collect();
    CostLedger {
        total: breakdown.iter().map(|(_, v)| v).sum(),
        breakdown,
        detection_events: Vec::new(),
    }
}
