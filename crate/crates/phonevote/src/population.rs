//! Voter behavior generation: honest voting schedules, the receipt-desire
//! mix, and revote reactions of voters who notice their vote being
//! manipulated.

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{CandidateId, DeviceId, ForgeryMeta, ReceiptInput, Speaker, VoterId};

#[derive(Debug, Error, PartialEq)]
pub enum PopulationError {
    #[error("n_voters must be at least 1")]
    NoVoters,
    #[error("preference_weights must be non-negative and sum to 1 (got sum {0})")]
    BadWeights(f64),
    #[error("preference_weights length {got} does not match n_candidates {expected}")]
    WeightsLength { got: usize, expected: usize },
    #[error("probability {name}={value} out of [0, 1]")]
    BadProbability { name: &'static str, value: f64 },
}

/// Honest vote-time distribution; uniform on `[lo, hi]` with `hi`
/// defaulting to the announced epoch tau.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VoteTimeDist {
    #[serde(default)]
    pub lo: f64,
    /// Upper bound in hours; `None` means tau.
    #[serde(default)]
    pub hi: Option<f64>,
}

impl Default for VoteTimeDist {
    fn default() -> Self {
        VoteTimeDist { lo: 0.0, hi: None }
    }
}

/// Behavioral model of one voter.
#[derive(Clone, Debug)]
pub struct VoterAgent {
    pub voter: VoterId,
    pub true_choice: CandidateId,
    pub wants_receipt: bool,
    /// Chance a bought voter defects back to her true choice.
    pub defection_prob: f64,
    /// Expected revotes per hour while aware of manipulation.
    pub revote_rate: f64,
    pub region: u32,
    /// Intervals during which the voter has no phone access.
    pub phone_denied: Vec<(f64, f64)>,
}

impl VoterAgent {
    pub fn phone_access(&self, t: f64) -> bool {
        !self.phone_denied.iter().any(|&(a, b)| t >= a && t < b)
    }

    pub fn device(&self) -> DeviceId {
        DeviceId { device: self.voter.0, region: self.region }
    }
}

/// One planned call: who dials in, claiming whom, saying what.
#[derive(Clone, Debug)]
pub struct SessionIntent {
    pub time: f64,
    pub actor: Speaker,
    pub claimed: VoterId,
    /// Whether the caller knows the claimed voter's secret number.
    pub knows_secret: bool,
    pub candidate: CandidateId,
    pub receipt_input: ReceiptInput,
    pub scrutiny_request: bool,
    pub forgery: Option<ForgeryMeta>,
    pub device: DeviceId,
}

/// Draw a population with i.i.d. true choices from `preference_weights`
/// and i.i.d. receipt desire Bernoulli(`p_receipt`). Regions are uniform.
#[allow(clippy::too_many_arguments)]
pub fn generate_population<R: Rng + ?Sized>(
    n_voters: u32,
    n_candidates: u32,
    preference_weights: &[f64],
    p_receipt: f64,
    defection_prob: f64,
    revote_rate: f64,
    n_regions: u32,
    rng: &mut R,
) -> Result<Vec<VoterAgent>, PopulationError> {
    if n_voters == 0 {
        return Err(PopulationError::NoVoters);
    }
    if preference_weights.len() != n_candidates as usize {
        return Err(PopulationError::WeightsLength {
            got: preference_weights.len(),
            expected: n_candidates as usize,
        });
    }
    let sum: f64 = preference_weights.iter().sum();
    if preference_weights.iter().any(|&w| !(0.0..=1.0).contains(&w)) || (sum - 1.0).abs() > 1e-9 {
        return Err(PopulationError::BadWeights(sum));
    }
    for (name, v) in [("p_receipt", p_receipt), ("defection_prob", defection_prob)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(PopulationError::BadProbability { name, value: v });
        }
    }

    let mut agents = Vec::with_capacity(n_voters as usize);
    for i in 0..n_voters {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut choice = n_candidates - 1;
        for (c, &w) in preference_weights.iter().enumerate() {
            acc += w;
            if u < acc {
                choice = c as u32;
                break;
            }
        }
        agents.push(VoterAgent {
            voter: VoterId(i),
            true_choice: CandidateId(choice),
            wants_receipt: rng.gen::<f64>() < p_receipt,
            defection_prob,
            revote_rate,
            region: rng.gen_range(0..n_regions.max(1)),
            phone_denied: Vec::new(),
        });
    }
    Ok(agents)
}

/// Number of voters per region (for the silent-region detector).
pub fn region_populations(agents: &[VoterAgent], n_regions: u32) -> Vec<u32> {
    let mut pops = vec![0u32; n_regions.max(1) as usize];
    for a in agents {
        pops[a.region as usize] += 1;
    }
    pops
}

/// One honest vote at a uniform time before tau, for the true choice,
/// answering yes at the receipt question iff the voter wants one.
pub fn schedule_honest<R: Rng + ?Sized>(
    agent: &VoterAgent,
    tau: f64,
    dist: &VoteTimeDist,
    rng: &mut R,
) -> SessionIntent {
    let hi = dist.hi.unwrap_or(tau).min(tau);
    let lo = dist.lo.min(hi);
    let time = if hi > lo { rng.gen_range(lo..hi) } else { lo };
    SessionIntent {
        time,
        actor: Speaker::Voter(agent.voter),
        claimed: agent.voter,
        knows_secret: true,
        candidate: agent.true_choice,
        receipt_input: if agent.wants_receipt { ReceiptInput::Yes } else { ReceiptInput::Skip },
        scrutiny_request: false,
        forgery: None,
        device: agent.device(),
    }
}

/// Revote war reaction: a Poisson stream of true-choice revotes at
/// `revote_rate` on `[observed_at, stop_bound]`, skipping instants where
/// the voter has no phone. The first revote also requests high scrutiny.
pub fn react_revote<R: Rng + ?Sized>(
    agent: &VoterAgent,
    observed_at: f64,
    stop_bound: f64,
    rng: &mut R,
) -> Vec<SessionIntent> {
    let mut intents = Vec::new();
    if agent.revote_rate <= 0.0 || stop_bound <= observed_at {
        return intents;
    }
    let exp = Exp::new(agent.revote_rate).expect("positive rate");
    let mut t = observed_at;
    loop {
        t += exp.sample(rng);
        if t >= stop_bound {
            break;
        }
        if !agent.phone_access(t) {
            continue;
        }
        intents.push(SessionIntent {
            time: t,
            actor: Speaker::Voter(agent.voter),
            claimed: agent.voter,
            knows_secret: true,
            candidate: agent.true_choice,
            receipt_input: ReceiptInput::Skip,
            scrutiny_request: intents.is_empty(),
            forgery: None,
            device: agent.device(),
        });
    }
    intents
}
