//! Simulation configuration: one JSON document aggregating every model
//! parameter, validated with key paths in the error messages.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::adversary::{Strategy, UnitCosts};
use crate::domain::{CandidateId, VoterId};
use crate::population::VoteTimeDist;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    FinalProtocol,
    PasswordOnly,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Seeds {
    pub master: u64,
}

impl Default for Seeds {
    fn default() -> Self {
        Seeds { master: 0 }
    }
}

/// Who the adversary targets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetSpec {
    /// Explicit voter ids.
    Voters(Vec<u32>),
    /// Region ids (denial only).
    Regions(Vec<u32>),
    /// This many voters, drawn uniformly without replacement.
    Count(u32),
}

/// Free-form per-variant parameters; unset keys fall back to defaults
/// derived from tau and the window.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdversaryParams {
    pub candidate: Option<u32>,
    pub vote_time: Option<f64>,
    pub bribe: Option<f64>,
    pub agreed_time: Option<f64>,
    pub forge_rate: Option<f64>,
    pub forgery_start: Option<f64>,
    pub believed_stop: Option<f64>,
    pub automated: Option<bool>,
    pub signature_tag: Option<u32>,
    pub signature_rate: Option<f64>,
    pub tuned_against: Option<u32>,
    pub n_devices: Option<u32>,
    pub awareness_delay: Option<f64>,
    pub sequester_start: Option<f64>,
    pub sequester_end: Option<f64>,
    pub jam_start: Option<f64>,
    pub jam_end: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdversaryConfig {
    pub variant: String,
    pub targets: TargetSpec,
    #[serde(default)]
    pub params: AdversaryParams,
    /// Overrides the top-level unit costs when present.
    #[serde(default)]
    pub unit_costs: Option<UnitCosts>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub tau_hours: f64,
    pub window_hours: f64,
    pub n_voters: u32,
    pub n_candidates: u32,
    pub n_regions: u32,
    pub n_authorities: u32,
    pub n_verifier_instances: u32,
    pub eer: f64,
    pub sigma: f64,
    /// In sigma units.
    pub mismatch_penalty: f64,
    pub p_human: f64,
    pub p_machine: f64,
    pub p_receipt: f64,
    pub revote_rate: f64,
    pub defection_prob: f64,
    pub preference_weights: Vec<f64>,
    pub vote_time_dist: VoteTimeDist,
    pub corpus_size: u32,
    pub mode: Mode,
    pub k_device: u64,
    pub k_sig: u64,
    pub min_expected: u32,
    pub z_crit: f64,
    pub adversary: Option<AdversaryConfig>,
    pub unit_costs: UnitCosts,
    pub seeds: Seeds,
    pub replications: u32,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            tau_hours: 200.0,
            window_hours: 200.0,
            n_voters: 1000,
            n_candidates: 2,
            n_regions: 10,
            n_authorities: 3,
            n_verifier_instances: 4,
            eer: 0.02,
            sigma: 1.0,
            mismatch_penalty: 1.0,
            p_human: 0.99,
            p_machine: 0.0,
            p_receipt: 0.5,
            revote_rate: 0.1,
            defection_prob: 0.5,
            preference_weights: vec![0.5, 0.5],
            vote_time_dist: VoteTimeDist::default(),
            corpus_size: 10_000,
            mode: Mode::FinalProtocol,
            k_device: 5,
            k_sig: 10,
            min_expected: 50,
            z_crit: 4.0,
            adversary: None,
            unit_costs: UnitCosts::default(),
            seeds: Seeds::default(),
            replications: 1,
        }
    }
}

impl SimConfig {
    /// Validate every field, collecting all problems with their key paths.
    pub fn validate(&self) -> Result<(), Vec<String>> {
        let mut errs = Vec::new();
        let mut prob = |key: &str, v: f64| {
            if !(0.0..=1.0).contains(&v) {
                errs.push(format!("{key}: probability {v} out of [0, 1]"));
            }
        };
        prob("p_human", self.p_human);
        prob("p_machine", self.p_machine);
        prob("p_receipt", self.p_receipt);
        prob("defection_prob", self.defection_prob);
        if self.p_machine > self.p_human {
            errs.push("p_machine: must not exceed p_human".into());
        }
        if !(0.0..0.5).contains(&self.eer) {
            errs.push(format!("eer: {} out of [0, 0.5)", self.eer));
        }
        if !(self.sigma > 0.0) {
            errs.push(format!("sigma: {} must be positive", self.sigma));
        }
        if self.tau_hours < 0.0 {
            errs.push(format!("tau_hours: {} must be non-negative", self.tau_hours));
        }
        if !(self.window_hours > 0.0) {
            errs.push(format!("window_hours: {} must be positive", self.window_hours));
        }
        if self.n_voters == 0 {
            errs.push("n_voters: must be at least 1".into());
        }
        if self.n_candidates < 2 {
            errs.push(format!("n_candidates: {} must be at least 2", self.n_candidates));
        }
        if self.preference_weights.len() != self.n_candidates as usize {
            errs.push(format!(
                "preference_weights: length {} does not match n_candidates {}",
                self.preference_weights.len(),
                self.n_candidates
            ));
        } else {
            let sum: f64 = self.preference_weights.iter().sum();
            if self.preference_weights.iter().any(|w| *w < 0.0) || (sum - 1.0).abs() > 1e-9 {
                errs.push(format!("preference_weights: must be non-negative and sum to 1 (sum {sum})"));
            }
        }
        if self.n_verifier_instances == 0 {
            errs.push("n_verifier_instances: must be at least 1".into());
        }
        if self.replications == 0 {
            errs.push("replications: must be at least 1".into());
        }
        if self.revote_rate < 0.0 {
            errs.push(format!("revote_rate: {} must be non-negative", self.revote_rate));
        }
        if let Some(adv) = &self.adversary {
            match adv.variant.as_str() {
                "proxy_baseline" | "vote_buying" | "voice_forgery" | "sequester" | "denial"
                | "bluff" => {}
                other => errs.push(format!("adversary.variant: unknown variant {other:?}")),
            }
            if adv.variant == "sequester" && adv.params.sequester_end.is_none() {
                errs.push("adversary.params.sequester_end: required for sequester".into());
            }
            if adv.variant == "denial" {
                if !matches!(adv.targets, TargetSpec::Regions(_)) {
                    errs.push("adversary.targets: denial requires regions".into());
                }
            } else if matches!(adv.targets, TargetSpec::Regions(_)) {
                errs.push(format!(
                    "adversary.targets: regions only valid for denial, not {}",
                    adv.variant
                ));
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(errs)
        }
    }

    pub fn effective_unit_costs(&self) -> UnitCosts {
        self.adversary
            .as_ref()
            .and_then(|a| a.unit_costs)
            .unwrap_or(self.unit_costs)
    }

    /// Materialize the configured adversary block into a typed strategy,
    /// resolving target counts and parameter defaults with the adversary
    /// rng stream.
    pub fn resolve_strategy<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<Strategy> {
        let adv = self.adversary.as_ref()?;
        let tau = self.tau_hours;
        let window = self.window_hours;
        let p = &adv.params;
        let candidate =
            CandidateId(p.candidate.unwrap_or(self.n_candidates - 1).min(self.n_candidates - 1));
        let voters = |spec: &TargetSpec, rng: &mut R| -> Vec<VoterId> {
            match spec {
                TargetSpec::Voters(v) => v.iter().map(|&i| VoterId(i)).collect(),
                TargetSpec::Regions(_) => Vec::new(),
                TargetSpec::Count(k) => {
                    // Uniform sample without replacement via partial shuffle.
                    let k = (*k).min(self.n_voters) as usize;
                    let mut pool: Vec<u32> = (0..self.n_voters).collect();
                    for i in 0..k {
                        let j = rng.gen_range(i..pool.len());
                        pool.swap(i, j);
                    }
                    pool[..k].iter().map(|&i| VoterId(i)).collect()
                }
            }
        };
        Some(match adv.variant.as_str() {
            "proxy_baseline" => Strategy::ProxyBaseline {
                targets: voters(&adv.targets, rng),
                candidate,
                vote_time: p.vote_time.unwrap_or(tau * 0.75),
            },
            "vote_buying" => Strategy::VoteBuying {
                targets: voters(&adv.targets, rng),
                candidate,
                agreed_time: p.agreed_time.unwrap_or(tau * 0.25),
                bribe: p.bribe.unwrap_or(self.effective_unit_costs().bribe),
            },
            "voice_forgery" => {
                let targets = voters(&adv.targets, rng);
                let n_targets = targets.len() as u32;
                Strategy::VoiceForgery {
                    targets,
                    candidate,
                    forge_rate: p.forge_rate.unwrap_or(0.05),
                    start: p.forgery_start.unwrap_or(0.0),
                    believed_stop: p.believed_stop.unwrap_or(tau + window),
                    automated: p.automated.unwrap_or(false),
                    signature_tag: p.signature_tag,
                    signature_rate: p.signature_rate.unwrap_or(1.0),
                    tuned_against: p.tuned_against,
                    n_devices: p.n_devices.unwrap_or(n_targets.max(1)),
                    awareness_delay: p.awareness_delay.unwrap_or(24.0),
                }
            }
            "sequester" => Strategy::Sequester {
                targets: voters(&adv.targets, rng),
                candidate,
                start: p.sequester_start.unwrap_or(tau * 0.5),
                end: p.sequester_end.unwrap_or(tau + window * 0.5),
            },
            "denial" => Strategy::Denial {
                regions: match &adv.targets {
                    TargetSpec::Regions(r) => r.clone(),
                    _ => Vec::new(),
                },
                start: p.jam_start.unwrap_or(0.0),
                end: p.jam_end.unwrap_or(tau + window),
            },
            "bluff" => Strategy::Bluff { targets: voters(&adv.targets, rng) },
            _ => return None,
        })
    }
}
