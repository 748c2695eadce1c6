//! Parametric speaker verification: prompt issuance, the repetition check
//! (captcha role), a two-Gaussian score model calibrated to a target EER,
//! forged-voice acceptance anchored at 50% against a tuned instance, and
//! the secret-features verifier ensemble.

use rand::Rng;
use rand_distr::{Distribution, Normal as NormalDist};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::authority::VoterRecord;
use crate::domain::{Speaker, Time, Utterance, VoterId};

#[derive(Debug, Error, PartialEq)]
pub enum VerifyError {
    #[error("eer must lie in [0, 0.5), got {0}")]
    EerOutOfRange(f64),
    #[error("sigma must be positive, got {0}")]
    BadSigma(f64),
    #[error("prompt corpus has {size} paragraphs, below the minimum {min}")]
    CorpusTooSmall { size: u32, min: u32 },
    #[error("probability {name}={value} out of [0, 1]")]
    BadProbability { name: &'static str, value: f64 },
    #[error("p_machine must not exceed p_human")]
    MachineAboveHuman,
    #[error("ensemble must contain at least one verifier instance")]
    EmptyEnsemble,
}

/// Effective genuine/impostor separation used for `eer = 0`: the tail mass
/// beyond 8.21 sigma is ~1.1e-16, i.e. exact at any simulated trial count.
const EXACT_Z: f64 = 8.2095;

/// Two-Gaussian equal-variance score model operating at a calibrated
/// threshold. Genuine scores ~ N(mu_genuine, sigma), impostor scores
/// ~ N(mu_impostor, sigma); the threshold sits at the midpoint so that
/// FAR = FRR = eer.
#[derive(Clone, Debug, PartialEq)]
pub struct VerifierModel {
    pub instance_id: u32,
    pub eer: f64,
    pub mu_genuine: f64,
    pub mu_impostor: f64,
    pub sigma: f64,
    pub threshold: f64,
    /// Per-instance shift of both means (secret-features ensemble).
    pub jitter: f64,
    /// Score deficit of a forged voice against a non-matched instance.
    pub mismatch_penalty: f64,
}

/// Calibrate a model to a target EER. The genuine/impostor separation is
/// `2 * sigma * z` with `z` the standard-normal upper quantile at `eer`,
/// and the threshold sits at the midpoint.
///
/// `eer = 0` is accepted as the noiseless limit (separation large enough
/// that error probabilities vanish at f64 precision).
pub fn calibrate(eer: f64, sigma: f64) -> Result<VerifierModel, VerifyError> {
    calibrate_instance(0, eer, sigma, 0.0)
}

/// Calibrate one ensemble member with a per-instance mean jitter.
pub fn calibrate_instance(
    instance_id: u32,
    eer: f64,
    sigma: f64,
    jitter: f64,
) -> Result<VerifierModel, VerifyError> {
    if !(0.0..0.5).contains(&eer) {
        return Err(VerifyError::EerOutOfRange(eer));
    }
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(VerifyError::BadSigma(sigma));
    }
    let z = if eer == 0.0 {
        EXACT_Z
    } else {
        Normal::new(0.0, 1.0).unwrap().inverse_cdf(1.0 - eer)
    };
    Ok(VerifierModel {
        instance_id,
        eer,
        mu_genuine: jitter + sigma * z,
        mu_impostor: jitter - sigma * z,
        sigma,
        threshold: jitter,
        jitter,
        mismatch_penalty: sigma,
    })
}

impl VerifierModel {
    pub fn with_mismatch_penalty(mut self, penalty: f64) -> Self {
        self.mismatch_penalty = penalty;
        self
    }

    /// Analytic false-accept rate at an arbitrary threshold.
    pub fn analytic_far(&self, threshold: f64) -> f64 {
        let n = Normal::new(self.mu_impostor, self.sigma).unwrap();
        1.0 - n.cdf(threshold)
    }

    /// Analytic false-reject rate at an arbitrary threshold.
    pub fn analytic_frr(&self, threshold: f64) -> f64 {
        let n = Normal::new(self.mu_genuine, self.sigma).unwrap();
        n.cdf(threshold)
    }
}

/// Corpus of prompt paragraphs, referenced by numeric id.
#[derive(Clone, Debug)]
pub struct PromptCorpus {
    size: u32,
    min_size: u32,
}

pub const DEFAULT_CORPUS_MIN: u32 = 10_000;

impl PromptCorpus {
    pub fn new(size: u32, min_size: u32) -> Result<Self, VerifyError> {
        if size < min_size.max(1) {
            return Err(VerifyError::CorpusTooSmall { size, min: min_size.max(1) });
        }
        Ok(PromptCorpus { size, min_size })
    }

    pub fn size(&self) -> u32 {
        self.size
    }

    pub fn min_size(&self) -> u32 {
        self.min_size
    }
}

/// Prompt paragraph id.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PromptId(pub u32);

/// Uniform draw from the corpus.
pub fn issue_prompt<R: Rng + ?Sized>(corpus: &PromptCorpus, rng: &mut R) -> PromptId {
    PromptId(rng.gen_range(0..corpus.size))
}

/// Parameters of the prompted-repetition check. The time limit is folded
/// into the pass probabilities rather than simulated on the clock.
#[derive(Clone, Debug)]
pub struct RepetitionParams {
    pub p_human: f64,
    pub p_machine: f64,
    pub time_limit: Time,
}

impl RepetitionParams {
    pub fn new(p_human: f64, p_machine: f64, time_limit: Time) -> Result<Self, VerifyError> {
        for (name, v) in [("p_human", p_human), ("p_machine", p_machine)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(VerifyError::BadProbability { name, value: v });
            }
        }
        if p_machine > p_human {
            return Err(VerifyError::MachineAboveHuman);
        }
        Ok(RepetitionParams { p_human, p_machine, time_limit })
    }
}

/// Did the caller correctly repeat the prompted paragraph in time?
///
/// Human-produced utterances (own voice, or a forger with a human in the
/// loop) pass with probability `p_human * prompt_echo_quality`; fully
/// automated forgers face the garbled prompt and pass with `p_machine`.
pub fn check_repetition<R: Rng + ?Sized>(
    _prompt: PromptId,
    utterance: &Utterance,
    params: &RepetitionParams,
    rng: &mut R,
) -> bool {
    let automated = utterance.forgery.map_or(false, |f| f.automated);
    let p = if automated {
        params.p_machine
    } else {
        params.p_human * utterance.prompt_echo_quality
    };
    rng.gen::<f64>() < p
}

/// Draw a verification score for the utterance against the profile owner
/// and compare it to the operating threshold.
///
/// Score distributions: genuine ~ N(mu_genuine, sigma); plain impostor
/// ~ N(mu_impostor, sigma); forged voice ~ N(threshold + delta, sigma)
/// with delta = 0 against the tuned instance (acceptance exactly 0.5) and
/// delta = -mismatch_penalty otherwise.
pub fn verify_speaker<R: Rng + ?Sized>(
    model: &VerifierModel,
    profile_owner: VoterId,
    utterance: &Utterance,
    rng: &mut R,
) -> bool {
    let mean = match utterance.forgery {
        Some(meta) => {
            if meta.tuned_against == Some(model.instance_id) {
                model.threshold
            } else {
                model.threshold - model.mismatch_penalty
            }
        }
        None => {
            if utterance.true_speaker == Speaker::Voter(profile_owner) {
                model.mu_genuine
            } else {
                model.mu_impostor
            }
        }
    };
    let score = NormalDist::new(mean, model.sigma).unwrap().sample(rng);
    score >= model.threshold
}

/// Secret-features ensemble: several calibrated verifier instances, one of
/// which is chosen at random per authentication and never revealed.
#[derive(Clone, Debug)]
pub struct VerifierEnsemble {
    instances: Vec<VerifierModel>,
}

impl VerifierEnsemble {
    pub fn from_instances(instances: Vec<VerifierModel>) -> Result<Self, VerifyError> {
        if instances.is_empty() {
            return Err(VerifyError::EmptyEnsemble);
        }
        Ok(VerifierEnsemble { instances })
    }

    /// Calibrate `n` instances sharing (eer, sigma, mismatch_penalty) with
    /// independent mean jitters drawn uniformly from ±0.25 sigma.
    pub fn calibrate<R: Rng + ?Sized>(
        n: u32,
        eer: f64,
        sigma: f64,
        mismatch_penalty: f64,
        rng: &mut R,
    ) -> Result<Self, VerifyError> {
        if n == 0 {
            return Err(VerifyError::EmptyEnsemble);
        }
        let mut instances = Vec::with_capacity(n as usize);
        for id in 0..n {
            let jitter = rng.gen_range(-0.25 * sigma..=0.25 * sigma);
            instances.push(
                calibrate_instance(id, eer, sigma, jitter)?.with_mismatch_penalty(mismatch_penalty),
            );
        }
        Ok(VerifierEnsemble { instances })
    }

    pub fn instances(&self) -> &[VerifierModel] {
        &self.instances
    }
}

/// Uniform instance selection; the choice is never revealed to the caller.
pub fn select_instance<'a, R: Rng + ?Sized>(
    ensemble: &'a VerifierEnsemble,
    rng: &mut R,
) -> &'a VerifierModel {
    let idx = rng.gen_range(0..ensemble.instances.len());
    &ensemble.instances[idx]
}

/// Append the collected voice sample to the voter's file. Only legal for
/// authenticated sessions; the default model keeps acceptance
/// probabilities stationary, so only the count changes.
pub fn append_sample(record: &mut VoterRecord, session_auth_ok: bool) {
    assert!(session_auth_ok, "append_sample requires an authenticated session");
    record.sample_count += 1;
}
