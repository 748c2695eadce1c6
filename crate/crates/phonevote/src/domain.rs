//! Core value types shared by every other module: the simulation clock,
//! voter/candidate/device identifiers, symbolic utterances, vote events,
//! and the caller-visible session transcript.

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DomainError {
    #[error("session still open")]
    SessionOpen,
}

/// Hours since the election opened. Always finite and non-negative.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Time(f64);

impl Time {
    pub fn hours(h: f64) -> Self {
        assert!(h.is_finite() && h >= 0.0, "time must be finite and >= 0");
        Time(h)
    }

    pub fn as_hours(self) -> f64 {
        self.0
    }
}

impl fmt::Display for Time {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.6}h", self.0)
    }
}

/// Public registry index of a voter. Distinct from the secret credential.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VoterId(pub u32);

impl VoterId {
    /// Sentinel used in the audit export for sessions that claimed an
    /// id not present in the registry.
    pub const UNKNOWN: VoterId = VoterId(u32::MAX);
}

/// Opaque voter credential. Never serialized; the Debug impl is redacted
/// so it cannot leak through formatted transcripts or logs.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct SecretNumber(pub u64);

impl fmt::Debug for SecretNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SecretNumber(<redacted>)")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CandidateId(pub u32);

/// A phone identity: device number plus its geographic cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DeviceId {
    pub device: u32,
    pub region: u32,
}

/// Who actually produced the audio of a call.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Speaker {
    Voter(VoterId),
    Adversary(u32),
}

/// Forgery metadata attached to an utterance produced by a voice forger.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForgeryMeta {
    pub forger_id: u32,
    /// Honeytrap stamp, if the forgery toolchain carries one.
    pub signature_tag: Option<u32>,
    /// Verifier instance the forger tuned against, if any.
    pub tuned_against: Option<u32>,
    /// True for a fully automated forger with no human in the loop.
    pub automated: bool,
}

/// Symbolic stand-in for a voice sample: identity plus forgery metadata
/// plus an echo-quality scalar. No audio is modeled.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Utterance {
    pub true_speaker: Speaker,
    /// How well the prompted paragraph was repeated, in [0, 1].
    pub prompt_echo_quality: f64,
    /// Absent iff the utterance was produced by the speaker's own voice.
    pub forgery: Option<ForgeryMeta>,
}

impl Utterance {
    /// A voter speaking in her own voice.
    pub fn own_voice(voter: VoterId) -> Self {
        Utterance {
            true_speaker: Speaker::Voter(voter),
            prompt_echo_quality: 1.0,
            forgery: None,
        }
    }

    /// An adversary speaking in his own (non-matching) voice.
    pub fn impostor(agent: u32) -> Self {
        Utterance {
            true_speaker: Speaker::Adversary(agent),
            prompt_echo_quality: 1.0,
            forgery: None,
        }
    }

    /// An adversary playing a forged rendition of the target's voice.
    pub fn forged(agent: u32, meta: ForgeryMeta) -> Self {
        Utterance {
            true_speaker: Speaker::Adversary(agent),
            prompt_echo_quality: 1.0,
            forgery: Some(meta),
        }
    }
}

/// Caller input at the receipt question.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReceiptInput {
    Yes,
    No,
    Skip,
}

/// Stored receipt preference. Defaults to `No` on first contact.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReceiptPref {
    Yes,
    No,
}

/// One completed voting session as recorded in the authority trace.
///
/// Failed-auth sessions are retained with `auth_ok = false`; the tally
/// treats them as nonexistent but the audit module sees them.
#[derive(Clone, Debug, PartialEq)]
pub struct VoteEvent {
    pub time: Time,
    /// Tie-break for events at equal times; assigned at event creation.
    pub seq: u64,
    pub claimed: VoterId,
    pub device: DeviceId,
    /// Authority-internal. Never serialized into the public export.
    pub auth_ok: bool,
    pub candidate: CandidateId,
    pub receipt_input: ReceiptInput,
    pub scrutiny_requested: bool,
    pub forgery_meta: Option<ForgeryMeta>,
}

impl VoteEvent {
    /// Total order used by the last-vote-counts rule.
    pub fn order_key(&self) -> (f64, u64) {
        (self.time.as_hours(), self.seq)
    }

    /// Audit-grade JSON record: includes `auth_ok` and forgery metadata.
    pub fn to_audit_json(&self) -> serde_json::Value {
        serde_json::json!({
            "time": self.time.as_hours(),
            "seq": self.seq,
            "claimed": self.claimed.0,
            "device": self.device.device,
            "region": self.device.region,
            "auth_ok": self.auth_ok,
            "candidate": self.candidate.0,
            "receipt_input": self.receipt_input,
            "scrutiny_requested": self.scrutiny_requested,
            "forgery_meta": self.forgery_meta,
        })
    }

    /// Public JSON record: same minus `auth_ok` and forgery metadata.
    pub fn to_public_json(&self) -> serde_json::Value {
        serde_json::json!({
            "time": self.time.as_hours(),
            "seq": self.seq,
            "claimed": self.claimed.0,
            "device": self.device.device,
            "region": self.device.region,
            "candidate": self.candidate.0,
            "receipt_input": self.receipt_input,
            "scrutiny_requested": self.scrutiny_requested,
        })
    }
}

/// Kinds of caller-visible messages. The sequence emitted in a session is
/// a function of the caller's inputs only, never of the auth outcome.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MessageKind {
    Greet,
    Prompt,
    VoteAck,
    ReceiptQ,
    ScrutinyAck,
    Done,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Message {
    pub kind: MessageKind,
    /// Randomized payload slot (e.g. the prompt paragraph id).
    pub payload: Option<String>,
}

/// Ordered caller-visible messages of one session.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SessionTranscript {
    messages: Vec<Message>,
    ended: bool,
}

impl SessionTranscript {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, kind: MessageKind, payload: Option<String>) {
        assert!(!self.ended, "cannot append to an ended session transcript");
        self.messages.push(Message { kind, payload });
    }

    /// Mark the session ended (normal completion or caller hang-up).
    pub fn end(&mut self) {
        self.ended = true;
    }

    pub fn is_ended(&self) -> bool {
        self.ended
    }

    pub fn messages(&self) -> &[Message] {
        &self.messages
    }

    /// Serialize the caller-visible transcript (kinds and payloads).
    pub fn render(&self) -> String {
        serde_json::to_string(&self.messages).expect("transcript serializes")
    }
}

/// Message-kind sequence with randomized payloads masked out.
///
/// Errors with [`DomainError::SessionOpen`] if the session has not ended.
pub fn transcript_template(transcript: &SessionTranscript) -> Result<Vec<MessageKind>, DomainError> {
    if !transcript.is_ended() {
        return Err(DomainError::SessionOpen);
    }
    Ok(transcript.messages().iter().map(|m| m.kind).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn template_masks_payloads() {
        let mut t = SessionTranscript::new();
        t.push(MessageKind::Greet, None);
        t.push(MessageKind::Prompt, Some("paragraph-42".into()));
        t.push(MessageKind::VoteAck, None);
        t.push(MessageKind::ReceiptQ, None);
        t.push(MessageKind::Done, None);
        t.end();
        assert_eq!(
            transcript_template(&t).unwrap(),
            vec![
                MessageKind::Greet,
                MessageKind::Prompt,
                MessageKind::VoteAck,
                MessageKind::ReceiptQ,
                MessageKind::Done
            ]
        );
    }

    #[test]
    fn open_session_is_an_error() {
        let mut t = SessionTranscript::new();
        t.push(MessageKind::Greet, None);
        assert_eq!(transcript_template(&t), Err(DomainError::SessionOpen));
    }

    #[test]
    fn aborted_session_is_a_template_prefix() {
        let mut t = SessionTranscript::new();
        t.push(MessageKind::Greet, None);
        t.end(); // caller hung up
        assert_eq!(transcript_template(&t).unwrap(), vec![MessageKind::Greet]);
    }

    #[test]
    fn secret_debug_is_redacted() {
        let s = SecretNumber(0xDEADBEEF);
        assert_eq!(format!("{s:?}"), "SecretNumber(<redacted>)");
    }

    #[test]
    fn audit_export_has_auth_ok_and_public_does_not() {
        let ev = VoteEvent {
            time: Time::hours(10.0),
            seq: 0,
            claimed: VoterId(3),
            device: DeviceId { device: 3, region: 1 },
            auth_ok: false,
            candidate: CandidateId(0),
            receipt_input: ReceiptInput::Skip,
            scrutiny_requested: false,
            forgery_meta: None,
        };
        let audit = ev.to_audit_json();
        let public = ev.to_public_json();
        assert_eq!(audit["auth_ok"], serde_json::json!(false));
        assert!(public.get("auth_ok").is_none());
        assert!(public.get("forgery_meta").is_none());
    }
}
