//! The election authority: per-session authentication pipeline, vote
//! recording with silent discard, receipt-preference memory with skip
//! semantics, high-scrutiny flags, last-vote-counts tallying, and
//! post-election receipt dispatch.
//!
//! Failed authentications are never surfaced to the caller: every session
//! runs the same message sequence and "discarded" votes are retained in
//! the trace flagged `auth_ok = false` so the audit module can see them.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;

use crate::domain::{
    CandidateId, DeviceId, ForgeryMeta, MessageKind, ReceiptInput, ReceiptPref, SecretNumber,
    SessionTranscript, Time, Utterance, VoteEvent, VoterId,
};
use crate::verify::{
    append_sample, check_repetition, issue_prompt, select_instance, verify_speaker, PromptCorpus,
    RepetitionParams, VerifierEnsemble,
};

/// Which authentication pipeline is active.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AuthMode {
    /// Secret number + prompted repetition + speaker verification.
    FinalProtocol,
    /// Secret number only (the baseline that admits proxies).
    PasswordOnly,
}

/// Authority-side registry entry for one voter.
#[derive(Clone, Debug)]
pub struct VoterRecord {
    pub voter: VoterId,
    pub(crate) secret: SecretNumber,
    /// Enrollment sample plus one per authenticated vote.
    pub sample_count: u32,
    pub receipt_pref: ReceiptPref,
    pub scrutiny: bool,
    pub last_authentic_vote: Option<(Time, CandidateId)>,
}

impl VoterRecord {
    pub fn new(voter: VoterId, secret: SecretNumber) -> Self {
        VoterRecord {
            voter,
            secret,
            sample_count: 1,
            receipt_pref: ReceiptPref::No,
            scrutiny: false,
            last_authentic_vote: None,
        }
    }
}

/// Caller-visible acknowledgement. Identical regardless of auth outcome.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ack {
    Ok,
    /// Polite refusal of a second vote in the same call.
    AlreadyVoted,
}

/// One phone call in progress.
#[derive(Debug)]
pub struct Session {
    claimed: VoterId,
    entered_secret: SecretNumber,
    device: DeviceId,
    start_time: Time,
    verifier_instance: Option<u32>,
    auth: Option<bool>,
    forgery_meta: Option<ForgeryMeta>,
    event_index: Option<usize>,
    transcript: SessionTranscript,
}

impl Session {
    pub fn transcript(&self) -> &SessionTranscript {
        &self.transcript
    }

    /// Authority-internal; never emitted to the caller.
    pub fn auth_ok(&self) -> bool {
        self.auth.expect("authenticate has not run")
    }
}

/// The single-writer election-authority state machine.
pub struct AuthorityState {
    registry: BTreeMap<VoterId, VoterRecord>,
    trace: Vec<VoteEvent>,
    mode: AuthMode,
    ensemble: VerifierEnsemble,
    corpus: PromptCorpus,
    repetition: RepetitionParams,
    next_seq: u64,
}

impl AuthorityState {
    pub fn new(
        mode: AuthMode,
        ensemble: VerifierEnsemble,
        corpus: PromptCorpus,
        repetition: RepetitionParams,
    ) -> Self {
        AuthorityState {
            registry: BTreeMap::new(),
            trace: Vec::new(),
            mode,
            ensemble,
            corpus,
            repetition,
            next_seq: 0,
        }
    }

    pub fn register(&mut self, voter: VoterId, secret: SecretNumber) {
        self.registry.insert(voter, VoterRecord::new(voter, secret));
    }

    pub fn record(&self, voter: VoterId) -> Option<&VoterRecord> {
        self.registry.get(&voter)
    }

    pub fn records(&self) -> impl Iterator<Item = &VoterRecord> {
        self.registry.values()
    }

    pub fn trace(&self) -> &[VoteEvent] {
        &self.trace
    }

    /// Voters currently flagged high-scrutiny.
    pub fn scrutiny_set(&self) -> BTreeSet<VoterId> {
        self.registry.values().filter(|r| r.scrutiny).map(|r| r.voter).collect()
    }

    /// Open a session: the caller claims an identity and keys her secret.
    pub fn begin_session(
        &self,
        claimed: VoterId,
        entered_secret: SecretNumber,
        device: DeviceId,
        time: Time,
    ) -> Session {
        let mut transcript = SessionTranscript::new();
        transcript.push(MessageKind::Greet, None);
        Session {
            claimed,
            entered_secret,
            device,
            start_time: time,
            verifier_instance: None,
            auth: None,
            forgery_meta: None,
            event_index: None,
            transcript,
        }
    }

    /// Run the authentication pipeline. The result is stored internally
    /// and never reflected in the transcript; an unknown claimed id is a
    /// failed auth with an identical caller experience, not an error.
    pub fn authenticate<R: Rng + ?Sized>(
        &self,
        session: &mut Session,
        utterance: &Utterance,
        rng: &mut R,
    ) {
        assert!(session.auth.is_none(), "auth_ok is computed exactly once per session");
        let model = select_instance(&self.ensemble, rng);
        let prompt = issue_prompt(&self.corpus, rng);
        session
            .transcript
            .push(MessageKind::Prompt, Some(format!("paragraph-{}", prompt.0)));

        let secret_ok = self
            .registry
            .get(&session.claimed)
            .map_or(false, |r| r.secret == session.entered_secret);
        // Draw the voice pipeline in both modes so rng consumption does not
        // depend on configuration state.
        let rep_ok = check_repetition(prompt, utterance, &self.repetition, rng);
        let voice_ok = verify_speaker(model, session.claimed, utterance, rng);

        let auth = match self.mode {
            AuthMode::FinalProtocol => secret_ok && rep_ok && voice_ok,
            AuthMode::PasswordOnly => secret_ok,
        };
        session.verifier_instance = Some(model.instance_id);
        session.forgery_meta = utterance.forgery;
        session.auth = Some(auth);
    }

    /// Record the caller's vote. A failed-auth vote is logically discarded
    /// (flagged, excluded from the tally) but the acknowledgement and the
    /// trace append are identical in both cases.
    pub fn cast_vote(&mut self, session: &mut Session, candidate: CandidateId) -> Ack {
        let auth = session.auth.expect("cast_vote requires authenticate first");
        session.transcript.push(MessageKind::VoteAck, None);
        if session.event_index.is_some() {
            return Ack::AlreadyVoted;
        }
        let registered = self.registry.contains_key(&session.claimed);
        let event = VoteEvent {
            time: session.start_time,
            seq: self.next_seq,
            claimed: if registered { session.claimed } else { VoterId::UNKNOWN },
            device: session.device,
            auth_ok: auth,
            candidate,
            receipt_input: ReceiptInput::Skip,
            scrutiny_requested: false,
            forgery_meta: session.forgery_meta,
        };
        self.next_seq += 1;
        session.event_index = Some(self.trace.len());
        self.trace.push(event);

        if auth {
            let record = self
                .registry
                .get_mut(&session.claimed)
                .expect("authenticated session implies a registered voter");
            if let Some((prev, _)) = record.last_authentic_vote {
                assert!(
                    session.start_time > prev,
                    "authentic vote times must strictly increase per voter"
                );
            }
            record.last_authentic_vote = Some((session.start_time, candidate));
            append_sample(record, auth);
        }
        Ack::Ok
    }

    /// The receipt question. Skip preserves the stored setting; input from
    /// a failed-auth caller is swallowed with the same acknowledgement.
    pub fn set_receipt_preference(&mut self, session: &mut Session, input: ReceiptInput) -> Ack {
        let auth = session.auth.expect("receipt question comes after authenticate");
        assert!(session.event_index.is_some(), "receipt question comes after cast_vote");
        session.transcript.push(MessageKind::ReceiptQ, None);
        let idx = session.event_index.unwrap();
        self.trace[idx].receipt_input = input;
        if auth {
            match input {
                ReceiptInput::Yes => {
                    self.registry.get_mut(&session.claimed).unwrap().receipt_pref = ReceiptPref::Yes
                }
                ReceiptInput::No => {
                    self.registry.get_mut(&session.claimed).unwrap().receipt_pref = ReceiptPref::No
                }
                ReceiptInput::Skip => {}
            }
        }
        Ack::Ok
    }

    /// Voter-initiated high-scrutiny flag; takes effect only when the
    /// session authenticated, acknowledged identically either way.
    pub fn set_high_scrutiny(&mut self, session: &mut Session) -> Ack {
        let auth = session.auth.expect("scrutiny request comes after authenticate");
        session.transcript.push(MessageKind::ScrutinyAck, None);
        if let Some(idx) = session.event_index {
            self.trace[idx].scrutiny_requested = true;
        }
        if auth {
            self.registry.get_mut(&session.claimed).unwrap().scrutiny = true;
        }
        Ack::Ok
    }

    /// Normal end of call.
    pub fn complete_session(&self, mut session: Session) -> SessionTranscript {
        session.transcript.push(MessageKind::Done, None);
        session.transcript.end();
        session.transcript
    }

    /// Caller hung up mid-call; the partial transcript is still a valid
    /// (prefix) template.
    pub fn hang_up(&self, mut session: Session) -> SessionTranscript {
        session.transcript.end();
        session.transcript
    }

    /// Last-vote-counts tally over this authority's trace.
    pub fn tally(&self, stop_time: Time) -> BTreeMap<CandidateId, u64> {
        tally_events(&self.trace, stop_time)
    }

    /// Post-election receipt dispatch: one receipt per voter who has at
    /// least one authentic pre-stop vote and whose stored preference is
    /// "yes". The receipt carries the voter id and nothing more.
    pub fn dispatch_receipts(&self, stop_time: Time) -> BTreeSet<VoterId> {
        let mut voted: BTreeSet<VoterId> = BTreeSet::new();
        for ev in &self.trace {
            if ev.auth_ok && ev.time < stop_time {
                voted.insert(ev.claimed);
            }
        }
        voted
            .into_iter()
            .filter(|v| {
                self.registry
                    .get(v)
                    .map_or(false, |r| r.receipt_pref == ReceiptPref::Yes)
            })
            .collect()
    }

    /// Audit-grade export: one JSON object per event, auth and forgery
    /// metadata included.
    pub fn export_audit_jsonl(&self) -> String {
        let mut out = String::new();
        for ev in &self.trace {
            out.push_str(&ev.to_audit_json().to_string());
            out.push('\n');
        }
        out
    }

    /// Public export: same records minus `auth_ok` and forgery metadata.
    pub fn export_public_jsonl(&self) -> String {
        let mut out = String::new();
        for ev in &self.trace {
            out.push_str(&ev.to_public_json().to_string());
            out.push('\n');
        }
        out
    }
}

/// Last-vote-counts rule over an arbitrary event slice: each voter
/// contributes one count for the candidate of her latest `auth_ok` event
/// strictly before `stop_time`; everything else is ignored.
pub fn tally_events(events: &[VoteEvent], stop_time: Time) -> BTreeMap<CandidateId, u64> {
    let mut last: BTreeMap<VoterId, (f64, u64, CandidateId)> = BTreeMap::new();
    for ev in events {
        if !ev.auth_ok || !(ev.time < stop_time) {
            continue;
        }
        let key = ev.order_key();
        match last.get(&ev.claimed) {
            Some(&(t, s, _)) if (t, s) >= key => {}
            _ => {
                last.insert(ev.claimed, (key.0, key.1, ev.candidate));
            }
        }
    }
    let mut tally = BTreeMap::new();
    for (_, (_, _, cand)) in last {
        *tally.entry(cand).or_insert(0) += 1;
    }
    tally
}

/// Receipt set as CSV with a single `voter_id` column.
pub fn receipts_csv(receipts: &BTreeSet<VoterId>) -> String {
    let mut out = String::from("voter_id\n");
    for v in receipts {
        out.push_str(&format!("{}\n", v.0));
    }
    out
}
