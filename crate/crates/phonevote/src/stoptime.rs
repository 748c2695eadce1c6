//! Random stopping-time sampling and the binding commit-reveal scheme,
//! reused for both the stop-time secret and multi-authority counts.
//!
//! The commitment is `SHA-256(domain_tag || payload || nonce)` with a
//! fresh 32-byte nonce per commitment. The domain tag keeps a stop-time
//! reveal from being replayed as a count reveal and vice versa.

use rand::Rng;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::domain::Time;

#[derive(Debug, Error, PartialEq)]
pub enum StopTimeError {
    #[error("window must be positive, got {0}")]
    BadWindow(f64),
    #[error("commitment payload must be non-empty")]
    EmptyPayload,
}

/// The sampled stopping plan. `x` stays secret until reveal; publishing
/// `tau` and `window` is safe.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StoppingPlan {
    pub tau: Time,
    pub window: Time,
    pub x: f64,
    pub stop_time: Time,
}

/// Draw `x ~ Uniform[0, 1]` and fix the stop time at `tau + window * x`.
pub fn sample_stop<R: Rng + ?Sized>(
    tau: Time,
    window: Time,
    rng: &mut R,
) -> Result<StoppingPlan, StopTimeError> {
    if !(window.as_hours() > 0.0) {
        return Err(StopTimeError::BadWindow(window.as_hours()));
    }
    let x: f64 = rng.gen();
    let stop_time = Time::hours(tau.as_hours() + window.as_hours() * x);
    Ok(StoppingPlan { tau, window, x, stop_time })
}

/// Canonical committed payload for a stop time: decimal hours with six
/// fractional digits.
pub fn stop_time_payload(stop_time: Time) -> Vec<u8> {
    format!("{:.6}", stop_time.as_hours()).into_bytes()
}

/// Separates commitment contexts so a reveal can never be replayed from
/// one context into another.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CommitTag {
    StopTime,
    Count,
}

impl CommitTag {
    fn bytes(self) -> &'static [u8] {
        match self {
        CommitTag::StopTime => b"phonevote:stop-time:v1\x00",
        CommitTag::Count => b"phonevote:count:v1\x00",
        }
    }
}

/// A binding commitment: digest safe to publish, payload and nonce held
/// back until reveal.
#[derive(Clone, Debug, PartialEq)]
pub struct CommitmentRecord {
    pub tag: CommitTag,
    pub payload: Vec<u8>,
    pub nonce: [u8; 32],
    pub digest: [u8; 32],
}

impl CommitmentRecord {
    pub fn digest_hex(&self) -> String {
        hex::encode(self.digest)
    }

    pub fn nonce_hex(&self) -> String {
        hex::encode(self.nonce)
    }
}

fn digest_of(tag: CommitTag, payload: &[u8], nonce: &[u8; 32]) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(tag.bytes());
    h.update(payload);
    h.update(nonce);
    h.finalize().into()
}

/// Commit to a payload under a fresh random nonce.
pub fn commit<R: Rng + ?Sized>(
    tag: CommitTag,
    payload: &[u8],
    rng: &mut R,
) -> Result<CommitmentRecord, StopTimeError> {
    if payload.is_empty() {
        return Err(StopTimeError::EmptyPayload);
    }
    let mut nonce = [0u8; 32];
    rng.fill_bytes(&mut nonce);
    let digest = digest_of(tag, payload, &nonce);
    Ok(CommitmentRecord { tag, payload: payload.to_vec(), nonce, digest })
}

/// Anyone can recompute the digest from a revealed (payload, nonce) pair.
pub fn verify_commitment(tag: CommitTag, digest: &[u8; 32], payload: &[u8], nonce: &[u8; 32]) -> bool {
    digest_of(tag, payload, nonce) == *digest
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn stop_boundaries_and_window_validation() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let plan = sample_stop(Time::hours(200.0), Time::hours(200.0), &mut rng).unwrap();
        assert!(plan.stop_time.as_hours() >= 200.0 && plan.stop_time.as_hours() <= 400.0);
        assert!(
            (plan.stop_time.as_hours() - (200.0 + 200.0 * plan.x)).abs() == 0.0,
            "stop_time must equal tau + window * x exactly"
        );
        assert_eq!(
            sample_stop(Time::hours(200.0), Time::hours(0.0), &mut rng),
            Err(StopTimeError::BadWindow(0.0))
        );
    }

    #[test]
    fn fresh_nonces_give_distinct_digests() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = commit(CommitTag::StopTime, b"300.000000", &mut rng).unwrap();
        let b = commit(CommitTag::StopTime, b"300.000000", &mut rng).unwrap();
        assert_ne!(a.digest, b.digest);
        assert_eq!(a.digest.len(), 32);
    }

    #[test]
    fn round_trip_and_tamper() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let c = commit(CommitTag::StopTime, b"271.828182", &mut rng).unwrap();
        assert!(verify_commitment(CommitTag::StopTime, &c.digest, &c.payload, &c.nonce));
        assert!(!verify_commitment(CommitTag::StopTime, &c.digest, b"271.828183", &c.nonce));
        let mut bad_nonce = c.nonce;
        bad_nonce[0] ^= 1;
        assert!(!verify_commitment(CommitTag::StopTime, &c.digest, &c.payload, &bad_nonce));
        // Domain separation: a count reveal cannot satisfy a stop-time digest.
        assert!(!verify_commitment(CommitTag::Count, &c.digest, &c.payload, &c.nonce));
        assert!(commit(CommitTag::Count, b"", &mut rng).is_err());
    }

    #[test]
    fn fixed_test_vector() {
        // Frozen vector for the default SHA-256 commitment layout.
        let nonce = [0x11u8; 32];
        let digest = digest_of(CommitTag::StopTime, b"300.000000", &nonce);
        assert_eq!(
            hex::encode(digest),
            "2419459714b6aa65e273f9af8e4157cd2efda987dfb128b3ff71c4caf494423c"
        );
    }

    #[test]
    fn honest_votes_before_tau_always_precede_the_stop() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let plan = sample_stop(Time::hours(200.0), Time::hours(200.0), &mut rng).unwrap();
            assert!(plan.stop_time.as_hours() >= plan.tau.as_hours());
        }
    }

    proptest! {
        #[test]
        fn commitments_always_round_trip(payload in proptest::collection::vec(any::<u8>(), 1..64), seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let c = commit(CommitTag::Count, &payload, &mut rng).unwrap();
            prop_assert!(verify_commitment(CommitTag::Count, &c.digest, &c.payload, &c.nonce));
        }

        #[test]
        fn stop_time_stays_in_window(tau in 0.0f64..1000.0, window in 0.1f64..1000.0, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let plan = sample_stop(Time::hours(tau), Time::hours(window), &mut rng).unwrap();
            prop_assert!(plan.stop_time.as_hours() >= tau);
            prop_assert!(plan.stop_time.as_hours() <= tau + window);
        }
    }
}
