//! Numeric oracles used only by the acceptance suite. They deliberately
//! avoid the crate's own numerics (statrs, `tally_events`) so agreement
//! between implementation and oracle is meaningful.

use phonevote::domain::{Time, VoteEvent};
use std::collections::BTreeMap;

/// Complementary error function, rational Chebyshev approximation
/// (absolute error < 1.2e-7 everywhere).
pub fn erfc(x: f64) -> f64 {
    let z = x.abs();
    let t = 1.0 / (1.0 + 0.5 * z);
    let ans = t
        * (-z * z - 1.26551223
            + t * (1.00002368
                + t * (0.37409196
                    + t * (0.09678418
                        + t * (-0.18628806
                            + t * (0.27886807
                                + t * (-1.13520398
                                    + t * (1.48851587
                                        + t * (-0.82215223 + t * 0.17087277)))))))))
            .exp();
    if x >= 0.0 {
        ans
    } else {
        2.0 - ans
    }
}

/// Standard normal CDF via `erfc`.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal quantile by bisection on [`normal_cdf`].
pub fn normal_quantile(p: f64) -> f64 {
    assert!((0.0..1.0).contains(&p) && p > 0.0, "quantile needs p in (0, 1)");
    let (mut lo, mut hi) = (-10.0f64, 10.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if normal_cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Two-sided Kolmogorov–Smirnov statistic of a sample against a CDF.
/// The sample need not be sorted.
pub fn ks_statistic(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = sample.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max(((i + 1) as f64 / n - f).abs());
        d = d.max((f - i as f64 / n).abs());
    }
    d
}

/// Asymptotic KS critical value at the 1% level is `KS_CRIT_1PCT / sqrt(n)`.
/// Frozen from an external computation of the Kolmogorov distribution.
pub const KS_CRIT_1PCT: f64 = 1.6276236307187293;

/// Brute-force last-vote-counts tally: for every claimed id, linearly
/// scan for its admissible event with the largest (time, seq) key; count
/// one vote for that event's candidate. Returns candidate index -> count.
pub fn brute_force_tally(events: &[VoteEvent], stop: Time) -> BTreeMap<u32, u64> {
    let mut voters: Vec<u32> = events.iter().map(|e| e.claimed.0).collect();
    voters.sort_unstable();
    voters.dedup();
    let mut tally: BTreeMap<u32, u64> = BTreeMap::new();
    for v in voters {
        let mut best: Option<(f64, u64, u32)> = None;
        for e in events {
            if e.claimed.0 != v || !e.auth_ok || e.time.as_hours() >= stop.as_hours() {
                continue;
            }
            let key = (e.time.as_hours(), e.seq, e.candidate.0);
            if best.map_or(true, |(t, s, _)| (key.0, key.1) > (t, s)) {
                best = Some(key);
            }
        }
        if let Some((_, _, cand)) = best {
            *tally.entry(cand).or_insert(0) += 1;
        }
    }
    tally
}
