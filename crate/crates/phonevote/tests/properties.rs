//! Statistical properties that sit above the unit level: commitment
//! hiding and partition uniformity.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use phonevote::audit::partition_voters;
use phonevote::stoptime::{commit, CommitTag};

/// Chi-square upper quantile at 99% for 255 degrees of freedom, frozen
/// from an external computation.
const CHI2_255_99: f64 = 310.45738821990585;

/// Digests of commitments to the two window extremes are statistically
/// indistinguishable: a two-sample chi-square over the first digest byte
/// stays below the 1% critical value.
#[test]
fn commitment_digests_hide_the_payload() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let n = 10_000;
    let histogram = |payload: &[u8], rng: &mut ChaCha8Rng| {
        let mut bins = [0u64; 256];
        for _ in 0..n {
            let c = commit(CommitTag::StopTime, payload, rng).unwrap();
            bins[c.digest[0] as usize] += 1;
        }
        bins
    };
    let a = histogram(b"200.000000", &mut rng);
    let b = histogram(b"400.000000", &mut rng);
    // Equal sample sizes: chi2 = sum (a - b)^2 / (a + b), df = 255.
    let chi2: f64 = a
        .iter()
        .zip(&b)
        .filter(|(&x, &y)| x + y > 0)
        .map(|(&x, &y)| {
            let d = x as f64 - y as f64;
            d * d / (x + y) as f64
        })
        .sum();
    assert!(chi2 < CHI2_255_99, "chi-square {chi2} exceeds 1% critical {CHI2_255_99}");
}

/// Round-robin dealing after a full shuffle puts any fixed subset of
/// voters at each authority in its fair share.
#[test]
fn partition_assignment_is_uniform() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let n = 30_000u32;
    let p = partition_voters(n, 3, &mut rng).unwrap();
    let sizes = p.sizes();
    assert!(sizes.iter().all(|&s| s == n / 3), "balanced partition expected, got {sizes:?}");
    // The first half of the voter indices is an arbitrary fixed subset;
    // each authority should hold one third of it (4-sigma tolerance).
    let half = (n / 2) as usize;
    for authority in 0..3 {
        let hits = p.assignment[..half].iter().filter(|&&a| a == authority).count();
        let share = hits as f64 / half as f64;
        assert!(
            (share - 1.0 / 3.0).abs() < 0.017,
            "authority {authority} holds share {share} of the first half"
        );
    }
}
