//! Random-number plumbing shared by the simulators.
//!
//! Degenerate draws (point-mass distributions, termination probabilities of
//! exactly 0 or 1) consume no randomness. Two simulations that differ only in
//! such degenerate choices therefore stay on the same random stream, which is
//! what makes one-step options reproduce primitive-action runs bit for bit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Generator for run `run` of an experiment seeded with `master`. Each run
/// gets its own ChaCha stream, so runs are independent and reproducible.
pub fn run_rng(master: u64, run: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(run);
    rng
}

/// Samples an index from `probs` (assumed to sum to 1).
pub fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let mut support = probs.iter().enumerate().filter(|(_, p)| **p > 0.0);
    let first = support.next().map(|(i, _)| i).unwrap_or(0);
    if support.next().is_none() {
        return first;
    }
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = first;
    for (i, &p) in probs.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        acc += p;
        last = i;
        if u < acc {
            return i;
        }
    }
    last
}

/// Bernoulli draw that skips the generator when `p` is 0 or 1.
pub fn bernoulli<R: Rng + ?Sized>(p: f64, rng: &mut R) -> bool {
    if p >= 1.0 {
        true
    } else if p <= 0.0 {
        false
    } else {
        rng.random::<f64>() < p
    }
}
