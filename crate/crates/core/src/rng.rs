//! Seeded random streams.
//!
//! Every stochastic operation takes a [`RandomStream`] explicitly. Streams are
//! ChaCha8 generators keyed by the experiment seed; independent streams share
//! the key and differ only in the ChaCha stream id:
//!
//! * round `i` uses stream id `i` (`0 <= i < 2^63`),
//! * auxiliary consumers (message sources, the announcement check, Eve's
//!   guesser) use stream ids `2^63 + tag`, see [`Purpose`].
//!
//! Because the derivation is counter based, the stream for round `i` does not
//! depend on how many rounds ran before it, which is what lets the harness
//! run rounds in parallel without changing results.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

const AUX_BASE: u64 = 1 << 63;

/// Consumers of auxiliary (non-round) streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    AliceMessage,
    BobMessage,
    AnnouncementCheck,
    EveGuess,
}

impl Purpose {
    fn tag(self) -> u64 {
        match self {
            Purpose::AliceMessage => 1,
            Purpose::BobMessage => 2,
            Purpose::AnnouncementCheck => 3,
            Purpose::EveGuess => 4,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RandomStream(ChaCha8Rng);

impl RandomStream {
    /// A standalone stream, equivalent to `for_round(seed, 0)`.
    pub fn from_seed(seed: u64) -> Self {
        Self::for_round(seed, 0)
    }

    pub fn for_round(seed: u64, round: u64) -> Self {
        assert!(round < AUX_BASE, "round index out of range");
        Self::with_stream(seed, round)
    }

    pub fn for_purpose(seed: u64, purpose: Purpose) -> Self {
        Self::with_stream(seed, AUX_BASE + purpose.tag())
    }

    fn with_stream(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self(rng)
    }

    /// Uniform draw in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.0.random::<f64>()
    }

    /// `true` with probability `p`; exactly one uniform draw.
    /// `p <= 0` is never true and `p >= 1` always is.
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    pub fn bit(&mut self) -> u8 {
        (self.0.next_u32() & 1) as u8
    }
}

impl RngCore for RandomStream {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.0.fill_bytes(dst)
    }
}
