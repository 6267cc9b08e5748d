//! Seeded Monte Carlo experiments.
//!
//! Round `i` draws from `RandomStream::for_round(seed, i)`; message sources,
//! Eve's tie-breaking and the announcement check use their own auxiliary
//! streams. Results therefore do not depend on whether rounds run serially or
//! in parallel.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adversary::{eve_guess, AdversarySpec, EveView, Strategy};
use crate::error::ConfigError;
use crate::protocol::{
    announcement_check, run_round, Flag, Mode, ProtocolConfig, RoundFate, RoundRecord,
};
use crate::rng::{Purpose, RandomStream};
use crate::state::QubitIndex;

/// Where a party's payload bits come from. Fixed bitstrings repeat when
/// exhausted.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum MessageSource {
    #[default]
    Random,
    Fixed(Vec<u8>),
}

impl FromStr for MessageSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "random" {
            return Ok(MessageSource::Random);
        }
        if s.is_empty() {
            return Err("bitstring must not be empty".into());
        }
        s.chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                _ => Err(format!("expected `random` or a string of 0/1, got `{s}`")),
            })
            .collect::<Result<Vec<u8>, _>>()
            .map(MessageSource::Fixed)
    }
}

impl fmt::Display for MessageSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MessageSource::Random => f.write_str("random"),
            MessageSource::Fixed(bits) => {
                bits.iter().try_for_each(|b| f.write_str(if *b == 0 { "0" } else { "1" }))
            }
        }
    }
}

impl Serialize for MessageSource {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for MessageSource {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// Payload queue for one party. A bit leaves the queue only when a round
/// completes; lost rounds leave it at the head.
#[derive(Debug, Clone)]
pub struct BitQueue {
    source: MessageSource,
    rng: RandomStream,
    position: usize,
    head: Option<u8>,
}

impl BitQueue {
    pub fn new(source: MessageSource, rng: RandomStream) -> Self {
        Self { source, rng, position: 0, head: None }
    }

    pub fn peek(&mut self) -> u8 {
        if let Some(bit) = self.head {
            return bit;
        }
        let bit = match &self.source {
            MessageSource::Random => self.rng.bit(),
            MessageSource::Fixed(bits) => bits[self.position % bits.len()],
        };
        self.head = Some(bit);
        bit
    }

    pub fn pop(&mut self) -> u8 {
        let bit = self.peek();
        self.head = None;
        self.position += 1;
        bit
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub rounds: u64,
    pub control_prob: f64,
    pub announce_fraction: f64,
    pub adversary: Strategy,
    pub loss_p: f64,
    pub seed: u64,
    pub alice_message: MessageSource,
    pub bob_message: MessageSource,
    pub bob_encode_target: QubitIndex,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            rounds: 10_000,
            control_prob: 0.5,
            announce_fraction: 0.1,
            adversary: Strategy::Honest,
            loss_p: 0.0,
            seed: 0,
            alice_message: MessageSource::Random,
            bob_message: MessageSource::Random,
            bob_encode_target: QubitIndex::Travel,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.rounds == 0 {
            return Err(ConfigError::ZeroRounds);
        }
        for (field, value) in [
            ("control_prob", self.control_prob),
            ("announce_fraction", self.announce_fraction),
            ("loss_p", self.loss_p),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(ConfigError::Probability { field, value });
            }
        }
        for (party, source) in [("alice", &self.alice_message), ("bob", &self.bob_message)] {
            if matches!(source, MessageSource::Fixed(bits) if bits.is_empty()) {
                return Err(ConfigError::MessageSource {
                    party,
                    reason: "bitstring must not be empty".into(),
                });
            }
        }
        Ok(())
    }

    pub fn protocol(&self) -> ProtocolConfig {
        ProtocolConfig { control_prob: self.control_prob, bob_target: self.bob_encode_target }
    }

    pub fn adversary_spec(&self) -> AdversarySpec {
        AdversarySpec::new(self.adversary, self.loss_p)
    }
}

/// A binomial frequency with its 95% normal-approximation interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub count: u64,
    pub trials: u64,
    pub rate: f64,
    pub ci95: (f64, f64),
}

impl Estimate {
    /// `None` when there were no trials.
    pub fn new(count: u64, trials: u64) -> Option<Self> {
        let ci95 = binomial_interval(count, trials)?;
        Some(Self { count, trials, rate: count as f64 / trials as f64, ci95 })
    }
}

/// `p ± 1.96·sqrt(p(1−p)/n)` clamped to `[0, 1]`; undefined for `n = 0`.
pub fn binomial_interval(successes: u64, trials: u64) -> Option<(f64, f64)> {
    if trials == 0 {
        return None;
    }
    assert!(successes <= trials, "successes exceed trials");
    let n = trials as f64;
    let p = successes as f64 / n;
    let half = 1.96 * (p * (1.0 - p) / n).sqrt();
    Some(((p - half).max(0.0), (p + half).min(1.0)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SummaryStats {
    pub rounds: u64,
    pub control_rounds: u64,
    pub message_rounds: u64,
    pub lost_rounds: u64,
    /// Completed over attempted message rounds (attempts include lost ones).
    pub message_delivery: Option<Estimate>,
    pub detection_rate: Option<Estimate>,
    pub ber_alice_to_bob: Option<Estimate>,
    pub ber_bob_to_alice: Option<Estimate>,
    pub phi_rate: Option<Estimate>,
    pub mismatch_rate: Option<Estimate>,
    pub eve_accuracy_j: Option<Estimate>,
    pub eve_accuracy_k: Option<Estimate>,
    pub payload_bits: u64,
    /// Payload bits per transmitted pair.
    pub throughput: Option<f64>,
    /// First round whose public data would abort the session.
    pub would_abort_round: Option<u64>,
}

impl SummaryStats {
    /// Aggregates a transcript. This is the only path from records to stats,
    /// used both live and by replay.
    pub fn from_records(records: &[RoundRecord]) -> Self {
        let mut s = Tally::default();
        for r in records {
            s.add(r);
        }
        s.finish(records.len() as u64)
    }
}

#[derive(Default)]
struct Tally {
    control: u64,
    message: u64,
    lost: u64,
    message_attempts: u64,
    detected: u64,
    err_ab: u64,
    err_ba: u64,
    phi: u64,
    checked: u64,
    mismatches: u64,
    guessed: u64,
    eve_j: u64,
    eve_k: u64,
    payload_rounds: u64,
    abort: Option<u64>,
}

impl Tally {
    fn add(&mut self, r: &RoundRecord) {
        if r.mode == Mode::Message {
            self.message_attempts += 1;
        }
        if r.is_lost() {
            self.lost += 1;
            return;
        }
        let mut alarm = false;
        match r.mode {
            Mode::Control => {
                self.control += 1;
                if r.has(Flag::Detected) {
                    self.detected += 1;
                    alarm = true;
                }
            }
            Mode::Message => {
                self.message += 1;
                if r.j_hat != r.j {
                    self.err_ab += 1;
                }
                if r.k_hat != r.k {
                    self.err_ba += 1;
                }
                if r.has(Flag::TamperPhi) {
                    self.phi += 1;
                    alarm = true;
                }
                if r.has(Flag::Checked) {
                    self.checked += 1;
                    if r.announcement_mismatch() == Some(true) {
                        self.mismatches += 1;
                        alarm = true;
                    }
                }
                if let (Some(g), Some(j), Some(k)) = (r.eve_guess, r.j, r.k) {
                    self.guessed += 1;
                    self.eve_j += u64::from(g.j == j);
                    self.eve_k += u64::from(g.k == k);
                }
                if r.is_payload() {
                    self.payload_rounds += 1;
                }
            }
        }
        if alarm {
            self.abort = Some(self.abort.map_or(r.round_id, |a| a.min(r.round_id)));
        }
    }

    fn finish(self, rounds: u64) -> SummaryStats {
        let payload_bits = 2 * self.payload_rounds;
        SummaryStats {
            rounds,
            control_rounds: self.control,
            message_rounds: self.message,
            lost_rounds: self.lost,
            message_delivery: Estimate::new(self.message, self.message_attempts),
            detection_rate: Estimate::new(self.detected, self.control),
            ber_alice_to_bob: Estimate::new(self.err_ab, self.message),
            ber_bob_to_alice: Estimate::new(self.err_ba, self.message),
            phi_rate: Estimate::new(self.phi, self.message),
            mismatch_rate: Estimate::new(self.mismatches, self.checked),
            eve_accuracy_j: Estimate::new(self.eve_j, self.guessed),
            eve_accuracy_k: Estimate::new(self.eve_k, self.guessed),
            payload_bits,
            throughput: (rounds > 0).then(|| payload_bits as f64 / rounds as f64),
            would_abort_round: self.abort,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub summary: SummaryStats,
    pub records: Vec<RoundRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    #[default]
    Parallel,
    Serial,
}

fn queues(config: &ExperimentConfig) -> (BitQueue, BitQueue) {
    (
        BitQueue::new(
            config.alice_message.clone(),
            RandomStream::for_purpose(config.seed, Purpose::AliceMessage),
        ),
        BitQueue::new(
            config.bob_message.clone(),
            RandomStream::for_purpose(config.seed, Purpose::BobMessage),
        ),
    )
}

fn simulate_serial(config: &ExperimentConfig) -> Vec<RoundRecord> {
    let protocol = config.protocol();
    let adversary = config.adversary_spec();
    let (mut alice, mut bob) = queues(config);
    (0..config.rounds)
        .map(|i| {
            let mut rng = RandomStream::for_round(config.seed, i);
            let record = run_round(i, &protocol, alice.peek(), bob.peek(), &adversary, &mut rng);
            if record.consumed_bits() {
                alice.pop();
                bob.pop();
            }
            record
        })
        .collect()
}

fn simulate_parallel(config: &ExperimentConfig) -> Vec<RoundRecord> {
    let protocol = config.protocol();
    let adversary = config.adversary_spec();
    let fates: Vec<RoundFate> = (0..config.rounds)
        .into_par_iter()
        .map(|i| {
            let mut rng = RandomStream::for_round(config.seed, i);
            RoundFate::draw(config.control_prob, config.loss_p, &mut rng)
        })
        .collect();
    // Bit assignment is inherently sequential because lost rounds re-queue.
    let (mut alice, mut bob) = queues(config);
    let bits: Vec<(u8, u8)> = fates
        .iter()
        .map(|fate| {
            let pair = (alice.peek(), bob.peek());
            if fate.consumes_bits() {
                alice.pop();
                bob.pop();
            }
            pair
        })
        .collect();
    bits.into_par_iter()
        .enumerate()
        .map(|(i, (j, k))| {
            let i = i as u64;
            let mut rng = RandomStream::for_round(config.seed, i);
            run_round(i, &protocol, j, k, &adversary, &mut rng)
        })
        .collect()
}

pub fn eve_views(records: &[RoundRecord]) -> Vec<EveView> {
    records
        .iter()
        .map(|r| EveView {
            forward: Some(r.forward_event),
            ret: r.return_event,
            announcement: if r.is_completed_message() { r.bob_bell_announcement } else { None },
        })
        .collect()
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput, ConfigError> {
    run_experiment_with(config, Execution::Parallel)
}

pub fn run_experiment_with(
    config: &ExperimentConfig,
    execution: Execution,
) -> Result<ExperimentOutput, ConfigError> {
    config.validate()?;
    let mut records = match execution {
        Execution::Parallel => simulate_parallel(config),
        Execution::Serial => simulate_serial(config),
    };

    let mut eve_rng = RandomStream::for_purpose(config.seed, Purpose::EveGuess);
    let guesses = eve_guess(&eve_views(&records), config.bob_encode_target, &mut eve_rng);
    for (record, guess) in records.iter_mut().zip(guesses) {
        record.eve_guess = guess;
    }

    let mut check_rng = RandomStream::for_purpose(config.seed, Purpose::AnnouncementCheck);
    announcement_check(&mut records, config.announce_fraction, &mut check_rng);

    let summary = SummaryStats::from_records(&records);
    Ok(ExperimentOutput { summary, records })
}

/// Recomputes the summary of a transcript, checking record consistency and
/// ordering. Errors carry the zero-based record index.
pub fn replay(records: &[RoundRecord]) -> Result<SummaryStats, (usize, String)> {
    for (i, r) in records.iter().enumerate() {
        if r.round_id != i as u64 {
            return Err((i, format!("expected round_id {i}, found {}", r.round_id)));
        }
        r.validate().map_err(|m| (i, m))?;
    }
    Ok(SummaryStats::from_records(records))
}
