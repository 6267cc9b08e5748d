//! Honest-party state machines.
//!
//! A round: Bob prepares `|Ψ+>` and sends the travel qubit; Alice picks a
//! mode. In control mode both sides measure in Z and compare (identical bits
//! mean Eve). In message mode Alice applies `Z^j`, returns the qubit, Bob
//! applies `Z^k`, Bell-measures and announces the outcome. Either party
//! recovers the other's bit as `psi_parity(outcome) XOR own_bit`.

use std::collections::BTreeSet;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::adversary::{intercept, AdversarySpec, ChannelEvent, ChannelLeg, EveGuess, EventOutcome};
use crate::rng::RandomStream;
use crate::state::{
    apply_local, make_bell, measure_bell, measure_computational, BellLabel, LocalOp, QubitIndex,
    TamperPhi, TwoQubitState,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    Control,
    Message,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Flag {
    /// Control round with identical bits.
    Detected,
    /// Bell outcome outside the Ψ subspace.
    TamperPhi,
    /// Photon lost on a leg; the round is void and its bits are re-queued.
    Lost,
    /// Revealed by the announcement check; bits dropped from the payload.
    Checked,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolConfig {
    pub control_prob: f64,
    pub bob_target: QubitIndex,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self { control_prob: 0.5, bob_target: QubitIndex::Travel }
    }
}

/// Full transcript of one round, including harness-only fields (channel
/// events, hidden bits, Eve's guess).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoundRecord {
    pub round_id: u64,
    /// For rounds lost on the forward leg this is the mode Alice would have
    /// chosen; it is drawn regardless so streams stay aligned.
    pub mode: Mode,
    pub j: Option<u8>,
    pub k: Option<u8>,
    pub forward_event: ChannelEvent,
    pub return_event: Option<ChannelEvent>,
    pub alice_announcement: Option<u8>,
    pub bob_control_bit: Option<u8>,
    pub bob_bell_announcement: Option<BellLabel>,
    pub j_hat: Option<u8>,
    pub k_hat: Option<u8>,
    pub flags: BTreeSet<Flag>,
    pub eve_guess: Option<EveGuess>,
}

impl RoundRecord {
    pub fn has(&self, flag: Flag) -> bool {
        self.flags.contains(&flag)
    }

    pub fn is_lost(&self) -> bool {
        self.has(Flag::Lost)
    }

    /// Message round that reached Bob's Bell measurement.
    pub fn is_completed_message(&self) -> bool {
        self.mode == Mode::Message && !self.is_lost()
    }

    pub fn is_completed_control(&self) -> bool {
        self.mode == Mode::Control && !self.is_lost()
    }

    /// Message bits were consumed from both parties' queues.
    pub fn consumed_bits(&self) -> bool {
        self.is_completed_message()
    }

    /// Kept for payload: completed, unchecked and decodable.
    pub fn is_payload(&self) -> bool {
        self.is_completed_message() && !self.has(Flag::Checked) && !self.has(Flag::TamperPhi)
    }

    /// Announcement-check verdict: the announced outcome disagrees with the
    /// revealed bits. `None` for rounds that cannot be checked.
    pub fn announcement_mismatch(&self) -> Option<bool> {
        if !self.is_completed_message() {
            return None;
        }
        let (j, k, outcome) = (self.j?, self.k?, self.bob_bell_announcement?);
        Some(outcome.psi_parity() != Ok(j ^ k))
    }

    /// Internal consistency checks used when replaying a transcript.
    pub fn validate(&self) -> Result<(), String> {
        let bit_ok = |b: Option<u8>| b.is_none_or(|b| b <= 1);
        if ![self.j, self.k, self.j_hat, self.k_hat, self.alice_announcement, self.bob_control_bit]
            .into_iter()
            .all(bit_ok)
        {
            return Err("bit field outside {0,1}".into());
        }
        if self.forward_event.leg != ChannelLeg::Forward {
            return Err("forward_event is not on the forward leg".into());
        }
        if let Some(ev) = self.return_event {
            if ev.leg != ChannelLeg::Return {
                return Err("return_event is not on the return leg".into());
            }
            if self.mode == Mode::Control {
                return Err("control round has a return leg".into());
            }
        }
        let forward_lost = self.forward_event.outcome == EventOutcome::Lost;
        let return_lost = self.return_event.is_some_and(|e| e.outcome == EventOutcome::Lost);
        if self.is_lost() != (forward_lost || return_lost) {
            return Err("Lost flag disagrees with channel events".into());
        }
        if self.has(Flag::TamperPhi) != self.bob_bell_announcement.is_some_and(BellLabel::is_phi) {
            return Err("TamperPhi flag disagrees with Bell announcement".into());
        }
        match self.mode {
            Mode::Control => {
                if self.k.is_some() || self.bob_bell_announcement.is_some() || self.j.is_some() {
                    return Err("control round carries message fields".into());
                }
                if self.has(Flag::Checked) {
                    return Err("control round marked Checked".into());
                }
                if self.is_lost() {
                    if self.alice_announcement.is_some() || self.has(Flag::Detected) {
                        return Err("lost control round carries results".into());
                    }
                } else {
                    let (Some(a), Some(b)) = (self.alice_announcement, self.bob_control_bit) else {
                        return Err("control round missing measurement results".into());
                    };
                    if self.has(Flag::Detected) != (a == b) {
                        return Err("Detected flag disagrees with control bits".into());
                    }
                }
            }
            Mode::Message => {
                if self.alice_announcement.is_some()
                    || self.bob_control_bit.is_some()
                    || self.has(Flag::Detected)
                {
                    return Err("message round carries control fields".into());
                }
                if self.is_lost() {
                    if self.bob_bell_announcement.is_some() || self.j_hat.is_some() || self.k_hat.is_some() {
                        return Err("lost round carries a decode".into());
                    }
                    if self.has(Flag::Checked) {
                        return Err("lost round marked Checked".into());
                    }
                } else {
                    let (Some(j), Some(k), Some(outcome)) = (self.j, self.k, self.bob_bell_announcement)
                    else {
                        return Err("completed message round missing bits or announcement".into());
                    };
                    if self.return_event.is_none() {
                        return Err("completed message round missing return leg".into());
                    }
                    if self.j_hat != decode_peer_bit(outcome, k).ok()
                        || self.k_hat != decode_peer_bit(outcome, j).ok()
                    {
                        return Err("decoded bits disagree with the announcement".into());
                    }
                }
            }
        }
        Ok(())
    }
}

pub fn bob_prepare() -> TwoQubitState {
    make_bell(BellLabel::PsiPlus)
}

/// Control with probability `control_prob`; one uniform draw.
pub fn alice_choose_mode(control_prob: f64, rng: &mut RandomStream) -> Mode {
    if rng.bernoulli(control_prob) {
        Mode::Control
    } else {
        Mode::Message
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ControlOutcome {
    /// Alice's travel-qubit result, announced publicly.
    pub alice_bit: u8,
    /// Bob's home-qubit result after hearing Alice.
    pub bob_bit: u8,
    pub detected: bool,
}

pub fn control_round(state: &TwoQubitState, rng: &mut RandomStream) -> ControlOutcome {
    let (alice_bit, post) = measure_computational(state, QubitIndex::Travel, rng);
    let (bob_bit, _) = measure_computational(&post, QubitIndex::Home, rng);
    ControlOutcome { alice_bit, bob_bit, detected: alice_bit == bob_bit }
}

pub fn alice_encode(state: TwoQubitState, j: u8) -> TwoQubitState {
    apply_local(state, LocalOp::from_bit(j), QubitIndex::Travel)
}

pub fn bob_encode_and_measure(
    state: TwoQubitState,
    k: u8,
    target: QubitIndex,
    rng: &mut RandomStream,
) -> BellLabel {
    measure_bell(&apply_local(state, LocalOp::from_bit(k), target), rng).0
}

/// Recovers the peer's bit from a public Bell outcome. Bob calls this with
/// `own_bit = k` to get `j`; Alice with `own_bit = j` to get `k`.
pub fn decode_peer_bit(outcome: BellLabel, own_bit: u8) -> Result<u8, TamperPhi> {
    Ok(outcome.psi_parity()? ^ own_bit)
}

/// The classical random choices of a round, drawn as a fixed-length prefix of
/// the round's stream: forward loss, mode, return loss (always three draws).
/// Knowing the fate before simulating lets the harness decide which rounds
/// consume message bits without running the quantum part.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoundFate {
    pub forward_lost: bool,
    pub mode: Mode,
    pub return_lost: bool,
}

impl RoundFate {
    pub fn draw(control_prob: f64, loss_p: f64, rng: &mut RandomStream) -> Self {
        let forward_lost = rng.bernoulli(loss_p);
        let mode = alice_choose_mode(control_prob, rng);
        let return_lost = rng.bernoulli(loss_p);
        Self { forward_lost, mode, return_lost }
    }

    pub fn consumes_bits(&self) -> bool {
        !self.forward_lost && self.mode == Mode::Message && !self.return_lost
    }
}

/// Runs one round end to end. `j` and `k` are the heads of the parties'
/// message queues; they are only used in a message round, and are
/// consumed only if the record is a completed message round.
pub fn run_round(
    round_id: u64,
    config: &ProtocolConfig,
    j: u8,
    k: u8,
    adversary: &AdversarySpec,
    rng: &mut RandomStream,
) -> RoundRecord {
    let fate = RoundFate::draw(config.control_prob, adversary.loss_p, rng);
    let mut record = RoundRecord {
        round_id,
        mode: fate.mode,
        j: None,
        k: None,
        forward_event: ChannelEvent { leg: ChannelLeg::Forward, outcome: EventOutcome::Lost },
        return_event: None,
        alice_announcement: None,
        bob_control_bit: None,
        bob_bell_announcement: None,
        j_hat: None,
        k_hat: None,
        flags: BTreeSet::new(),
        eve_guess: None,
    };

    let pair = bob_prepare();
    if fate.forward_lost {
        record.flags.insert(Flag::Lost);
        return record;
    }
    let (pair, forward) = intercept(pair, ChannelLeg::Forward, adversary.strategy, rng);
    record.forward_event = forward;

    match fate.mode {
        Mode::Control => {
            let outcome = control_round(&pair, rng);
            record.alice_announcement = Some(outcome.alice_bit);
            record.bob_control_bit = Some(outcome.bob_bit);
            if outcome.detected {
                record.flags.insert(Flag::Detected);
            }
        }
        Mode::Message => {
            record.j = Some(j);
            let pair = alice_encode(pair, j);
            if fate.return_lost {
                record.return_event =
                    Some(ChannelEvent { leg: ChannelLeg::Return, outcome: EventOutcome::Lost });
                record.flags.insert(Flag::Lost);
                return record;
            }
            let (pair, ret) = intercept(pair, ChannelLeg::Return, adversary.strategy, rng);
            record.return_event = Some(ret);
            record.k = Some(k);
            let outcome = bob_encode_and_measure(pair, k, config.bob_target, rng);
            record.bob_bell_announcement = Some(outcome);
            record.j_hat = decode_peer_bit(outcome, k).ok();
            record.k_hat = decode_peer_bit(outcome, j).ok();
            if outcome.is_phi() {
                record.flags.insert(Flag::TamperPhi);
            }
        }
    }
    record
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnouncementCheckReport {
    pub checked_rounds: u64,
    pub mismatches: u64,
    /// Absent when nothing was checked.
    pub mismatch_rate: Option<f64>,
}

impl AnnouncementCheckReport {
    pub fn from_counts(checked_rounds: u64, mismatches: u64) -> Self {
        let mismatch_rate =
            (checked_rounds > 0).then(|| mismatches as f64 / checked_rounds as f64);
        Self { checked_rounds, mismatches, mismatch_rate }
    }
}

/// `ceil(f * n)` without spurious rounding up when `f * n` is an integer in
/// exact arithmetic (0.1 * 10 evaluates to 1.0000000000000002).
pub fn check_sample_size(fraction: f64, n: usize) -> usize {
    let x = fraction.clamp(0.0, 1.0) * n as f64;
    let nearest = x.round();
    let size = if (x - nearest).abs() < 1e-9 { nearest } else { x.ceil() };
    (size as usize).min(n)
}

/// Reveals both parties' bits for a random `ceil(f * n)` subset of completed
/// message rounds and compares them with Bob's announcement. Checked rounds
/// get [`Flag::Checked`]; their bits no longer count as payload.
pub fn announcement_check(
    records: &mut [RoundRecord],
    fraction: f64,
    rng: &mut RandomStream,
) -> AnnouncementCheckReport {
    let eligible: Vec<usize> = records
        .iter()
        .enumerate()
        .filter(|(_, r)| r.is_completed_message())
        .map(|(i, _)| i)
        .collect();
    let amount = check_sample_size(fraction, eligible.len());
    if amount == 0 {
        return AnnouncementCheckReport::from_counts(0, 0);
    }
    let mut chosen = index::sample(rng, eligible.len(), amount).into_vec();
    chosen.sort_unstable();
    let mut mismatches = 0;
    for pos in chosen {
        let record = &mut records[eligible[pos]];
        record.flags.insert(Flag::Checked);
        if record.announcement_mismatch() == Some(true) {
            mismatches += 1;
        }
    }
    AnnouncementCheckReport::from_counts(amount as u64, mismatches)
}
