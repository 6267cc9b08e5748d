//! Channel model and intercept-measure-resend adversaries.
//!
//! Each leg traversal first draws photon loss, then (if the photon survives
//! and the leg is attacked) lets Eve measure the travel qubit and forward the
//! collapsed photon.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::RandomStream;
use crate::state::{
    apply_hadamard, apply_local, bell_coefficients, make_bell, measure_computational, project,
    BellLabel, LocalOp, QubitIndex, TwoQubitState, TOLERANCE,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ChannelLeg {
    /// Bob to Alice.
    Forward,
    /// Alice back to Bob; message rounds only.
    Return,
}

/// Eve's measurement basis. Bit 0 is `|0>` in Z and `|+>` in X.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Basis {
    Z,
    X,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct LegSet {
    pub forward: bool,
    pub ret: bool,
}

impl LegSet {
    pub const FORWARD: LegSet = LegSet { forward: true, ret: false };
    pub const RETURN: LegSet = LegSet { forward: false, ret: true };
    pub const BOTH: LegSet = LegSet { forward: true, ret: true };

    pub fn contains(self, leg: ChannelLeg) -> bool {
        match leg {
            ChannelLeg::Forward => self.forward,
            ChannelLeg::Return => self.ret,
        }
    }

    pub fn is_empty(self) -> bool {
        !self.forward && !self.ret
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Strategy {
    #[default]
    Honest,
    /// Loss with no interception. Behaves like `Honest`; loss itself is a
    /// channel property configured by `loss_p` for every strategy.
    LossOnly,
    InterceptResend { basis: Basis, legs: LegSet },
}

impl Strategy {
    /// Leg/basis Eve measures on, if any. Empty leg sets never attack.
    pub fn attack_on(self, leg: ChannelLeg) -> Option<Basis> {
        match self {
            Strategy::InterceptResend { basis, legs } if legs.contains(leg) => Some(basis),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown adversary `{0}` (expected none, loss or intercept-<z|x>[:forward|return|both])")]
pub struct ParseStrategyError(pub String);

impl FromStr for Strategy {
    type Err = ParseStrategyError;

    /// Grammar: `strategy[-basis][:legs]`, legs defaulting to `forward`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseStrategyError(s.to_string());
        let (head, legs) = match s.split_once(':') {
            Some((h, l)) => (h, Some(l)),
            None => (s, None),
        };
        match head {
            "none" | "honest" if legs.is_none() => Ok(Strategy::Honest),
            "loss" if legs.is_none() => Ok(Strategy::LossOnly),
            "intercept-z" | "intercept-x" => {
                let basis = if head.ends_with('z') { Basis::Z } else { Basis::X };
                let legs = match legs.unwrap_or("forward") {
                    "forward" => LegSet::FORWARD,
                    "return" => LegSet::RETURN,
                    "both" => LegSet::BOTH,
                    _ => return Err(err()),
                };
                Ok(Strategy::InterceptResend { basis, legs })
            }
            _ => Err(err()),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Strategy::Honest => f.write_str("none"),
            Strategy::LossOnly => f.write_str("loss"),
            Strategy::InterceptResend { legs, .. } if legs.is_empty() => f.write_str("none"),
            Strategy::InterceptResend { basis, legs } => {
                let b = match basis {
                    Basis::Z => "z",
                    Basis::X => "x",
                };
                let l = match (legs.forward, legs.ret) {
                    (true, false) => "forward",
                    (false, true) => "return",
                    _ => "both",
                };
                write!(f, "intercept-{b}:{l}")
            }
        }
    }
}

impl Serialize for Strategy {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Strategy {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AdversarySpec {
    pub strategy: Strategy,
    /// Loss probability per leg traversal.
    pub loss_p: f64,
}

impl AdversarySpec {
    pub fn honest() -> Self {
        Self::default()
    }

    pub fn new(strategy: Strategy, loss_p: f64) -> Self {
        Self { strategy, loss_p }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventOutcome {
    Delivered,
    Lost,
    Intercepted { eve_bit: u8, basis: Basis },
}

/// Harness-side record of one leg. Honest parties never see Eve's bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChannelEvent {
    pub leg: ChannelLeg,
    pub outcome: EventOutcome,
}

impl ChannelEvent {
    pub fn eve_bit(&self) -> Option<(u8, Basis)> {
        match self.outcome {
            EventOutcome::Intercepted { eve_bit, basis } => Some((eve_bit, basis)),
            _ => None,
        }
    }
}

/// Projective `|±>` measurement: rotate, measure in Z, rotate back.
pub fn x_basis_measure(
    state: &TwoQubitState,
    target: QubitIndex,
    rng: &mut RandomStream,
) -> (u8, TwoQubitState) {
    let rotated = apply_hadamard(*state, target);
    let (bit, post) = measure_computational(&rotated, target, rng);
    (bit, apply_hadamard(post, target))
}

/// The adversarial part of a leg traversal, for a photon that was not lost.
pub fn intercept(
    state: TwoQubitState,
    leg: ChannelLeg,
    strategy: Strategy,
    rng: &mut RandomStream,
) -> (TwoQubitState, ChannelEvent) {
    match strategy.attack_on(leg) {
        None => (state, ChannelEvent { leg, outcome: EventOutcome::Delivered }),
        Some(basis) => {
            let (eve_bit, post) = match basis {
                Basis::Z => measure_computational(&state, QubitIndex::Travel, rng),
                Basis::X => x_basis_measure(&state, QubitIndex::Travel, rng),
            };
            (post, ChannelEvent { leg, outcome: EventOutcome::Intercepted { eve_bit, basis } })
        }
    }
}

/// One leg traversal: loss first, then the strategy. `None` means the photon
/// was lost, which is a normal outcome.
pub fn transmit(
    state: TwoQubitState,
    leg: ChannelLeg,
    spec: &AdversarySpec,
    rng: &mut RandomStream,
) -> (Option<TwoQubitState>, ChannelEvent) {
    if rng.bernoulli(spec.loss_p) {
        return (None, ChannelEvent { leg, outcome: EventOutcome::Lost });
    }
    let (post, event) = intercept(state, leg, spec.strategy, rng);
    (Some(post), event)
}

/// What Eve holds for one completed message round: her own leg records plus
/// the public Bell announcement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EveView {
    pub forward: Option<ChannelEvent>,
    pub ret: Option<ChannelEvent>,
    pub announcement: Option<BellLabel>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EveGuess {
    pub j: u8,
    pub k: u8,
}

fn project_in_basis(state: TwoQubitState, basis: Basis, bit: u8) -> TwoQubitState {
    match basis {
        Basis::Z => TwoQubitState::raw(project(&state, QubitIndex::Travel, bit).1),
        Basis::X => {
            let rotated = apply_hadamard(state, QubitIndex::Travel);
            let projected = TwoQubitState::raw(project(&rotated, QubitIndex::Travel, bit).1);
            apply_hadamard(projected, QubitIndex::Travel)
        }
    }
}

/// Exact joint probability of Eve's records and the announcement given the
/// hidden bits `(j, k)`.
pub fn likelihood(view: &EveView, j: u8, k: u8, bob_target: QubitIndex) -> f64 {
    let Some(outcome) = view.announcement else {
        return 0.0;
    };
    let mut state = make_bell(BellLabel::PsiPlus);
    if let Some((bit, basis)) = view.forward.and_then(|e| e.eve_bit()) {
        state = project_in_basis(state, basis, bit);
    }
    state = apply_local(state, LocalOp::from_bit(j), QubitIndex::Travel);
    if let Some((bit, basis)) = view.ret.and_then(|e| e.eve_bit()) {
        state = project_in_basis(state, basis, bit);
    }
    state = apply_local(state, LocalOp::from_bit(k), bob_target);
    bell_coefficients(&state)[outcome.index()].norm_sqr()
}

fn argmax_bit(l0: f64, l1: f64, rng: &mut RandomStream) -> u8 {
    if (l0 - l1).abs() <= TOLERANCE {
        rng.bit()
    } else if l0 > l1 {
        0
    } else {
        1
    }
}

/// Per-bit maximum-likelihood guesses under a uniform prior on `(j, k)`.
/// Ties are broken uniformly at random. Rounds without an announcement get
/// no guess.
pub fn eve_guess(
    views: &[EveView],
    bob_target: QubitIndex,
    rng: &mut RandomStream,
) -> Vec<Option<EveGuess>> {
    views
        .iter()
        .map(|view| {
            view.announcement?;
            let l = |j, k| likelihood(view, j, k, bob_target);
            let table = [[l(0, 0), l(0, 1)], [l(1, 0), l(1, 1)]];
            let j = argmax_bit(table[0][0] + table[0][1], table[1][0] + table[1][1], rng);
            let k = argmax_bit(table[0][0] + table[1][0], table[0][1] + table[1][1], rng);
            Some(EveGuess { j, k })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use std::f64::consts::FRAC_1_SQRT_2 as S;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn grammar_round_trips() {
        for s in [
            "none",
            "loss",
            "intercept-z:forward",
            "intercept-z:return",
            "intercept-z:both",
            "intercept-x:forward",
            "intercept-x:return",
            "intercept-x:both",
        ] {
            let parsed: Strategy = s.parse().unwrap();
            assert_eq!(parsed.to_string(), s);
        }
        assert_eq!(
            "intercept-x".parse::<Strategy>().unwrap(),
            Strategy::InterceptResend { basis: Basis::X, legs: LegSet::FORWARD }
        );
        for bad in ["", "intercept", "intercept-y:forward", "intercept-z:sideways", "none:forward"] {
            assert!(bad.parse::<Strategy>().is_err(), "{bad}");
        }
    }

    #[test]
    fn empty_leg_set_is_honest() {
        let s = Strategy::InterceptResend { basis: Basis::Z, legs: LegSet::default() };
        assert_eq!(s.attack_on(ChannelLeg::Forward), None);
        assert_eq!(s.attack_on(ChannelLeg::Return), None);
        let psi = make_bell(BellLabel::PsiPlus);
        let mut rng = RandomStream::from_seed(1);
        let (out, ev) = transmit(psi, ChannelLeg::Forward, &AdversarySpec::new(s, 0.0), &mut rng);
        assert_eq!(out, Some(psi));
        assert_eq!(ev.outcome, EventOutcome::Delivered);
    }

    #[test]
    fn honest_channel_is_identity() {
        let psi = make_bell(BellLabel::PsiPlus);
        let mut rng = RandomStream::from_seed(2);
        for leg in [ChannelLeg::Forward, ChannelLeg::Return] {
            let (out, ev) = transmit(psi, leg, &AdversarySpec::honest(), &mut rng);
            assert_eq!(out, Some(psi));
            assert_eq!(ev, ChannelEvent { leg, outcome: EventOutcome::Delivered });
        }
    }

    #[test]
    fn total_loss_drops_everything() {
        let spec = AdversarySpec::new(Strategy::LossOnly, 1.0);
        let mut rng = RandomStream::from_seed(3);
        for _ in 0..100 {
            let (out, ev) = transmit(make_bell(BellLabel::PsiPlus), ChannelLeg::Forward, &spec, &mut rng);
            assert!(out.is_none());
            assert_eq!(ev.outcome, EventOutcome::Lost);
        }
    }

    #[test]
    fn z_intercept_collapses_to_anticorrelated_product() {
        let spec = AdversarySpec::new(
            Strategy::InterceptResend { basis: Basis::Z, legs: LegSet::FORWARD },
            0.0,
        );
        let mut rng = RandomStream::from_seed(4);
        let mut seen = [0usize; 2];
        for _ in 0..400 {
            let (out, ev) =
                transmit(make_bell(BellLabel::PsiPlus), ChannelLeg::Forward, &spec, &mut rng);
            let (bit, basis) = ev.eve_bit().unwrap();
            assert_eq!(basis, Basis::Z);
            let expected = TwoQubitState::basis(1 - bit, bit);
            assert!(out.unwrap().approx_eq(&expected, TOLERANCE));
            seen[bit as usize] += 1;
        }
        assert!(seen[0] > 150 && seen[1] > 150);
        // The return leg is not attacked under a forward-only strategy.
        let (_, ev) = transmit(make_bell(BellLabel::PsiPlus), ChannelLeg::Return, &spec, &mut rng);
        assert_eq!(ev.outcome, EventOutcome::Delivered);
    }

    #[test]
    fn x_intercept_collapses_to_plus_plus_or_minus_minus() {
        let plus = [c(S), c(S)];
        let minus = [c(S), c(-S)];
        let pp = TwoQubitState::product(plus, plus).unwrap();
        let mm = TwoQubitState::product(minus, minus).unwrap();
        let mut rng = RandomStream::from_seed(5);
        let mut seen = [0usize; 2];
        for _ in 0..400 {
            let (bit, post) = x_basis_measure(&make_bell(BellLabel::PsiPlus), QubitIndex::Travel, &mut rng);
            let expected = if bit == 0 { pp } else { mm };
            assert!(post.approx_eq(&expected, TOLERANCE));
            assert!((post.norm_sqr() - 1.0).abs() < TOLERANCE);
            seen[bit as usize] += 1;
        }
        assert!(seen[0] > 150 && seen[1] > 150);
    }

    #[test]
    fn x_measure_of_eigenstate_is_deterministic() {
        let s = TwoQubitState::product([c(S), c(S)], [c(1.0), c(0.0)]).unwrap();
        let mut rng = RandomStream::from_seed(6);
        for _ in 0..50 {
            let (bit, post) = x_basis_measure(&s, QubitIndex::Home, &mut rng);
            assert_eq!(bit, 0);
            assert!(post.approx_eq(&s, TOLERANCE));
        }
    }

    #[test]
    fn honest_likelihood_is_table_law() {
        for j in 0..2u8 {
            for k in 0..2u8 {
                for outcome in BellLabel::ALL {
                    let view = EveView { forward: None, ret: None, announcement: Some(outcome) };
                    let expected = if outcome.psi_parity() == Ok(j ^ k) { 1.0 } else { 0.0 };
                    assert!((likelihood(&view, j, k, QubitIndex::Travel) - expected).abs() < TOLERANCE);
                }
            }
        }
    }

    #[test]
    fn guesses_skip_rounds_without_announcement() {
        let mut rng = RandomStream::from_seed(7);
        assert!(eve_guess(&[], QubitIndex::Travel, &mut rng).is_empty());
        let view = EveView { forward: None, ret: None, announcement: None };
        assert_eq!(eve_guess(&[view], QubitIndex::Travel, &mut rng), vec![None]);
    }
}
