//! Exact statevector algebra for a single EPR pair.
//!
//! Amplitudes are stored over `|home, travel>` in the order
//! `(a00, a01, a10, a11)`: the home qubit is the first tensor factor.
//! State equality is up to a global phase.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::RandomStream;

/// Tolerance for every exact-algebra comparison.
pub const TOLERANCE: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QubitIndex {
    Home,
    Travel,
}

/// Encoding alphabet: `Z^0` (identity) or `Z^1` (phase flip).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LocalOp {
    Identity,
    PhaseFlip,
}

impl LocalOp {
    pub fn from_bit(bit: u8) -> Self {
        debug_assert!(bit <= 1);
        if bit & 1 == 0 {
            LocalOp::Identity
        } else {
            LocalOp::PhaseFlip
        }
    }

    pub fn bit(self) -> u8 {
        match self {
            LocalOp::Identity => 0,
            LocalOp::PhaseFlip => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BellLabel {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

/// A Bell measurement outside the Ψ subspace. Honest rounds never produce
/// one, so it is evidence of channel tampering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("{0} outcome carries no Ψ-parity (tamper evidence)")]
pub struct TamperPhi(pub BellLabel);

impl BellLabel {
    /// Index order used by [`bell_coefficients`].
    pub const ALL: [BellLabel; 4] = [
        BellLabel::PhiPlus,
        BellLabel::PhiMinus,
        BellLabel::PsiPlus,
        BellLabel::PsiMinus,
    ];

    pub fn index(self) -> usize {
        match self {
            BellLabel::PhiPlus => 0,
            BellLabel::PhiMinus => 1,
            BellLabel::PsiPlus => 2,
            BellLabel::PsiMinus => 3,
        }
    }

    pub fn is_phi(self) -> bool {
        matches!(self, BellLabel::PhiPlus | BellLabel::PhiMinus)
    }

    /// 0 for Ψ+, 1 for Ψ−.
    pub fn psi_parity(self) -> Result<u8, TamperPhi> {
        match self {
            BellLabel::PsiPlus => Ok(0),
            BellLabel::PsiMinus => Ok(1),
            phi => Err(TamperPhi(phi)),
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            BellLabel::PhiPlus => "Φ+",
            BellLabel::PhiMinus => "Φ−",
            BellLabel::PsiPlus => "Ψ+",
            BellLabel::PsiMinus => "Ψ−",
        }
    }
}

impl fmt::Display for BellLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoQubitState {
    amps: [Complex64; 4],
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("amplitudes have squared norm {0}, expected 1")]
pub struct NotNormalized(pub f64);

impl TwoQubitState {
    /// Builds a state from `(a00, a01, a10, a11)`; rejects vectors whose
    /// norm is not 1 within [`TOLERANCE`].
    pub fn from_amplitudes(amps: [Complex64; 4]) -> Result<Self, NotNormalized> {
        let n = amps.iter().map(|a| a.norm_sqr()).sum::<f64>();
        if (n - 1.0).abs() > TOLERANCE {
            return Err(NotNormalized(n));
        }
        Ok(Self { amps })
    }

    pub fn from_real(amps: [f64; 4]) -> Result<Self, NotNormalized> {
        Self::from_amplitudes(amps.map(|a| Complex64::new(a, 0.0)))
    }

    /// `|home> ⊗ |travel>` from single-qubit amplitude pairs.
    pub fn product(home: [Complex64; 2], travel: [Complex64; 2]) -> Result<Self, NotNormalized> {
        Self::from_amplitudes([
            home[0] * travel[0],
            home[0] * travel[1],
            home[1] * travel[0],
            home[1] * travel[1],
        ])
    }

    /// Computational basis state `|home travel>`.
    pub fn basis(home: u8, travel: u8) -> Self {
        let mut amps = [ZERO; 4];
        amps[usize::from(home & 1) * 2 + usize::from(travel & 1)] = Complex64::new(1.0, 0.0);
        Self { amps }
    }

    /// Skips the norm check; for sub-normalized branch vectors inside the crate.
    pub(crate) fn raw(amps: [Complex64; 4]) -> Self {
        Self { amps }
    }

    pub fn amplitudes(&self) -> [Complex64; 4] {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Equality up to a global phase, componentwise within `tol`.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        // Align phases on the other state's largest component.
        let (idx, _) = other
            .amps
            .iter()
            .enumerate()
            .fold((0, -1.0), |best, (i, a)| if a.norm() > best.1 { (i, a.norm()) } else { best });
        let pivot = self.amps[idx];
        if pivot.norm() < tol {
            return false;
        }
        // Unit phase taking self's pivot onto other's pivot.
        let rot = (other.amps[idx] / other.amps[idx].norm()) / (pivot / pivot.norm());
        self.amps
            .iter()
            .zip(other.amps.iter())
            .all(|(a, b)| (a * rot - b).norm() <= tol)
    }

    fn map_indices(self, f: impl Fn(usize, Complex64) -> Complex64) -> Self {
        let mut amps = self.amps;
        for (i, a) in amps.iter_mut().enumerate() {
            *a = f(i, *a);
        }
        Self { amps }
    }
}

/// Bit of `target` in basis index `i` (0..4).
fn bit_of(i: usize, target: QubitIndex) -> u8 {
    match target {
        QubitIndex::Home => ((i >> 1) & 1) as u8,
        QubitIndex::Travel => (i & 1) as u8,
    }
}

pub fn make_bell(label: BellLabel) -> TwoQubitState {
    let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let amps = match label {
        BellLabel::PhiPlus => [h, ZERO, ZERO, h],
        BellLabel::PhiMinus => [h, ZERO, ZERO, -h],
        BellLabel::PsiPlus => [ZERO, h, h, ZERO],
        BellLabel::PsiMinus => [ZERO, h, -h, ZERO],
    };
    TwoQubitState { amps }
}

/// `Z^bit` on one qubit; the identity returns the input unchanged.
pub fn apply_local(state: TwoQubitState, op: LocalOp, target: QubitIndex) -> TwoQubitState {
    match op {
        LocalOp::Identity => state,
        LocalOp::PhaseFlip => {
            state.map_indices(|i, a| if bit_of(i, target) == 1 { -a } else { a })
        }
    }
}

/// Hadamard on one qubit; rotates between the Z and X bases.
pub fn apply_hadamard(state: TwoQubitState, target: QubitIndex) -> TwoQubitState {
    let a = state.amps;
    let h = FRAC_1_SQRT_2;
    let amps = match target {
        QubitIndex::Travel => [
            (a[0] + a[1]) * h,
            (a[0] - a[1]) * h,
            (a[2] + a[3]) * h,
            (a[2] - a[3]) * h,
        ],
        QubitIndex::Home => [
            (a[0] + a[2]) * h,
            (a[1] + a[3]) * h,
            (a[0] - a[2]) * h,
            (a[1] - a[3]) * h,
        ],
    };
    TwoQubitState { amps }
}

/// Unnormalized projection of `target` onto computational value `bit`.
/// Returns the branch probability and the projected (sub-normalized) vector.
pub fn project(state: &TwoQubitState, target: QubitIndex, bit: u8) -> (f64, [Complex64; 4]) {
    let mut amps = state.amps;
    for (i, a) in amps.iter_mut().enumerate() {
        if bit_of(i, target) != bit {
            *a = ZERO;
        }
    }
    (amps.iter().map(|a| a.norm_sqr()).sum(), amps)
}

fn renormalize(amps: [Complex64; 4], prob: f64) -> TwoQubitState {
    let s = prob.sqrt();
    TwoQubitState { amps: amps.map(|a| a / s) }
}

/// Picks a branch index with one uniform draw. Branches whose probability is
/// below [`TOLERANCE`] are never selected.
pub(crate) fn sample_branch(probs: &[f64], rng: &mut RandomStream) -> usize {
    let live = |p: f64| p >= TOLERANCE;
    let total: f64 = probs.iter().copied().filter(|&p| live(p)).sum();
    let u = rng.uniform() * total;
    let mut acc = 0.0;
    let mut last = None;
    for (i, &p) in probs.iter().enumerate() {
        if !live(p) {
            continue;
        }
        acc += p;
        last = Some(i);
        if u < acc {
            return i;
        }
    }
    last.expect("state has no branch with nonzero probability")
}

pub fn measure_computational(
    state: &TwoQubitState,
    target: QubitIndex,
    rng: &mut RandomStream,
) -> (u8, TwoQubitState) {
    let branches = [project(state, target, 0), project(state, target, 1)];
    let bit = sample_branch(&[branches[0].0, branches[1].0], rng);
    let (p, amps) = branches[bit];
    (bit as u8, renormalize(amps, p))
}

/// Coefficients in the Bell basis, indexed by [`BellLabel::index`].
pub fn bell_coefficients(state: &TwoQubitState) -> [Complex64; 4] {
    let [a00, a01, a10, a11] = state.amps;
    let h = FRAC_1_SQRT_2;
    [(a00 + a11) * h, (a00 - a11) * h, (a01 + a10) * h, (a01 - a10) * h]
}

pub fn bell_probabilities(state: &TwoQubitState) -> [f64; 4] {
    bell_coefficients(state).map(|c| c.norm_sqr())
}

/// Inverse of [`bell_coefficients`].
pub fn from_bell_coefficients(c: [Complex64; 4]) -> Result<TwoQubitState, NotNormalized> {
    let h = FRAC_1_SQRT_2;
    let [pp, pm, sp, sm] = c;
    TwoQubitState::from_amplitudes([(pp + pm) * h, (sp + sm) * h, (sp - sm) * h, (pp - pm) * h])
}

pub fn measure_bell(state: &TwoQubitState, rng: &mut RandomStream) -> (BellLabel, TwoQubitState) {
    let label = BellLabel::ALL[sample_branch(&bell_probabilities(state), rng)];
    (label, make_bell(label))
}

#[cfg(test)]
mod tests {
    use super::*;

    const S: f64 = FRAC_1_SQRT_2;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn plus() -> [Complex64; 2] {
        [c(S), c(S)]
    }

    fn minus() -> [Complex64; 2] {
        [c(S), c(-S)]
    }

    #[test]
    fn bell_states_have_canonical_amplitudes() {
        let psi_p = make_bell(BellLabel::PsiPlus).amplitudes();
        assert_eq!(psi_p, [c(0.0), c(S), c(S), c(0.0)]);
        let psi_m = make_bell(BellLabel::PsiMinus).amplitudes();
        assert_eq!(psi_m, [c(0.0), c(S), c(-S), c(0.0)]);
        let phi_p = make_bell(BellLabel::PhiPlus).amplitudes();
        assert_eq!(phi_p, [c(S), c(0.0), c(0.0), c(S)]);
        for l in BellLabel::ALL {
            assert!((make_bell(l).norm_sqr() - 1.0).abs() < TOLERANCE);
        }
    }

    #[test]
    fn phase_flip_maps_psi_plus_to_psi_minus() {
        let psi_p = make_bell(BellLabel::PsiPlus);
        let psi_m = make_bell(BellLabel::PsiMinus);
        let t = apply_local(psi_p, LocalOp::PhaseFlip, QubitIndex::Travel);
        assert!(t.approx_eq(&psi_m, TOLERANCE));
        // Z on travel gives exactly −Ψ−.
        assert_eq!(t.amplitudes(), [c(0.0), c(-S), c(S), c(0.0)]);
        let h = apply_local(psi_p, LocalOp::PhaseFlip, QubitIndex::Home);
        assert!(h.approx_eq(&psi_m, TOLERANCE));
        assert_eq!(h.amplitudes(), [c(0.0), c(S), c(-S), c(0.0)]);
    }

    #[test]
    fn identity_is_exact() {
        let s = TwoQubitState::product(plus(), minus()).unwrap();
        assert_eq!(apply_local(s, LocalOp::Identity, QubitIndex::Travel), s);
        assert_eq!(apply_local(s, LocalOp::Identity, QubitIndex::Home), s);
    }

    #[test]
    fn local_op_bit_is_a_bijection() {
        assert_eq!(LocalOp::from_bit(0).bit(), 0);
        assert_eq!(LocalOp::from_bit(1).bit(), 1);
        assert_ne!(LocalOp::from_bit(0), LocalOp::from_bit(1));
    }

    #[test]
    fn psi_parity_rejects_phi() {
        assert_eq!(BellLabel::PsiPlus.psi_parity(), Ok(0));
        assert_eq!(BellLabel::PsiMinus.psi_parity(), Ok(1));
        assert_eq!(BellLabel::PhiPlus.psi_parity(), Err(TamperPhi(BellLabel::PhiPlus)));
        assert_eq!(BellLabel::PhiMinus.psi_parity(), Err(TamperPhi(BellLabel::PhiMinus)));
    }

    #[test]
    fn approx_eq_ignores_global_phase_only() {
        let psi_p = make_bell(BellLabel::PsiPlus);
        let rotated = TwoQubitState::from_amplitudes(
            psi_p.amplitudes().map(|a| a * Complex64::from_polar(1.0, 0.7)),
        )
        .unwrap();
        assert!(rotated.approx_eq(&psi_p, TOLERANCE));
        assert!(psi_p.approx_eq(&rotated, TOLERANCE));
        assert!(!psi_p.approx_eq(&make_bell(BellLabel::PsiMinus), TOLERANCE));
        assert!(!psi_p.approx_eq(&TwoQubitState::basis(0, 1), TOLERANCE));
    }

    #[test]
    fn rejects_unnormalized_amplitudes() {
        assert!(TwoQubitState::from_real([1.0, 1.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn computational_measurement_of_psi_plus_is_anticorrelated() {
        let psi_p = make_bell(BellLabel::PsiPlus);
        let mut rng = RandomStream::from_seed(11);
        let mut seen = [false; 2];
        for _ in 0..200 {
            let (bit, post) = measure_computational(&psi_p, QubitIndex::Travel, &mut rng);
            let expected = if bit == 0 { TwoQubitState::basis(1, 0) } else { TwoQubitState::basis(0, 1) };
            assert!(post.approx_eq(&expected, TOLERANCE));
            seen[bit as usize] = true;
            let (again, _) = measure_computational(&post, QubitIndex::Travel, &mut rng);
            assert_eq!(again, bit);
        }
        assert_eq!(seen, [true, true]);
    }

    #[test]
    fn product_state_measurement_is_deterministic() {
        let s = TwoQubitState::basis(0, 1);
        let mut rng = RandomStream::from_seed(3);
        for _ in 0..100 {
            let (bit, post) = measure_computational(&s, QubitIndex::Travel, &mut rng);
            assert_eq!(bit, 1);
            assert_eq!(post, s);
        }
    }

    #[test]
    fn measuring_home_of_plus_minus() {
        // (|0>+|1>)(|0>-|1>)/2 projected on home: |0>|-> or |1>|->, each 1/2.
        let s = TwoQubitState::product(plus(), minus()).unwrap();
        for bit in 0..2u8 {
            let (p, _) = project(&s, QubitIndex::Home, bit);
            assert!((p - 0.5).abs() < TOLERANCE);
        }
        let mut rng = RandomStream::from_seed(5);
        for _ in 0..50 {
            let (bit, post) = measure_computational(&s, QubitIndex::Home, &mut rng);
            let home = if bit == 0 { [c(1.0), c(0.0)] } else { [c(0.0), c(1.0)] };
            let expected = TwoQubitState::product(home, minus()).unwrap();
            assert!(post.approx_eq(&expected, TOLERANCE));
        }
    }

    #[test]
    fn bell_coefficient_examples() {
        let close = |a: [Complex64; 4], b: [f64; 4]| {
            a.iter().zip(b).all(|(x, y)| (x - c(y)).norm() < TOLERANCE)
        };
        assert!(close(bell_coefficients(&make_bell(BellLabel::PsiMinus)), [0.0, 0.0, 0.0, 1.0]));
        let phi = TwoQubitState::from_real([S, 0.0, 0.0, S]).unwrap();
        assert!(close(bell_coefficients(&phi), [1.0, 0.0, 0.0, 0.0]));
        let pm = TwoQubitState::from_real([0.5, -0.5, 0.5, -0.5]).unwrap();
        assert!(close(bell_coefficients(&pm), [0.0, S, 0.0, -S]));
    }

    #[test]
    fn bell_measurement_examples() {
        let mut rng = RandomStream::from_seed(9);
        for _ in 0..100 {
            assert_eq!(measure_bell(&make_bell(BellLabel::PsiPlus), &mut rng).0, BellLabel::PsiPlus);
            assert_eq!(measure_bell(&make_bell(BellLabel::PsiMinus), &mut rng).0, BellLabel::PsiMinus);
        }
        let pm = TwoQubitState::from_real([0.5, -0.5, 0.5, -0.5]).unwrap();
        let p = bell_probabilities(&pm);
        assert!((p[BellLabel::PhiMinus.index()] - 0.5).abs() < TOLERANCE);
        assert!((p[BellLabel::PsiMinus.index()] - 0.5).abs() < TOLERANCE);
        let mut counts = [0usize; 4];
        for _ in 0..1000 {
            let (l, post) = measure_bell(&pm, &mut rng);
            assert_eq!(post, make_bell(l));
            counts[l.index()] += 1;
        }
        assert_eq!(counts[0] + counts[2], 0);
        assert!(counts[1] > 400 && counts[3] > 400);
    }

    #[test]
    fn computational_statistics_on_psi_plus() {
        const N: usize = 100_000;
        let psi_p = make_bell(BellLabel::PsiPlus);
        let mut rng = RandomStream::from_seed(2024);
        let zeros = (0..N)
            .filter(|_| measure_computational(&psi_p, QubitIndex::Travel, &mut rng).0 == 0)
            .count();
        let freq = zeros as f64 / N as f64;
        assert!((freq - 0.5).abs() <= 3.0 * (0.25 / N as f64).sqrt(), "freq {freq}");
    }

    #[test]
    fn hadamard_is_an_involution() {
        let v = [0.1, 0.7, -0.5, 0.3f64];
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let s = TwoQubitState::from_real(v.map(|x| x / n)).unwrap();
        for t in [QubitIndex::Home, QubitIndex::Travel] {
            let back = apply_hadamard(apply_hadamard(s, t), t);
            assert!(back.approx_eq(&s, TOLERANCE));
        }
    }
}
