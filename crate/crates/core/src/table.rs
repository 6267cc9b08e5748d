//! Exhaustive verification of the encoding law: Alice's `Z^j` and Bob's
//! `Z^k` on `|Ψ+>` yield Bell outcome Ψ+ when `j = k` and Ψ− otherwise.

use std::fmt::Write as _;

use crate::protocol::{alice_encode, bob_encode_and_measure, bob_prepare};
use crate::rng::RandomStream;
use crate::state::{apply_local, bell_probabilities, BellLabel, LocalOp, QubitIndex, TOLERANCE};

/// Reference table indexed `[j][k]`.
pub const EXPECTED: [[BellLabel; 2]; 2] = [
    [BellLabel::PsiPlus, BellLabel::PsiMinus],
    [BellLabel::PsiMinus, BellLabel::PsiPlus],
];

/// The system under test: exact outcome distribution and a sampler.
pub trait TableSimulator {
    fn distribution(&self, j: u8, k: u8) -> [f64; 4];
    fn sample(&self, j: u8, k: u8, rng: &mut RandomStream) -> BellLabel;
}

/// The honest protocol with Bob encoding on `target`.
#[derive(Debug, Clone, Copy)]
pub struct Protocol {
    pub target: QubitIndex,
}

impl TableSimulator for Protocol {
    fn distribution(&self, j: u8, k: u8) -> [f64; 4] {
        let state = alice_encode(bob_prepare(), j);
        bell_probabilities(&apply_local(state, LocalOp::from_bit(k), self.target))
    }

    fn sample(&self, j: u8, k: u8, rng: &mut RandomStream) -> BellLabel {
        bob_encode_and_measure(alice_encode(bob_prepare(), j), k, self.target, rng)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellReport {
    pub j: u8,
    pub k: u8,
    pub expected: BellLabel,
    /// Exact probability of the expected outcome.
    pub probability: f64,
    /// Sampled outcome counts, indexed by [`BellLabel::index`].
    pub counts: [u64; 4],
}

impl CellReport {
    pub fn deterministic(&self) -> bool {
        let n: u64 = self.counts.iter().sum();
        (self.probability - 1.0).abs() <= TOLERANCE && self.counts[self.expected.index()] == n
    }

    pub fn describe(&self) -> String {
        let observed: Vec<String> = BellLabel::ALL
            .iter()
            .filter(|l| self.counts[l.index()] > 0)
            .map(|l| format!("{l}×{}", self.counts[l.index()]))
            .collect();
        format!(
            "(j={}, k={}): expected {} with probability 1, exact probability {:.12}, sampled {}",
            self.j,
            self.k,
            self.expected,
            self.probability,
            observed.join(" ")
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableReport {
    pub repetitions: u64,
    pub cells: Vec<CellReport>,
}

impl TableReport {
    pub fn passed(&self) -> bool {
        self.cells.iter().all(CellReport::deterministic)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CellReport> {
        self.cells.iter().filter(|c| !c.deterministic())
    }

    /// Majority outcome per cell, indexed `[j][k]`.
    pub fn observed(&self) -> [[BellLabel; 2]; 2] {
        let mut t = EXPECTED;
        for c in &self.cells {
            let best = (0..4).max_by_key(|&i| c.counts[i]).unwrap_or(0);
            t[c.j as usize][c.k as usize] = BellLabel::ALL[best];
        }
        t
    }

    pub fn render(&self) -> String {
        let t = self.observed();
        let mut s = String::new();
        let _ = writeln!(s, "{:<12}{:<10}{:<10}", "", "Bob Z^0", "Bob Z^1");
        for (j, row) in t.iter().enumerate() {
            let _ = writeln!(s, "{:<12}{:<10}{:<10}", format!("Alice Z^{j}"), row[0].to_string(), row[1].to_string());
        }
        s
    }
}

pub fn check_table_with(sim: &impl TableSimulator, repetitions: u64, seed: u64) -> TableReport {
    let mut rng = RandomStream::from_seed(seed);
    let mut cells = Vec::with_capacity(4);
    for j in 0..2u8 {
        for k in 0..2u8 {
            let expected = EXPECTED[j as usize][k as usize];
            let probability = sim.distribution(j, k)[expected.index()];
            let mut counts = [0u64; 4];
            for _ in 0..repetitions {
                counts[sim.sample(j, k, &mut rng).index()] += 1;
            }
            cells.push(CellReport { j, k, expected, probability, counts });
        }
    }
    TableReport { repetitions, cells }
}

pub fn check_table(target: QubitIndex, repetitions: u64, seed: u64) -> TableReport {
    check_table_with(&Protocol { target }, repetitions, seed)
}
