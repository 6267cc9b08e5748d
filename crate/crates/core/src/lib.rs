//! Exact two-qubit simulator and Monte Carlo harness for bidirectional
//! ping-pong secure direct communication ("quantum dialogue").
//!
//! Bob prepares `|Ψ+>`, sends the travel qubit to Alice, and in message rounds
//! both parties phase-encode one bit each with `Z^j` and `Z^k`. Bob's public
//! Bell outcome has Ψ-parity `j XOR k`, so each side recovers the other's bit.
//! Control rounds test the channel via computational-basis anticorrelation.

pub mod adversary;
pub mod config;
pub mod error;
pub mod harness;
pub mod io;
pub mod protocol;
pub mod rng;
pub mod state;
pub mod table;

pub use adversary::{AdversarySpec, Basis, ChannelEvent, ChannelLeg, LegSet, Strategy};
pub use error::{ConfigError, ReplayError};
pub use harness::{run_experiment, ExperimentConfig, MessageSource, SummaryStats};
pub use protocol::{decode_peer_bit, Mode, RoundRecord};
pub use rng::RandomStream;
pub use state::{BellLabel, LocalOp, QubitIndex, TamperPhi, TwoQubitState};
