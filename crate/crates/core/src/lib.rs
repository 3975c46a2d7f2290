//! Hybrid time-bin and superdense coding link toolkit.
//!
//! A photon pair shared by Alice is delayed into one of `Y = 2^M` time bins
//! by a binary switched delay line, then dense-coded with one of four Pauli
//! operations. Bob reads `M` bits from the bin in which the coincidence
//! lands and two more from a Bell-state analysis.
//!
//! The crate provides the state algebra ([`bell`]), the dense coding layer
//! ([`dense`]), the delay line model ([`bifodel`]), link probabilities and
//! frame sampling ([`link`]), closed-form symbol error and QBER ([`qber`]),
//! and a Monte Carlo harness with sweeps ([`sim`], [`sweep`]).

pub mod bell;
pub mod bifodel;
pub mod binomial;
pub mod config;
pub mod dense;
pub mod error;
pub mod link;
pub mod qber;
pub mod sim;
pub mod stream;
pub mod sweep;

pub use bell::{apply_pauli, attach_time_bin, canonical_state, dephase, fidelity, BellState, PauliOp, TwoQubitState};
pub use bifodel::{
    apply_delay, switch_settings, total_delay, validate_coherence, BifodelConfig, CoherenceReport,
    StageImperfection,
};
pub use config::Config;
pub use dense::{bsa_measure, capacity_bits_per_biphoton, decode, encode, BsaMode, BsaOutcome, Decoded, TwoBitWord};
pub use error::{Error, Result};
pub use link::{LinkParams, LinkProbabilities, SymbolFrame};
pub use qber::{brute_force_symbol_error, qber_from_symbol_error, symbol_error_rate, EmptyFramePolicy, ErrorReport};
pub use sim::{decide, run_monte_carlo, Decision, DecisionPolicy, McEstimate, MonteCarlo};
pub use sweep::{run_sweep, SweepRow, SweepSpec};
