//! Superdense coding of two classical bits on a shared Bell pair, and the
//! Bell-state analyzers Bob may use to read them back.

use rand::Rng;
use serde::Deserialize;
use std::fmt;
use std::str::FromStr;

use crate::bell::{apply_pauli, bell_probabilities, canonical_state, BellState, PauliOp, TwoQubitState};
use crate::error::Error;

/// Bits per biphoton reachable with hyperentangled spin-orbit Bell analysis
/// (seven distinguishable classes). Reported only; not simulated.
pub const HYPER_BELL_CAPACITY_BITS: f64 = 2.807354922057604;

/// A two-bit word, `0b00..=0b11`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TwoBitWord(u8);

impl TwoBitWord {
    pub const ALL: [TwoBitWord; 4] = [
        TwoBitWord(0b00),
        TwoBitWord(0b01),
        TwoBitWord(0b10),
        TwoBitWord(0b11),
    ];

    /// Keeps the low two bits of `bits`.
    pub fn from_low_bits(bits: u8) -> Self {
        TwoBitWord(bits & 0b11)
    }

    pub fn new(bits: u8) -> Result<Self, Error> {
        if bits > 0b11 {
            Err(Error::invalid("word", format!("{bits} is not a two-bit word")))
        } else {
            Ok(TwoBitWord(bits))
        }
    }

    pub fn bits(self) -> u8 {
        self.0
    }
}

impl fmt::Display for TwoBitWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:02b}", self.0)
    }
}

/// Bell-state analyzer capability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BsaMode {
    /// Complete projective Bell measurement.
    #[default]
    Ideal,
    /// Beamsplitter analyzer: `Phi+` and `Phi-` give the same signature.
    LinearOptics,
    /// Complete analysis assisted by entanglement in a second degree of
    /// freedom. Outcome-equivalent to `Ideal`.
    HyperAssisted,
}

impl BsaMode {
    pub fn name(self) -> &'static str {
        match self {
            BsaMode::Ideal => "ideal",
            BsaMode::LinearOptics => "linear-optics",
            BsaMode::HyperAssisted => "hyper-assisted",
        }
    }
}

impl FromStr for BsaMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ideal" => Ok(BsaMode::Ideal),
            "linear-optics" => Ok(BsaMode::LinearOptics),
            "hyper-assisted" => Ok(BsaMode::HyperAssisted),
            other => Err(Error::Config(format!(
                "unknown BSA mode `{other}` (expected ideal, linear-optics or hyper-assisted)"
            ))),
        }
    }
}

impl fmt::Display for BsaMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BsaOutcome {
    PsiPlus,
    PsiMinus,
    PhiPlus,
    PhiMinus,
    /// `Phi+` or `Phi-`, unresolved. Only produced in linear-optics mode.
    PhiAmbiguous,
}

impl BsaOutcome {
    /// The outcome `mode` reports when the pair is projected onto `bell`.
    pub fn observe(bell: BellState, mode: BsaMode) -> Self {
        match (bell, mode) {
            (BellState::PhiPlus | BellState::PhiMinus, BsaMode::LinearOptics) => {
                BsaOutcome::PhiAmbiguous
            }
            (BellState::PsiPlus, _) => BsaOutcome::PsiPlus,
            (BellState::PsiMinus, _) => BsaOutcome::PsiMinus,
            (BellState::PhiPlus, _) => BsaOutcome::PhiPlus,
            (BellState::PhiMinus, _) => BsaOutcome::PhiMinus,
        }
    }
}

/// Result of reading a Bell outcome back as bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Decoded {
    Word(TwoBitWord),
    Ambiguous,
}

fn pauli_for(word: TwoBitWord) -> PauliOp {
    match word.0 {
        0b00 => PauliOp::I,
        0b01 => PauliOp::X,
        0b10 => PauliOp::Z,
        _ => PauliOp::XZ,
    }
}

/// Alice's operation for `word` and the Bell state it produces from `Psi+`.
pub fn encode(word: TwoBitWord) -> (PauliOp, BellState) {
    let bell = match word.0 {
        0b00 => BellState::PsiPlus,
        0b01 => BellState::PhiPlus,
        0b10 => BellState::PsiMinus,
        _ => BellState::PhiMinus,
    };
    (pauli_for(word), bell)
}

/// Applies the encoding operation for `word` to an arbitrary (possibly
/// distorted) shared state.
pub fn encode_state(word: TwoBitWord, shared: &TwoQubitState) -> TwoQubitState {
    apply_pauli(pauli_for(word), shared)
}

/// Samples a Bell-basis measurement of `s`.
pub fn bsa_measure<R: Rng + ?Sized>(s: &TwoQubitState, mode: BsaMode, rng: &mut R) -> BsaOutcome {
    let probs = bell_probabilities(s);
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut picked = BellState::ALL[3];
    for (bell, p) in BellState::ALL.iter().zip(probs) {
        acc += p;
        if u < acc {
            picked = *bell;
            break;
        }
    }
    // Rounding can leave `acc` a hair under 1; fall back to the last state
    // with nonzero weight.
    if u >= acc {
        if let Some(i) = probs.iter().rposition(|&p| p > 0.0) {
            picked = BellState::ALL[i];
        }
    }
    BsaOutcome::observe(picked, mode)
}

/// Exact outcome distribution of [`bsa_measure`].
pub fn bsa_distribution(s: &TwoQubitState, mode: BsaMode) -> Vec<(BsaOutcome, f64)> {
    let mut out: Vec<(BsaOutcome, f64)> = Vec::with_capacity(4);
    for (bell, p) in BellState::ALL.iter().zip(bell_probabilities(s)) {
        let o = BsaOutcome::observe(*bell, mode);
        match out.iter_mut().find(|(k, _)| *k == o) {
            Some((_, acc)) => *acc += p,
            None => out.push((o, p)),
        }
    }
    out
}

pub fn decode(outcome: BsaOutcome) -> Decoded {
    match outcome {
        BsaOutcome::PsiPlus => Decoded::Word(TwoBitWord(0b00)),
        BsaOutcome::PhiPlus => Decoded::Word(TwoBitWord(0b01)),
        BsaOutcome::PsiMinus => Decoded::Word(TwoBitWord(0b10)),
        BsaOutcome::PhiMinus => Decoded::Word(TwoBitWord(0b11)),
        BsaOutcome::PhiAmbiguous => Decoded::Ambiguous,
    }
}

/// Bits carried per biphoton with `time_bits` bits of time-bin position.
pub fn capacity_bits_per_biphoton(time_bits: u32, mode: BsaMode) -> f64 {
    let dense = match mode {
        BsaMode::Ideal | BsaMode::HyperAssisted => 2.0,
        BsaMode::LinearOptics => 3f64.log2(),
    };
    f64::from(time_bits) + dense
}

/// The state Alice sends for `word` starting from the ideal shared pair.
pub fn encoded_bell_state(word: TwoBitWord) -> TwoQubitState {
    canonical_state(encode(word).1)
}
