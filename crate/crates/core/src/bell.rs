//! Two-photon polarization states.
//!
//! Amplitudes are stored in the basis order `HH, HV, VH, VV`, where the first
//! letter is photon 1. Every state also carries the zero-based index of the
//! time bin it occupies; the delay line sets it, nothing else touches it.

use num_complex::Complex64;
use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use crate::error::{Error, Result};

/// Amplitudes smaller than this are treated as zero when picking the
/// reference amplitude for global-phase canonicalization.
const PHASE_REFERENCE_EPS: f64 = 1e-12;

/// Basis labels in storage order.
pub const BASIS: [&str; 4] = ["HH", "HV", "VH", "VV"];

/// A normalized two-qubit polarization state tagged with a time bin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoQubitState {
    amps: [Complex64; 4],
    time_bin: u64,
}

impl TwoQubitState {
    /// Builds a state from raw amplitudes, normalizing them and fixing the
    /// global phase. Fails on the zero vector or non-finite input.
    pub fn new(amps: [Complex64; 4]) -> Result<Self> {
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::invalid(
                "amps",
                "amplitudes must be finite and not all zero",
            ));
        }
        Ok(Self::from_unnormalized(amps.map(|a| a / norm)))
    }

    fn from_unnormalized(amps: [Complex64; 4]) -> Self {
        TwoQubitState { amps, time_bin: 0 }.canonical()
    }

    pub fn amplitudes(&self) -> &[Complex64; 4] {
        &self.amps
    }

    pub fn time_bin(&self) -> u64 {
        self.time_bin
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `⟨self|other⟩`, ignoring time bins.
    pub fn inner(&self, other: &TwoQubitState) -> Complex64 {
        self.amps
            .iter()
            .zip(other.amps.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Equality up to global phase, comparing amplitudes and time bin.
    pub fn approx_eq(&self, other: &TwoQubitState, tol: f64) -> bool {
        self.time_bin == other.time_bin && (1.0 - fidelity(self, other)).abs() <= tol
    }

    /// Rotates the global phase so the first non-negligible amplitude is real
    /// and positive.
    fn canonical(mut self) -> Self {
        if let Some(reference) = self
            .amps
            .iter()
            .find(|a| a.norm() > PHASE_REFERENCE_EPS)
            .copied()
        {
            let rotation = reference.conj() / reference.norm();
            for a in &mut self.amps {
                *a *= rotation;
            }
            // Strip the rounding residue so the reference is exactly real.
            let first = self
                .amps
                .iter_mut()
                .find(|a| a.norm() > PHASE_REFERENCE_EPS)
                .expect("reference amplitude survives rotation");
            *first = Complex64::new(first.norm(), 0.0);
        }
        self
    }
}

impl fmt::Display for TwoQubitState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (label, a) in BASIS.iter().zip(self.amps.iter()) {
            if a.norm() <= PHASE_REFERENCE_EPS {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({:.6}{:+.6}i)|{label}>", a.re, a.im)?;
        }
        write!(f, " @ bin {}", self.time_bin)
    }
}

/// The four maximally entangled Bell states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BellState {
    PsiPlus,
    PsiMinus,
    PhiPlus,
    PhiMinus,
}

impl BellState {
    pub const ALL: [BellState; 4] = [
        BellState::PsiPlus,
        BellState::PsiMinus,
        BellState::PhiPlus,
        BellState::PhiMinus,
    ];

    fn amplitudes(self) -> [Complex64; 4] {
        let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
        let z = Complex64::new(0.0, 0.0);
        match self {
            BellState::PsiPlus => [z, h, h, z],
            BellState::PsiMinus => [z, h, -h, z],
            BellState::PhiPlus => [h, z, z, h],
            BellState::PhiMinus => [h, z, z, -h],
        }
    }
}

impl fmt::Display for BellState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            BellState::PsiPlus => "Psi+",
            BellState::PsiMinus => "Psi-",
            BellState::PhiPlus => "Phi+",
            BellState::PhiMinus => "Phi-",
        };
        f.write_str(s)
    }
}

/// Pauli operation applied to photon 1. `XZ` is the product `X·Z`, i.e. `Z`
/// acts first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PauliOp {
    I,
    X,
    Z,
    XZ,
}

/// Canonical amplitude vector of `bell`, in bin 0.
pub fn canonical_state(bell: BellState) -> TwoQubitState {
    TwoQubitState {
        amps: bell.amplitudes(),
        time_bin: 0,
    }
}

pub fn apply_pauli(op: PauliOp, s: &TwoQubitState) -> TwoQubitState {
    let [hh, hv, vh, vv] = s.amps;
    let amps = match op {
        PauliOp::I => [hh, hv, vh, vv],
        // photon 1: |H> <-> |V>
        PauliOp::X => [vh, vv, hh, hv],
        // photon 1: |V> -> -|V>
        PauliOp::Z => [hh, hv, -vh, -vv],
        PauliOp::XZ => [-vh, -vv, hh, hv],
    };
    TwoQubitState {
        amps,
        time_bin: s.time_bin,
    }
    .canonical()
}

/// `|⟨a|b⟩|²`, clamped to `[0, 1]`.
pub fn fidelity(a: &TwoQubitState, b: &TwoQubitState) -> f64 {
    a.inner(b).norm_sqr().clamp(0.0, 1.0)
}

/// Applies a relative phase `e^{iφ}` to the `VH` amplitude.
pub fn dephase(s: &TwoQubitState, phi: f64) -> TwoQubitState {
    let mut amps = s.amps;
    amps[2] *= Complex64::from_polar(1.0, phi);
    TwoQubitState {
        amps,
        time_bin: s.time_bin,
    }
    .canonical()
}

/// Returns `s` moved to time bin `index` of a frame with `bins` slots.
pub fn attach_time_bin(s: &TwoQubitState, index: u64, bins: u64) -> Result<TwoQubitState> {
    if index >= bins {
        return Err(Error::TimeBinOutOfRange { index, bins });
    }
    Ok(TwoQubitState {
        amps: s.amps,
        time_bin: index,
    })
}

/// Outcome probabilities of a projective Bell-basis measurement, in
/// [`BellState::ALL`] order.
pub fn bell_probabilities(s: &TwoQubitState) -> [f64; 4] {
    BellState::ALL.map(|b| fidelity(&canonical_state(b), s))
}
