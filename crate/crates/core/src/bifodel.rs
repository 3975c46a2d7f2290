//! Binary switched fiber delay line.
//!
//! Stage `k` either routes the pair through its long coil, adding
//! `2^k · T_b`, or through the short reference route. Address bit `k`
//! selects the long coil at stage `k`, so address `a` lands the pair in time
//! bin `a`. Imperfections are attached to the long coils only.

use std::f64::consts::{PI, TAU};

use crate::bell::{attach_time_bin, dephase, TwoQubitState};
use crate::error::{Error, Result};

/// Largest supported number of stages; addresses must fit in a `u64`.
pub const MAX_STAGES: u32 = 63;

/// Deviation of one stage's long coil from the ideal.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StageImperfection {
    /// Photon-1 vs photon-2 delay mismatch, seconds.
    pub differential_delay: f64,
    /// Relative-phase kick between the two terms of the pair state, radians.
    pub phase_error: f64,
    /// H vs V delay mismatch, seconds.
    pub polarization_delay: f64,
}

/// Thresholds applied by [`apply_delay`] when it builds its report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherenceThresholds {
    pub coincidence_window: f64,
    pub phase_tolerance: f64,
}

impl Default for CoherenceThresholds {
    fn default() -> Self {
        CoherenceThresholds {
            coincidence_window: 1e-9,
            phase_tolerance: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BifodelConfig {
    bin_period: f64,
    stages: Vec<StageImperfection>,
    coherence_time: Option<f64>,
    /// The pair leaves in two distinguishable spatial modes.
    pub distinct_spatial_modes: bool,
    /// Single-mode propagation leaves no polarization correlation with other
    /// degrees of freedom.
    pub single_spatial_mode: bool,
    pub thresholds: CoherenceThresholds,
}

impl BifodelConfig {
    /// A line with `n_stages` ideal stages.
    pub fn new(n_stages: u32, bin_period: f64) -> Result<Self> {
        Self::with_stages(vec![StageImperfection::default(); n_stages as usize], bin_period)
    }

    pub fn with_stages(stages: Vec<StageImperfection>, bin_period: f64) -> Result<Self> {
        if stages.is_empty() || stages.len() > MAX_STAGES as usize {
            return Err(Error::invalid(
                "n_stages",
                format!("must be in 1..={MAX_STAGES}, got {}", stages.len()),
            ));
        }
        if !(bin_period.is_finite() && bin_period > 0.0) {
            return Err(Error::invalid("bin_period", format!("must be > 0, got {bin_period}")));
        }
        for (k, s) in stages.iter().enumerate() {
            for (name, v) in [
                ("differential_delay", s.differential_delay),
                ("phase_error", s.phase_error),
                ("polarization_delay", s.polarization_delay),
            ] {
                if !(v.is_finite() && v >= 0.0) {
                    return Err(Error::invalid(
                        name,
                        format!("stage {k}: magnitude must be finite and >= 0, got {v}"),
                    ));
                }
            }
        }
        Ok(BifodelConfig {
            bin_period,
            stages,
            coherence_time: None,
            distinct_spatial_modes: true,
            single_spatial_mode: true,
            thresholds: CoherenceThresholds::default(),
        })
    }

    /// Standard single-mode fiber coils with no imperfections.
    pub fn standard_fiber(n_stages: u32, bin_period: f64) -> Result<Self> {
        Self::new(n_stages, bin_period)
    }

    /// Polarization-maintaining fiber: each coil's long route is its slow
    /// axis, so the H/V delay mismatch on a traversed stage equals that
    /// stage's differential group delay `2^k · T_b`.
    pub fn pm_fiber(n_stages: u32, bin_period: f64) -> Result<Self> {
        let mut cfg = Self::new(n_stages, bin_period)?;
        for k in 0..cfg.stages.len() {
            cfg.stages[k].polarization_delay = cfg.step_delay(k as u32);
        }
        Ok(cfg)
    }

    /// Records the photon coherence time. The bin period must exceed it.
    pub fn with_coherence_time(mut self, coherence_time: f64) -> Result<Self> {
        if !(coherence_time.is_finite() && coherence_time >= 0.0) {
            return Err(Error::invalid(
                "coherence_time",
                format!("must be finite and >= 0, got {coherence_time}"),
            ));
        }
        if self.bin_period <= coherence_time {
            return Err(Error::invalid(
                "coherence_time",
                format!(
                    "bin period {} s must exceed the coherence time {coherence_time} s",
                    self.bin_period
                ),
            ));
        }
        self.coherence_time = Some(coherence_time);
        Ok(self)
    }

    pub fn with_thresholds(mut self, thresholds: CoherenceThresholds) -> Self {
        self.thresholds = thresholds;
        self
    }

    pub fn n_stages(&self) -> u32 {
        self.stages.len() as u32
    }

    pub fn bin_period(&self) -> f64 {
        self.bin_period
    }

    pub fn coherence_time(&self) -> Option<f64> {
        self.coherence_time
    }

    pub fn stages(&self) -> &[StageImperfection] {
        &self.stages
    }

    pub fn stage_mut(&mut self, k: usize) -> Option<&mut StageImperfection> {
        self.stages.get_mut(k)
    }

    /// Number of addressable delays, `2^n_stages`.
    pub fn addresses(&self) -> u64 {
        1u64 << self.n_stages()
    }

    /// Long-coil delay of stage `k`: `2^k · T_b`.
    pub fn step_delay(&self, k: u32) -> f64 {
        // Scaling by a power of two is exact in binary floating point.
        (1u64 << k) as f64 * self.bin_period
    }

    fn check_address(&self, address: u64) -> Result<()> {
        if address >= self.addresses() {
            Err(Error::AddressOutOfRange {
                address,
                stages: self.n_stages(),
            })
        } else {
            Ok(())
        }
    }

    fn traversed(&self, address: u64) -> impl Iterator<Item = &StageImperfection> + '_ {
        self.stages
            .iter()
            .enumerate()
            .filter(move |(k, _)| (address >> k) & 1 == 1)
            .map(|(_, s)| s)
    }

    /// Relative phase picked up along the long coils selected by `address`.
    pub fn accumulated_phase(&self, address: u64) -> Result<f64> {
        self.check_address(address)?;
        Ok(self.traversed(address).map(|s| s.phase_error).sum())
    }

    pub fn accumulated_differential_delay(&self, address: u64) -> Result<f64> {
        self.check_address(address)?;
        Ok(self.traversed(address).map(|s| s.differential_delay).sum())
    }

    pub fn accumulated_polarization_delay(&self, address: u64) -> Result<f64> {
        self.check_address(address)?;
        Ok(self.traversed(address).map(|s| s.polarization_delay).sum())
    }
}

/// Switch settings for `address`: entry `k` is true when stage `k` takes the
/// long coil.
pub fn switch_settings(address: u64, n_stages: u32) -> Result<Vec<bool>> {
    if n_stages == 0 || n_stages > MAX_STAGES || address >= 1u64 << n_stages {
        return Err(Error::AddressOutOfRange {
            address,
            stages: n_stages,
        });
    }
    Ok((0..n_stages).map(|k| (address >> k) & 1 == 1).collect())
}

/// Inverse of [`switch_settings`].
pub fn address_from_settings(settings: &[bool]) -> u64 {
    settings
        .iter()
        .enumerate()
        .filter(|(_, &long)| long)
        .fold(0, |acc, (k, _)| acc | 1 << k)
}

/// Total delay of `address`, seconds. Equals `address · T_b` exactly.
pub fn total_delay(cfg: &BifodelConfig, address: u64) -> Result<f64> {
    cfg.check_address(address)?;
    Ok(address as f64 * cfg.bin_period)
}

/// Folds an angle into `(-π, π]`.
pub fn fold_phase(phi: f64) -> f64 {
    let folded = (phi + PI).rem_euclid(TAU) - PI;
    if folded <= -PI {
        PI
    } else {
        folded
    }
}

/// Pass/fail for one delay-line requirement. `measured` is `None` for
/// requirements that are configuration assumptions rather than computed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Check {
    pub passed: bool,
    pub measured: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherenceReport {
    pub address: u64,
    pub polarization_independent: Check,
    pub no_extra_correlations: Check,
    pub differential_delay_ok: Check,
    pub relative_phase_ok: Check,
    pub distinct_spatial_modes: Check,
    /// Unfolded sum of per-stage phase errors, radians.
    pub accumulated_phase: f64,
    pub accumulated_differential_delay: f64,
    pub accumulated_polarization_delay: f64,
}

impl CoherenceReport {
    pub fn passed(&self) -> bool {
        self.checks().iter().all(|(_, c)| c.passed)
    }

    pub fn checks(&self) -> [(&'static str, Check); 5] {
        [
            ("polarization_independent", self.polarization_independent),
            ("no_extra_correlations", self.no_extra_correlations),
            ("differential_delay_ok", self.differential_delay_ok),
            ("relative_phase_ok", self.relative_phase_ok),
            ("distinct_spatial_modes", self.distinct_spatial_modes),
        ]
    }
}

pub fn validate_coherence(
    cfg: &BifodelConfig,
    address: u64,
    coincidence_window: f64,
    phase_tolerance: f64,
) -> Result<CoherenceReport> {
    if !(coincidence_window.is_finite() && coincidence_window > 0.0) {
        return Err(Error::invalid(
            "coincidence_window",
            format!("must be > 0, got {coincidence_window}"),
        ));
    }
    if !(phase_tolerance.is_finite() && phase_tolerance >= 0.0) {
        return Err(Error::invalid(
            "phase_tolerance",
            format!("must be >= 0, got {phase_tolerance}"),
        ));
    }
    let phase = cfg.accumulated_phase(address)?;
    let differential = cfg.accumulated_differential_delay(address)?;
    let polarization = cfg.accumulated_polarization_delay(address)?;
    let folded = fold_phase(phase);
    Ok(CoherenceReport {
        address,
        polarization_independent: Check {
            passed: polarization < coincidence_window,
            measured: Some(polarization),
        },
        no_extra_correlations: Check {
            passed: cfg.single_spatial_mode,
            measured: None,
        },
        differential_delay_ok: Check {
            passed: differential < coincidence_window,
            measured: Some(differential),
        },
        relative_phase_ok: Check {
            passed: folded.abs() <= phase_tolerance,
            measured: Some(folded),
        },
        distinct_spatial_modes: Check {
            passed: cfg.distinct_spatial_modes,
            measured: None,
        },
        accumulated_phase: phase,
        accumulated_differential_delay: differential,
        accumulated_polarization_delay: polarization,
    })
}

/// Sends `s` through the line at `address`: the state moves to bin
/// `address` and picks up the accumulated relative phase. The report uses
/// the thresholds stored in `cfg`.
pub fn apply_delay(
    s: &TwoQubitState,
    cfg: &BifodelConfig,
    address: u64,
) -> Result<(TwoQubitState, CoherenceReport)> {
    let report = validate_coherence(
        cfg,
        address,
        cfg.thresholds.coincidence_window,
        cfg.thresholds.phase_tolerance,
    )?;
    let delayed = attach_time_bin(&dephase(s, report.accumulated_phase), address, cfg.addresses())?;
    Ok((delayed, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bell::{canonical_state, fidelity, BellState};
    use proptest::prelude::*;

    const NS: f64 = 1e-9;

    #[test]
    fn switch_examples() {
        assert_eq!(switch_settings(0, 4).unwrap(), vec![false; 4]);
        assert_eq!(switch_settings(15, 4).unwrap(), vec![true; 4]);
        assert_eq!(switch_settings(5, 4).unwrap(), vec![true, false, true, false]);
        assert!(switch_settings(16, 4).is_err());
        assert!(switch_settings(0, 0).is_err());
    }

    #[test]
    fn delay_examples() {
        let cfg = BifodelConfig::new(4, NS).unwrap();
        assert_eq!(total_delay(&cfg, 0).unwrap(), 0.0);
        assert_eq!(total_delay(&cfg, 15).unwrap(), 15.0 * NS);
        assert!((total_delay(&cfg, 15).unwrap() - 15e-9).abs() < 1e-23);
        assert_eq!(total_delay(&cfg, 5).unwrap(), 5.0 * NS);
        assert_eq!(
            total_delay(&cfg, 16),
            Err(Error::AddressOutOfRange { address: 16, stages: 4 })
        );
    }

    #[test]
    fn ideal_line_reproduces_time_tagged_state() {
        let cfg = BifodelConfig::new(4, NS).unwrap();
        let psi = canonical_state(BellState::PsiPlus);
        let (out, report) = apply_delay(&psi, &cfg, 3).unwrap();
        assert_eq!(out.time_bin(), 3);
        assert!((fidelity(&out, &psi) - 1.0).abs() < 1e-12);
        assert!(report.passed());
    }

    #[test]
    fn pi_phase_on_traversed_stage_flips_psi() {
        let mut cfg = BifodelConfig::new(4, NS).unwrap();
        cfg.stage_mut(0).unwrap().phase_error = PI;
        let psi = canonical_state(BellState::PsiPlus);

        let (out, report) = apply_delay(&psi, &cfg, 1).unwrap();
        assert_eq!(out.time_bin(), 1);
        assert!((fidelity(&out, &canonical_state(BellState::PsiMinus)) - 1.0).abs() < 1e-12);
        assert!(!report.relative_phase_ok.passed);
        assert!(!report.passed());

        let (out, report) = apply_delay(&psi, &cfg, 2).unwrap();
        assert_eq!(out.time_bin(), 2);
        assert!((fidelity(&out, &psi) - 1.0).abs() < 1e-12);
        assert!(report.relative_phase_ok.passed);
    }

    #[test]
    fn validator_thresholds() {
        let mut cfg = BifodelConfig::new(2, NS).unwrap();
        cfg.stage_mut(0).unwrap().differential_delay = 0.04 * NS;
        cfg.stage_mut(1).unwrap().differential_delay = 0.06 * NS;
        let r = validate_coherence(&cfg, 3, NS, 0.1).unwrap();
        assert!((r.accumulated_differential_delay - 0.1 * NS).abs() < 1e-24);
        assert!(r.differential_delay_ok.passed);

        cfg.stage_mut(1).unwrap().differential_delay = 1.46 * NS;
        let r = validate_coherence(&cfg, 3, NS, 0.1).unwrap();
        assert!(!r.differential_delay_ok.passed);
        // Stage 1 not traversed.
        assert!(validate_coherence(&cfg, 1, NS, 0.1).unwrap().differential_delay_ok.passed);

        assert!(validate_coherence(&cfg, 0, 0.0, 0.1).is_err());
    }

    #[test]
    fn phase_folding() {
        assert!((fold_phase(TAU) - 0.0).abs() < 1e-12);
        assert_eq!(fold_phase(PI), PI);
        assert_eq!(fold_phase(-PI), PI);
        assert!((fold_phase(3.0 * PI) - PI).abs() < 1e-12);
        assert!((fold_phase(TAU - 0.05) + 0.05).abs() < 1e-12);

        // A full turn is invisible to the validator.
        let mut cfg = BifodelConfig::new(1, NS).unwrap();
        cfg.stage_mut(0).unwrap().phase_error = TAU + 0.01;
        assert!(validate_coherence(&cfg, 1, NS, 0.1).unwrap().relative_phase_ok.passed);
    }

    #[test]
    fn configuration_flags_are_reported() {
        let mut cfg = BifodelConfig::new(2, NS).unwrap();
        cfg.distinct_spatial_modes = false;
        let r = validate_coherence(&cfg, 0, NS, 0.1).unwrap();
        assert!(!r.distinct_spatial_modes.passed);
        assert!(r.no_extra_correlations.passed);
        assert!(!r.passed());
    }

    #[test]
    fn pm_preset_carries_stage_dgd() {
        let cfg = BifodelConfig::pm_fiber(3, NS).unwrap();
        assert_eq!(cfg.accumulated_polarization_delay(5).unwrap(), 5.0 * NS);
        let r = validate_coherence(&cfg, 0, NS, 0.1).unwrap();
        assert!(r.polarization_independent.passed);
        let r = validate_coherence(&cfg, 1, NS, 0.1).unwrap();
        assert!(!r.polarization_independent.passed);
    }

    #[test]
    fn config_validation() {
        assert!(BifodelConfig::new(0, NS).is_err());
        assert!(BifodelConfig::new(4, 0.0).is_err());
        assert!(BifodelConfig::new(4, NS).unwrap().with_coherence_time(2.0 * NS).is_err());
        assert!(BifodelConfig::new(4, NS).unwrap().with_coherence_time(1e-12).is_ok());
        let bad = StageImperfection {
            phase_error: -0.1,
            ..Default::default()
        };
        assert!(BifodelConfig::with_stages(vec![bad], NS).is_err());
    }

    fn arb_line() -> impl Strategy<Value = BifodelConfig> {
        prop::collection::vec((0.0f64..1e-9, 0.0f64..4.0, 0.0f64..1e-10), 1..12).prop_map(|v| {
            let stages = v
                .into_iter()
                .map(|(d, p, pol)| StageImperfection {
                    differential_delay: d,
                    phase_error: p,
                    polarization_delay: pol,
                })
                .collect();
            BifodelConfig::with_stages(stages, 0.37e-9).unwrap()
        })
    }

    proptest! {
        #[test]
        fn settings_round_trip(n in 1u32..20, raw in any::<u64>()) {
            let address = raw % (1u64 << n);
            let settings = switch_settings(address, n).unwrap();
            prop_assert_eq!(settings.len(), n as usize);
            prop_assert_eq!(address_from_settings(&settings), address);
            prop_assert_eq!(
                settings.iter().filter(|&&b| b).count() as u32,
                address.count_ones()
            );
        }

        #[test]
        fn delay_is_address_times_period(cfg in arb_line(), raw in any::<u64>()) {
            let address = raw % cfg.addresses();
            prop_assert_eq!(total_delay(&cfg, address).unwrap(), address as f64 * cfg.bin_period());
        }

        #[test]
        fn phase_is_additive_over_traversed_stages(cfg in arb_line(), raw in any::<u64>()) {
            let address = raw % cfg.addresses();
            let expected: f64 = switch_settings(address, cfg.n_stages())
                .unwrap()
                .iter()
                .zip(cfg.stages())
                .filter(|(long, _)| **long)
                .map(|(_, s)| s.phase_error)
                .sum();
            prop_assert!((cfg.accumulated_phase(address).unwrap() - expected).abs() < 1e-12);
        }

        #[test]
        fn ideal_line_preserves_state(n in 1u32..16, raw in any::<u64>()) {
            let cfg = BifodelConfig::new(n, 1e-9).unwrap();
            let address = raw % cfg.addresses();
            let psi = canonical_state(BellState::PsiPlus);
            let (out, report) = apply_delay(&psi, &cfg, address).unwrap();
            prop_assert!((fidelity(&out, &psi) - 1.0).abs() < 1e-12);
            prop_assert_eq!(out.time_bin(), address);
            prop_assert!(report.passed());
        }
    }

    #[test]
    fn half_the_long_coils_are_used_on_average() {
        let n = 4;
        let total: u32 = (0..1u64 << n).map(|a| a.count_ones()).sum();
        assert_eq!(f64::from(total) / 16.0, f64::from(n) / 2.0);
    }
}
