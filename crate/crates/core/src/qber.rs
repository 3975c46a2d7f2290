//! Closed-form symbol error and QBER for the time-bin word.
//!
//! With one signal bin among `Y`, each of the `Y - 1` vacant bins clicks
//! independently with probability `p_n` and the signal bin clicks with
//! probability `p_occ`. Bob picks uniformly among clicked bins, so:
//!
//! * case A (signal bin clicked, `l >= 1` vacant clicks) errs with weight
//!   `l / (l + 1)`;
//! * case B (signal bin silent, `l >= 1` vacant clicks) always errs.
//!
//! A frame with no clicks at all is an erasure and, under the default
//! policy, not counted as a symbol error.

use serde::Deserialize;
use std::fmt;
use std::str::FromStr;

use crate::binomial::{prob_at_least_one, weighted_sum, Neumaier};
use crate::error::{check_probability, Error, Result};

/// Largest frame [`brute_force_symbol_error`] will enumerate.
pub const MAX_ENUMERATED_BINS: u64 = 16;

/// What Bob does with a frame in which no bin clicked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmptyFramePolicy {
    /// Declare an erasure; never a symbol error.
    #[default]
    Erasure,
    /// Guess a bin uniformly. Not part of the closed-form model; for
    /// sensitivity studies.
    RandomGuess,
}

impl EmptyFramePolicy {
    pub fn name(self) -> &'static str {
        match self {
            EmptyFramePolicy::Erasure => "erasure",
            EmptyFramePolicy::RandomGuess => "random-guess",
        }
    }
}

impl FromStr for EmptyFramePolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "erasure" => Ok(EmptyFramePolicy::Erasure),
            "random-guess" => Ok(EmptyFramePolicy::RandomGuess),
            other => Err(Error::Config(format!(
                "unknown empty-frame policy `{other}` (expected erasure or random-guess)"
            ))),
        }
    }
}

impl fmt::Display for EmptyFramePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn check_domain(bins: u64, p_n: f64, p_occ: f64) -> Result<()> {
    if bins < 2 {
        return Err(Error::invalid("bins", format!("need at least 2 bins, got {bins}")));
    }
    check_probability("p_n", p_n)?;
    check_probability("p_occ", p_occ)
}

/// Error probability with the signal bin clicked and at least one vacant
/// bin clicked too.
pub fn prob_error_case_a(bins: u64, p_n: f64, p_occ: f64) -> Result<f64> {
    check_domain(bins, p_n, p_occ)?;
    if p_n == 0.0 || p_occ == 0.0 {
        return Ok(0.0);
    }
    let weighted = weighted_sum(bins - 1, p_n, 1, |l| l as f64 / (l as f64 + 1.0));
    Ok(weighted * p_occ)
}

/// Error probability with the signal bin silent and at least one vacant bin
/// clicked.
pub fn prob_error_case_b(bins: u64, p_n: f64, p_occ: f64) -> Result<f64> {
    check_domain(bins, p_n, p_occ)?;
    Ok(prob_at_least_one(bins - 1, p_n) * (1.0 - p_occ))
}

pub fn symbol_error_rate(bins: u64, p_n: f64, p_occ: f64) -> Result<f64> {
    Ok(prob_error_case_a(bins, p_n, p_occ)? + prob_error_case_b(bins, p_n, p_occ)?)
}

/// No bin clicks at all.
pub fn prob_empty_frame(bins: u64, p_n: f64, p_occ: f64) -> Result<f64> {
    check_domain(bins, p_n, p_occ)?;
    Ok((1.0 - prob_at_least_one(bins - 1, p_n)) * (1.0 - p_occ))
}

/// Bit error rate of the time-bin word for uniformly distributed symbol
/// errors: `Y / (2(Y-1))` times the symbol error rate.
pub fn qber_from_symbol_error(bins: u64, p_e_sym: f64) -> Result<f64> {
    if bins < 2 {
        return Err(Error::invalid("bins", format!("need at least 2 bins, got {bins}")));
    }
    check_probability("p_e_sym", p_e_sym)?;
    Ok(qber_factor(bins) * p_e_sym)
}

pub fn qber_factor(bins: u64) -> f64 {
    let y = bins as f64;
    y / (2.0 * (y - 1.0))
}

/// Closed-form error budget for one link operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorReport {
    pub bins: u64,
    pub p_e_case_a: f64,
    pub p_e_case_b: f64,
    /// Contribution of guessed empty frames; zero under
    /// [`EmptyFramePolicy::Erasure`].
    pub p_e_guess: f64,
    pub p_e_sym: f64,
    pub qber: f64,
    /// Probability that the frame is empty.
    pub p_empty: f64,
    pub policy: EmptyFramePolicy,
}

impl ErrorReport {
    pub fn compute(bins: u64, p_n: f64, p_occ: f64, policy: EmptyFramePolicy) -> Result<Self> {
        let a = prob_error_case_a(bins, p_n, p_occ)?;
        let b = prob_error_case_b(bins, p_n, p_occ)?;
        let p_empty = prob_empty_frame(bins, p_n, p_occ)?;
        let p_e_guess = match policy {
            EmptyFramePolicy::Erasure => 0.0,
            EmptyFramePolicy::RandomGuess => p_empty * (bins - 1) as f64 / bins as f64,
        };
        let p_e_sym = (a + b + p_e_guess).min(1.0);
        Ok(ErrorReport {
            bins,
            p_e_case_a: a,
            p_e_case_b: b,
            p_e_guess,
            p_e_sym,
            qber: qber_from_symbol_error(bins, p_e_sym)?,
            p_empty,
            policy,
        })
    }

    /// Probability of an erasure under this report's policy.
    pub fn p_erasure(&self) -> f64 {
        match self.policy {
            EmptyFramePolicy::Erasure => self.p_empty,
            EmptyFramePolicy::RandomGuess => 0.0,
        }
    }
}

/// Exhaustive outcome enumeration for small frames.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnumeratedOutcome {
    pub symbol_error: f64,
    pub empty: f64,
}

/// Enumerates every click pattern of a `bins`-slot frame, weights it by its
/// exact Bernoulli probability and applies the uniform-choice decision rule.
pub fn enumerate_outcomes(bins: u64, p_n: f64, p_occ: f64) -> Result<EnumeratedOutcome> {
    check_domain(bins, p_n, p_occ)?;
    if bins > MAX_ENUMERATED_BINS {
        return Err(Error::EnumerationTooLarge {
            bins,
            max: MAX_ENUMERATED_BINS,
        });
    }
    let vacant = (bins - 1) as u32;
    let mut symbol_error = Neumaier::default();
    let mut empty = Neumaier::default();
    for pattern in 0u32..(1 << vacant) {
        let l = pattern.count_ones();
        let mut weight = 1.0;
        for bit in 0..vacant {
            weight *= if (pattern >> bit) & 1 == 1 { p_n } else { 1.0 - p_n };
        }
        // Signal bin clicked: right with probability 1/(l+1).
        symbol_error.add(p_occ * weight * f64::from(l) / f64::from(l + 1));
        // Signal bin silent: any click is wrong, none is an erasure.
        if l == 0 {
            empty.add((1.0 - p_occ) * weight);
        } else {
            symbol_error.add((1.0 - p_occ) * weight);
        }
    }
    Ok(EnumeratedOutcome {
        symbol_error: symbol_error.total(),
        empty: empty.total(),
    })
}

/// Brute-force symbol error rate with empty frames treated as erasures.
pub fn brute_force_symbol_error(bins: u64, p_n: f64, p_occ: f64) -> Result<f64> {
    Ok(enumerate_outcomes(bins, p_n, p_occ)?.symbol_error)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use statrs::function::gamma::ln_gamma;

    #[test]
    fn anchor_point_values() {
        // Enumerated by hand over the 8 vacant patterns of Y = 4:
        // A = 0.9 · (3·0.1·0.81·1/2 + 3·0.01·0.9·2/3 + 0.001·3/4) = 0.126225
        // B = 0.1 · (1 - 0.9³) = 0.0271
        let a = prob_error_case_a(4, 0.1, 0.9).unwrap();
        let b = prob_error_case_b(4, 0.1, 0.9).unwrap();
        assert!((a - 0.126225).abs() < 1e-12);
        assert!((b - 0.0271).abs() < 1e-12);
        let s = symbol_error_rate(4, 0.1, 0.9).unwrap();
        assert!((s - 0.153325).abs() < 1e-12);
        let q = qber_from_symbol_error(4, s).unwrap();
        assert!((q - 0.153325 * 4.0 / 6.0).abs() < 1e-12);
        let oracle = brute_force_symbol_error(4, 0.1, 0.9).unwrap();
        assert!((oracle - 0.153325).abs() < 1e-12);
    }

    #[test]
    fn trivial_cases() {
        for y in [2, 4, 64, 1 << 20] {
            for p_occ in [0.0, 0.3, 1.0] {
                assert_eq!(prob_error_case_a(y, 0.0, p_occ).unwrap(), 0.0);
                assert_eq!(prob_error_case_b(y, 0.0, p_occ).unwrap(), 0.0);
                assert_eq!(symbol_error_rate(y, 0.0, p_occ).unwrap(), 0.0);
            }
            assert_eq!(prob_error_case_b(y, 0.4, 1.0).unwrap(), 0.0);
        }
        for (pn, po) in [(0.3, 0.7), (0.01, 0.5), (1.0, 1.0)] {
            let a = prob_error_case_a(2, pn, po).unwrap();
            assert!((a - 0.5 * pn * po).abs() < 1e-15);
        }
        assert!((symbol_error_rate(2, 1.0, 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((brute_force_symbol_error(2, 1.0, 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(brute_force_symbol_error(8, 0.0, 0.4).unwrap(), 0.0);
    }

    #[test]
    fn qber_conversion() {
        assert_eq!(qber_from_symbol_error(2, 0.37).unwrap(), 0.37);
        assert_eq!(qber_from_symbol_error(16, 0.0).unwrap(), 0.0);
        assert!(qber_from_symbol_error(1, 0.1).is_err());
        assert!(qber_from_symbol_error(4, 1.1).is_err());
    }

    #[test]
    fn domain_errors() {
        assert!(prob_error_case_a(1, 0.1, 0.5).is_err());
        assert!(prob_error_case_a(4, -0.1, 0.5).is_err());
        assert!(prob_error_case_b(4, 0.1, f64::NAN).is_err());
        assert_eq!(
            brute_force_symbol_error(32, 0.1, 0.5),
            Err(Error::EnumerationTooLarge { bins: 32, max: 16 })
        );
    }

    #[test]
    fn closed_form_matches_enumeration_on_grid() {
        for y in [2u64, 4, 8, 16] {
            for p_n in [0.0, 0.01, 0.1, 0.5] {
                for p_occ in [0.1, 0.5, 0.9] {
                    let closed = symbol_error_rate(y, p_n, p_occ).unwrap();
                    let oracle = enumerate_outcomes(y, p_n, p_occ).unwrap();
                    assert!((closed - oracle.symbol_error).abs() < 1e-12, "Y={y} p_n={p_n} p_occ={p_occ}");
                    let empty = prob_empty_frame(y, p_n, p_occ).unwrap();
                    assert!((empty - oracle.empty).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn random_guess_policy_folds_in_empty_frames() {
        let r = ErrorReport::compute(8, 0.05, 0.3, EmptyFramePolicy::RandomGuess).unwrap();
        let oracle = enumerate_outcomes(8, 0.05, 0.3).unwrap();
        let expected = oracle.symbol_error + oracle.empty * 7.0 / 8.0;
        assert!((r.p_e_sym - expected).abs() < 1e-12);
        assert_eq!(r.p_erasure(), 0.0);

        let r = ErrorReport::compute(8, 0.05, 0.3, EmptyFramePolicy::Erasure).unwrap();
        assert_eq!(r.p_e_sym, r.p_e_case_a + r.p_e_case_b);
        assert!((r.p_erasure() - oracle.empty).abs() < 1e-12);
    }

    #[test]
    fn noise_monotonicity() {
        for y in [2u64, 4, 16, 256, 4096] {
            for p_occ in [0.0625, 0.5, 0.9, 1.0] {
                let mut prev = 0.0;
                for k in 0..1000 {
                    let p_n = k as f64 / 1000.0;
                    let s = symbol_error_rate(y, p_n, p_occ).unwrap();
                    assert!(s >= prev - 1e-15, "Y={y} p_occ={p_occ} p_n={p_n}");
                    prev = s;
                }
            }
        }
        for p_n in [1e-9, 1e-4, 0.01, 0.3] {
            let mut prev = 0.0;
            for m in 1..=16 {
                let s = symbol_error_rate(1 << m, p_n, 0.5).unwrap();
                assert!(s >= prev);
                prev = s;
            }
        }
    }

    /// Independent log-space route: `ln C(n, l)` from `ln Γ`, combined with a
    /// log-sum-exp over the weighted terms.
    fn case_a_lgamma(bins: u64, p_n: f64, p_occ: f64) -> f64 {
        let n = (bins - 1) as f64;
        let logs: Vec<f64> = (1..bins)
            .map(|l| {
                let lf = l as f64;
                ln_gamma(n + 1.0) - ln_gamma(lf + 1.0) - ln_gamma(n - lf + 1.0)
                    + lf * p_n.ln()
                    + (n - lf) * (-p_n).ln_1p()
                    + (lf / (lf + 1.0)).ln()
            })
            .collect();
        let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = logs.iter().map(|x| (x - max).exp()).sum();
        p_occ * (max + sum.ln()).exp()
    }

    /// `Σ_{l>=1} C(n,l) p^l q^(n-l) l/(l+1) = 1 - (1 - q^(n+1)) / ((n+1) p)`.
    fn case_a_algebraic(bins: u64, p_n: f64, p_occ: f64) -> f64 {
        let n1 = bins as f64;
        p_occ * (1.0 - prob_at_least_one(bins, p_n) / (n1 * p_n))
    }

    #[test]
    fn large_frames_are_stable() {
        let bins = 1u64 << 20;
        for p_n in [1e-7, 1e-5, 1e-3, 0.01, 0.1, 0.5] {
            for p_occ in [0.0625, 0.9] {
                let r = ErrorReport::compute(bins, p_n, p_occ, EmptyFramePolicy::Erasure).unwrap();
                for v in [r.p_e_case_a, r.p_e_case_b, r.p_e_sym, r.qber] {
                    assert!(v.is_finite() && (0.0..=1.0).contains(&v));
                }
                let log_space = case_a_lgamma(bins, p_n, p_occ);
                assert!((r.p_e_case_a - log_space).abs() < 1e-9, "p_n={p_n}: {} vs {log_space}", r.p_e_case_a);
                if bins as f64 * p_n >= 1.0 {
                    let algebraic = case_a_algebraic(bins, p_n, p_occ);
                    assert!((r.p_e_case_a - algebraic).abs() < 1e-12, "p_n={p_n}");
                }
            }
        }
    }

    proptest! {
        #[test]
        fn report_invariants(m in 1u32..21, p_n in 0.0f64..=1.0, p_occ in 0.0f64..=1.0) {
            let bins = 1u64 << m;
            let r = ErrorReport::compute(bins, p_n, p_occ, EmptyFramePolicy::Erasure).unwrap();
            for v in [r.p_e_case_a, r.p_e_case_b, r.p_e_sym, r.qber, r.p_empty] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
            prop_assert!((r.p_e_sym - (r.p_e_case_a + r.p_e_case_b)).abs() <= 1e-15);
            prop_assert!((r.qber - qber_factor(bins) * r.p_e_sym).abs() <= 1e-15);
        }

        #[test]
        fn oracle_agrees_off_grid(m in 1u32..5, p_n in 0.0f64..=1.0, p_occ in 0.0f64..=1.0) {
            let bins = 1u64 << m;
            let closed = symbol_error_rate(bins, p_n, p_occ).unwrap();
            let oracle = brute_force_symbol_error(bins, p_n, p_occ).unwrap();
            prop_assert!((closed - oracle).abs() < 1e-12);
        }
    }
}
