//! Physical link parameters, the per-bin click probabilities they imply, and
//! sampling of detection frames.

use rand::Rng;

use crate::bell::{BellState, TwoQubitState};
use crate::dense::{bsa_measure, BsaMode, BsaOutcome};
use crate::error::{check_probability, Error, Result};

/// Largest supported time-bin word length, so `Y = 2^M` fits comfortably.
pub const MAX_TIME_BITS: u32 = 40;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkParams {
    /// Detector quantum efficiency.
    pub eta_d: f64,
    /// Per-photon channel plus receiver-optics loss fraction.
    pub loss: f64,
    /// Background singles rate per receiver arm before detection, counts/s.
    pub background_rate: f64,
    /// Coincidence window, seconds.
    pub coincidence_window: f64,
    /// Time-bin period, seconds.
    pub bin_period: f64,
    /// Number of time bins per symbol, `Y = 2^M`.
    pub bins: u64,
}

impl LinkParams {
    /// 50% detectors, 50% loss, 1 ns window and bins.
    pub fn reference(time_bits: u32, background_rate: f64) -> Self {
        LinkParams {
            eta_d: 0.5,
            loss: 0.5,
            background_rate,
            coincidence_window: 1e-9,
            bin_period: 1e-9,
            bins: 1u64 << time_bits.min(MAX_TIME_BITS),
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_bins(self.bins)?;
        check_probability("eta_d", self.eta_d)?;
        check_probability("loss", self.loss)?;
        if !(self.background_rate >= 0.0 && !self.background_rate.is_nan()) {
            return Err(Error::invalid(
                "background_rate",
                format!("must be >= 0, got {}", self.background_rate),
            ));
        }
        if !(self.coincidence_window.is_finite() && self.coincidence_window > 0.0) {
            return Err(Error::invalid(
                "coincidence_window",
                format!("must be > 0, got {}", self.coincidence_window),
            ));
        }
        if !(self.bin_period.is_finite() && self.bin_period > 0.0) {
            return Err(Error::invalid(
                "bin_period",
                format!("must be > 0, got {}", self.bin_period),
            ));
        }
        if self.coincidence_window > self.bin_period {
            return Err(Error::invalid(
                "coincidence_window",
                format!(
                    "window {} s exceeds the bin period {} s",
                    self.coincidence_window, self.bin_period
                ),
            ));
        }
        Ok(())
    }

    /// `M = log2(Y)`.
    pub fn time_bits(&self) -> u32 {
        self.bins.trailing_zeros()
    }

    /// Per-photon probability of surviving the channel and being detected.
    fn photon_detection(&self) -> f64 {
        self.eta_d * (1.0 - self.loss)
    }

    pub fn probabilities(&self) -> Result<LinkProbabilities> {
        self.validate()?;
        Ok(LinkProbabilities {
            bins: self.bins,
            p_pair: pair_detection_prob(self),
            p_n: accidental_coincidence_prob(self),
        })
    }
}

pub(crate) fn check_bins(bins: u64) -> Result<()> {
    if bins < 2 || !bins.is_power_of_two() || bins.trailing_zeros() > MAX_TIME_BITS {
        return Err(Error::invalid(
            "bins",
            format!("must be a power of two in 2..=2^{MAX_TIME_BITS}, got {bins}"),
        ));
    }
    Ok(())
}

/// Both photons of the pair survive and are detected.
pub fn pair_detection_prob(p: &LinkParams) -> f64 {
    p.photon_detection().powi(2)
}

/// A vacant bin registers a joint detection: both arms see at least one
/// detected background photon in the window.
pub fn accidental_coincidence_prob(p: &LinkParams) -> f64 {
    let mean = p.background_rate * p.photon_detection() * p.coincidence_window;
    let per_arm = if mean.is_infinite() { 1.0 } else { -(-mean).exp_m1() };
    per_arm * per_arm
}

/// The signal bin clicks from the pair or from an accidental.
pub fn occupied_bin_click_prob(p: &LinkParams) -> f64 {
    occupied_from(pair_detection_prob(p), accidental_coincidence_prob(p))
}

fn occupied_from(p_pair: f64, p_n: f64) -> f64 {
    1.0 - (1.0 - p_pair) * (1.0 - p_n)
}

/// The three per-bin probabilities the error analysis works from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkProbabilities {
    pub bins: u64,
    pub p_pair: f64,
    pub p_n: f64,
}

impl LinkProbabilities {
    pub fn new(bins: u64, p_pair: f64, p_n: f64) -> Result<Self> {
        check_bins(bins)?;
        check_probability("p_pair", p_pair)?;
        check_probability("p_n", p_n)?;
        Ok(LinkProbabilities { bins, p_pair, p_n })
    }

    /// Solves for the pair probability that yields the given occupied-bin
    /// click probability. Requires `p_occ >= p_n`.
    pub fn from_occupied(bins: u64, p_n: f64, p_occ: f64) -> Result<Self> {
        check_probability("p_n", p_n)?;
        check_probability("p_occ", p_occ)?;
        if p_occ < p_n {
            return Err(Error::invalid(
                "p_occ",
                format!("must be >= p_n ({p_n}), got {p_occ}"),
            ));
        }
        let p_pair = if p_n >= 1.0 {
            0.0
        } else {
            (1.0 - (1.0 - p_occ) / (1.0 - p_n)).clamp(0.0, 1.0)
        };
        Self::new(bins, p_pair, p_n)
    }

    pub fn p_occ(&self) -> f64 {
        occupied_from(self.p_pair, self.p_n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Click {
    pub bin: u64,
    pub outcome: BsaOutcome,
}

/// Joint-detection record for one transmitted symbol. Only clicked bins are
/// stored, in increasing bin order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolFrame {
    bins: u64,
    true_bin: u64,
    clicks: Vec<Click>,
}

impl SymbolFrame {
    pub fn new(bins: u64, true_bin: u64, mut clicks: Vec<Click>) -> Result<Self> {
        check_bins(bins)?;
        if true_bin >= bins {
            return Err(Error::TimeBinOutOfRange { index: true_bin, bins });
        }
        clicks.sort_by_key(|c| c.bin);
        if let Some(c) = clicks.iter().find(|c| c.bin >= bins) {
            return Err(Error::TimeBinOutOfRange { index: c.bin, bins });
        }
        if clicks.windows(2).any(|w| w[0].bin == w[1].bin) {
            return Err(Error::invalid("clicks", "a bin can click at most once"));
        }
        Ok(SymbolFrame { bins, true_bin, clicks })
    }

    pub fn bins(&self) -> u64 {
        self.bins
    }

    pub fn true_bin(&self) -> u64 {
        self.true_bin
    }

    pub fn clicks(&self) -> &[Click] {
        &self.clicks
    }

    /// Dense per-bin click flags, length `Y`.
    pub fn click_flags(&self) -> Vec<bool> {
        let mut flags = vec![false; self.bins as usize];
        for c in &self.clicks {
            flags[c.bin as usize] = true;
        }
        flags
    }

    pub fn outcome_at(&self, bin: u64) -> Option<BsaOutcome> {
        self.clicks
            .binary_search_by_key(&bin, |c| c.bin)
            .ok()
            .map(|i| self.clicks[i].outcome)
    }
}

/// Bell outcome carried by a noise coincidence.
fn random_outcome<R: Rng + ?Sized>(mode: BsaMode, rng: &mut R) -> BsaOutcome {
    BsaOutcome::observe(BellState::ALL[rng.random_range(0..4)], mode)
}

/// Failures before the first success of a Bernoulli(`p`) sequence,
/// saturating at `cap`.
fn geometric_gap<R: Rng + ?Sized>(p: f64, cap: u64, rng: &mut R) -> u64 {
    if p >= 1.0 {
        return 0;
    }
    let u = 1.0 - rng.random::<f64>();
    let gap = (u.ln() / (-p).ln_1p()).floor();
    if gap >= cap as f64 {
        cap
    } else {
        gap as u64
    }
}

/// Samples the detection frame for a pair sent in `true_bin` carrying the
/// polarization state `sent`.
pub fn sample_symbol_frame<R: Rng + ?Sized>(
    probs: &LinkProbabilities,
    true_bin: u64,
    sent: &TwoQubitState,
    mode: BsaMode,
    rng: &mut R,
) -> Result<SymbolFrame> {
    let bins = probs.bins;
    if true_bin >= bins {
        return Err(Error::TimeBinOutOfRange { index: true_bin, bins });
    }
    let mut clicks = Vec::new();

    // Vacant bins: walk the Bernoulli(p_n) process over all Y positions by
    // geometric jumps and drop the draw that lands on the signal bin.
    if probs.p_n > 0.0 {
        let mut next = 0u64;
        loop {
            next = next.saturating_add(geometric_gap(probs.p_n, bins, rng));
            if next >= bins {
                break;
            }
            if next != true_bin {
                clicks.push(Click {
                    bin: next,
                    outcome: random_outcome(mode, rng),
                });
            }
            next += 1;
        }
    }

    let pair = rng.random::<f64>() < probs.p_pair;
    let accidental = rng.random::<f64>() < probs.p_n;
    let signal = if pair {
        Some(bsa_measure(sent, mode, rng))
    } else if accidental {
        Some(random_outcome(mode, rng))
    } else {
        None
    };
    if let Some(outcome) = signal {
        let at = clicks.partition_point(|c| c.bin < true_bin);
        clicks.insert(at, Click { bin: true_bin, outcome });
    }

    Ok(SymbolFrame { bins, true_bin, clicks })
}
