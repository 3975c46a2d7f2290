//! Monte Carlo link simulation and the receiver's decision rule.

use rand::Rng;
use rayon::prelude::*;

use crate::bell::{attach_time_bin, canonical_state, dephase, BellState};
use crate::bifodel::BifodelConfig;
use crate::dense::{decode, encode_state, BsaMode, Decoded, TwoBitWord};
use crate::error::{Error, Result};
use crate::link::{sample_symbol_frame, LinkParams, LinkProbabilities, SymbolFrame};
use crate::qber::EmptyFramePolicy;
use crate::stream::TrialStreams;

/// Receiver decision rule. Multiple clicked bins are always resolved by a
/// uniform choice among them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DecisionPolicy {
    pub empty_frame: EmptyFramePolicy,
}

impl DecisionPolicy {
    pub fn new(empty_frame: EmptyFramePolicy) -> Self {
        DecisionPolicy { empty_frame }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    /// A clicked bin was chosen.
    Bin(u64),
    /// No bin clicked; a bin was guessed.
    Guessed(u64),
    Erasure,
}

impl Decision {
    pub fn bin(self) -> Option<u64> {
        match self {
            Decision::Bin(b) | Decision::Guessed(b) => Some(b),
            Decision::Erasure => None,
        }
    }
}

pub fn decide<R: Rng + ?Sized>(frame: &SymbolFrame, policy: &DecisionPolicy, rng: &mut R) -> Decision {
    match frame.clicks() {
        [] => match policy.empty_frame {
            EmptyFramePolicy::Erasure => Decision::Erasure,
            EmptyFramePolicy::RandomGuess => Decision::Guessed(rng.random_range(0..frame.bins())),
        },
        [only] => Decision::Bin(only.bin),
        many => Decision::Bin(many[rng.random_range(0..many.len())].bin),
    }
}

/// A rate with its binomial standard error `sqrt(r(1-r)/n)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rate {
    pub value: f64,
    pub stderr: f64,
}

impl Rate {
    pub fn from_counts(hits: u64, trials: u64) -> Self {
        if trials == 0 {
            return Rate {
                value: f64::NAN,
                stderr: f64::NAN,
            };
        }
        let n = trials as f64;
        let r = hits as f64 / n;
        Rate {
            value: r,
            stderr: (r * (1.0 - r) / n).sqrt(),
        }
    }
}

/// Tallies from a Monte Carlo run. Counts add across partitions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct McEstimate {
    pub n_trials: u64,
    pub time_bits: u32,
    /// Decided (or guessed) bin differs from the sent bin.
    pub symbol_errors: u64,
    /// Empty frames declared erasures.
    pub erasures: u64,
    /// Frames with no click, regardless of policy.
    pub empty_frames: u64,
    /// Bit differences between decided and sent bin index.
    pub timebin_bit_errors: u64,
    /// Dense-coded words decoded (unambiguous outcome or guess).
    pub dense_decoded: u64,
    /// Outcomes the analyzer could not resolve.
    pub dense_ambiguous: u64,
    pub dense_bit_errors: u64,
}

impl McEstimate {
    fn empty(time_bits: u32) -> Self {
        McEstimate {
            time_bits,
            ..Default::default()
        }
    }

    pub fn merge(mut self, other: McEstimate) -> Self {
        self.n_trials += other.n_trials;
        self.symbol_errors += other.symbol_errors;
        self.erasures += other.erasures;
        self.empty_frames += other.empty_frames;
        self.timebin_bit_errors += other.timebin_bit_errors;
        self.dense_decoded += other.dense_decoded;
        self.dense_ambiguous += other.dense_ambiguous;
        self.dense_bit_errors += other.dense_bit_errors;
        self
    }

    pub fn successes(&self) -> u64 {
        self.n_trials - self.symbol_errors - self.erasures
    }

    pub fn symbol_error_rate(&self) -> Rate {
        Rate::from_counts(self.symbol_errors, self.n_trials)
    }

    pub fn erasure_rate(&self) -> Rate {
        Rate::from_counts(self.erasures, self.n_trials)
    }

    /// Measured bit error rate of the time-bin word, over all trials.
    pub fn timebin_qber(&self) -> Rate {
        Rate::from_counts(self.timebin_bit_errors, self.n_trials * u64::from(self.time_bits))
    }

    /// Bit error rate of the dense-coded pair over decoded words.
    pub fn dense_bit_error_rate(&self) -> Rate {
        Rate::from_counts(self.dense_bit_errors, 2 * self.dense_decoded)
    }
}

/// Monte Carlo driver for one operating point.
#[derive(Debug, Clone)]
pub struct MonteCarlo {
    probs: LinkProbabilities,
    mode: BsaMode,
    policy: DecisionPolicy,
    delay_line: Option<BifodelConfig>,
    threads: Option<usize>,
}

impl MonteCarlo {
    pub fn new(probs: LinkProbabilities) -> Self {
        MonteCarlo {
            probs,
            mode: BsaMode::Ideal,
            policy: DecisionPolicy::default(),
            delay_line: None,
            threads: None,
        }
    }

    pub fn mode(mut self, mode: BsaMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn policy(mut self, policy: DecisionPolicy) -> Self {
        self.policy = policy;
        self
    }

    /// Route the shared pair through `line` before encoding. The line must
    /// address exactly the frame's bins.
    pub fn delay_line(mut self, line: BifodelConfig) -> Result<Self> {
        if line.addresses() != self.probs.bins {
            return Err(Error::invalid(
                "delay_line",
                format!(
                    "{}-stage line addresses {} bins, frame has {}",
                    line.n_stages(),
                    line.addresses(),
                    self.probs.bins
                ),
            ));
        }
        self.delay_line = Some(line);
        Ok(self)
    }

    /// Size of a dedicated worker pool; `None` uses rayon's global pool.
    pub fn threads(mut self, threads: Option<usize>) -> Self {
        self.threads = threads;
        self
    }

    pub fn run(&self, n_trials: u64, seed: u64) -> Result<McEstimate> {
        if n_trials == 0 {
            return Err(Error::invalid("n_trials", "must be at least 1"));
        }
        let streams = TrialStreams::new(seed);
        let time_bits = self.probs.bins.trailing_zeros();
        let job = || {
            (0..n_trials)
                .into_par_iter()
                .fold(
                    || McEstimate::empty(time_bits),
                    |mut tally, i| {
                        self.trial(&streams, i, &mut tally);
                        tally
                    },
                )
                .reduce(|| McEstimate::empty(time_bits), McEstimate::merge)
        };
        match self.threads {
            Some(threads) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build()
                    .map_err(|e| Error::invalid("threads", e.to_string()))?;
                Ok(pool.install(job))
            }
            None => Ok(job()),
        }
    }

    fn trial(&self, streams: &TrialStreams, index: u64, tally: &mut McEstimate) {
        let mut rng = streams.trial(index);
        let bins = self.probs.bins;
        let true_bin = rng.random_range(0..bins);
        let word = TwoBitWord::from_low_bits(rng.random_range(0..4u8));

        let mut shared = canonical_state(BellState::PsiPlus);
        if let Some(line) = &self.delay_line {
            let phase = line.accumulated_phase(true_bin).expect("line addresses every bin");
            shared = dephase(&shared, phase);
        }
        let shared = attach_time_bin(&shared, true_bin, bins).expect("bin drawn in range");
        let sent = encode_state(word, &shared);
        let frame = sample_symbol_frame(&self.probs, true_bin, &sent, self.mode, &mut rng)
            .expect("bin drawn in range");

        tally.n_trials += 1;
        if frame.clicks().is_empty() {
            tally.empty_frames += 1;
        }
        let decision = decide(&frame, &self.policy, &mut rng);
        let Some(bin) = decision.bin() else {
            tally.erasures += 1;
            return;
        };
        if bin != true_bin {
            tally.symbol_errors += 1;
            tally.timebin_bit_errors += u64::from((bin ^ true_bin).count_ones());
        }
        let decoded = match decision {
            Decision::Bin(b) => decode(frame.outcome_at(b).expect("chosen bin clicked")),
            _ => Decoded::Word(TwoBitWord::from_low_bits(rng.random_range(0..4u8))),
        };
        match decoded {
            Decoded::Word(got) => {
                tally.dense_decoded += 1;
                tally.dense_bit_errors += u64::from((got.bits() ^ word.bits()).count_ones());
            }
            Decoded::Ambiguous => tally.dense_ambiguous += 1,
        }
    }
}

/// Runs `n_trials` trials of the physical link `params`.
pub fn run_monte_carlo(
    params: &LinkParams,
    mode: BsaMode,
    policy: DecisionPolicy,
    n_trials: u64,
    seed: u64,
) -> Result<McEstimate> {
    MonteCarlo::new(params.probabilities()?)
        .mode(mode)
        .policy(policy)
        .run(n_trials, seed)
}
