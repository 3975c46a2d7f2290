//! TOML run configuration.
//!
//! Every section is optional and every key has a default. Unknown sections
//! or keys are rejected.
//!
//! ```toml
//! [link]
//! eta_d = 0.5
//! loss = 0.5
//! background_rate = 1.0e6     # counts/s per arm
//! coincidence_window = 1.0e-9 # s
//! bin_period = 1.0e-9         # s
//! time_bits = 3               # M, Y = 2^M
//! # p_n = 0.1                 # optional: bypass the physical model
//! # p_occ = 0.9
//!
//! [decoder]
//! mode = "ideal"              # ideal | linear-optics | hyper-assisted
//! empty_frame = "erasure"     # erasure | random-guess
//!
//! [bifodel]
//! preset = "standard"         # standard | pm
//! stages = 4
//! phase_error = [3.14159, 0.0, 0.0, 0.0]
//!
//! [simulation]
//! n_trials = 100000
//! seed = 1
//!
//! [sweep]
//! time_bits = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10]
//! background_rates = [1.0e4, 1.0e5, 1.0e6]
//! ```

use serde::Deserialize;
use std::fs;
use std::path::Path;

use crate::bifodel::{BifodelConfig, CoherenceThresholds};
use crate::dense::BsaMode;
use crate::error::{Error, Result};
use crate::link::{check_bins, LinkParams, LinkProbabilities, MAX_TIME_BITS};
use crate::qber::EmptyFramePolicy;
use crate::sim::{DecisionPolicy, MonteCarlo};
use crate::sweep::SweepSpec;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    link: Option<RawLink>,
    decoder: Option<RawDecoder>,
    bifodel: Option<RawBifodel>,
    simulation: Option<RawSimulation>,
    sweep: Option<RawSweep>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLink {
    eta_d: Option<f64>,
    loss: Option<f64>,
    background_rate: Option<f64>,
    coincidence_window: Option<f64>,
    bin_period: Option<f64>,
    time_bits: Option<u32>,
    p_n: Option<f64>,
    p_occ: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDecoder {
    mode: Option<BsaMode>,
    empty_frame: Option<EmptyFramePolicy>,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum Preset {
    Standard,
    Pm,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBifodel {
    preset: Option<Preset>,
    stages: u32,
    bin_period: Option<f64>,
    coherence_time: Option<f64>,
    coincidence_window: Option<f64>,
    phase_tolerance: Option<f64>,
    single_spatial_mode: Option<bool>,
    distinct_spatial_modes: Option<bool>,
    differential_delay: Option<Vec<f64>>,
    phase_error: Option<Vec<f64>>,
    polarization_delay: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSimulation {
    n_trials: Option<u64>,
    seed: Option<u64>,
    threads: Option<usize>,
    through_delay_line: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    time_bits: Option<Vec<u32>>,
    background_rates: Option<Vec<f64>>,
}

/// Monte Carlo run settings.
#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub n_trials: u64,
    pub seed: u64,
    pub threads: Option<usize>,
    /// Pass the shared pair through the configured delay line.
    pub through_delay_line: bool,
}

impl Default for Simulation {
    fn default() -> Self {
        Simulation {
            n_trials: 100_000,
            seed: 1,
            threads: None,
            through_delay_line: false,
        }
    }
}

/// Resolved configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub link: LinkParams,
    /// Direct `(p_n, p_occ)` in place of the physical model.
    pub probability_override: Option<(f64, f64)>,
    pub mode: BsaMode,
    pub policy: DecisionPolicy,
    pub delay_line: Option<BifodelConfig>,
    pub simulation: Simulation,
    pub sweep_time_bits: Vec<u32>,
    pub sweep_rates: Vec<f64>,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            link: LinkParams::reference(3, 1e5),
            probability_override: None,
            mode: BsaMode::Ideal,
            policy: DecisionPolicy::default(),
            delay_line: None,
            simulation: Simulation::default(),
            sweep_time_bits: (1..=10).collect(),
            sweep_rates: vec![1e4, 1e5, 1e6],
        }
    }
}

fn stage_values<'a>(
    name: &'static str,
    values: &'a Option<Vec<f64>>,
    stages: u32,
) -> Result<Option<&'a [f64]>> {
    match values {
        None => Ok(None),
        Some(v) if v.len() == stages as usize => Ok(Some(v)),
        Some(v) => Err(Error::Config(format!(
            "bifodel.{name} lists {} values for {stages} stages",
            v.len()
        ))),
    }
}

impl RawBifodel {
    fn resolve(&self, link_bin_period: f64) -> Result<BifodelConfig> {
        let bin_period = self.bin_period.unwrap_or(link_bin_period);
        let mut cfg = match self.preset {
            None | Some(Preset::Standard) => BifodelConfig::standard_fiber(self.stages, bin_period)?,
            Some(Preset::Pm) => BifodelConfig::pm_fiber(self.stages, bin_period)?,
        };
        let differential = stage_values("differential_delay", &self.differential_delay, self.stages)?;
        let phase = stage_values("phase_error", &self.phase_error, self.stages)?;
        let polarization = stage_values("polarization_delay", &self.polarization_delay, self.stages)?;
        let mut stages = cfg.stages().to_vec();
        for (k, stage) in stages.iter_mut().enumerate() {
            if let Some(v) = differential {
                stage.differential_delay = v[k];
            }
            if let Some(v) = phase {
                stage.phase_error = v[k];
            }
            if let Some(v) = polarization {
                stage.polarization_delay = v[k];
            }
        }
        let defaults = CoherenceThresholds::default();
        let thresholds = CoherenceThresholds {
            coincidence_window: self.coincidence_window.unwrap_or(defaults.coincidence_window),
            phase_tolerance: self.phase_tolerance.unwrap_or(defaults.phase_tolerance),
        };
        let rebuilt = BifodelConfig::with_stages(stages, bin_period)?.with_thresholds(thresholds);
        cfg = match self.coherence_time {
            Some(t) => rebuilt.with_coherence_time(t)?,
            None => rebuilt,
        };
        if let Some(flag) = self.single_spatial_mode {
            cfg.single_spatial_mode = flag;
        }
        if let Some(flag) = self.distinct_spatial_modes {
            cfg.distinct_spatial_modes = flag;
        }
        Ok(cfg)
    }
}

impl Config {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let mut cfg = Config::default();

        let link = raw.link.unwrap_or_default();
        let l = &mut cfg.link;
        if let Some(m) = link.time_bits {
            if m == 0 || m > MAX_TIME_BITS {
                return Err(Error::invalid(
                    "time_bits",
                    format!("M must be in 1..={MAX_TIME_BITS}, got {m}"),
                ));
            }
            l.bins = 1u64 << m;
        }
        l.eta_d = link.eta_d.unwrap_or(l.eta_d);
        l.loss = link.loss.unwrap_or(l.loss);
        l.background_rate = link.background_rate.unwrap_or(l.background_rate);
        l.coincidence_window = link.coincidence_window.unwrap_or(l.coincidence_window);
        l.bin_period = link.bin_period.unwrap_or(l.bin_period);
        cfg.probability_override = match (link.p_n, link.p_occ) {
            (None, None) => None,
            (Some(p_n), Some(p_occ)) => Some((p_n, p_occ)),
            _ => {
                return Err(Error::Config(
                    "link.p_n and link.p_occ must be given together".into(),
                ))
            }
        };
        cfg.link.validate()?;

        if let Some(d) = raw.decoder {
            cfg.mode = d.mode.unwrap_or(cfg.mode);
            cfg.policy = DecisionPolicy::new(d.empty_frame.unwrap_or(cfg.policy.empty_frame));
        }
        if let Some(b) = raw.bifodel {
            cfg.delay_line = Some(b.resolve(cfg.link.bin_period)?);
        }
        if let Some(s) = raw.simulation {
            let sim = &mut cfg.simulation;
            sim.n_trials = s.n_trials.unwrap_or(sim.n_trials);
            sim.seed = s.seed.unwrap_or(sim.seed);
            sim.threads = s.threads.or(sim.threads);
            sim.through_delay_line = s.through_delay_line.unwrap_or(sim.through_delay_line);
        }
        if let Some(s) = raw.sweep {
            cfg.sweep_time_bits = s.time_bits.unwrap_or(cfg.sweep_time_bits);
            cfg.sweep_rates = s.background_rates.unwrap_or(cfg.sweep_rates);
        }
        if cfg.simulation.through_delay_line && cfg.delay_line.is_none() {
            return Err(Error::Config(
                "simulation.through_delay_line requires a [bifodel] section".into(),
            ));
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn link_probabilities(&self) -> Result<LinkProbabilities> {
        match self.probability_override {
            Some((p_n, p_occ)) => {
                check_bins(self.link.bins)?;
                LinkProbabilities::from_occupied(self.link.bins, p_n, p_occ)
            }
            None => self.link.probabilities(),
        }
    }

    /// Monte Carlo driver for the configured operating point.
    pub fn monte_carlo(&self) -> Result<MonteCarlo> {
        let mc = MonteCarlo::new(self.link_probabilities()?)
            .mode(self.mode)
            .policy(self.policy)
            .threads(self.simulation.threads);
        match (&self.delay_line, self.simulation.through_delay_line) {
            (Some(line), true) => mc.delay_line(line.clone()),
            _ => Ok(mc),
        }
    }

    pub fn sweep_spec(&self) -> Result<SweepSpec> {
        if self.probability_override.is_some() {
            return Err(Error::Config(
                "sweeps derive probabilities from the physical model; drop link.p_n/p_occ".into(),
            ));
        }
        if self.simulation.through_delay_line {
            return Err(Error::Config(
                "sweeps vary M and cannot route through a fixed delay line".into(),
            ));
        }
        Ok(SweepSpec {
            time_bits: self.sweep_time_bits.clone(),
            background_rates: self.sweep_rates.clone(),
            template: self.link,
            mode: self.mode,
            policy: self.policy,
            n_trials: self.simulation.n_trials,
            seed: self.simulation.seed,
            threads: self.simulation.threads,
        })
    }
}
