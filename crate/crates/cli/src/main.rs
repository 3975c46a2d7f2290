//! `timebin` command-line front end.
//!
//! Exit codes: 0 success, 1 configuration or usage error, 2 domain or
//! validation error.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use timebin_core::bifodel::{validate_coherence, CoherenceReport};
use timebin_core::config::Config;
use timebin_core::dense::{capacity_bits_per_biphoton, BsaMode, HYPER_BELL_CAPACITY_BITS};
use timebin_core::qber::{EmptyFramePolicy, ErrorReport};
use timebin_core::sim::{DecisionPolicy, McEstimate};
use timebin_core::sweep::{format_float, run_sweep, write_csv};
use timebin_core::Error;

#[derive(Debug, Parser)]
#[command(name = "timebin", version, about = "Time-bin + superdense coding link analysis and simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Closed-form symbol error and QBER at one operating point.
    Analytic {
        #[command(flatten)]
        point: PointArgs,
    },
    /// Monte Carlo estimate at one operating point.
    Simulate {
        #[command(flatten)]
        point: PointArgs,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Analytic and Monte Carlo results over the configured (M, R) grid, as CSV.
    Sweep {
        #[arg(long, short)]
        config: Option<PathBuf>,
        #[command(flatten)]
        run: RunArgs,
        /// Output file; stdout when omitted.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Bits carried per photon pair.
    Capacity {
        /// Time-bin word length M.
        #[arg(long, short = 'm')]
        time_bits: u32,
        #[arg(long, default_value = "ideal")]
        mode: BsaMode,
    },
    /// Check the configured delay line against the coherence requirements.
    ValidateDelay {
        #[arg(long, short)]
        config: PathBuf,
        /// Address to check; every address when omitted.
        #[arg(long, short)]
        address: Option<u64>,
        /// Coincidence window in seconds; defaults to the config's.
        #[arg(long)]
        window: Option<f64>,
        /// Phase tolerance in radians; defaults to the config's.
        #[arg(long)]
        phase_tolerance: Option<f64>,
    },
}

#[derive(Debug, Args)]
struct PointArgs {
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Time-bin word length M (Y = 2^M).
    #[arg(long, short = 'm')]
    time_bits: Option<u32>,
    /// Background singles rate per arm, counts/s.
    #[arg(long)]
    rate: Option<f64>,
    #[arg(long)]
    eta_d: Option<f64>,
    #[arg(long)]
    loss: Option<f64>,
    /// Coincidence window, seconds.
    #[arg(long)]
    window: Option<f64>,
    /// Time-bin period, seconds.
    #[arg(long)]
    bin_period: Option<f64>,
    /// Vacant-bin click probability; overrides the physical model.
    #[arg(long, requires = "p_occ")]
    p_n: Option<f64>,
    /// Occupied-bin click probability; overrides the physical model.
    #[arg(long, requires = "p_n")]
    p_occ: Option<f64>,
    #[arg(long)]
    mode: Option<BsaMode>,
    #[arg(long)]
    empty_frame: Option<EmptyFramePolicy>,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long, short = 'n')]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
}

fn load(path: Option<&PathBuf>) -> Result<Config, Error> {
    match path {
        Some(p) => Config::load(p),
        None => Ok(Config::default()),
    }
}

impl PointArgs {
    fn resolve(&self) -> Result<Config, Error> {
        let mut cfg = load(self.config.as_ref())?;
        if let Some(m) = self.time_bits {
            if m == 0 || m >= 64 {
                return Err(Error::InvalidParameter {
                    name: "time_bits",
                    reason: format!("M must be positive and below 64, got {m}"),
                });
            }
            cfg.link.bins = 1u64 << m;
        }
        let l = &mut cfg.link;
        l.background_rate = self.rate.unwrap_or(l.background_rate);
        l.eta_d = self.eta_d.unwrap_or(l.eta_d);
        l.loss = self.loss.unwrap_or(l.loss);
        l.coincidence_window = self.window.unwrap_or(l.coincidence_window);
        l.bin_period = self.bin_period.unwrap_or(l.bin_period);
        if let (Some(p_n), Some(p_occ)) = (self.p_n, self.p_occ) {
            cfg.probability_override = Some((p_n, p_occ));
        }
        cfg.mode = self.mode.unwrap_or(cfg.mode);
        if let Some(policy) = self.empty_frame {
            cfg.policy = DecisionPolicy::new(policy);
        }
        if cfg.probability_override.is_none() {
            cfg.link.validate()?;
        }
        Ok(cfg)
    }
}

impl RunArgs {
    fn apply(&self, cfg: &mut Config) {
        let sim = &mut cfg.simulation;
        sim.n_trials = self.trials.unwrap_or(sim.n_trials);
        sim.seed = self.seed.unwrap_or(sim.seed);
        sim.threads = self.threads.or(sim.threads);
    }
}

fn print_kv(out: &mut impl Write, key: &str, value: impl std::fmt::Display) -> io::Result<()> {
    writeln!(out, "{key:<22} = {value}")
}

fn analytic_report(cfg: &Config) -> Result<ErrorReport, Error> {
    let probs = cfg.link_probabilities()?;
    ErrorReport::compute(probs.bins, probs.p_n, probs.p_occ(), cfg.policy.empty_frame)
}

fn print_point(out: &mut impl Write, cfg: &Config) -> Result<ErrorReport, Box<dyn std::error::Error>> {
    let probs = cfg.link_probabilities()?;
    let report = analytic_report(cfg)?;
    print_kv(out, "M", probs.bins.trailing_zeros())?;
    print_kv(out, "Y", probs.bins)?;
    if cfg.probability_override.is_none() {
        print_kv(out, "R_per_s", format_float(cfg.link.background_rate))?;
        print_kv(out, "eta_d", format_float(cfg.link.eta_d))?;
        print_kv(out, "loss", format_float(cfg.link.loss))?;
        print_kv(out, "tau_w_s", format_float(cfg.link.coincidence_window))?;
    }
    print_kv(out, "empty_frame", cfg.policy.empty_frame)?;
    print_kv(out, "p_pair", format_float(probs.p_pair))?;
    print_kv(out, "p_n", format_float(probs.p_n))?;
    print_kv(out, "p_occ", format_float(probs.p_occ()))?;
    print_kv(out, "Pe_A", format_float(report.p_e_case_a))?;
    print_kv(out, "Pe_B", format_float(report.p_e_case_b))?;
    if report.policy == EmptyFramePolicy::RandomGuess {
        print_kv(out, "Pe_guess", format_float(report.p_e_guess))?;
    }
    print_kv(out, "Pe_sym", format_float(report.p_e_sym))?;
    print_kv(out, "QBER", format_float(report.qber))?;
    print_kv(out, "P_erasure", format_float(report.p_erasure()))?;
    Ok(report)
}

fn print_estimate(out: &mut impl Write, est: &McEstimate, seed: u64) -> io::Result<()> {
    let rate = |r: timebin_core::sim::Rate| format!("{} ± {}", format_float(r.value), format_float(r.stderr));
    print_kv(out, "mode", "monte-carlo")?;
    print_kv(out, "n_trials", est.n_trials)?;
    print_kv(out, "seed", seed)?;
    print_kv(out, "symbol_errors", est.symbol_errors)?;
    print_kv(out, "erasures", est.erasures)?;
    print_kv(out, "empty_frames", est.empty_frames)?;
    print_kv(out, "mc_Pe_sym", rate(est.symbol_error_rate()))?;
    print_kv(out, "mc_QBER", rate(est.timebin_qber()))?;
    print_kv(out, "mc_erasure_rate", rate(est.erasure_rate()))?;
    print_kv(out, "mc_dense_bit_err", rate(est.dense_bit_error_rate()))?;
    print_kv(out, "dense_ambiguous", est.dense_ambiguous)
}

fn print_coherence(out: &mut impl Write, r: &CoherenceReport) -> io::Result<()> {
    writeln!(out, "address {}: {}", r.address, if r.passed() { "PASS" } else { "FAIL" })?;
    for (name, check) in r.checks() {
        let measured = check.measured.map(format_float).unwrap_or_else(|| "assumed".into());
        writeln!(
            out,
            "  {name:<26} {}  {measured}",
            if check.passed { "pass" } else { "FAIL" }
        )?;
    }
    writeln!(out, "  accumulated_phase_rad      {}", format_float(r.accumulated_phase))?;
    writeln!(out, "  differential_delay_s       {}", format_float(r.accumulated_differential_delay))?;
    writeln!(out, "  polarization_delay_s       {}", format_float(r.accumulated_polarization_delay))
}

enum Failure {
    Config(String),
    Domain(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_config() {
            Failure::Config(e.to_string())
        } else {
            Failure::Domain(e.to_string())
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<Box<dyn std::error::Error>> for Failure {
    fn from(e: Box<dyn std::error::Error>) -> Self {
        match e.downcast::<Error>() {
            Ok(e) => (*e).into(),
            Err(e) => Failure::Config(e.to_string()),
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Analytic { point } => {
            let cfg = point.resolve()?;
            print_point(&mut out, &cfg)?;
        }
        Command::Simulate { point, run } => {
            let mut cfg = point.resolve()?;
            run.apply(&mut cfg);
            let mc = cfg.monte_carlo()?;
            print_point(&mut out, &cfg)?;
            let est = mc.run(cfg.simulation.n_trials, cfg.simulation.seed)?;
            print_estimate(&mut out, &est, cfg.simulation.seed)?;
        }
        Command::Sweep { config, run, out: path } => {
            let mut cfg = load(config.as_ref())?;
            run.apply(&mut cfg);
            let rows = run_sweep(&cfg.sweep_spec()?)?;
            match path {
                Some(p) => {
                    let file = File::create(&p).map_err(|e| Failure::Config(format!("{}: {e}", p.display())))?;
                    let mut w = BufWriter::new(file);
                    write_csv(&rows, &mut w)?;
                    w.flush()?;
                }
                None => write_csv(&rows, &mut out)?,
            }
        }
        Command::Capacity { time_bits, mode } => {
            print_kv(&mut out, "M", time_bits)?;
            print_kv(&mut out, "mode", mode)?;
            print_kv(&mut out, "bits_per_biphoton", capacity_bits_per_biphoton(time_bits, mode))?;
            print_kv(&mut out, "hyper_bell_dense_bits", HYPER_BELL_CAPACITY_BITS)?;
        }
        Command::ValidateDelay {
            config,
            address,
            window,
            phase_tolerance,
        } => {
            let cfg = Config::load(&config)?;
            let line = cfg
                .delay_line
                .ok_or_else(|| Failure::Config(format!("{}: no [bifodel] section", config.display())))?;
            let window = window.unwrap_or(line.thresholds.coincidence_window);
            let tolerance = phase_tolerance.unwrap_or(line.thresholds.phase_tolerance);
            let addresses: Vec<u64> = match address {
                Some(a) => vec![a],
                None => (0..line.addresses()).collect(),
            };
            let mut all_pass = true;
            for a in addresses {
                let report = validate_coherence(&line, a, window, tolerance)?;
                all_pass &= report.passed();
                print_coherence(&mut out, &report)?;
            }
            if !all_pass {
                return Err(Failure::Domain("delay line violates coherence requirements".into()));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Domain(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
