//! Parameter sweeps over `(M, R)` and their CSV rendering.

use std::io::{self, Write};

use crate::dense::BsaMode;
use crate::error::{Error, Result};
use crate::link::{LinkParams, LinkProbabilities, MAX_TIME_BITS};
use crate::qber::ErrorReport;
use crate::sim::{DecisionPolicy, McEstimate, MonteCarlo};
use crate::stream::mix_seed;

/// CSV column order.
pub const CSV_COLUMNS: [&str; 20] = [
    "M",
    "Y",
    "R_per_s",
    "eta_d",
    "loss",
    "tau_w_s",
    "p_pair",
    "p_n",
    "p_occ",
    "Pe_A",
    "Pe_B",
    "Pe_sym",
    "QBER",
    "mc_Pe_sym",
    "mc_Pe_sym_stderr",
    "mc_QBER",
    "mc_dense_bit_err",
    "mc_erasure_rate",
    "n_trials",
    "seed",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    /// Time-bin word lengths `M`; each point uses `Y = 2^M` bins.
    pub time_bits: Vec<u32>,
    /// Background singles rates, counts/s.
    pub background_rates: Vec<f64>,
    /// Source of every other link parameter; its `bins` and
    /// `background_rate` are overwritten per point.
    pub template: LinkParams,
    pub mode: BsaMode,
    pub policy: DecisionPolicy,
    pub n_trials: u64,
    pub seed: u64,
    pub threads: Option<usize>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.time_bits.is_empty() || self.background_rates.is_empty() {
            return Err(Error::invalid("sweep", "grid must list at least one M and one R"));
        }
        if let Some(m) = self.time_bits.iter().find(|&&m| m == 0 || m > MAX_TIME_BITS) {
            return Err(Error::invalid(
                "time_bits",
                format!("M must be in 1..={MAX_TIME_BITS}, got {m}"),
            ));
        }
        if self.n_trials == 0 {
            return Err(Error::invalid("n_trials", "must be at least 1"));
        }
        for point in self.points() {
            point.validate()?;
        }
        Ok(())
    }

    /// Grid points in row order: rates outermost, then `M`.
    pub fn points(&self) -> impl Iterator<Item = LinkParams> + '_ {
        self.background_rates.iter().flat_map(move |&rate| {
            self.time_bits.iter().map(move |&m| LinkParams {
                background_rate: rate,
                bins: 1u64 << m,
                ..self.template
            })
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub params: LinkParams,
    pub probs: LinkProbabilities,
    pub analytic: ErrorReport,
    pub mc: McEstimate,
    /// Seed of this point's Monte Carlo run.
    pub seed: u64,
}

pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    spec.points()
        .enumerate()
        .map(|(index, params)| {
            let probs = params.probabilities()?;
            let analytic = ErrorReport::compute(params.bins, probs.p_n, probs.p_occ(), spec.policy.empty_frame)?;
            let seed = mix_seed(spec.seed, index as u64);
            let mc = MonteCarlo::new(probs)
                .mode(spec.mode)
                .policy(spec.policy)
                .threads(spec.threads)
                .run(spec.n_trials, seed)?;
            Ok(SweepRow {
                params,
                probs,
                analytic,
                mc,
                seed,
            })
        })
        .collect()
}

/// Formats with 17 significant digits.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_csv<W: Write>(rows: &[SweepRow], mut out: W) -> io::Result<()> {
    writeln!(out, "{}", CSV_COLUMNS.join(","))?;
    for row in rows {
        let p = &row.params;
        let a = &row.analytic;
        let fields = [
            p.time_bits().to_string(),
            p.bins.to_string(),
            format_float(p.background_rate),
            format_float(p.eta_d),
            format_float(p.loss),
            format_float(p.coincidence_window),
            format_float(row.probs.p_pair),
            format_float(row.probs.p_n),
            format_float(row.probs.p_occ()),
            format_float(a.p_e_case_a),
            format_float(a.p_e_case_b),
            format_float(a.p_e_sym),
            format_float(a.qber),
            format_float(row.mc.symbol_error_rate().value),
            format_float(row.mc.symbol_error_rate().stderr),
            format_float(row.mc.timebin_qber().value),
            format_float(row.mc.dense_bit_error_rate().value),
            format_float(row.mc.erasure_rate().value),
            row.mc.n_trials.to_string(),
            row.seed.to_string(),
        ];
        writeln!(out, "{}", fields.join(","))?;
    }
    Ok(())
}

pub fn render_csv(rows: &[SweepRow]) -> String {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("CSV is ASCII")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(time_bits: Vec<u32>, rates: Vec<f64>, n_trials: u64) -> SweepSpec {
        SweepSpec {
            time_bits,
            background_rates: rates,
            template: LinkParams::reference(1, 0.0),
            mode: BsaMode::Ideal,
            policy: DecisionPolicy::default(),
            n_trials,
            seed: 2024,
            threads: None,
        }
    }

    #[test]
    fn reference_grid_shape_and_trend() {
        let rows = run_sweep(&spec((1..=10).collect(), vec![1e4, 1e5, 1e6], 200)).unwrap();
        assert_eq!(rows.len(), 30);
        for curve in rows.chunks(10) {
            let rate = curve[0].params.background_rate;
            assert!(curve.iter().all(|r| r.params.background_rate == rate));
            for w in curve.windows(2) {
                assert!(w[1].analytic.qber >= w[0].analytic.qber);
            }
        }
    }

    #[test]
    fn quiet_point_is_error_free() {
        let rows = run_sweep(&spec(vec![3], vec![0.0], 2_000)).unwrap();
        assert_eq!(rows[0].analytic.qber, 0.0);
        assert_eq!(rows[0].mc.timebin_qber().value, 0.0);
        assert_eq!(rows[0].mc.symbol_errors, 0);
    }

    #[test]
    fn csv_is_reproducible() {
        let s = spec(vec![1, 4], vec![1e6, 1e8], 3_000);
        let a = render_csv(&run_sweep(&s).unwrap());
        let b = render_csv(&run_sweep(&SweepSpec { threads: Some(1), ..s.clone() }).unwrap());
        let c = render_csv(&run_sweep(&SweepSpec { threads: Some(3), ..s }).unwrap());
        assert_eq!(a, b);
        assert_eq!(a, c);
        let header = a.lines().next().unwrap();
        assert_eq!(header, CSV_COLUMNS.join(","));
        assert_eq!(a.lines().count(), 5);
        for line in a.lines().skip(1) {
            assert_eq!(line.split(',').count(), CSV_COLUMNS.len());
        }
    }

    #[test]
    fn float_format_has_seventeen_digits() {
        assert_eq!(format_float(0.1), "1.0000000000000001e-1");
        assert_eq!(format_float(0.0), "0.0000000000000000e0");
        let s = format_float(std::f64::consts::PI);
        assert_eq!(s.parse::<f64>().unwrap(), std::f64::consts::PI);
    }

    #[test]
    fn invalid_specs() {
        assert!(run_sweep(&spec(vec![], vec![1e4], 10)).is_err());
        assert!(run_sweep(&spec(vec![0], vec![1e4], 10)).is_err());
        assert!(run_sweep(&spec(vec![2], vec![-1.0], 10)).is_err());
        assert!(run_sweep(&spec(vec![2], vec![1e4], 0)).is_err());
    }
}
