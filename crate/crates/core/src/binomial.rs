//! Binomial probability mass evaluated in log space.
//!
//! Uses the saddle-point form (Loader, 2000): `ln C(n,x) p^x q^(n-x)` is
//! assembled from Stirling-series remainders and a deviance term, which
//! avoids the cancellation between large log-factorials that a naive
//! `ln Γ` formulation suffers once `n` reaches the millions.

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// `ln(n!) - [(n + 1/2) ln n - n + ln √(2π)]`, the Stirling-series error.
pub(crate) fn stirling_error(n: u64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;

    if n == 0 {
        // ln 0! - ln √(2π) limit is -∞; callers never need it.
        return 0.0;
    }
    let nf = n as f64;
    if n <= 15 {
        let ln_fact: f64 = (2..=n).map(|k| (k as f64).ln()).sum();
        return ln_fact - (nf + 0.5) * nf.ln() + nf - LN_SQRT_2PI;
    }
    let nn = nf * nf;
    if n > 500 {
        (S0 - S1 / nn) / nf
    } else if n > 80 {
        (S0 - (S1 - S2 / nn) / nn) / nf
    } else if n > 35 {
        (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / nf
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / nf
    }
}

/// Deviance `x ln(x/μ) + μ - x`, accurate when `x ≈ μ`.
pub(crate) fn deviance(x: f64, mu: f64) -> f64 {
    if (x - mu).abs() < 0.1 * (x + mu) {
        let mut v = (x - mu) / (x + mu);
        let mut s = (x - mu) * v;
        if s.abs() < f64::MIN_POSITIVE {
            return s;
        }
        let mut ej = 2.0 * x * v;
        v *= v;
        for j in 1..1000 {
            ej *= v;
            let next = s + ej / f64::from(2 * j + 1);
            if next == s {
                return next;
            }
            s = next;
        }
    }
    x * (x / mu).ln() + mu - x
}

/// `ln P[X = x]` for `X ~ Binomial(n, p)`. Returns `-∞` for impossible
/// outcomes.
pub fn ln_pmf(x: u64, n: u64, p: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&p));
    if x > n {
        return f64::NEG_INFINITY;
    }
    let q = 1.0 - p;
    if p == 0.0 {
        return if x == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if q == 0.0 {
        return if x == n { 0.0 } else { f64::NEG_INFINITY };
    }
    let nf = n as f64;
    if x == 0 {
        if n == 0 {
            return 0.0;
        }
        return if p < 0.1 {
            -deviance(nf, nf * q) - nf * p
        } else {
            nf * (-p).ln_1p()
        };
    }
    if x == n {
        return if q < 0.1 {
            -deviance(nf, nf * p) - nf * q
        } else {
            nf * p.ln()
        };
    }
    let xf = x as f64;
    let lc = stirling_error(n)
        - stirling_error(x)
        - stirling_error(n - x)
        - deviance(xf, nf * p)
        - deviance(nf - xf, nf * q);
    let lf = 2.0 * LN_SQRT_2PI + xf.ln() + (-xf / nf).ln_1p();
    lc - 0.5 * lf
}

pub fn pmf(x: u64, n: u64, p: f64) -> f64 {
    ln_pmf(x, n, p).exp()
}

/// `P[X >= 1] = 1 - (1-p)^n`, via `expm1`.
pub fn prob_at_least_one(n: u64, p: f64) -> f64 {
    if p >= 1.0 {
        return if n == 0 { 0.0 } else { 1.0 };
    }
    -(n as f64 * (-p).ln_1p()).exp_m1()
}

/// `Σ_{x=lo}^{n} w(x) · P[X = x]` with compensated summation. Terms past the
/// mode that underflow to zero end the sum.
pub fn weighted_sum(n: u64, p: f64, lo: u64, mut weight: impl FnMut(u64) -> f64) -> f64 {
    let mode = ((n as f64 + 1.0) * p).floor() as u64;
    let mut sum = Neumaier::default();
    for x in lo..=n {
        let term = pmf(x, n, p);
        if term == 0.0 && x > mode {
            break;
        }
        sum.add(weight(x) * term);
    }
    sum.total()
}

/// Neumaier's variant of Kahan summation.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct Neumaier {
    sum: f64,
    compensation: f64,
}

impl Neumaier {
    pub(crate) fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn total(&self) -> f64 {
        self.sum + self.compensation
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::function::gamma::ln_gamma;

    fn exact_pmf(x: u64, n: u64, p: f64) -> f64 {
        // Multiplicative binomial coefficient; fine for small n.
        let mut c = 1.0;
        for k in 0..x {
            c = c * (n - k) as f64 / (k + 1) as f64;
        }
        c * p.powi(x as i32) * (1.0 - p).powi((n - x) as i32)
    }

    #[test]
    fn stirling_error_matches_log_gamma() {
        for n in [1u64, 2, 5, 15, 16, 30, 36, 79, 81, 400, 501, 10_000] {
            let nf = n as f64;
            let direct = ln_gamma(nf + 1.0) - (nf + 0.5) * nf.ln() + nf - LN_SQRT_2PI;
            let tol = 1e-13 * (1.0 + ln_gamma(nf + 1.0).abs());
            assert!((stirling_error(n) - direct).abs() < tol, "n={n}");
        }
    }

    #[test]
    fn small_n_matches_direct_product() {
        for n in 0..=40u64 {
            for &p in &[0.0, 1e-6, 0.01, 0.1, 0.37, 0.5, 0.9, 0.999, 1.0] {
                for x in 0..=n {
                    let a = pmf(x, n, p);
                    let b = exact_pmf(x, n, p);
                    assert!((a - b).abs() <= 1e-14 + 1e-12 * b, "n={n} x={x} p={p}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn normalizes() {
        for n in [1u64, 3, 15, 63, 1023, 1 << 20] {
            for &p in &[0.0, 1e-9, 0.01, 0.1, 0.5, 0.99, 1.0] {
                let total = weighted_sum(n, p, 0, |_| 1.0);
                assert!((total - 1.0).abs() < 1e-12, "n={n} p={p}: {total}");
            }
        }
    }

    #[test]
    fn at_least_one() {
        assert_eq!(prob_at_least_one(3, 0.0), 0.0);
        assert_eq!(prob_at_least_one(3, 1.0), 1.0);
        assert!((prob_at_least_one(3, 0.1) - 0.271).abs() < 1e-15);
        // Tiny p keeps full relative precision.
        let v = prob_at_least_one(1, 1e-20);
        assert!((v - 1e-20).abs() < 1e-34);
    }

    #[test]
    fn impossible_outcomes() {
        assert_eq!(ln_pmf(4, 3, 0.5), f64::NEG_INFINITY);
        assert_eq!(pmf(1, 3, 0.0), 0.0);
        assert_eq!(pmf(2, 3, 1.0), 0.0);
        assert_eq!(pmf(3, 3, 1.0), 1.0);
    }
}
