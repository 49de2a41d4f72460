//! Standard normal CDF and its logarithm.
//!
//! `Φ(x) = erfc(−x/√2)/2`, with `erfc` from `libm` (a rational-approximation
//! port of the msun implementation, accurate to about one ulp). Below
//! [`LOG_CDF_ASYMPTOTIC_BELOW`] the logarithm comes from the Mills-ratio
//! asymptotic series instead, so log-risk stays finite long after Φ itself
//! underflows.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

pub const LOG_CDF_ASYMPTOTIC_BELOW: f64 = -8.0;

pub fn cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

pub fn log_cdf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x >= LOG_CDF_ASYMPTOTIC_BELOW {
        if x > 0.0 {
            // Φ(x) = 1 − Φ(−x); keep the small complement exact.
            return (-cdf(-x)).ln_1p();
        }
        return cdf(x).ln();
    }
    if x == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    // ln Φ(x) = −x²/2 − ln(−x) − ln(2π)/2 + ln Σ_k (−1)^k (2k−1)!! / x^{2k}
    let x2 = x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..64 {
        let next = -term * (2 * k - 1) as f64 / x2;
        if next.abs() >= term.abs() {
            break;
        }
        term = next;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    -0.5 * x2 - (-x).ln() - 0.5 * (2.0 * PI).ln() + sum.ln()
}

/// `ln(Σ exp(v_i))` computed without overflow; `-inf` for an empty slice.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let m = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    m + values.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Φ(x) by composite Simpson integration of the density over [x−12, x].
    fn cdf_by_quadrature(x: f64) -> f64 {
        let a = x - 12.0;
        let m = 20_000;
        let h = (x - a) / m as f64;
        let pdf = |t: f64| (-0.5 * t * t).exp() / (2.0 * PI).sqrt();
        let mut s = pdf(a) + pdf(x);
        for i in 1..m {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * pdf(a + i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn matches_quadrature_oracle() {
        for &x in &[-6.0, -3.0, -2.0, -1.0, -0.3, 0.0, 0.7, 2.5] {
            let q = cdf_by_quadrature(x);
            assert!((cdf(x) - q).abs() < 1e-12, "x={x}: {} vs {}", cdf(x), q);
        }
        assert!((cdf(-1.0) - 0.158_655_253_931_457_05).abs() < 1e-15);
        assert_eq!(cdf(0.0), 0.5);
    }

    #[test]
    fn log_cdf_is_continuous_at_switch() {
        let x = LOG_CDF_ASYMPTOTIC_BELOW - 1e-9;
        let below = log_cdf(x);
        let direct = cdf(x).ln();
        assert!((below - direct).abs() < 1e-12 * direct.abs(), "{below} vs {direct}");
        for &x in &[-8.5, -12.0, -20.0, -30.0] {
            let direct = cdf(x).ln();
            assert!((log_cdf(x) - direct).abs() < 1e-11 * direct.abs(), "x={x}");
        }
    }

    #[test]
    fn log_cdf_beyond_underflow() {
        assert_eq!(cdf(-40.0), 0.0);
        let l = log_cdf(-40.0);
        assert!(l.is_finite() && l < -800.0);
        assert!(log_cdf(-100.0) < log_cdf(-40.0));
        assert!(log_cdf(10.0) < 0.0 && log_cdf(10.0) > -1e-20);
    }

    #[test]
    fn lse_basic() {
        let v = [-1000.0, -1000.0];
        assert!((log_sum_exp(&v) - (-1000.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
    }
}
