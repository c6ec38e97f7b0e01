//! Standard normal distribution function.

/// `Φ(x)`, via the complementary error function.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Upper tail `1 − Φ(x)`, accurate far into the right tail.
pub fn std_normal_sf(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// Upper critical values `z_α` with `1 − Φ(z_α) = α`.
pub const Z_10: f64 = 1.2815515655446004;
pub const Z_05: f64 = 1.6448536269514722;
pub const Z_01: f64 = 2.3263478740408408;

#[cfg(test)]
mod tests {
    use super::*;

    /// `Φ(x) = ½ + φ(x) Σ_k x^{2k+1} / (2k+1)!!`, summed to convergence.
    fn series_cdf(x: f64) -> f64 {
        let phi = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let mut term = x;
        let mut sum = x;
        let mut k = 1.0;
        while term.abs() > 1e-18 * sum.abs() {
            term *= x * x / (2.0 * k + 1.0);
            sum += term;
            k += 1.0;
        }
        0.5 + phi * sum
    }

    #[test]
    fn reference_values() {
        assert_eq!(std_normal_cdf(0.0), 0.5);
        assert!((std_normal_cdf(Z_05) - 0.95).abs() < 1e-10);
        assert!((std_normal_cdf(Z_10) - 0.90).abs() < 1e-12);
        assert!((std_normal_cdf(Z_01) - 0.99).abs() < 1e-12);
        assert!(std_normal_cdf(-8.0) < 1e-15);
        assert!(std_normal_cdf(-8.0) > 0.0);
    }

    #[test]
    fn matches_series_oracle() {
        for i in -60..=60 {
            let x = i as f64 / 10.0;
            assert!(
                (std_normal_cdf(x) - series_cdf(x)).abs() < 1e-12,
                "x={x}"
            );
        }
    }

    #[test]
    fn reflection_and_tail() {
        for i in -80..=80 {
            let x = i as f64 / 10.0;
            assert!((std_normal_cdf(-x) - (1.0 - std_normal_cdf(x))).abs() < 1e-12);
            assert!((std_normal_sf(x) - (1.0 - std_normal_cdf(x))).abs() < 1e-15);
        }
    }
}
