//! Standard normal quantiles.

use statrs::distribution::{ContinuousCDF, Normal};

/// Inverse standard normal CDF; `±∞` at 0 and 1, NaN outside `[0, 1]`.
pub fn normal_quantile(p: f64) -> f64 {
    if p.is_nan() || !(0.0..=1.0).contains(&p) {
        return f64::NAN;
    }
    if p == 0.0 {
        return f64::NEG_INFINITY;
    }
    if p == 1.0 {
        return f64::INFINITY;
    }
    Normal::standard().inverse_cdf(p)
}

/// Two-sided critical value `z_{α/2}`; zero at α = 1.
pub fn z_two_sided(alpha: f64) -> f64 {
    normal_quantile(1.0 - alpha / 2.0).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reference_values() {
        for (p, z) in [
            (0.975, 1.959963984540054),
            (0.995, 2.5758293035489004),
            (0.84, 0.994457883209753),
            (0.5, 0.0),
            (0.001, -3.090232306167813),
            (1e-6, -4.753424308822899),
        ] {
            let got = normal_quantile(p);
            assert!((got - z).abs() < 1e-8 * z.abs().max(1.0), "{p}: {got} vs {z}");
        }
        assert_eq!(z_two_sided(1.0), 0.0);
        assert!((z_two_sided(0.05) - 1.959963984540054).abs() < 1e-8);
    }

    proptest! {
        #[test]
        fn antisymmetric_and_monotone(p in 1e-9f64..0.5, dp in 1e-6f64..1e-2) {
            prop_assert!((normal_quantile(p) + normal_quantile(1.0 - p)).abs() < 1e-8);
            prop_assert!(normal_quantile((p + dp).min(0.999)) > normal_quantile(p));
        }
    }
}
