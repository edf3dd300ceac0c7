//! Floating point helpers that `core` does not provide.

pub(crate) fn ln(x: f64) -> f64 {
    libm::log(x)
}

pub(crate) fn exp(x: f64) -> f64 {
    libm::exp(x)
}

pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

pub(crate) fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// `ln(sum(exp(xs)))`, with `-inf` for an empty or all `-inf` input.
pub(crate) fn log_sum_exp(xs: impl IntoIterator<Item = f64> + Clone) -> f64 {
    let max = xs.clone().into_iter().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let total: f64 = xs.into_iter().map(|x| exp(x - max)).sum();
    max + ln(total)
}

/// Normalizes log weights into probabilities. Returns `None` when every
/// weight is `-inf`.
pub(crate) fn normalize_log(logs: &[f64]) -> Option<alloc::vec::Vec<f64>> {
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return None;
    }
    let shifted: alloc::vec::Vec<f64> = logs.iter().map(|&l| exp(l - max)).collect();
    let total: f64 = shifted.iter().sum();
    Some(shifted.into_iter().map(|w| w / total).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_sum_exp_matches_direct_sum() {
        let xs = [ln(0.25), ln(0.5), f64::NEG_INFINITY];
        assert!((log_sum_exp(xs) - ln(0.75)).abs() < 1e-15);
        assert_eq!(log_sum_exp([f64::NEG_INFINITY; 2]), f64::NEG_INFINITY);
    }

    #[test]
    fn normalize_survives_huge_negative_logs() {
        let w = normalize_log(&[-1e4, -1e4 - ln(2.0)]).unwrap();
        // ulp(1e4) is about 2e-12
        assert!((w[0] - 2.0 / 3.0).abs() < 1e-11);
        assert!(normalize_log(&[f64::NEG_INFINITY]).is_none());
    }
}
