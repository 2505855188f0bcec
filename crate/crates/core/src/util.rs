//! Small numeric helpers shared across modules.

/// log(sum(exp(x_i))) computed without overflow.
///
/// Returns negative infinity for an empty slice or when every entry is
/// negative infinity.
pub(crate) fn logsumexp(xs: &[f64]) -> f64 {
    let max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let sum: f64 = xs.iter().map(|x| (x - max).exp()).sum();
    max + sum.ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_direct_sum_when_safe() {
        let xs = [0.0_f64, (2.0_f64).ln(), (3.0_f64).ln()];
        assert!((logsumexp(&xs) - (6.0_f64).ln()).abs() < 1e-12);
    }

    #[test]
    fn survives_large_magnitudes() {
        let xs = [-1000.0, -1000.0];
        assert!((logsumexp(&xs) - (-1000.0 + (2.0_f64).ln())).abs() < 1e-12);
    }

    #[test]
    fn empty_is_neg_infinity() {
        assert_eq!(logsumexp(&[]), f64::NEG_INFINITY);
    }
}
