//! Log-sum-exp arithmetic for categorical normalisation.

/// log Σ exp(xᵢ). Returns −∞ for an empty slice or when every entry is −∞.
pub fn logsumexp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Replaces log-weights by normalised probabilities and returns their log normaliser.
///
/// If every entry is −∞ the result is uniform.
pub fn normalize_in_place(xs: &mut [f64]) -> f64 {
    let lse = logsumexp(xs);
    if lse == f64::NEG_INFINITY {
        let u = 1.0 / xs.len() as f64;
        xs.iter_mut().for_each(|x| *x = u);
        return lse;
    }
    xs.iter_mut().for_each(|x| *x = (*x - lse).exp());
    lse
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn handles_extreme_values() {
        assert!((logsumexp(&[-1000.0, -1000.0]) - (-1000.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(logsumexp(&[]), f64::NEG_INFINITY);
        let mut v = [f64::NEG_INFINITY; 3];
        normalize_in_place(&mut v);
        assert_eq!(v, [1.0 / 3.0; 3]);
    }

    #[test]
    fn softmax_example() {
        let mut v = [0.5f64.ln() - 1.0, 0.5f64.ln() - 2.0];
        normalize_in_place(&mut v);
        let e1 = (-1.0f64).exp();
        let e2 = (-2.0f64).exp();
        assert!((v[0] - e1 / (e1 + e2)).abs() < 1e-15);
        assert!((v[0] - 0.7311).abs() < 1e-4);
    }
}
