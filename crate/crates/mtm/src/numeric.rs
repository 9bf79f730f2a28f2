//! Log-domain numeric helpers.

/// Log of the sum of exponentials, stabilized by subtracting the maximum.
///
/// Returns negative infinity when the slice is empty or every entry is
/// negative infinity. Entries must not be NaN or positive infinity.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    debug_assert!(max.is_finite(), "log_sum_exp over non-finite entries");
    let sum: f64 = values.iter().map(|v| (v - max).exp()).sum();
    max + sum.ln()
}

/// exp(log_weights[k]) / sum_j exp(log_weights[j]) with max-subtraction.
///
/// Returns 0 when entry `k` is a zero weight, whatever the rest of the slice
/// holds.
pub fn normalized_component(log_weights: &[f64], k: usize) -> f64 {
    if log_weights[k] == f64::NEG_INFINITY {
        return 0.0;
    }
    let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let total: f64 = log_weights.iter().map(|v| (v - max).exp()).sum();
    (log_weights[k] - max).exp() / total
}

/// log(sigmoid(z)) = -log(1 + exp(-z)), stable on both tails.
pub fn log_sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        -(-z).exp().ln_1p()
    } else {
        z - z.exp().ln_1p()
    }
}
