use alloc::vec::Vec;

/// Gini index `Σ_i Σ_j |x_i - x_j| / (2 n² mean)` of nonnegative values,
/// computed from the sorted sample in `O(n log n)`.
///
/// Empty and all-zero inputs return 0.
pub fn gini(values: &[f64]) -> f64 {
    let n = values.len();
    let total: f64 = values.iter().sum();
    if n == 0 || total <= 0.0 {
        return 0.0;
    }
    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    // Σ_{i<j} (x_(j) - x_(i)) = Σ_i (2i - n + 1) x_(i), 0-based.
    let weighted: f64 = sorted.iter().enumerate().map(|(i, x)| (2.0 * i as f64 - n as f64 + 1.0) * x).sum();
    (weighted / (n as f64 * total)).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn equal_values_have_zero_gini() {
        assert_eq!(gini(&[3.0; 7]), 0.0);
        assert_eq!(gini(&[0.0; 4]), 0.0);
        assert_eq!(gini(&[]), 0.0);
    }

    #[test]
    fn single_holder() {
        for n in 1..10 {
            let mut x = vec![0.0; n];
            x[n / 2] = 5.0;
            assert!((gini(&x) - (n as f64 - 1.0) / n as f64).abs() < 1e-15);
        }
    }
}
