//! Deterministic floating-point accumulation.
//!
//! All energy bookkeeping in this crate reduces slices in a fixed order with
//! pairwise summation, so repeated runs on the same platform produce
//! bit-identical totals while keeping rounding error at O(log n).

/// Pairwise sum of a slice, recursing down to short runs.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LINEAR_CUTOFF: usize = 16;
    if values.len() <= LINEAR_CUTOFF {
        let mut acc = 0.0;
        for v in values {
            acc += v;
        }
        return acc;
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Pairwise-summed squared Euclidean norm of a complex slice.
pub fn norm_sq(values: &[num_complex::Complex64]) -> f64 {
    let sq: Vec<f64> = values.iter().map(|z| z.norm_sqr()).collect();
    pairwise_sum(&sq)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_naive_sum_on_small_inputs() {
        let xs = [1.0, 2.0, 3.0, 4.5];
        assert_eq!(pairwise_sum(&xs), 10.5);
    }

    #[test]
    fn large_sum_is_accurate() {
        let xs = vec![0.1; 100_000];
        let err = (pairwise_sum(&xs) - 10_000.0).abs();
        assert!(err < 1e-9, "pairwise error {err}");
    }
}
