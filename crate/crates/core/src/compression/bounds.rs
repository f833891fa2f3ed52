use crate::error::{invalid, Result};

/// Overfitting bound for a learner whose output is determined by `k′` of `n` examples:
/// `sqrt(4k′ ln(n/δ)/n) + 8k′ ln(2n/δ)/n + k′/n`.
pub fn rg_bound_cats(n: u64, k_prime: u64, delta: f64) -> Result<f64> {
    if k_prime == 0 {
        return Err(invalid("k' must be at least 1"));
    }
    if n < 2 * k_prime {
        return Err(invalid(format!("need n >= 2k' (n={n}, k'={k_prime})")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid(format!("delta must lie in (0, 1), got {delta}")));
    }
    let (n, k) = (n as f64, k_prime as f64);
    Ok((4.0 * k * (n / delta).ln() / n).sqrt() + 8.0 * k * (2.0 * n / delta).ln() / n + k / n)
}

/// Whether `n ≥ 8k ln(2n/δ)`, the sample-size condition under which the
/// compression bound is stated as an accuracy guarantee.
pub fn cats_side_condition(n: u64, k: u64, delta: f64) -> bool {
    let n = n as f64;
    n >= 8.0 * k as f64 * (2.0 * n / delta).ln()
}

/// `sqrt(ln(|R|/β) / (2n))` for a mechanism with `|R|` possible outputs.
pub fn rg_bound_description(range_size: u64, n: u64, beta: f64) -> Result<f64> {
    if range_size == 0 || n == 0 {
        return Err(invalid("range size and n must be at least 1"));
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(invalid(format!("beta must lie in (0, 1), got {beta}")));
    }
    Ok(((range_size as f64 / beta).ln() / (2.0 * n as f64)).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cats_reference_value() {
        let v = rg_bound_cats(1000, 1, 0.05).unwrap();
        let by_hand = (4.0 * 20000f64.ln() / 1000.0).sqrt() + 8.0 * 40000f64.ln() / 1000.0 + 0.001;
        assert!((v - by_hand).abs() < 1e-15);
        assert!((v - 0.2846).abs() < 1e-3);
    }

    #[test]
    fn cats_shape() {
        assert!(rg_bound_cats(1_000_000, 1, 0.05).unwrap() < rg_bound_cats(1000, 1, 0.05).unwrap());
        assert!(rg_bound_cats(1000, 2, 0.05).unwrap() > rg_bound_cats(1000, 1, 0.05).unwrap());
        assert!(rg_bound_cats(3, 2, 0.05).is_err());
        assert!(rg_bound_cats(4, 2, 0.05).is_ok());
        assert!(cats_side_condition(1000, 1, 0.05));
        assert!(!cats_side_condition(50, 1, 0.05));
    }

    #[test]
    fn description_values() {
        let a = rg_bound_description(2, 200, 0.05).unwrap();
        assert!((a - (40f64.ln() / 400.0).sqrt()).abs() < 1e-15);
        assert!((a - 0.09603).abs() < 1e-5);
        // |R|/β = e gives sqrt(1/(2n))
        let r = rg_bound_description(1, 50, (-1.0f64).exp()).unwrap();
        assert!((r - 0.1).abs() < 1e-15);
        assert!(rg_bound_description(2, 400, 0.05).unwrap() < a);
    }
}
