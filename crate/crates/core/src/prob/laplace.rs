use rand::{Rng, RngCore};

use crate::error::{invalid, Result};

fn check_scale(b: f64) -> Result<()> {
    if b > 0.0 && b.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("Laplace scale must be positive and finite, got {b}")))
    }
}

/// CDF of the zero-centered Laplace distribution with scale `b`.
pub fn laplace_cdf(x: f64, b: f64) -> Result<f64> {
    check_scale(b)?;
    Ok(cdf_unchecked(x, b))
}

/// Survival function `1 - F(x)`, evaluated without cancellation in the upper tail.
pub fn laplace_sf(x: f64, b: f64) -> Result<f64> {
    check_scale(b)?;
    Ok(cdf_unchecked(-x, b))
}

pub(crate) fn cdf_unchecked(x: f64, b: f64) -> f64 {
    if x <= 0.0 {
        0.5 * (x / b).exp()
    } else {
        1.0 - 0.5 * (-x / b).exp()
    }
}

pub(crate) fn pdf_unchecked(x: f64, b: f64) -> f64 {
    (-x.abs() / b).exp() / (2.0 * b)
}

/// Draws from Laplace(0, b) by inverting the CDF at a uniform draw.
pub fn laplace_sample(b: f64, rng: &mut dyn RngCore) -> Result<f64> {
    check_scale(b)?;
    Ok(sample_unchecked(b, rng))
}

pub(crate) fn sample_unchecked(b: f64, rng: &mut dyn RngCore) -> f64 {
    loop {
        let r: f64 = rng.random();
        if r == 0.0 {
            continue;
        }
        let u = r - 0.5;
        return -b * u.signum() * (1.0 - 2.0 * u.abs()).ln();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn cdf_values() {
        assert_eq!(laplace_cdf(0.0, 3.0).unwrap(), 0.5);
        let v = laplace_cdf(-0.5, 0.25).unwrap();
        assert!((v - 0.5 * (-2.0f64).exp()).abs() < 1e-15);
        assert!((v - 0.067668).abs() < 1e-6);
        assert!((laplace_cdf(0.5, 0.25).unwrap() + v - 1.0).abs() < 1e-15);
        assert!(laplace_cdf(0.0, 0.0).is_err());
        assert!(laplace_sample(-1.0, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }

    #[test]
    fn empirical_cdf_matches_within_kolmogorov_distance() {
        let b = 0.7;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut xs: Vec<f64> = (0..1_000_000).map(|_| sample_unchecked(b, &mut rng)).collect();
        xs.sort_by(f64::total_cmp);
        let n = xs.len() as f64;
        let ks = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = cdf_unchecked(x, b);
                (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
            })
            .fold(0.0, f64::max);
        assert!(ks < 0.005, "Kolmogorov distance {ks}");
    }
}
