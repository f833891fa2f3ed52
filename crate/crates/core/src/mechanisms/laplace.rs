use rand::RngCore;

use super::{Mechanism, OutputRange, Query, StatKey};
use crate::error::{invalid, Result};
use crate::prob::{laplace_sample_unchecked, ClosenessParams, Outcome, Sample};

fn check_scale(b: f64) -> Result<()> {
    if b > 0.0 && b.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("Laplace scale must be positive, got {b}")))
    }
}

/// `q(S) + Lap(b)`.
pub fn laplace_mech_answer(s: &Sample, q: &Query, b: f64, rng: &mut dyn RngCore) -> Result<f64> {
    check_scale(b)?;
    Ok(q.empirical(s)? + laplace_sample_unchecked(b, rng))
}

/// Noise scale `sqrt(ln(1/β) / (2 n ε²))` at which the Laplace mechanism is
/// (β, ε, 0)-perfectly generalizing.
pub fn laplace_pg_scale(n: u64, eps: f64, beta: f64) -> Result<f64> {
    if n == 0 || !(eps > 0.0) || !(beta > 0.0 && beta < 1.0) {
        return Err(invalid(format!("need n >= 1, eps > 0, beta in (0,1); got n={n}, eps={eps}, beta={beta}")));
    }
    Ok(((1.0 / beta).ln() / (2.0 * n as f64 * eps * eps)).sqrt())
}

/// Exact closeness of two Laplace(b) laws whose centers differ by `shift`: `(|shift|/b, 0)`.
pub fn laplace_pair_eps(shift: f64, b: f64) -> Result<ClosenessParams> {
    check_scale(b)?;
    Ok(ClosenessParams {
        eps: shift.abs() / b,
        delta: 0.0,
    })
}

/// Noise scale used by [`sq_oracle`]: Laplace noise exceeds `τ/2` with probability `β`.
pub fn sq_oracle_scale(tau: f64, beta: f64) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(invalid(format!("tolerance must be positive, got {tau}")));
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(invalid(format!("beta must lie in (0, 1), got {beta}")));
    }
    Ok((tau / 2.0) / (1.0 / beta).ln())
}

/// Answers a statistical query to tolerance `τ` through the Laplace mechanism.
///
/// Half the tolerance is budgeted to sampling error and half to noise; the
/// sample should hold at least `ln(1/β) / (2 (τ/2)²)` entries for the sampling half.
pub fn sq_oracle(s: &Sample, q: &Query, tau: f64, beta: f64, rng: &mut dyn RngCore) -> Result<f64> {
    let b = sq_oracle_scale(tau, beta)?;
    laplace_mech_answer(s, q, b, rng)
}

/// The Laplace mechanism as a [`Mechanism`] with continuous range.
#[derive(Clone, Debug)]
pub struct LaplaceMechanism {
    pub query: Query,
    pub b: f64,
}

impl LaplaceMechanism {
    pub fn new(query: Query, b: f64) -> Result<Self> {
        check_scale(b)?;
        Ok(Self { query, b })
    }
}

impl Mechanism for LaplaceMechanism {
    fn name(&self) -> String {
        format!("laplace(b={})", self.b)
    }

    fn range(&self) -> OutputRange {
        OutputRange::ContinuousReal
    }

    fn sample_output(&self, s: &Sample, rng: &mut dyn RngCore) -> Result<Outcome> {
        Ok(Outcome::real(laplace_mech_answer(s, &self.query, self.b, rng)?))
    }

    fn sufficient_stat(&self, s: &Sample) -> Option<StatKey> {
        Some(StatKey::multiset(s))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypothesis::Hypothesis;
    use crate::prob::{hoeffding_tail, laplace_sample, PopulationDistribution, RandomSeed};

    #[test]
    fn zero_query_is_pure_noise() {
        let s = Sample::bits(&[1, 0, 1]).unwrap();
        let a = laplace_mech_answer(&s, &Query::zero(), 0.3, &mut RandomSeed(2).rng()).unwrap();
        let b = laplace_sample(0.3, &mut RandomSeed(2).rng()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn unbiased_and_deterministic() {
        let s = Sample::bits(&[1, 1, 0, 0]).unwrap();
        let q = Query::indicator(1.0);
        let mut rng = RandomSeed(8).rng();
        let mean = (0..1_000_000)
            .map(|_| laplace_mech_answer(&s, &q, 0.5, &mut rng).unwrap())
            .sum::<f64>()
            / 1e6;
        assert!((mean - 0.5).abs() < 0.002, "{mean}");
        let x = laplace_mech_answer(&s, &q, 0.5, &mut RandomSeed(1).rng()).unwrap();
        let y = laplace_mech_answer(&s, &q, 0.5, &mut RandomSeed(1).rng()).unwrap();
        assert_eq!(x, y);
        assert!(laplace_mech_answer(&s, &q, 0.0, &mut rng).is_err());
    }

    #[test]
    fn pg_scale_values() {
        let b = laplace_pg_scale(100, 0.5, 0.01).unwrap();
        assert!((b - (100f64.ln() / 50.0).sqrt()).abs() < 1e-15);
        assert!((b - 0.30348).abs() < 1e-5);
        // n eps^2 = 0.5 and beta = 1/e
        let b = laplace_pg_scale(2, 0.5, (-1.0f64).exp()).unwrap();
        assert!((b - 1.0).abs() < 1e-12);
        assert!(laplace_pg_scale(200, 0.5, 0.01).unwrap() < laplace_pg_scale(100, 0.5, 0.01).unwrap());
        assert!(laplace_pg_scale(100, 1.0, 0.01).unwrap() < laplace_pg_scale(100, 0.5, 0.01).unwrap());
        assert!(laplace_pg_scale(100, 0.5, 0.001).unwrap() > laplace_pg_scale(100, 0.5, 0.01).unwrap());
        assert!(laplace_pg_scale(0, 0.5, 0.01).is_err());
        assert!(laplace_pg_scale(10, 0.5, 1.0).is_err());
    }

    #[test]
    fn pair_eps_values() {
        assert_eq!(laplace_pair_eps(0.0, 1.0).unwrap(), ClosenessParams { eps: 0.0, delta: 0.0 });
        let c = laplace_pair_eps(-0.1, 0.05).unwrap();
        assert!((c.eps - 2.0).abs() < 1e-12 && c.delta == 0.0);
        assert!(laplace_pair_eps(0.1, 0.0).is_err());
    }

    #[test]
    fn pg_certificate_from_hoeffding_and_shift() {
        // with b = laplace_pg_scale, any sample whose mean is within the Hoeffding radius
        // gets per-sample eps at most the target, and the radius fails with mass <= beta
        let (n, eps, beta) = (100u64, 0.5, 0.01);
        let b = laplace_pg_scale(n, eps, beta).unwrap();
        let radius = ((1.0 / beta).ln() / (2.0 * n as f64)).sqrt();
        assert!(laplace_pair_eps(radius, b).unwrap().eps <= eps + 1e-12);
        // the two-sided tail is 2 beta; the one-sided event the shift needs is beta
        assert!((hoeffding_tail(n, radius) - 2.0 * beta).abs() < 1e-12);
    }

    #[test]
    fn sq_oracle_behaviour() {
        let s = Sample::bits(&[1, 0, 1, 1]).unwrap();
        let q = Query::indicator(1.0);
        // noise scales with the tolerance, so only the relative error is controlled
        let b = sq_oracle_scale(1e9, 0.5).unwrap();
        assert!((b - 0.5e9 / 2f64.ln()).abs() < 1e-3);
        let tight = sq_oracle(&s, &q, 1e-9, 0.5, &mut RandomSeed(3).rng()).unwrap();
        assert!((tight - 0.75).abs() < 1e-8);
        assert_eq!(
            sq_oracle(&s, &q, 0.1, 0.05, &mut RandomSeed(5).rng()).unwrap(),
            sq_oracle(&s, &q, 0.1, 0.05, &mut RandomSeed(5).rng()).unwrap()
        );
        assert!(sq_oracle(&s, &q, 0.0, 0.05, &mut RandomSeed(5).rng()).is_err());
    }

    #[test]
    fn sq_oracle_within_tolerance() {
        let (tau, beta) = (0.1, 0.05);
        let n = ((1.0f64 / beta).ln() / (2.0 * (tau / 2.0) * (tau / 2.0))).ceil() as usize;
        let d = PopulationDistribution::bernoulli(0.3).unwrap();
        let q = Query::from_hypothesis(Hypothesis::point_indicator(1.0));
        let truth = q.population(&d).unwrap();
        let seed = RandomSeed(21);
        let trials = 10_000u64;
        let good = (0..trials)
            .filter(|&i| {
                let mut rng = seed.stream("sq", i);
                let s = d.draw_sample(n, &mut rng).unwrap();
                (sq_oracle(&s, &q, tau, beta, &mut rng).unwrap() - truth).abs() <= tau
            })
            .count();
        assert!(good as f64 / trials as f64 >= 1.0 - 2.0 * beta);
    }
}
