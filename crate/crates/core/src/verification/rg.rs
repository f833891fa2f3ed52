use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::hypothesis::{empirical_value, true_value, Hypothesis};
use crate::mechanisms::Mechanism;
use crate::prob::{Outcome, PopulationDistribution, RandomSeed};

/// Post-processing adversary: turns a mechanism output into a hypothesis.
pub type Adversary = Arc<dyn Fn(&Outcome) -> Result<Hypothesis> + Send + Sync>;

const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for `failures / trials` at 95% confidence.
pub fn wilson_interval(failures: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = failures as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    // the exact endpoints at 0 and n are 0 and 1; skip the rounding residue
    let lo = if failures == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if failures == trials { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

/// Monte Carlo robust-generalization report.
#[derive(Clone, Debug, Serialize)]
pub struct RgVerdict {
    pub alpha: f64,
    pub trials: u64,
    pub failures: u64,
    pub failure_rate: f64,
    pub wilson_ci_95: (f64, f64),
    /// Mean of `|h(S) − h(D)|` over trials.
    pub mean_gap: f64,
}

impl RgVerdict {
    pub fn from_gaps(alpha: f64, gaps: &[f64]) -> Self {
        let trials = gaps.len() as u64;
        let failures = gaps.iter().filter(|g| **g > alpha).count() as u64;
        let mean_gap = if gaps.is_empty() { 0.0 } else { gaps.iter().sum::<f64>() / gaps.len() as f64 };
        Self {
            alpha,
            trials,
            failures,
            failure_rate: if trials == 0 { 0.0 } else { failures as f64 / trials as f64 },
            wilson_ci_95: wilson_interval(failures, trials),
            mean_gap,
        }
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.wilson_ci_95.1 - self.wilson_ci_95.0)
    }

    /// `failure_rate ≤ bound + 3 half-widths`.
    pub fn within(&self, bound: f64) -> bool {
        self.failure_rate <= bound + 3.0 * self.half_width()
    }
}

/// Draws `S ~ d^n`, runs `m`, applies the adversary and records `|h(S) − h(D)|`, per trial.
///
/// Trial `t` uses the stream `("rg", t)` of `seed`, so results do not depend on
/// the trial count or on scheduling.
pub fn rg_gaps(
    m: &dyn Mechanism,
    adversary: &Adversary,
    d: &PopulationDistribution,
    n: usize,
    trials: u64,
    seed: RandomSeed,
) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(invalid("sample size must be at least 1"));
    }
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = seed.stream("rg", t);
            let s = d.draw_sample(n, &mut rng)?;
            let o = m.sample_output(&s, &mut rng)?;
            let h = adversary(&o)?;
            Ok((empirical_value(&h, &s) - true_value(&h, d)).abs())
        })
        .collect()
}

pub fn verify_rg_mc(
    m: &dyn Mechanism,
    adversary: &Adversary,
    d: &PopulationDistribution,
    n: usize,
    alpha: f64,
    trials: u64,
    seed: RandomSeed,
) -> Result<RgVerdict> {
    if !(alpha > 0.0) {
        return Err(invalid(format!("alpha must be positive, got {alpha}")));
    }
    if trials == 0 {
        return Err(invalid("trials must be at least 1"));
    }
    Ok(RgVerdict::from_gaps(alpha, &rg_gaps(m, adversary, d, n, trials, seed)?))
}
