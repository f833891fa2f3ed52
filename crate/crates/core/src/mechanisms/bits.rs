use rand::RngCore;

use super::{FixedSimulator, Mechanism, OutputRange, StatKey};
use crate::error::{invalid, Result};
use crate::prob::{laplace_cdf, laplace_sample_unchecked, laplace_sf, FinitePmf, Outcome, Sample};

pub const STRANGE: &str = "Strange";
pub const NORMAL: &str = "Normal";

fn count_ones(s: &Sample) -> Result<usize> {
    Ok(s.to_bits()?.iter().filter(|&&b| b == 1).count())
}

/// `1` iff strictly more than `⌊n/2⌋` entries are 1.
pub fn majority_mech(s: &Sample) -> Result<u8> {
    Ok((count_ones(s)? > s.n() / 2) as u8)
}

/// `"Strange"` iff the first `⌊n/2⌋` entries are 1 and the rest are 0.
pub fn strange_normal_mech(s: &Sample) -> Result<Outcome> {
    let bits = s.to_bits()?;
    let half = bits.len() / 2;
    let strange = bits[..half].iter().all(|&b| b == 1) && bits[half..].iter().all(|&b| b == 0);
    Ok(Outcome::text(if strange { STRANGE } else { NORMAL }))
}

/// Companion simulator of [`strange_normal_mech`]: always `"Normal"`.
pub fn strange_normal_simulator() -> FixedSimulator {
    FixedSimulator::constant(Outcome::text(NORMAL))
}

/// Exact output law of the noisy majority on a sample with `ones` ones out of `n`.
pub fn noisy_majority_pmf(ones: usize, n: usize, eps: f64) -> Result<FinitePmf> {
    if n == 0 || ones > n {
        return Err(invalid(format!("need 0 <= ones <= n and n >= 1; got ones={ones}, n={n}")));
    }
    if !(eps > 0.0) {
        return Err(invalid(format!("eps must be positive, got {eps}")));
    }
    let mean = ones as f64 / n as f64;
    let b = 1.0 / (n as f64 * eps);
    let p0 = laplace_cdf(0.5 - mean, b)?;
    let p1 = laplace_sf(0.5 - mean, b)?;
    FinitePmf::new(vec![Outcome::Int(0), Outcome::Int(1)], vec![p0, p1])
}

/// `1` iff `s̄ + Lap(1/(nε)) > 1/2`.
pub fn noisy_majority_mech(s: &Sample, eps: f64, rng: &mut dyn RngCore) -> Result<u8> {
    if !(eps > 0.0) {
        return Err(invalid(format!("eps must be positive, got {eps}")));
    }
    let n = s.n() as f64;
    let noisy = count_ones(s)? as f64 / n + laplace_sample_unchecked(1.0 / (n * eps), rng);
    Ok((noisy > 0.5) as u8)
}

fn bit_range() -> OutputRange {
    OutputRange::Finite(vec![Outcome::Int(0), Outcome::Int(1)])
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Majority;

impl Mechanism for Majority {
    fn name(&self) -> String {
        "majority".into()
    }

    fn range(&self) -> OutputRange {
        bit_range()
    }

    fn sample_output(&self, s: &Sample, _rng: &mut dyn RngCore) -> Result<Outcome> {
        Ok(Outcome::Int(majority_mech(s)? as i64))
    }

    fn has_exact_pmf(&self) -> bool {
        true
    }

    fn exact_pmf(&self, s: &Sample) -> Result<FinitePmf> {
        Ok(FinitePmf::point(Outcome::Int(majority_mech(s)? as i64)))
    }

    fn sufficient_stat(&self, s: &Sample) -> Option<StatKey> {
        Some(StatKey::count_ones(s))
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct StrangeNormal;

impl Mechanism for StrangeNormal {
    fn name(&self) -> String {
        "strange-normal".into()
    }

    fn range(&self) -> OutputRange {
        OutputRange::Finite(vec![Outcome::text(NORMAL), Outcome::text(STRANGE)])
    }

    fn sample_output(&self, s: &Sample, _rng: &mut dyn RngCore) -> Result<Outcome> {
        strange_normal_mech(s)
    }

    fn has_exact_pmf(&self) -> bool {
        true
    }

    fn exact_pmf(&self, s: &Sample) -> Result<FinitePmf> {
        Ok(FinitePmf::point(strange_normal_mech(s)?))
    }
}

#[derive(Clone, Copy, Debug)]
pub struct NoisyMajority {
    pub eps: f64,
}

impl NoisyMajority {
    pub fn new(eps: f64) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(invalid(format!("eps must be positive, got {eps}")));
        }
        Ok(Self { eps })
    }
}

impl Mechanism for NoisyMajority {
    fn name(&self) -> String {
        format!("noisy-majority(eps={})", self.eps)
    }

    fn range(&self) -> OutputRange {
        bit_range()
    }

    fn sample_output(&self, s: &Sample, rng: &mut dyn RngCore) -> Result<Outcome> {
        Ok(Outcome::Int(noisy_majority_mech(s, self.eps, rng)? as i64))
    }

    fn has_exact_pmf(&self) -> bool {
        true
    }

    fn exact_pmf(&self, s: &Sample) -> Result<FinitePmf> {
        noisy_majority_pmf(count_ones(s)?, s.n(), self.eps)
    }

    fn sufficient_stat(&self, s: &Sample) -> Option<StatKey> {
        Some(StatKey::count_ones(s))
    }
}
