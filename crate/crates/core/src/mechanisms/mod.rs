//! Randomized mechanisms and simulators.
//!
//! A [`Mechanism`] maps a sample to a random outcome. Mechanisms with a finite
//! range also expose their exact output distribution for every input sample,
//! which is what the exact verifiers consume. A mechanism may additionally
//! declare a sufficient statistic: a permutation-invariant key such that samples
//! with equal keys have identical output distributions. Declaring one tells the
//! verifiers the mechanism is exchangeable, so they can enumerate multisets
//! instead of ordered samples.
//!
//! A [`Simulator`] is the sample-independent comparison target of perfect
//! generalization: it sees only the population distribution and the sample size.

mod bits;
mod exp_learner;
mod laplace;
mod noisy_max;
mod wrappers;

use std::fmt;
use std::sync::Arc;

use rand::RngCore;

use crate::error::{Error, Result};
use crate::hypothesis::Hypothesis;
use crate::prob::{Example, FinitePmf, Outcome, PopulationDistribution, Sample};

pub use bits::{
    majority_mech, noisy_majority_mech, noisy_majority_pmf, strange_normal_mech, strange_normal_simulator, Majority,
    NoisyMajority, StrangeNormal, NORMAL, STRANGE,
};
pub use exp_learner::{exp_learner_pmf, exp_learner_simulator, exp_learner_weights, ExpLearner, ExpLearnerSimulator};
pub use laplace::{
    laplace_mech_answer, laplace_pair_eps, laplace_pg_scale, sq_oracle, sq_oracle_scale, LaplaceMechanism,
};
pub use noisy_max::{noisy_max, noisy_max_pmf, noisy_max_scale, report_noisy_max_probs, NoisyMax, NoisyMaxSimulator};
pub use wrappers::{
    decode_sample, encode_sample, postprocess, resample_compile, ConstantMechanism, LeakyMechanism, OutcomeMap,
    Postprocess, PostprocessedSimulator, Resample, DEFAULT_RESAMPLE_CAP,
};

pub type MechanismRef = Arc<dyn Mechanism>;
pub type SimulatorRef = Arc<dyn Simulator>;

/// The declared output range of a mechanism.
#[derive(Clone, Debug, PartialEq)]
pub enum OutputRange {
    Finite(Vec<Outcome>),
    ContinuousReal,
    /// Not finite and not a real line (e.g. raw samples).
    Unbounded,
}

impl OutputRange {
    pub fn finite_len(&self) -> Option<usize> {
        match self {
            OutputRange::Finite(v) => Some(v.len()),
            _ => None,
        }
    }
}

/// Canonical key of a sufficient statistic.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StatKey(pub Vec<u64>);

impl StatKey {
    /// Number of entries equal to 1.
    pub fn count_ones(s: &Sample) -> StatKey {
        StatKey(vec![s.iter().filter(|e| e.value() == 1.0).count() as u64])
    }

    /// The sample as a multiset.
    pub fn multiset(s: &Sample) -> StatKey {
        let mut entries: Vec<&Example> = s.iter().collect();
        entries.sort();
        let mut key = Vec::with_capacity(entries.len() * 3);
        for e in entries {
            key.push(e.x.len() as u64);
            key.extend(e.x.iter().map(|v| v.to_bits()));
            key.push(e.y as u64);
        }
        StatKey(key)
    }
}

pub trait Mechanism: Send + Sync {
    fn name(&self) -> String;

    fn range(&self) -> OutputRange;

    fn sample_output(&self, s: &Sample, rng: &mut dyn RngCore) -> Result<Outcome>;

    fn has_exact_pmf(&self) -> bool {
        false
    }

    fn exact_pmf(&self, _s: &Sample) -> Result<FinitePmf> {
        Err(Error::NoExactPmf(self.name()))
    }

    /// Permutation-invariant key; equal keys imply equal exact distributions.
    fn sufficient_stat(&self, _s: &Sample) -> Option<StatKey> {
        None
    }
}

impl fmt::Debug for dyn Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Mechanism({})", self.name())
    }
}

pub trait Simulator: Send + Sync {
    fn name(&self) -> String;

    fn exact_pmf(&self, d: &PopulationDistribution, n: usize) -> Result<FinitePmf>;

    fn sample(&self, d: &PopulationDistribution, n: usize, rng: &mut dyn RngCore) -> Result<Outcome> {
        Ok(self.exact_pmf(d, n)?.sample(rng))
    }
}

impl fmt::Debug for dyn Simulator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Simulator({})", self.name())
    }
}

/// Simulator that ignores the population and returns a fixed distribution.
#[derive(Clone, Debug)]
pub struct FixedSimulator {
    pmf: FinitePmf,
}

impl FixedSimulator {
    pub fn new(pmf: FinitePmf) -> Self {
        Self { pmf }
    }

    pub fn constant(o: Outcome) -> Self {
        Self::new(FinitePmf::point(o))
    }
}

impl Simulator for FixedSimulator {
    fn name(&self) -> String {
        if self.pmf.len() == 1 {
            format!("constant:{}", self.pmf.outcomes()[0])
        } else {
            "fixed".into()
        }
    }

    fn exact_pmf(&self, _d: &PopulationDistribution, _n: usize) -> Result<FinitePmf> {
        Ok(self.pmf.clone())
    }
}

/// A statistical query `q: X → [0, 1]`.
#[derive(Clone)]
pub struct Query {
    name: String,
    f: Arc<dyn Fn(&Example) -> f64 + Send + Sync>,
}

impl fmt::Debug for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Query({})", self.name)
    }
}

impl Query {
    pub fn new(name: impl Into<String>, f: impl Fn(&Example) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            name: name.into(),
            f: Arc::new(f),
        }
    }

    pub fn zero() -> Self {
        Self::new("zero", |_| 0.0)
    }

    /// `1` iff the first coordinate equals `v`.
    pub fn indicator(v: f64) -> Self {
        Self::new(format!("x=={v}"), move |e| (e.value() == v) as u8 as f64)
    }

    pub fn from_hypothesis(h: Hypothesis) -> Self {
        Self::new(h.label(), move |e| h.evaluate(e) as f64)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Evaluates, rejecting values outside [0, 1].
    pub fn evaluate(&self, e: &Example) -> Result<f64> {
        let v = (self.f)(e);
        if (0.0..=1.0).contains(&v) {
            Ok(v)
        } else {
            Err(Error::InvalidParameter(format!("query `{}` returned {v} outside [0, 1]", self.name)))
        }
    }

    /// `q(S)`.
    pub fn empirical(&self, s: &Sample) -> Result<f64> {
        let mut total = 0.0;
        for e in s {
            total += self.evaluate(e)?;
        }
        Ok(total / s.n() as f64)
    }

    /// `q(D)`.
    pub fn population(&self, d: &PopulationDistribution) -> Result<f64> {
        let mut total = 0.0;
        for (e, w) in d.support().iter().zip(d.weights()) {
            total += w * self.evaluate(e)?;
        }
        Ok(total)
    }
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;
    use crate::prob::RandomSeed;

    /// Frequencies of `draws` seeded sampler outputs lie within 4 standard errors of the exact PMF.
    pub fn assert_sampler_matches_pmf(m: &dyn Mechanism, s: &Sample, draws: u64) {
        let pmf = m.exact_pmf(s).unwrap();
        let mut counts = std::collections::BTreeMap::<Outcome, u64>::new();
        let mut rng = RandomSeed(77).rng();
        for _ in 0..draws {
            *counts.entry(m.sample_output(s, &mut rng).unwrap()).or_default() += 1;
        }
        for o in counts.keys() {
            assert!(pmf.prob(o) > 0.0, "{}: sampled outcome {o} has zero exact mass", m.name());
        }
        for (o, p) in pmf.iter() {
            let freq = *counts.get(o).unwrap_or(&0) as f64 / draws as f64;
            let se = (p * (1.0 - p) / draws as f64).sqrt().max(1.0 / draws as f64);
            assert!(
                (freq - p).abs() <= 4.0 * se,
                "{}: outcome {o} frequency {freq} vs exact {p}",
                m.name()
            );
        }
    }
}
