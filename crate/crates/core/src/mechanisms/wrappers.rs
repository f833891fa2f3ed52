use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, RngCore};

use super::{Mechanism, MechanismRef, OutputRange, Simulator, SimulatorRef, StatKey};
use crate::enumerate::{composition_count, compositions, multinomial_prob, tuple_count, tuples};
use crate::error::{invalid, Error, Result};
use crate::prob::{Example, FinitePmf, Outcome, PopulationDistribution, Sample};

/// Default bound on the number of resampled samples enumerated per exact PMF.
pub const DEFAULT_RESAMPLE_CAP: u64 = 1_000_000;

/// A named deterministic map on outcomes.
#[derive(Clone)]
pub struct OutcomeMap {
    name: String,
    f: Arc<dyn Fn(&Outcome) -> Outcome + Send + Sync>,
}

impl fmt::Debug for OutcomeMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "OutcomeMap({})", self.name)
    }
}

impl OutcomeMap {
    pub fn new(name: impl Into<String>, f: impl Fn(&Outcome) -> Outcome + Send + Sync + 'static) -> Self {
        Self {
            name: name.into(),
            f: Arc::new(f),
        }
    }

    pub fn identity() -> Self {
        Self::new("identity", Outcome::clone)
    }

    pub fn constant(o: Outcome) -> Self {
        Self::new(format!("constant={o}"), move |_| o.clone())
    }

    /// Merges neighbouring outcomes: halves integers, floors reals, keeps the
    /// first character of text and the first component of tuples.
    pub fn coarsen() -> Self {
        Self::new("coarsen", |o| match o {
            Outcome::Int(i) => Outcome::Int(i.div_euclid(2)),
            Outcome::Real(x) => Outcome::real(x.0.floor()),
            Outcome::Text(s) => Outcome::Text(s.chars().take(1).collect()),
            Outcome::Tuple(v) => v.first().cloned().unwrap_or(Outcome::Tuple(vec![])),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn apply(&self, o: &Outcome) -> Outcome {
        (self.f)(o)
    }
}

/// `f ∘ M`.
#[derive(Clone, Debug)]
pub struct Postprocess {
    pub inner: MechanismRef,
    pub map: OutcomeMap,
}

pub fn postprocess(m: MechanismRef, f: OutcomeMap) -> Postprocess {
    Postprocess { inner: m, map: f }
}

impl Mechanism for Postprocess {
    fn name(&self) -> String {
        format!("postprocess:{}:{}", self.map.name, self.inner.name())
    }

    fn range(&self) -> OutputRange {
        match self.inner.range() {
            OutputRange::Finite(v) => {
                let mut out: Vec<Outcome> = v.iter().map(|o| self.map.apply(o)).collect();
                out.sort();
                out.dedup();
                OutputRange::Finite(out)
            }
            _ => OutputRange::Unbounded,
        }
    }

    fn sample_output(&self, s: &Sample, rng: &mut dyn RngCore) -> Result<Outcome> {
        Ok(self.map.apply(&self.inner.sample_output(s, rng)?))
    }

    fn has_exact_pmf(&self) -> bool {
        self.inner.has_exact_pmf()
    }

    fn exact_pmf(&self, s: &Sample) -> Result<FinitePmf> {
        Ok(self.inner.exact_pmf(s)?.pushforward(|o| self.map.apply(o)))
    }

    fn sufficient_stat(&self, s: &Sample) -> Option<StatKey> {
        self.inner.sufficient_stat(s)
    }
}

/// Simulator counterpart of [`Postprocess`].
#[derive(Clone, Debug)]
pub struct PostprocessedSimulator {
    pub inner: SimulatorRef,
    pub map: OutcomeMap,
}

impl Simulator for PostprocessedSimulator {
    fn name(&self) -> String {
        format!("postprocess:{}:{}", self.map.name, self.inner.name())
    }

    fn exact_pmf(&self, d: &PopulationDistribution, n: usize) -> Result<FinitePmf> {
        Ok(self.inner.exact_pmf(d, n)?.pushforward(|o| self.map.apply(o)))
    }
}

/// Runs the inner mechanism on `n` draws with replacement from the sample.
#[derive(Clone, Debug)]
pub struct Resample {
    pub inner: MechanismRef,
    pub n: usize,
    pub cap: u64,
}

pub fn resample_compile(m: MechanismRef, n: usize) -> Resample {
    Resample {
        inner: m,
        n,
        cap: DEFAULT_RESAMPLE_CAP,
    }
}

impl Resample {
    pub fn with_cap(mut self, cap: u64) -> Self {
        self.cap = cap;
        self
    }

    /// Distinct entries of `s` and their multiplicities.
    fn empirical(s: &Sample) -> (Vec<Example>, Vec<usize>) {
        let mut counts: BTreeMap<&Example, usize> = BTreeMap::new();
        for e in s {
            *counts.entry(e).or_default() += 1;
        }
        counts.into_iter().map(|(e, c)| (e.clone(), c)).unzip()
    }

    fn check_cap(&self, required: u128) -> Result<()> {
        if required > self.cap as u128 {
            return Err(Error::CapExceeded {
                required: required as f64,
                cap: self.cap,
            });
        }
        Ok(())
    }
}

impl Mechanism for Resample {
    fn name(&self) -> String {
        format!("resample:{}", self.inner.name())
    }

    fn range(&self) -> OutputRange {
        self.inner.range()
    }

    fn sample_output(&self, s: &Sample, rng: &mut dyn RngCore) -> Result<Outcome> {
        if self.n == 0 {
            return Err(invalid("resample size must be at least 1"));
        }
        let entries = s.entries();
        let t = (0..self.n)
            .map(|_| entries[rng.random_range(0..entries.len())].clone())
            .collect();
        self.inner.sample_output(&Sample::new(t)?, rng)
    }

    fn has_exact_pmf(&self) -> bool {
        self.inner.has_exact_pmf()
    }

    fn exact_pmf(&self, s: &Sample) -> Result<FinitePmf> {
        if self.n == 0 {
            return Err(invalid("resample size must be at least 1"));
        }
        let (values, counts) = Self::empirical(s);
        let total = s.n() as f64;
        let cell: Vec<f64> = counts.iter().map(|&c| c as f64 / total).collect();
        let k = values.len();
        let mut acc: BTreeMap<Outcome, f64> = BTreeMap::new();
        let mut add = |t: Vec<Example>, w: f64| -> Result<()> {
            if w == 0.0 {
                return Ok(());
            }
            for (o, p) in self.inner.exact_pmf(&Sample::new(t)?)?.iter() {
                *acc.entry(o.clone()).or_insert(0.0) += w * p;
            }
            Ok(())
        };
        if self.inner.sufficient_stat(s).is_some() {
            self.check_cap(composition_count(self.n, k))?;
            for comp in compositions(self.n, k) {
                let w = multinomial_prob(&comp, &cell);
                let t = comp
                    .iter()
                    .zip(&values)
                    .flat_map(|(&c, v)| std::iter::repeat_n(v.clone(), c))
                    .collect();
                add(t, w)?;
            }
        } else {
            self.check_cap(tuple_count(self.n, k))?;
            for idx in tuples(self.n, k) {
                let w = idx.iter().map(|&i| cell[i]).product();
                add(idx.iter().map(|&i| values[i].clone()).collect(), w)?;
            }
        }
        let mass: f64 = acc.values().sum();
        FinitePmf::from_pairs(acc.into_iter().map(|(o, p)| (o, p / mass)))
    }

    fn sufficient_stat(&self, s: &Sample) -> Option<StatKey> {
        Some(StatKey::multiset(s))
    }
}

/// Outcome encoding of a whole sample: a tuple of `(x.., y)` tuples.
pub fn encode_sample(s: &Sample) -> Outcome {
    Outcome::Tuple(
        s.iter()
            .map(|e| {
                let mut parts: Vec<Outcome> = e.x.iter().map(|&v| Outcome::real(v)).collect();
                parts.push(Outcome::Int(e.y as i64));
                Outcome::Tuple(parts)
            })
            .collect(),
    )
}

/// Inverse of [`encode_sample`].
pub fn decode_sample(o: &Outcome) -> Result<Sample> {
    let bad = || invalid(format!("outcome {o} does not encode a sample"));
    let Outcome::Tuple(entries) = o else {
        return Err(bad());
    };
    let mut out = Vec::with_capacity(entries.len());
    for e in entries {
        let Outcome::Tuple(parts) = e else {
            return Err(bad());
        };
        let (last, xs) = parts.split_last().ok_or_else(bad)?;
        let y = last.as_int().filter(|y| *y == 0 || *y == 1).ok_or_else(bad)? as u8;
        let x = xs.iter().map(|p| p.as_real().ok_or_else(bad)).collect::<Result<Vec<f64>>>()?;
        out.push(Example::new(x, y));
    }
    Sample::new(out)
}

/// Publishes its input sample.
#[derive(Clone, Copy, Debug, Default)]
pub struct LeakyMechanism;

impl Mechanism for LeakyMechanism {
    fn name(&self) -> String {
        "leaky".into()
    }

    fn range(&self) -> OutputRange {
        OutputRange::Unbounded
    }

    fn sample_output(&self, s: &Sample, _rng: &mut dyn RngCore) -> Result<Outcome> {
        Ok(encode_sample(s))
    }

    fn has_exact_pmf(&self) -> bool {
        true
    }

    fn exact_pmf(&self, s: &Sample) -> Result<FinitePmf> {
        Ok(FinitePmf::point(encode_sample(s)))
    }
}

/// Ignores its input.
#[derive(Clone, Debug)]
pub struct ConstantMechanism {
    pub outcome: Outcome,
}

impl ConstantMechanism {
    pub fn new(outcome: Outcome) -> Self {
        Self { outcome }
    }
}

impl Mechanism for ConstantMechanism {
    fn name(&self) -> String {
        format!("constant({})", self.outcome)
    }

    fn range(&self) -> OutputRange {
        OutputRange::Finite(vec![self.outcome.clone()])
    }

    fn sample_output(&self, _s: &Sample, _rng: &mut dyn RngCore) -> Result<Outcome> {
        Ok(self.outcome.clone())
    }

    fn has_exact_pmf(&self) -> bool {
        true
    }

    fn exact_pmf(&self, _s: &Sample) -> Result<FinitePmf> {
        Ok(FinitePmf::point(self.outcome.clone()))
    }

    fn sufficient_stat(&self, _s: &Sample) -> Option<StatKey> {
        Some(StatKey(vec![]))
    }
}
