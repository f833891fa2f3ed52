use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::{Arc, OnceLock};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use super::pmf::NORMALIZATION_TOL;
use crate::error::{invalid, Error, Result};

pub type Point = SmallVec<[f64; 2]>;

/// A labelled example `(x, y)` with `x` a point in R^d and `y ∈ {0, 1}`.
///
/// Scalar, unlabelled data (bits, counts) use a one-dimensional point with label 0.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Example {
    pub x: Point,
    pub y: u8,
}

impl Example {
    pub fn new(x: impl Into<Point>, y: u8) -> Self {
        Self { x: x.into(), y }
    }

    pub fn scalar(x: f64) -> Self {
        Self {
            x: smallvec::smallvec![x],
            y: 0,
        }
    }

    pub fn labelled(x: f64, y: u8) -> Self {
        Self {
            x: smallvec::smallvec![x],
            y,
        }
    }

    /// First coordinate.
    pub fn value(&self) -> f64 {
        self.x.first().copied().unwrap_or(0.0)
    }

    /// The first coordinate read as a bit.
    pub fn bit(&self) -> Result<u8> {
        let v = self.value();
        if v == 0.0 {
            Ok(0)
        } else if v == 1.0 {
            Ok(1)
        } else {
            Err(Error::NonBinary(v))
        }
    }

    fn key(&self) -> (impl Iterator<Item = u64> + '_, u8) {
        (self.x.iter().map(|v| v.to_bits()), self.y)
    }

    /// Renders as a bare value for scalar unlabelled data, `[x.., y]` otherwise.
    pub fn to_value_json(&self) -> serde_json::Value {
        if self.x.len() == 1 && self.y == 0 {
            serde_json::json!(self.x[0])
        } else {
            let mut v: Vec<serde_json::Value> = self.x.iter().map(|c| serde_json::json!(c)).collect();
            v.push(serde_json::json!(self.y));
            serde_json::Value::Array(v)
        }
    }
}

impl PartialEq for Example {
    fn eq(&self, other: &Self) -> bool {
        self.y == other.y && self.x.len() == other.x.len() && self.key().0.eq(other.key().0)
    }
}

impl Eq for Example {}

impl Hash for Example {
    fn hash<H: Hasher>(&self, state: &mut H) {
        for b in self.key().0 {
            b.hash(state);
        }
        self.y.hash(state);
    }
}

impl Ord for Example {
    fn cmp(&self, other: &Self) -> Ordering {
        for (a, b) in self.x.iter().zip(&other.x) {
            match a.total_cmp(b) {
                Ordering::Equal => {}
                o => return o,
            }
        }
        self.x.len().cmp(&other.x.len()).then(self.y.cmp(&other.y))
    }
}

impl PartialOrd for Example {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Example {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.x.len() == 1 && self.y == 0 {
            return write!(f, "{}", self.x[0]);
        }
        write!(f, "(")?;
        for (i, c) in self.x.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ";{})", self.y)
    }
}

/// An ordered sample of `n ≥ 1` labelled examples.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Sample {
    entries: Vec<Example>,
}

impl Sample {
    pub fn new(entries: Vec<Example>) -> Result<Self> {
        if entries.is_empty() {
            return Err(invalid("a sample needs at least one entry"));
        }
        Ok(Self { entries })
    }

    pub fn bits(bits: &[u8]) -> Result<Self> {
        Self::new(bits.iter().map(|&b| Example::scalar(b as f64)).collect())
    }

    pub fn entries(&self) -> &[Example] {
        &self.entries
    }

    pub fn n(&self) -> usize {
        self.entries.len()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Example> {
        self.entries.iter()
    }

    /// Entries read as bits.
    pub fn to_bits(&self) -> Result<Vec<u8>> {
        self.entries.iter().map(Example::bit).collect()
    }

    /// Copy with entry `i` replaced.
    pub fn replaced(&self, i: usize, value: Example) -> Sample {
        let mut entries = self.entries.clone();
        entries[i] = value;
        Sample { entries }
    }

    pub fn to_value_json(&self) -> serde_json::Value {
        serde_json::Value::Array(self.entries.iter().map(Example::to_value_json).collect())
    }
}

impl<'a> IntoIterator for &'a Sample {
    type Item = &'a Example;
    type IntoIter = std::slice::Iter<'a, Example>;
    fn into_iter(self) -> Self::IntoIter {
        self.entries.iter()
    }
}

/// A finitely supported population distribution over labelled examples.
#[derive(Clone, Debug, Serialize)]
pub struct PopulationDistribution {
    support: Vec<Example>,
    weights: Vec<f64>,
    #[serde(skip)]
    index: Arc<OnceLock<WeightedIndex<f64>>>,
}

#[derive(Deserialize)]
struct RawDistribution {
    support: Vec<Example>,
    weights: Vec<f64>,
}

impl<'de> Deserialize<'de> for PopulationDistribution {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawDistribution::deserialize(d)?;
        PopulationDistribution::new(raw.support, raw.weights).map_err(serde::de::Error::custom)
    }
}

impl PopulationDistribution {
    pub fn new(support: Vec<Example>, weights: Vec<f64>) -> Result<Self> {
        if support.len() != weights.len() || support.is_empty() {
            return Err(invalid(format!(
                "distribution needs matching nonempty support and weights ({} vs {})",
                support.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(invalid("distribution weights must be finite and nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(invalid(format!("distribution weights sum to {total}")));
        }
        let mut sorted: Vec<&Example> = support.iter().collect();
        sorted.sort();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(invalid("distribution support entries must be distinct"));
        }
        Ok(Self {
            support,
            weights,
            index: Arc::new(OnceLock::new()),
        })
    }

    pub fn uniform(support: Vec<Example>) -> Result<Self> {
        let w = 1.0 / support.len() as f64;
        let weights = vec![w; support.len()];
        Self::new(support, weights)
    }

    /// Bits with `Pr[x = 1] = p`.
    pub fn bernoulli(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(invalid(format!("Bernoulli parameter must lie in [0, 1], got {p}")));
        }
        Self::new(vec![Example::scalar(0.0), Example::scalar(1.0)], vec![1.0 - p, p])
    }

    pub fn uniform_bits() -> Self {
        Self::bernoulli(0.5).expect("valid")
    }

    pub fn support(&self) -> &[Example] {
        &self.support
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    /// Distribution of the unlabelled points, merging entries that differ only in label.
    pub fn marginal(&self) -> PopulationDistribution {
        let mut merged: std::collections::BTreeMap<Example, f64> = Default::default();
        for (e, w) in self.support.iter().zip(&self.weights) {
            *merged.entry(Example::new(e.x.clone(), 0)).or_insert(0.0) += w;
        }
        let (support, weights) = merged.into_iter().unzip();
        PopulationDistribution {
            support,
            weights,
            index: Arc::new(OnceLock::new()),
        }
    }

    /// Expectation of `f` under the distribution.
    pub fn expect<F: Fn(&Example) -> f64>(&self, f: F) -> f64 {
        self.support.iter().zip(&self.weights).map(|(e, w)| w * f(e)).sum()
    }

    fn weighted_index(&self) -> &WeightedIndex<f64> {
        self.index
            .get_or_init(|| WeightedIndex::new(self.weights.iter().copied()).expect("validated weights"))
    }

    /// One i.i.d. draw.
    pub fn draw(&self, rng: &mut dyn RngCore) -> Example {
        let i = self.weighted_index().sample(rng);
        self.support[i].clone()
    }

    /// `n` i.i.d. draws.
    pub fn draw_sample(&self, n: usize, rng: &mut dyn RngCore) -> Result<Sample> {
        if n == 0 {
            return Err(invalid("sample size must be at least 1"));
        }
        let idx = self.weighted_index();
        Sample::new((0..n).map(|_| self.support[idx.sample(rng)].clone()).collect())
    }
}

/// `n` i.i.d. draws from `d`, deterministic in `seed`.
pub fn draw_sample(d: &PopulationDistribution, n: usize, seed: RandomSeed) -> Result<Sample> {
    d.draw_sample(n, &mut seed.rng())
}

/// Root seed for every randomized run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RandomSeed(pub u64);

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(name: &str) -> u64 {
    name.bytes()
        .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01B3))
}

impl RandomSeed {
    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }

    /// Independent generator for `(name, index)`: streams never depend on how many
    /// other indices are drawn.
    pub fn stream(self, name: &str, index: u64) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        let mut state = self.0 ^ fnv1a(name).rotate_left(17);
        for chunk in key.chunks_mut(8) {
            state = splitmix64(state);
            chunk.copy_from_slice(&state.to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(index);
        rng
    }

    /// Child seed for a named sub-experiment.
    pub fn child(self, name: &str) -> RandomSeed {
        RandomSeed(splitmix64(self.0 ^ fnv1a(name)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_mass_sample() {
        let d = PopulationDistribution::bernoulli(1.0).unwrap();
        let s = draw_sample(&d, 7, RandomSeed(3)).unwrap();
        assert!(s.iter().all(|e| e.bit().unwrap() == 1));
        assert_eq!(s.n(), 7);
    }

    #[test]
    fn same_seed_same_sample() {
        let d = PopulationDistribution::uniform_bits();
        assert_eq!(draw_sample(&d, 50, RandomSeed(9)).unwrap(), draw_sample(&d, 50, RandomSeed(9)).unwrap());
        assert_ne!(draw_sample(&d, 50, RandomSeed(9)).unwrap(), draw_sample(&d, 50, RandomSeed(10)).unwrap());
    }

    #[test]
    fn law_of_large_numbers() {
        let d = PopulationDistribution::uniform_bits();
        let s = draw_sample(&d, 100_000, RandomSeed(1)).unwrap();
        let ones = s.to_bits().unwrap().iter().filter(|&&b| b == 1).count() as f64;
        assert!((ones / 1e5 - 0.5).abs() < 0.01);
    }

    #[test]
    fn streams_are_independent_of_each_other() {
        use rand::Rng;
        let seed = RandomSeed(5);
        let a: u64 = seed.stream("rg", 3).random();
        let b: u64 = seed.stream("rg", 3).random();
        let c: u64 = seed.stream("rg", 4).random();
        let d: u64 = seed.stream("other", 3).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }

    #[test]
    fn distribution_validation() {
        assert!(PopulationDistribution::new(vec![Example::scalar(0.0)], vec![0.5]).is_err());
        assert!(PopulationDistribution::new(vec![Example::scalar(0.0), Example::scalar(0.0)], vec![0.5, 0.5]).is_err());
        assert!(Sample::new(vec![]).is_err());
        let d = PopulationDistribution::new(
            vec![Example::labelled(1.0, 0), Example::labelled(1.0, 1), Example::labelled(2.0, 1)],
            vec![0.25, 0.25, 0.5],
        )
        .unwrap();
        let m = d.marginal();
        assert_eq!(m.len(), 2);
        assert_eq!(m.weights(), &[0.5, 0.5]);
    }

    #[test]
    fn non_binary_entry() {
        assert!(matches!(Example::scalar(0.5).bit(), Err(Error::NonBinary(_))));
    }
}
