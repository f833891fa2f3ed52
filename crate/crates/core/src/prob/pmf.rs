use std::collections::BTreeMap;
use std::fmt;

use ordered_float::OrderedFloat;
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance on the total mass of a distribution.
pub const NORMALIZATION_TOL: f64 = 1e-9;

/// Tolerance used when comparing closeness parameters.
pub const COMPARISON_TOL: f64 = 1e-12;

/// An opaque outcome label produced by a mechanism or simulator.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Outcome {
    Int(i64),
    Real(OrderedFloat<f64>),
    Text(String),
    Tuple(Vec<Outcome>),
}

impl Outcome {
    pub fn text(s: impl Into<String>) -> Self {
        Outcome::Text(s.into())
    }

    pub fn real(x: f64) -> Self {
        Outcome::Real(OrderedFloat(x))
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Outcome::Int(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_real(&self) -> Option<f64> {
        match self {
            Outcome::Int(v) => Some(*v as f64),
            Outcome::Real(x) => Some(x.0),
            _ => None,
        }
    }

    /// Parses a CLI-style literal: integers, then reals, then free text.
    pub fn parse(s: &str) -> Self {
        if let Ok(v) = s.parse::<i64>() {
            Outcome::Int(v)
        } else if let Ok(x) = s.parse::<f64>() {
            Outcome::real(x)
        } else {
            Outcome::Text(s.to_string())
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Int(v) => write!(f, "{v}"),
            Outcome::Real(x) => write!(f, "{}", x.0),
            Outcome::Text(s) => write!(f, "{s}"),
            Outcome::Tuple(items) => {
                write!(f, "(")?;
                for (i, o) in items.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{o}")?;
                }
                write!(f, ")")
            }
        }
    }
}

impl From<i64> for Outcome {
    fn from(v: i64) -> Self {
        Outcome::Int(v)
    }
}

impl From<&str> for Outcome {
    fn from(s: &str) -> Self {
        Outcome::Text(s.to_string())
    }
}

/// An exact probability mass function over a finite, ordered list of outcomes.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FinitePmf {
    outcomes: Vec<Outcome>,
    probs: Vec<f64>,
}

#[derive(Deserialize)]
struct RawPmf {
    outcomes: Vec<Outcome>,
    probs: Vec<f64>,
}

impl<'de> Deserialize<'de> for FinitePmf {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawPmf::deserialize(d)?;
        FinitePmf::new(raw.outcomes, raw.probs).map_err(serde::de::Error::custom)
    }
}

impl FinitePmf {
    /// Builds a distribution, checking nonnegativity, total mass and label distinctness.
    pub fn new(outcomes: Vec<Outcome>, probs: Vec<f64>) -> Result<Self> {
        if outcomes.len() != probs.len() {
            return Err(Error::InvalidPmf(format!(
                "{} outcomes but {} probabilities",
                outcomes.len(),
                probs.len()
            )));
        }
        if outcomes.is_empty() {
            return Err(Error::InvalidPmf("empty outcome set".into()));
        }
        if let Some(p) = probs.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(Error::InvalidPmf(format!("probability {p} is not a finite nonnegative number")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidPmf(format!("probabilities sum to {total}")));
        }
        let mut sorted: Vec<&Outcome> = outcomes.iter().collect();
        sorted.sort();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidPmf("outcome labels are not distinct".into()));
        }
        Ok(Self { outcomes, probs })
    }

    /// Builds a distribution from unnormalized nonnegative weights.
    pub fn from_weights(outcomes: Vec<Outcome>, weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total.is_finite() && total > 0.0) {
            return Err(Error::InvalidPmf(format!("weights sum to {total}")));
        }
        Self::new(outcomes, weights.into_iter().map(|w| w / total).collect())
    }

    /// Merges mass of repeated outcomes; the result is ordered by outcome.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (Outcome, f64)>) -> Result<Self> {
        let mut merged: BTreeMap<Outcome, f64> = BTreeMap::new();
        for (o, p) in pairs {
            *merged.entry(o).or_insert(0.0) += p;
        }
        let (outcomes, probs) = merged.into_iter().unzip();
        Self::new(outcomes, probs)
    }

    pub fn point(outcome: Outcome) -> Self {
        Self {
            outcomes: vec![outcome],
            probs: vec![1.0],
        }
    }

    pub fn uniform(outcomes: Vec<Outcome>) -> Result<Self> {
        let k = outcomes.len() as f64;
        let probs = vec![1.0 / k; outcomes.len()];
        Self::new(outcomes, probs)
    }

    pub fn outcomes(&self) -> &[Outcome] {
        &self.outcomes
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Outcome, f64)> {
        self.outcomes.iter().zip(self.probs.iter().copied())
    }

    /// Probability of `outcome`; zero when it is not listed.
    pub fn prob(&self, outcome: &Outcome) -> f64 {
        self.outcomes
            .iter()
            .position(|o| o == outcome)
            .map_or(0.0, |i| self.probs[i])
    }

    /// Draws one outcome by inversion.
    pub fn sample(&self, rng: &mut dyn RngCore) -> Outcome {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (o, p) in self.iter() {
            acc += p;
            if u < acc {
                return o.clone();
            }
        }
        // float slack: fall back to the last outcome with positive mass
        let last = self.probs.iter().rposition(|p| *p > 0.0).unwrap_or(0);
        self.outcomes[last].clone()
    }

    /// Image distribution under `f`, merging mass of colliding images.
    pub fn pushforward<F>(&self, f: F) -> FinitePmf
    where
        F: Fn(&Outcome) -> Outcome,
    {
        let mut merged: BTreeMap<Outcome, f64> = BTreeMap::new();
        for (o, p) in self.iter() {
            *merged.entry(f(o)).or_insert(0.0) += p;
        }
        let (outcomes, probs) = merged.into_iter().unzip();
        FinitePmf { outcomes, probs }
    }

    /// Aligns two distributions on the union of their supports, zero-filling missing outcomes.
    pub(crate) fn aligned<'a>(&'a self, other: &'a FinitePmf) -> Aligned<'a> {
        if self.outcomes == other.outcomes {
            return Aligned::Same(&self.probs, &other.probs);
        }
        let mut merged: BTreeMap<&Outcome, (f64, f64)> = BTreeMap::new();
        for (o, p) in self.iter() {
            merged.entry(o).or_insert((0.0, 0.0)).0 += p;
        }
        for (o, q) in other.iter() {
            merged.entry(o).or_insert((0.0, 0.0)).1 += q;
        }
        let (labels, pairs): (Vec<&Outcome>, Vec<(f64, f64)>) = merged.into_iter().unzip();
        let (p, q) = pairs.into_iter().unzip();
        Aligned::Merged { labels, p, q }
    }
}

pub(crate) enum Aligned<'a> {
    Same(&'a [f64], &'a [f64]),
    Merged {
        labels: Vec<&'a Outcome>,
        p: Vec<f64>,
        q: Vec<f64>,
    },
}

impl Aligned<'_> {
    pub(crate) fn columns(&self) -> (&[f64], &[f64]) {
        match self {
            Aligned::Same(p, q) => (p, q),
            Aligned::Merged { p, q, .. } => (p, q),
        }
    }
}

/// Independent product of two distributions over outcome pairs.
pub fn product_pmf(p: &FinitePmf, q: &FinitePmf) -> FinitePmf {
    let mut outcomes = Vec::with_capacity(p.len() * q.len());
    let mut probs = Vec::with_capacity(p.len() * q.len());
    for (a, pa) in p.iter() {
        for (b, qb) in q.iter() {
            outcomes.push(Outcome::Tuple(vec![a.clone(), b.clone()]));
            probs.push(pa * qb);
        }
    }
    FinitePmf { outcomes, probs }
}

/// Independent product of several distributions over flat outcome tuples.
pub fn product_many(parts: &[FinitePmf]) -> FinitePmf {
    let mut outcomes = vec![Vec::<Outcome>::new()];
    let mut probs = vec![1.0];
    for part in parts {
        let mut next_o = Vec::with_capacity(outcomes.len() * part.len());
        let mut next_p = Vec::with_capacity(outcomes.len() * part.len());
        for (prefix, pp) in outcomes.iter().zip(&probs) {
            for (o, q) in part.iter() {
                let mut t = prefix.clone();
                t.push(o.clone());
                next_o.push(t);
                next_p.push(pp * q);
            }
        }
        outcomes = next_o;
        probs = next_p;
    }
    FinitePmf {
        outcomes: outcomes.into_iter().map(Outcome::Tuple).collect(),
        probs,
    }
}

/// Image of `p` under `f`.
pub fn pushforward<F>(p: &FinitePmf, f: F) -> FinitePmf
where
    F: Fn(&Outcome) -> Outcome,
{
    p.pushforward(f)
}
