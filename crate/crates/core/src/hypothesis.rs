//! Boolean hypotheses over labelled examples and their empirical/population values.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Serialize, Serializer};

use crate::error::{invalid, Result};
use crate::prob::{Example, Point, PopulationDistribution, Sample};

/// A `{0,1}`-valued function of a labelled example.
#[derive(Clone, Debug, PartialEq)]
pub enum Hypothesis {
    /// `h_t(x) = 1` iff `x ≤ t` (first coordinate).
    Threshold(f64),
    /// Closed axis-aligned box; `lo.len()` is the dimension.
    Rectangle { lo: Point, hi: Point },
    Constant(u8),
    /// Element `index` of a finite class.
    Member { index: usize, inner: Box<Hypothesis> },
    Complement(Box<Hypothesis>),
    /// `1` iff the inner prediction disagrees with the example's label.
    Disagreement(Box<Hypothesis>),
    /// Predicts memorized labels by point, `default` elsewhere.
    Lookup { table: Arc<BTreeMap<Example, u8>>, default: u8 },
}

impl Hypothesis {
    pub fn evaluate(&self, e: &Example) -> u8 {
        match self {
            Hypothesis::Threshold(t) => (e.value() <= *t) as u8,
            Hypothesis::Rectangle { lo, hi } => {
                let inside = lo.len() <= e.x.len()
                    && lo.iter().zip(hi.iter()).zip(e.x.iter()).all(|((l, h), v)| l <= v && v <= h);
                inside as u8
            }
            Hypothesis::Constant(b) => *b,
            Hypothesis::Member { inner, .. } => inner.evaluate(e),
            Hypothesis::Complement(inner) => 1 - inner.evaluate(e),
            Hypothesis::Disagreement(inner) => (inner.evaluate(e) != e.y) as u8,
            Hypothesis::Lookup { table, default } => {
                let key = Example::new(e.x.clone(), 0);
                table.get(&key).copied().unwrap_or(*default)
            }
        }
    }

    /// Indicator of a single scalar value.
    pub fn point_indicator(v: f64) -> Self {
        Hypothesis::Rectangle {
            lo: smallvec::smallvec![v],
            hi: smallvec::smallvec![v],
        }
    }

    /// Loss view: `1` iff this hypothesis mislabels the example.
    pub fn loss(&self) -> Hypothesis {
        Hypothesis::Disagreement(Box::new(self.clone()))
    }

    /// Memorizes the sample's labels (last occurrence wins).
    pub fn memorize(s: &Sample) -> Self {
        let table = s.iter().map(|e| (Example::new(e.x.clone(), 0), e.y)).collect();
        Hypothesis::Lookup {
            table: Arc::new(table),
            default: 0,
        }
    }

    /// Human-readable label, unique within a well-formed class.
    pub fn label(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Hypothesis::Threshold(t) => write!(f, "threshold({t})"),
            Hypothesis::Rectangle { lo, hi } => write!(f, "rectangle({:?},{:?})", lo.as_slice(), hi.as_slice()),
            Hypothesis::Constant(b) => write!(f, "constant({b})"),
            Hypothesis::Member { index, inner } => write!(f, "h{index}:{inner}"),
            Hypothesis::Complement(inner) => write!(f, "not({inner})"),
            Hypothesis::Disagreement(inner) => write!(f, "loss({inner})"),
            Hypothesis::Lookup { table, default } => write!(f, "lookup({} points, default {default})", table.len()),
        }
    }
}

impl Serialize for Hypothesis {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.label())
    }
}

/// A finite, nonempty hypothesis class with optional VC-dimension metadata.
#[derive(Clone, Debug)]
pub struct HypothesisClass {
    hypotheses: Vec<Hypothesis>,
    vc_dim: Option<u32>,
}

impl HypothesisClass {
    pub fn new(hypotheses: Vec<Hypothesis>, vc_dim: Option<u32>) -> Result<Self> {
        if hypotheses.is_empty() {
            return Err(invalid("hypothesis class must be nonempty"));
        }
        let mut labels: Vec<String> = hypotheses.iter().map(Hypothesis::label).collect();
        labels.sort();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            return Err(invalid("hypotheses in a class must be distinct"));
        }
        Ok(Self { hypotheses, vc_dim })
    }

    /// `{constant(0), constant(1)}`.
    pub fn constants() -> Self {
        Self::new(vec![Hypothesis::Constant(0), Hypothesis::Constant(1)], Some(1)).expect("distinct")
    }

    pub fn hypotheses(&self) -> &[Hypothesis] {
        &self.hypotheses
    }

    pub fn len(&self) -> usize {
        self.hypotheses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hypotheses.is_empty()
    }

    pub fn vc_dim(&self) -> Option<u32> {
        self.vc_dim
    }

    /// Member `i`, tagged with its index.
    pub fn member(&self, i: usize) -> Option<Hypothesis> {
        self.hypotheses.get(i).map(|h| Hypothesis::Member {
            index: i,
            inner: Box::new(h.clone()),
        })
    }

    /// Smallest population error over the class.
    pub fn opt(&self, d: &PopulationDistribution) -> f64 {
        self.hypotheses
            .iter()
            .map(|h| true_error(h, d))
            .fold(f64::INFINITY, f64::min)
    }
}

/// `h(S) = (1/n) Σ h(x_i)`.
pub fn empirical_value(h: &Hypothesis, s: &Sample) -> f64 {
    s.iter().map(|e| h.evaluate(e) as f64).sum::<f64>() / s.n() as f64
}

/// `h(D)`, exact under the finite distribution.
pub fn true_value(h: &Hypothesis, d: &PopulationDistribution) -> f64 {
    d.expect(|e| h.evaluate(e) as f64)
}

/// Fraction of sample entries mislabelled by `h`.
pub fn empirical_error(h: &Hypothesis, s: &Sample) -> f64 {
    s.iter().filter(|e| h.evaluate(e) != e.y).count() as f64 / s.n() as f64
}

/// Probability that `h` mislabels a fresh example.
pub fn true_error(h: &Hypothesis, d: &PopulationDistribution) -> f64 {
    d.expect(|e| (h.evaluate(e) != e.y) as u8 as f64)
}
