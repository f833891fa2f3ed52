//! Sample compression schemes, compression learners and their generalization bounds.
//!
//! A scheme of size `k` selects at most `k(n)` entries of a labelled sample and
//! rebuilds a hypothesis from the selection alone. Because the output is a
//! function of few examples, every adversary that post-processes it sees a
//! hypothesis that generalizes (see [`rg_bound_cats`]).

mod bounds;
mod schemes;

use rand::RngCore;

use crate::error::{invalid, Result};
use crate::hypothesis::Hypothesis;
use crate::prob::{Example, Sample};

pub use bounds::{cats_side_condition, rg_bound_cats, rg_bound_description};
pub use schemes::{rectangle_scheme, subsample_scheme, threshold_erm, threshold_scheme, Erm, RectangleScheme, SubsampleScheme, ThresholdScheme};

/// Entries chosen by a compression step, with their positions in the sample.
#[derive(Clone, Debug, PartialEq)]
pub struct Selection {
    pub indices: Vec<usize>,
    pub examples: Vec<Example>,
}

impl Selection {
    pub fn from_indices(s: &Sample, indices: Vec<usize>) -> Self {
        let examples = indices.iter().map(|&i| s.entries()[i].clone()).collect();
        Self { indices, examples }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

pub trait CompressionScheme: Send + Sync {
    fn name(&self) -> String;

    /// Maximum selection length on samples of size `n`.
    fn size(&self, n: usize) -> usize;

    fn compress(&self, s: &Sample, rng: &mut dyn RngCore) -> Result<Selection>;

    fn encode(&self, selection: &[Example]) -> Result<Hypothesis>;

    /// Approximate schemes only promise an approximate empirical risk minimizer.
    fn is_approximate(&self) -> bool {
        false
    }
}

/// `B(A(S))` together with `A(S)`.
pub fn run_compression_learner(
    scheme: &dyn CompressionScheme,
    s: &Sample,
    rng: &mut dyn RngCore,
) -> Result<(Hypothesis, Selection)> {
    let sel = scheme.compress(s, rng)?;
    if sel.len() > scheme.size(s.n()) {
        return Err(invalid(format!(
            "{} selected {} entries but has size {}",
            scheme.name(),
            sel.len(),
            scheme.size(s.n())
        )));
    }
    let h = scheme.encode(&sel.examples)?;
    Ok((h, sel))
}

/// A run of adaptively chosen compression learners on one sample.
pub struct AdaptiveSession {
    pub schemes: Vec<Box<dyn CompressionScheme>>,
    pub hypotheses: Vec<Hypothesis>,
    pub selections: Vec<Selection>,
    /// `Σ k_i(n)`.
    pub k: usize,
}

impl AdaptiveSession {
    /// Re-encodes the recorded selections; equals `hypotheses` because outputs
    /// depend on the sample only through the selections.
    pub fn replay(&self) -> Result<Vec<Hypothesis>> {
        self.schemes
            .iter()
            .zip(&self.selections)
            .map(|(scheme, sel)| scheme.encode(&sel.examples))
            .collect()
    }

    /// Concatenated selected entries.
    pub fn selected(&self) -> Vec<Example> {
        self.selections.iter().flat_map(|s| s.examples.iter().cloned()).collect()
    }
}

/// Runs `m` learners, the `i`-th chosen from the hypotheses of the first `i − 1`.
pub fn adaptive_session(
    s: &Sample,
    chooser: &mut dyn FnMut(&[Hypothesis]) -> Box<dyn CompressionScheme>,
    m: usize,
    rng: &mut dyn RngCore,
) -> Result<AdaptiveSession> {
    if m == 0 {
        return Err(invalid("an adaptive session needs at least one learner"));
    }
    let mut session = AdaptiveSession {
        schemes: Vec::with_capacity(m),
        hypotheses: Vec::with_capacity(m),
        selections: Vec::with_capacity(m),
        k: 0,
    };
    for _ in 0..m {
        let scheme = chooser(&session.hypotheses);
        let (h, sel) = run_compression_learner(scheme.as_ref(), s, rng)?;
        session.k += scheme.size(s.n());
        session.schemes.push(scheme);
        session.hypotheses.push(h);
        session.selections.push(sel);
    }
    Ok(session)
}
