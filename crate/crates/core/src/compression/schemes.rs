use std::sync::Arc;

use rand::RngCore;
use smallvec::SmallVec;

use super::{CompressionScheme, Selection};
use crate::error::{invalid, Error, Result};
use crate::hypothesis::Hypothesis;
use crate::prob::{Example, Point, Sample};

/// Learns a one-dimensional threshold from the largest positive example.
///
/// With a window, only entries whose value lies in `[lo, hi]` are consulted.
#[derive(Clone, Copy, Debug)]
pub struct ThresholdScheme {
    window: Option<(f64, f64)>,
}

pub fn threshold_scheme() -> ThresholdScheme {
    ThresholdScheme { window: None }
}

impl ThresholdScheme {
    pub fn windowed(lo: f64, hi: f64) -> Self {
        Self { window: Some((lo, hi)) }
    }

    fn admits(&self, v: f64) -> bool {
        self.window.is_none_or(|(lo, hi)| lo <= v && v <= hi)
    }
}

impl CompressionScheme for ThresholdScheme {
    fn name(&self) -> String {
        match self.window {
            None => "threshold".into(),
            Some((lo, hi)) => format!("threshold[{lo},{hi}]"),
        }
    }

    fn size(&self, _n: usize) -> usize {
        1
    }

    fn compress(&self, s: &Sample, _rng: &mut dyn RngCore) -> Result<Selection> {
        let mut best: Option<usize> = None;
        for (i, e) in s.iter().enumerate() {
            if e.y == 1 && self.admits(e.value()) && best.is_none_or(|b| e.value() > s.entries()[b].value()) {
                best = Some(i);
            }
        }
        let Some(b) = best else {
            return Ok(Selection::from_indices(s, vec![]));
        };
        let t = s.entries()[b].value();
        if s.iter().any(|e| e.y == 0 && self.admits(e.value()) && e.value() <= t) {
            return Err(Error::NotRealizable("a negative example lies below the chosen threshold".into()));
        }
        Ok(Selection::from_indices(s, vec![b]))
    }

    fn encode(&self, selection: &[Example]) -> Result<Hypothesis> {
        match selection {
            [] => Ok(Hypothesis::Constant(0)),
            [e] => Ok(Hypothesis::Threshold(e.value())),
            _ => Err(invalid("threshold scheme encodes at most one example")),
        }
    }
}

/// Bounding box of the positive examples in `dim` dimensions.
#[derive(Clone, Copy, Debug)]
pub struct RectangleScheme {
    dim: usize,
}

pub fn rectangle_scheme(dim: usize) -> Result<RectangleScheme> {
    if dim == 0 {
        return Err(invalid("rectangle dimension must be at least 1"));
    }
    Ok(RectangleScheme { dim })
}

impl RectangleScheme {
    fn bounding_box(&self, positives: impl Iterator<Item = Example>) -> Result<Option<(Point, Point)>> {
        let mut bounds: Option<(Point, Point)> = None;
        for e in positives {
            if e.x.len() < self.dim {
                return Err(invalid(format!("example {e} has fewer than {} coordinates", self.dim)));
            }
            let (lo, hi) = bounds.get_or_insert_with(|| {
                let p: Point = e.x[..self.dim].iter().copied().collect();
                (p.clone(), p)
            });
            for a in 0..self.dim {
                lo[a] = lo[a].min(e.x[a]);
                hi[a] = hi[a].max(e.x[a]);
            }
        }
        Ok(bounds)
    }
}

impl CompressionScheme for RectangleScheme {
    fn name(&self) -> String {
        format!("rectangle(dim={})", self.dim)
    }

    fn size(&self, _n: usize) -> usize {
        2 * self.dim
    }

    fn compress(&self, s: &Sample, _rng: &mut dyn RngCore) -> Result<Selection> {
        let pos: Vec<usize> = (0..s.n()).filter(|&i| s.entries()[i].y == 1).collect();
        if pos.is_empty() {
            return Ok(Selection::from_indices(s, vec![]));
        }
        let coord = |i: usize, a: usize| s.entries()[i].x.get(a).copied().unwrap_or(f64::NAN);
        let mut picked: SmallVec<[usize; 8]> = SmallVec::new();
        for a in 0..self.dim {
            let mut lo = pos[0];
            let mut hi = pos[0];
            for &i in &pos[1..] {
                if coord(i, a) < coord(lo, a) {
                    lo = i;
                }
                if coord(i, a) > coord(hi, a) {
                    hi = i;
                }
            }
            for i in [lo, hi] {
                if !picked.contains(&i) {
                    picked.push(i);
                }
            }
        }
        let sel = Selection::from_indices(s, picked.into_vec());
        let h = self.encode(&sel.examples)?;
        if s.iter().any(|e| e.y == 0 && h.evaluate(e) == 1) {
            return Err(Error::NotRealizable("the positive bounding box contains a negative example".into()));
        }
        Ok(sel)
    }

    fn encode(&self, selection: &[Example]) -> Result<Hypothesis> {
        match self.bounding_box(selection.iter().filter(|e| e.y == 1).cloned())? {
            None => Ok(Hypothesis::Constant(0)),
            Some((lo, hi)) => Ok(Hypothesis::Rectangle { lo, hi }),
        }
    }
}

/// An empirical risk minimizer used by [`subsample_scheme`].
pub type Erm = Arc<dyn Fn(&Sample) -> Result<Hypothesis> + Send + Sync>;

/// Threshold with the fewest mistakes on `s`; ties go to the smallest threshold,
/// and predicting 0 everywhere is a candidate.
pub fn threshold_erm(s: &Sample) -> Result<Hypothesis> {
    let mut pts: Vec<(f64, u8)> = s.iter().map(|e| (e.value(), e.y)).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    // threshold below everything: every positive is a mistake
    let mut mistakes = pts.iter().filter(|p| p.1 == 1).count();
    let mut best = (mistakes, None);
    let mut i = 0;
    while i < pts.len() {
        let v = pts[i].0;
        while i < pts.len() && pts[i].0 == v {
            if pts[i].1 == 1 {
                mistakes -= 1;
            } else {
                mistakes += 1;
            }
            i += 1;
        }
        if mistakes < best.0 {
            best = (mistakes, Some(v));
        }
    }
    Ok(best.1.map_or(Hypothesis::Constant(0), Hypothesis::Threshold))
}

/// Selects `k` entries uniformly without replacement and runs `erm` on them.
#[derive(Clone)]
pub struct SubsampleScheme {
    erm: Erm,
    k: usize,
}

pub fn subsample_scheme(erm: Erm, k: usize) -> Result<SubsampleScheme> {
    if k == 0 {
        return Err(invalid("subsample size must be at least 1"));
    }
    Ok(SubsampleScheme { erm, k })
}

impl CompressionScheme for SubsampleScheme {
    fn name(&self) -> String {
        format!("subsample(k={})", self.k)
    }

    fn size(&self, n: usize) -> usize {
        self.k.min(n)
    }

    fn compress(&self, s: &Sample, rng: &mut dyn RngCore) -> Result<Selection> {
        let n = s.n();
        let mut idx = if self.k >= n {
            (0..n).collect()
        } else {
            rand::seq::index::sample(rng, n, self.k).into_vec()
        };
        idx.sort_unstable();
        Ok(Selection::from_indices(s, idx))
    }

    fn encode(&self, selection: &[Example]) -> Result<Hypothesis> {
        (self.erm)(&Sample::new(selection.to_vec())?)
    }

    fn is_approximate(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compression::run_compression_learner;
    use crate::hypothesis::empirical_error;
    use crate::prob::{PopulationDistribution, RandomSeed};
    use proptest::prelude::*;
    use rand::Rng;

    fn labelled(points: &[(f64, u8)]) -> Sample {
        Sample::new(points.iter().map(|&(x, y)| Example::labelled(x, y)).collect()).unwrap()
    }

    fn rng() -> rand_chacha::ChaCha8Rng {
        RandomSeed(0).rng()
    }

    #[test]
    fn threshold_reference_instance() {
        let s = labelled(&[(1.0, 1), (3.0, 1), (5.0, 0)]);
        let sel = threshold_scheme().compress(&s, &mut rng()).unwrap();
        assert_eq!(sel.examples, vec![Example::labelled(3.0, 1)]);
        let h = threshold_scheme().encode(&sel.examples).unwrap();
        assert_eq!(h, Hypothesis::Threshold(3.0));
        assert_eq!(h.evaluate(&Example::scalar(3.0)), 1);
        assert_eq!(h.evaluate(&Example::scalar(5.0)), 0);
    }

    #[test]
    fn threshold_degenerate_samples() {
        let all_pos = labelled(&[(2.0, 1), (9.0, 1), (4.0, 1)]);
        let (h, _) = run_compression_learner(&threshold_scheme(), &all_pos, &mut rng()).unwrap();
        assert_eq!(h, Hypothesis::Threshold(9.0));
        assert_eq!(empirical_error(&h, &all_pos), 0.0);
        let all_neg = labelled(&[(2.0, 0), (9.0, 0)]);
        let (h, sel) = run_compression_learner(&threshold_scheme(), &all_neg, &mut rng()).unwrap();
        assert_eq!(h, Hypothesis::Constant(0));
        assert!(sel.is_empty());
        assert_eq!(empirical_error(&h, &all_neg), 0.0);
    }

    #[test]
    fn threshold_ties_take_first_occurrence() {
        let s = labelled(&[(3.0, 1), (1.0, 1), (3.0, 1)]);
        assert_eq!(threshold_scheme().compress(&s, &mut rng()).unwrap().indices, vec![0]);
    }

    #[test]
    fn threshold_rejects_unrealizable() {
        let s = labelled(&[(1.0, 0), (3.0, 1)]);
        assert!(matches!(threshold_scheme().compress(&s, &mut rng()), Err(Error::NotRealizable(_))));
    }

    #[test]
    fn rectangle_cases() {
        let s = labelled(&[(2.0, 1), (7.0, 1), (5.0, 1), (9.0, 0)]);
        let (h, sel) = run_compression_learner(&rectangle_scheme(1).unwrap(), &s, &mut rng()).unwrap();
        assert_eq!(
            h,
            Hypothesis::Rectangle {
                lo: smallvec::smallvec![2.0],
                hi: smallvec::smallvec![7.0]
            }
        );
        assert_eq!(sel.indices, vec![0, 1]);
        let p = Sample::new(vec![Example::new(vec![1.0, 2.0], 1), Example::new(vec![0.0, 0.0], 0)]).unwrap();
        let (h, _) = run_compression_learner(&rectangle_scheme(2).unwrap(), &p, &mut rng()).unwrap();
        assert_eq!(
            h,
            Hypothesis::Rectangle {
                lo: smallvec::smallvec![1.0, 2.0],
                hi: smallvec::smallvec![1.0, 2.0]
            }
        );
        let bad = labelled(&[(2.0, 1), (3.0, 0), (7.0, 1)]);
        assert!(matches!(rectangle_scheme(1).unwrap().compress(&bad, &mut rng()), Err(Error::NotRealizable(_))));
        assert!(rectangle_scheme(0).is_err());
    }

    fn brute_force_min_box_error(s: &Sample) -> f64 {
        // every box worth considering has corners at sample coordinates, or is empty
        let xs: Vec<f64> = s.iter().map(|e| e.x[0]).collect();
        let ys: Vec<f64> = s.iter().map(|e| e.x[1]).collect();
        let mut best = empirical_error(&Hypothesis::Constant(0), s);
        for &x0 in &xs {
            for &x1 in &xs {
                for &y0 in &ys {
                    for &y1 in &ys {
                        let h = Hypothesis::Rectangle {
                            lo: smallvec::smallvec![x0, y0],
                            hi: smallvec::smallvec![x1, y1],
                        };
                        best = best.min(empirical_error(&h, s));
                    }
                }
            }
        }
        best
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn rectangle_is_erm_on_realizable_instances(
            pts in prop::collection::vec((0u8..8, 0u8..8), 1..9),
            bx in (0u8..8, 0u8..8, 0u8..8, 0u8..8),
        ) {
            let (lo0, hi0) = (bx.0.min(bx.1) as f64, bx.0.max(bx.1) as f64);
            let (lo1, hi1) = (bx.2.min(bx.3) as f64, bx.2.max(bx.3) as f64);
            let s = Sample::new(pts.iter().map(|&(a, b)| {
                let (a, b) = (a as f64, b as f64);
                let y = (lo0 <= a && a <= hi0 && lo1 <= b && b <= hi1) as u8;
                Example::new(vec![a, b], y)
            }).collect()).unwrap();
            let scheme = rectangle_scheme(2).unwrap();
            let (h, sel) = run_compression_learner(&scheme, &s, &mut rng()).unwrap();
            prop_assert_eq!(empirical_error(&h, &s), 0.0);
            prop_assert_eq!(brute_force_min_box_error(&s), 0.0);
            prop_assert!(sel.len() <= 4);
            for (i, e) in sel.indices.iter().zip(&sel.examples) {
                prop_assert_eq!(&s.entries()[*i], e);
            }
        }

        #[test]
        fn threshold_selection_is_contained_and_consistent(
            xs in prop::collection::vec(0u16..1000, 1..40),
            t in 0u16..1000,
        ) {
            let s = Sample::new(xs.iter().map(|&x| Example::labelled(x as f64, (x <= t) as u8)).collect()).unwrap();
            let (h, sel) = run_compression_learner(&threshold_scheme(), &s, &mut rng()).unwrap();
            prop_assert!(sel.len() <= 1);
            for (i, e) in sel.indices.iter().zip(&sel.examples) {
                prop_assert_eq!(&s.entries()[*i], e);
            }
            prop_assert_eq!(empirical_error(&h, &s), 0.0);
            prop_assert_eq!(empirical_error(&threshold_erm(&s).unwrap(), &s), 0.0);
        }

        #[test]
        fn threshold_erm_beats_every_candidate(
            pts in prop::collection::vec((0u8..20, 0u8..2), 1..30),
        ) {
            let s = Sample::new(pts.iter().map(|&(x, y)| Example::labelled(x as f64, y)).collect()).unwrap();
            let got = empirical_error(&threshold_erm(&s).unwrap(), &s);
            let mut best = empirical_error(&Hypothesis::Constant(0), &s);
            for t in 0..20 {
                best = best.min(empirical_error(&Hypothesis::Threshold(t as f64), &s));
            }
            prop_assert!((got - best).abs() < 1e-15);
        }
    }

    #[test]
    fn subsample_full_when_k_large() {
        let s = labelled(&[(1.0, 1), (2.0, 0), (3.0, 0)]);
        let scheme = subsample_scheme(Arc::new(threshold_erm), 10).unwrap();
        let (h, sel) = run_compression_learner(&scheme, &s, &mut rng()).unwrap();
        assert_eq!(sel.indices, vec![0, 1, 2]);
        assert_eq!(h, threshold_erm(&s).unwrap());
        assert!(scheme.is_approximate());
    }

    #[test]
    fn subsample_is_seeded() {
        let s = Sample::new((0..50).map(|i| Example::labelled(i as f64, (i < 20) as u8)).collect()).unwrap();
        let scheme = subsample_scheme(Arc::new(threshold_erm), 7).unwrap();
        let a = scheme.compress(&s, &mut RandomSeed(3).rng()).unwrap();
        let b = scheme.compress(&s, &mut RandomSeed(3).rng()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 7);
    }

    #[test]
    fn subsample_accuracy_with_hoeffding_sized_k() {
        // k = ln(2/γ)/(2α²) makes the subsample's error on S within α of the ERM's
        let (alpha, gamma) = (0.1f64, 0.05f64);
        let k = ((2.0 / gamma).ln() / (2.0 * alpha * alpha)).ceil() as usize;
        let grid: Vec<Example> = (0..1000).map(|i| Example::scalar(i as f64 / 1000.0)).collect();
        let d = PopulationDistribution::uniform(grid).unwrap();
        let scheme = subsample_scheme(Arc::new(threshold_erm), k).unwrap();
        let seed = RandomSeed(9);
        let trials = 1000;
        let good = (0..trials)
            .filter(|&i| {
                let mut r = seed.stream("subsample", i);
                let t: f64 = r.random();
                let s = d.draw_sample(1000, &mut r).unwrap();
                let s = Sample::new(s.iter().map(|e| Example::labelled(e.value(), (e.value() <= t) as u8)).collect())
                    .unwrap();
                let (h, _) = run_compression_learner(&scheme, &s, &mut r).unwrap();
                empirical_error(&h, &s) <= alpha
            })
            .count();
        assert!(good as f64 / trials as f64 >= 0.95, "{good}");
    }
}
