use rand::RngCore;

use super::{FixedSimulator, Mechanism, OutputRange, Simulator, StatKey};
use crate::error::{invalid, Result};
use crate::hypothesis::{empirical_error, true_error, HypothesisClass};
use crate::prob::{FinitePmf, Outcome, PopulationDistribution, Sample};

fn check_params(eps: f64, beta: f64) -> Result<()> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(invalid(format!("eps must be positive, got {eps}")));
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(invalid(format!("beta must lie in (0, 1), got {beta}")));
    }
    Ok(())
}

/// Normalized weights `∝ exp(−√n·ε·err / √(2 ln(2|H|/β)))` for the given errors.
pub fn exp_learner_weights(errors: &[f64], n: usize, eps: f64, beta: f64) -> Result<Vec<f64>> {
    check_params(eps, beta)?;
    if errors.is_empty() || n == 0 {
        return Err(invalid("need at least one hypothesis and n >= 1"));
    }
    let rate = (n as f64).sqrt() * eps / (2.0 * (2.0 * errors.len() as f64 / beta).ln()).sqrt();
    let lo = errors.iter().copied().fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = errors.iter().map(|e| (-(e - lo) * rate).exp()).collect();
    let total: f64 = w.iter().sum();
    Ok(w.into_iter().map(|x| x / total).collect())
}

fn class_outcomes(k: usize) -> Vec<Outcome> {
    (0..k as i64).map(Outcome::Int).collect()
}

/// Output law of the exponential-mechanism learner over class indices.
pub fn exp_learner_pmf(s: &Sample, class: &HypothesisClass, eps: f64, beta: f64) -> Result<FinitePmf> {
    let errors: Vec<f64> = class.hypotheses().iter().map(|h| empirical_error(h, s)).collect();
    let w = exp_learner_weights(&errors, s.n(), eps, beta)?;
    FinitePmf::new(class_outcomes(class.len()), w)
}

/// The same law with population errors in place of empirical ones.
pub fn exp_learner_simulator(
    d: &PopulationDistribution,
    class: &HypothesisClass,
    eps: f64,
    beta: f64,
    n: usize,
) -> Result<FixedSimulator> {
    Ok(FixedSimulator::new(ExpLearnerSimulator::new(class.clone(), eps, beta)?.exact_pmf(d, n)?))
}

#[derive(Clone, Debug)]
pub struct ExpLearner {
    pub class: HypothesisClass,
    pub eps: f64,
    pub beta: f64,
}

impl ExpLearner {
    pub fn new(class: HypothesisClass, eps: f64, beta: f64) -> Result<Self> {
        check_params(eps, beta)?;
        Ok(Self { class, eps, beta })
    }
}

impl Mechanism for ExpLearner {
    fn name(&self) -> String {
        format!("exp-learner(|H|={},eps={},beta={})", self.class.len(), self.eps, self.beta)
    }

    fn range(&self) -> OutputRange {
        OutputRange::Finite(class_outcomes(self.class.len()))
    }

    fn sample_output(&self, s: &Sample, rng: &mut dyn RngCore) -> Result<Outcome> {
        Ok(self.exact_pmf(s)?.sample(rng))
    }

    fn has_exact_pmf(&self) -> bool {
        true
    }

    fn exact_pmf(&self, s: &Sample) -> Result<FinitePmf> {
        exp_learner_pmf(s, &self.class, self.eps, self.beta)
    }

    fn sufficient_stat(&self, s: &Sample) -> Option<StatKey> {
        Some(StatKey::multiset(s))
    }
}

/// Simulator for [`ExpLearner`]: scores hypotheses by their exact population error.
#[derive(Clone, Debug)]
pub struct ExpLearnerSimulator {
    pub class: HypothesisClass,
    pub eps: f64,
    pub beta: f64,
}

impl ExpLearnerSimulator {
    pub fn new(class: HypothesisClass, eps: f64, beta: f64) -> Result<Self> {
        check_params(eps, beta)?;
        Ok(Self { class, eps, beta })
    }
}

impl Simulator for ExpLearnerSimulator {
    fn name(&self) -> String {
        "exp-learner-sim".into()
    }

    fn exact_pmf(&self, d: &PopulationDistribution, n: usize) -> Result<FinitePmf> {
        let errors: Vec<f64> = self.class.hypotheses().iter().map(|h| true_error(h, d)).collect();
        FinitePmf::new(class_outcomes(self.class.len()), exp_learner_weights(&errors, n, self.eps, self.beta)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypothesis::Hypothesis;
    use crate::mechanisms::test_support::assert_sampler_matches_pmf;
    use crate::prob::{delta_at_eps, Example};

    fn two_constants() -> HypothesisClass {
        HypothesisClass::constants()
    }

    #[test]
    fn singleton_class_is_point_mass() {
        let class = HypothesisClass::new(vec![Hypothesis::Threshold(0.5)], None).unwrap();
        let s = Sample::new(vec![Example::labelled(0.0, 1), Example::labelled(1.0, 0)]).unwrap();
        assert_eq!(exp_learner_pmf(&s, &class, 1.0, 0.1).unwrap(), FinitePmf::point(Outcome::Int(0)));
    }

    #[test]
    fn equal_errors_are_uniform() {
        let s = Sample::new(vec![Example::labelled(0.0, 1), Example::labelled(1.0, 0)]).unwrap();
        let p = exp_learner_pmf(&s, &two_constants(), 1.0, 0.1).unwrap();
        assert!((p.probs()[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn odds_ratio_of_quarter_gap() {
        // n = 4, errors 1/4 and 1/2
        let s = Sample::new(vec![
            Example::labelled(0.0, 0),
            Example::labelled(1.0, 0),
            Example::labelled(2.0, 0),
            Example::labelled(3.0, 1),
        ])
        .unwrap();
        let class = HypothesisClass::new(vec![Hypothesis::Constant(0), Hypothesis::Threshold(1.0)], None).unwrap();
        assert_eq!(empirical_error(&class.hypotheses()[0], &s), 0.25);
        assert_eq!(empirical_error(&class.hypotheses()[1], &s), 0.75);
        let w = exp_learner_weights(&[0.25, 0.5], 4, 1.0, 0.5).unwrap();
        let ratio = w[1] / w[0];
        let expected = (-2.0 * 0.25 / (2.0 * 8f64.ln()).sqrt()).exp();
        assert!((ratio - expected).abs() < 1e-14);
        assert!((ratio - 0.78257).abs() < 1e-5);
        assert!((w[0] - 0.5610).abs() < 1e-4 && (w[1] - 0.4390).abs() < 1e-4);
    }

    #[test]
    fn shift_invariance() {
        let a = exp_learner_weights(&[0.1, 0.4, 0.25], 50, 0.8, 0.2).unwrap();
        let b = exp_learner_weights(&[0.35, 0.65, 0.5], 50, 0.8, 0.2).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn simulator_uses_population_error() {
        let d = PopulationDistribution::new(
            vec![Example::labelled(0.0, 0), Example::labelled(1.0, 1)],
            vec![0.7, 0.3],
        )
        .unwrap();
        let sim = ExpLearnerSimulator::new(two_constants(), 1.0, 0.1).unwrap();
        let p = sim.exact_pmf(&d, 9).unwrap();
        let w = exp_learner_weights(&[0.3, 0.7], 9, 1.0, 0.1).unwrap();
        assert_eq!(p.probs(), &w[..]);
        let uniform = PopulationDistribution::new(
            vec![Example::labelled(0.0, 0), Example::labelled(1.0, 1)],
            vec![0.5, 0.5],
        )
        .unwrap();
        assert!((sim.exact_pmf(&uniform, 9).unwrap().probs()[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn per_sample_closeness_when_errors_concentrate() {
        // |err_S - err_D| <= r for every hypothesis implies eps-closeness
        let (n, eps, beta) = (40usize, 1.0, 0.1);
        let r = ((2.0f64 * 2.0 / beta).ln() / (2.0 * n as f64)).sqrt();
        let truth = [0.3, 0.55];
        let sim = FinitePmf::new(class_outcomes(2), exp_learner_weights(&truth, n, eps, beta).unwrap()).unwrap();
        for (d0, d1) in [(r, -r), (-r, r), (r, r), (0.0, -r)] {
            let emp = [truth[0] + d0, truth[1] + d1];
            let p = FinitePmf::new(class_outcomes(2), exp_learner_weights(&emp, n, eps, beta).unwrap()).unwrap();
            assert!(delta_at_eps(&p, &sim, eps).unwrap() <= 1e-12);
        }
    }

    #[test]
    fn sampler_matches_exact() {
        let s = Sample::new(vec![Example::labelled(0.0, 1), Example::labelled(1.0, 1), Example::labelled(2.0, 0)])
            .unwrap();
        let m = ExpLearner::new(two_constants(), 2.0, 0.1).unwrap();
        assert_sampler_matches_pmf(&m, &s, 100_000);
    }
}
