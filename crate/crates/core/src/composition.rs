//! Non-adaptive composition of perfectly generalizing mechanisms.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::mechanisms::{Mechanism, MechanismRef, OutputRange, Simulator, SimulatorRef, StatKey};
use crate::prob::{product_many, FinitePmf, Outcome, PopulationDistribution, Sample};

/// Parameters of a composed guarantee. `beta` is `None` when the calculator
/// leaves the failure probability to the caller.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComposedPgParams {
    pub beta: Option<f64>,
    pub eps: f64,
    pub delta: f64,
    pub k: usize,
}

/// Runs every inner mechanism on the same sample with independent randomness.
///
/// Outputs are tuples in mechanism order; a single mechanism keeps its own outputs.
pub struct ComposedMechanism {
    parts: Vec<MechanismRef>,
}

impl ComposedMechanism {
    pub fn new(parts: Vec<MechanismRef>) -> Result<Self> {
        if parts.is_empty() {
            return Err(invalid("nothing to compose"));
        }
        Ok(Self { parts })
    }

    pub fn parts(&self) -> &[MechanismRef] {
        &self.parts
    }
}

fn join(mut outs: Vec<Outcome>) -> Outcome {
    if outs.len() == 1 {
        outs.pop().expect("one element")
    } else {
        Outcome::Tuple(outs)
    }
}

fn product_law(mut parts: Vec<FinitePmf>) -> FinitePmf {
    if parts.len() == 1 {
        parts.pop().expect("one element")
    } else {
        product_many(&parts)
    }
}

fn product_range(ranges: Vec<OutputRange>) -> OutputRange {
    let mut lists = Vec::with_capacity(ranges.len());
    for r in ranges {
        match r {
            OutputRange::Finite(v) => lists.push(v),
            _ => return OutputRange::Unbounded,
        }
    }
    if lists.len() == 1 {
        return OutputRange::Finite(lists.pop().expect("one element"));
    }
    let mut acc: Vec<Vec<Outcome>> = vec![vec![]];
    for list in &lists {
        acc = acc
            .iter()
            .flat_map(|prefix| {
                list.iter().map(move |o| {
                    let mut t = prefix.clone();
                    t.push(o.clone());
                    t
                })
            })
            .collect();
    }
    OutputRange::Finite(acc.into_iter().map(Outcome::Tuple).collect())
}

impl Mechanism for ComposedMechanism {
    fn name(&self) -> String {
        let names: Vec<String> = self.parts.iter().map(|m| m.name()).collect();
        format!("compose({})", names.join(", "))
    }

    fn range(&self) -> OutputRange {
        product_range(self.parts.iter().map(|m| m.range()).collect())
    }

    fn sample_output(&self, s: &Sample, rng: &mut dyn RngCore) -> Result<Outcome> {
        let outs = self.parts.iter().map(|m| m.sample_output(s, rng)).collect::<Result<Vec<_>>>()?;
        Ok(join(outs))
    }

    fn has_exact_pmf(&self) -> bool {
        self.parts.iter().all(|m| m.has_exact_pmf())
    }

    fn exact_pmf(&self, s: &Sample) -> Result<FinitePmf> {
        Ok(product_law(self.parts.iter().map(|m| m.exact_pmf(s)).collect::<Result<_>>()?))
    }

    fn sufficient_stat(&self, s: &Sample) -> Option<StatKey> {
        let mut key = Vec::new();
        for m in &self.parts {
            let k = m.sufficient_stat(s)?;
            key.push(k.0.len() as u64);
            key.extend(k.0);
        }
        Some(StatKey(key))
    }
}

/// Independent product of simulators, matching [`ComposedMechanism`].
pub struct ProductSimulator {
    parts: Vec<SimulatorRef>,
}

impl ProductSimulator {
    pub fn new(parts: Vec<SimulatorRef>) -> Result<Self> {
        if parts.is_empty() {
            return Err(invalid("nothing to compose"));
        }
        Ok(Self { parts })
    }
}

impl Simulator for ProductSimulator {
    fn name(&self) -> String {
        let names: Vec<String> = self.parts.iter().map(|m| m.name()).collect();
        format!("product({})", names.join(", "))
    }

    fn exact_pmf(&self, d: &PopulationDistribution, n: usize) -> Result<FinitePmf> {
        Ok(product_law(self.parts.iter().map(|s| s.exact_pmf(d, n)).collect::<Result<_>>()?))
    }

    fn sample(&self, d: &PopulationDistribution, n: usize, rng: &mut dyn RngCore) -> Result<Outcome> {
        Ok(join(self.parts.iter().map(|s| s.sample(d, n, rng)).collect::<Result<_>>()?))
    }
}

fn check_pair(beta: f64, eps: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&beta) || !(eps >= 0.0) {
        return Err(invalid(format!("need beta in [0,1] and eps >= 0; got ({beta}, {eps})")));
    }
    Ok(())
}

/// Parameters of basic composition: `(Σβᵢ, Σεᵢ, 0)`.
pub fn basic_params(params: &[(f64, f64)]) -> Result<ComposedPgParams> {
    for &(b, e) in params {
        check_pair(b, e)?;
    }
    Ok(ComposedPgParams {
        beta: Some(params.iter().map(|p| p.0).sum()),
        eps: params.iter().map(|p| p.1).sum(),
        delta: 0.0,
        k: params.len(),
    })
}

/// Basic composition of `(βᵢ, εᵢ, 0)`-perfectly generalizing mechanisms.
pub fn compose_basic(
    mechs: Vec<MechanismRef>,
    sims: Vec<SimulatorRef>,
    params: &[(f64, f64)],
) -> Result<(ComposedMechanism, ProductSimulator, ComposedPgParams)> {
    if mechs.len() != sims.len() || mechs.len() != params.len() {
        return Err(Error::LengthMismatch(format!(
            "{} mechanisms, {} simulators, {} parameter pairs",
            mechs.len(),
            sims.len(),
            params.len()
        )));
    }
    let p = basic_params(params)?;
    Ok((ComposedMechanism::new(mechs)?, ProductSimulator::new(sims)?, p))
}

/// `ε′ = sqrt(2k ln(1/δ′))·ε + kε(e^ε − 1)` and `δ_total = kδ + δ′`.
///
/// The failure probability `kβ` is left to the caller.
pub fn advanced_bound(k: usize, eps: f64, delta: f64, delta_prime: f64) -> Result<ComposedPgParams> {
    if k == 0 || !(eps > 0.0) || !(delta >= 0.0) || !(delta_prime > 0.0 && delta_prime < 1.0) {
        return Err(invalid(format!(
            "need k >= 1, eps > 0, delta >= 0, delta' in (0,1); got {k}, {eps}, {delta}, {delta_prime}"
        )));
    }
    let kf = k as f64;
    Ok(ComposedPgParams {
        beta: None,
        eps: (2.0 * kf * (1.0 / delta_prime).ln()).sqrt() * eps + kf * eps * eps.exp_m1(),
        delta: kf * delta + delta_prime,
        k,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use proptest::prelude::*;

    use super::*;
    use crate::hypothesis::{Hypothesis, HypothesisClass};
    use crate::mechanisms::{ConstantMechanism, ExpLearner, ExpLearnerSimulator, FixedSimulator, NoisyMajority};
    use crate::prob::Example;
    use crate::verification::{verify_pg_exact, EnumOptions};

    fn tiny() -> (HypothesisClass, PopulationDistribution) {
        let class = HypothesisClass::new(vec![Hypothesis::Threshold(0.0), Hypothesis::Threshold(1.0)], None).unwrap();
        let d = PopulationDistribution::new(vec![Example::labelled(0.0, 1), Example::labelled(1.0, 0)], vec![0.6, 0.4])
            .unwrap();
        (class, d)
    }

    #[test]
    fn advanced_values() {
        let p = advanced_bound(1, 0.1, 0.0, 0.05).unwrap();
        let oracle = (2.0 * 20f64.ln()).sqrt() * 0.1 + 0.1 * (0.1f64.exp() - 1.0);
        assert!((p.eps - oracle).abs() < 1e-15);
        assert!((p.eps - 0.25529).abs() < 1e-5);
        assert_eq!(p.delta, 0.05);
        assert_eq!(p.beta, None);
        assert!(advanced_bound(1, 1e-9, 0.0, 0.05).unwrap().eps < 1e-8);
        let r = advanced_bound(400, 1e-4, 0.0, 0.05).unwrap().eps / advanced_bound(100, 1e-4, 0.0, 0.05).unwrap().eps;
        assert!((r - 2.0).abs() < 1e-3);
    }

    proptest! {
        #[test]
        fn advanced_dominates_trivial(eps in 1e-6f64..5.0, dp in 1e-9f64..0.6065) {
            prop_assert!(advanced_bound(1, eps, 0.0, dp).unwrap().eps >= eps);
        }

        #[test]
        fn basic_sums(pairs in proptest::collection::vec((0.0f64..0.2, 0.0f64..2.0), 1..6)) {
            let p = basic_params(&pairs).unwrap();
            let b: f64 = pairs.iter().map(|x| x.0).sum();
            let e: f64 = pairs.iter().map(|x| x.1).sum();
            prop_assert_eq!(p.beta, Some(b));
            prop_assert_eq!(p.eps, e);
            prop_assert_eq!(p.delta, 0.0);
            prop_assert_eq!(p.k, pairs.len());
        }
    }

    #[test]
    fn single_mechanism_is_itself() {
        let m: MechanismRef = Arc::new(NoisyMajority::new(0.5).unwrap());
        let sim: SimulatorRef = Arc::new(FixedSimulator::constant(Outcome::Int(0)));
        let (c, _, p) = compose_basic(vec![m.clone()], vec![sim], &[(0.1, 0.5)]).unwrap();
        assert_eq!(p, ComposedPgParams { beta: Some(0.1), eps: 0.5, delta: 0.0, k: 1 });
        let s = Sample::bits(&[1, 0, 1]).unwrap();
        assert_eq!(c.exact_pmf(&s).unwrap(), m.exact_pmf(&s).unwrap());
        assert_eq!(c.range(), m.range());
    }

    #[test]
    fn constant_part_adds_nothing() {
        let m: MechanismRef = Arc::new(NoisyMajority::new(0.5).unwrap());
        let k: MechanismRef = Arc::new(ConstantMechanism::new(Outcome::Int(7)));
        let s1: SimulatorRef = Arc::new(FixedSimulator::constant(Outcome::Int(0)));
        let s2: SimulatorRef = Arc::new(FixedSimulator::constant(Outcome::Int(7)));
        let (c, _, p) = compose_basic(vec![m.clone(), k], vec![s1, s2], &[(0.1, 0.5), (0.0, 0.0)]).unwrap();
        assert_eq!(p.beta, Some(0.1));
        assert_eq!(p.eps, 0.5);
        let s = Sample::bits(&[1, 1, 0, 1]).unwrap();
        let pm = m.exact_pmf(&s).unwrap();
        let pc = c.exact_pmf(&s).unwrap();
        for (o, pr) in pm.iter() {
            assert_eq!(pc.prob(&Outcome::Tuple(vec![o.clone(), Outcome::Int(7)])), pr);
        }
        assert!(c.sufficient_stat(&s).is_some());
    }

    #[test]
    fn length_mismatch() {
        let m: MechanismRef = Arc::new(ConstantMechanism::new(Outcome::Int(7)));
        assert!(matches!(compose_basic(vec![m], vec![], &[(0.0, 0.0)]), Err(Error::LengthMismatch(_))));
    }

    #[test]
    fn product_of_two_learners_is_certified() {
        let (class, d) = tiny();
        let (beta, eps) = (0.1, 1.0);
        let m: MechanismRef = Arc::new(ExpLearner::new(class.clone(), eps, beta).unwrap());
        let sim: SimulatorRef = Arc::new(ExpLearnerSimulator::new(class, eps, beta).unwrap());
        let (c, ps, p) =
            compose_basic(vec![m.clone(), m], vec![sim.clone(), sim], &[(beta, eps), (beta, eps)]).unwrap();
        let v = verify_pg_exact(&c, &ps, &d, 6, p.eps, p.delta, EnumOptions::default()).unwrap();
        assert!(v.certifies(p.beta.unwrap()), "{}", v.beta_hat);
        let u = verify_pg_exact(&c, &ps, &d, 6, p.eps, p.delta, EnumOptions::default().ungrouped()).unwrap();
        assert!((u.beta_hat - v.beta_hat).abs() < 1e-12);
        assert_eq!(c.range().finite_len(), Some(4));
    }
}
