//! Named mechanisms, simulators, distributions and adversaries for the command line.
//!
//! Mechanism specs read `name[:key=value,...][/wrapper...]`, where a wrapper
//! is `resample=N` or `post=MAP`. For example `strange-normal/resample=6` or
//! `noisy-majority:eps=0.5/post=coarsen`.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::hypothesis::{Hypothesis, HypothesisClass};
use crate::mechanisms::{
    decode_sample, postprocess, resample_compile, strange_normal_simulator, ConstantMechanism, ExpLearner,
    ExpLearnerSimulator, FixedSimulator, LaplaceMechanism, LeakyMechanism, Majority, MechanismRef, NoisyMajority,
    NoisyMax, NoisyMaxSimulator, OutcomeMap, PostprocessedSimulator, Query, SimulatorRef, StrangeNormal,
};
use crate::prob::{Example, Outcome, PopulationDistribution};
use crate::verification::{dp_to_pg_simulator, Adversary, EnumOptions};

pub const MECHANISMS: &[&str] =
    &["majority", "strange-normal", "noisy-majority", "exp-learner", "noisy-max", "laplace", "constant", "leaky"];
pub const SIMULATORS: &[&str] = &["constant", "strange-normal", "exp-learner", "noisy-max", "dp-to-pg"];
pub const DISTRIBUTIONS: &[&str] = &["uniform-bits", "bernoulli", "tiny", "uniform", "noise-labels", "threshold-grid"];
pub const ADVERSARIES: &[&str] = &["identity", "constant", "memorize", "member-loss"];
pub const MAPS: &[&str] = &["identity", "coarsen", "constant"];

struct Spec<'a> {
    name: &'a str,
    params: BTreeMap<&'a str, &'a str>,
    read: RefCell<BTreeSet<&'a str>>,
}

impl<'a> Spec<'a> {
    fn parse(text: &'a str) -> Result<Self> {
        let (name, rest) = text.split_once(':').unwrap_or((text, ""));
        let mut params = BTreeMap::new();
        for kv in rest.split(',').filter(|p| !p.is_empty()) {
            let (k, v) = kv.split_once('=').ok_or_else(|| invalid(format!("expected key=value, got `{kv}`")))?;
            params.insert(k.trim(), v.trim());
        }
        Ok(Self {
            name: name.trim(),
            params,
            read: RefCell::default(),
        })
    }

    fn get(&self, key: &str) -> Option<&'a str> {
        let (k, v) = self.params.get_key_value(key)?;
        self.read.borrow_mut().insert(k);
        Some(v)
    }

    /// Rejects keys that no parameter lookup asked for, so typos do not fall back to defaults.
    fn finish<T>(&self, value: T) -> Result<T> {
        let read = self.read.borrow();
        match self.params.keys().find(|k| !read.contains(*k)) {
            Some(k) => Err(invalid(format!("`{}` takes no parameter `{k}`", self.name))),
            None => Ok(value),
        }
    }

    fn f64(&self, key: &str, default: f64) -> Result<f64> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| invalid(format!("`{key}` must be a number, got `{v}`"))),
        }
    }

    fn usize(&self, key: &str, default: usize) -> Result<usize> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| invalid(format!("`{key}` must be a nonnegative integer, got `{v}`"))),
        }
    }

    fn outcome(&self, key: &str, default: Outcome) -> Outcome {
        self.get(key).map(Outcome::parse).unwrap_or(default)
    }
}

fn unknown(kind: &'static str, name: &str) -> Error {
    Error::Unknown {
        kind,
        name: name.to_string(),
    }
}

/// The two thresholds of the small learning instance.
pub fn tiny_class() -> HypothesisClass {
    HypothesisClass::new(vec![Hypothesis::Threshold(0.0), Hypothesis::Threshold(1.0)], None).expect("two hypotheses")
}

/// `(0, 1)` with mass 0.6 and `(1, 0)` with mass 0.4.
pub fn tiny_distribution() -> PopulationDistribution {
    PopulationDistribution::new(vec![Example::labelled(0.0, 1), Example::labelled(1.0, 0)], vec![0.6, 0.4])
        .expect("valid weights")
}

fn bit_queries() -> Vec<Query> {
    vec![Query::indicator(0.0), Query::indicator(1.0)]
}

pub fn parse_map(text: &str) -> Result<OutcomeMap> {
    let spec = Spec::parse(text)?;
    let map = match spec.name {
        "identity" => OutcomeMap::identity(),
        "coarsen" => OutcomeMap::coarsen(),
        "constant" => OutcomeMap::constant(spec.outcome("value", Outcome::Int(0))),
        other => return Err(unknown("map", other)),
    };
    spec.finish(map)
}

fn base_mechanism(spec: &Spec) -> Result<MechanismRef> {
    let m: MechanismRef = match spec.name {
        "majority" => Arc::new(Majority),
        "strange-normal" => Arc::new(StrangeNormal),
        "noisy-majority" => Arc::new(NoisyMajority::new(spec.f64("eps", 1.0)?)?),
        "exp-learner" => Arc::new(ExpLearner::new(tiny_class(), spec.f64("eps", 1.0)?, spec.f64("beta", 0.1)?)?),
        "noisy-max" => Arc::new(NoisyMax::new(bit_queries(), spec.f64("b", 0.5)?)?),
        "laplace" => Arc::new(LaplaceMechanism::new(Query::new("mean", |e: &Example| e.value()), spec.f64("b", 0.5)?)?),
        "constant" => Arc::new(ConstantMechanism::new(spec.outcome("value", Outcome::Int(0)))),
        "leaky" => Arc::new(LeakyMechanism),
        other => return Err(unknown("mechanism", other)),
    };
    spec.finish(m)
}

pub fn parse_mechanism(text: &str) -> Result<MechanismRef> {
    let mut parts = text.split('/');
    let mut m = base_mechanism(&Spec::parse(parts.next().unwrap_or(""))?)?;
    for w in parts {
        let (k, v) = w.split_once('=').ok_or_else(|| invalid(format!("expected wrapper=value, got `{w}`")))?;
        m = match k {
            "resample" => {
                let n = v.parse().map_err(|_| invalid(format!("resample size must be an integer, got `{v}`")))?;
                Arc::new(resample_compile(m, n))
            }
            "post" => Arc::new(postprocess(m, parse_map(v)?)),
            other => return Err(unknown("wrapper", other)),
        };
    }
    Ok(m)
}

/// Builds a simulator; `dp-to-pg` is derived from `mech` on `d^n`.
pub fn parse_simulator(
    text: &str,
    mech: &MechanismRef,
    d: &PopulationDistribution,
    n: usize,
    opts: EnumOptions,
) -> Result<SimulatorRef> {
    let mut parts = text.split('/');
    let spec = Spec::parse(parts.next().unwrap_or(""))?;
    let sim: SimulatorRef = match spec.name {
        "constant" => Arc::new(FixedSimulator::constant(spec.outcome("value", Outcome::Int(0)))),
        "strange-normal" => Arc::new(strange_normal_simulator()),
        "exp-learner" => {
            Arc::new(ExpLearnerSimulator::new(tiny_class(), spec.f64("eps", 1.0)?, spec.f64("beta", 0.1)?)?)
        }
        "noisy-max" => Arc::new(NoisyMaxSimulator {
            queries: bit_queries(),
            b: spec.f64("b", 0.5)?,
        }),
        "dp-to-pg" => Arc::new(dp_to_pg_simulator(mech.as_ref(), d, n, opts)?),
        other => return Err(unknown("simulator", other)),
    };
    let mut sim = spec.finish(sim)?;
    for w in parts {
        let (k, v) = w.split_once('=').ok_or_else(|| invalid(format!("expected wrapper=value, got `{w}`")))?;
        if k != "post" {
            return Err(unknown("simulator wrapper", k));
        }
        sim = Arc::new(PostprocessedSimulator {
            inner: sim,
            map: parse_map(v)?,
        });
    }
    Ok(sim)
}

pub fn parse_distribution(text: &str) -> Result<PopulationDistribution> {
    let spec = Spec::parse(text)?;
    let d = match spec.name {
        "uniform-bits" => Ok(PopulationDistribution::uniform_bits()),
        "bernoulli" => PopulationDistribution::bernoulli(spec.f64("p", 0.5)?),
        "tiny" => Ok(tiny_distribution()),
        "uniform" => {
            let values = spec.get("values").unwrap_or("0|1");
            PopulationDistribution::uniform(parse_examples(values, '|')?)
        }
        "noise-labels" => Ok(super::experiments::noise_labels(spec.usize("size", 100)?.max(1))),
        "threshold-grid" => {
            let target = spec.f64("target", 0.5)?;
            let g = super::experiments::THRESHOLD_GRID;
            PopulationDistribution::uniform(
                (0..g)
                    .map(|i| {
                        let x = i as f64 / g as f64;
                        Example::labelled(x, (x <= target) as u8)
                    })
                    .collect(),
            )
        }
        other => Err(unknown("distribution", other)),
    }?;
    spec.finish(d)
}

/// Entries are `x` or `x:y`.
pub fn parse_examples(text: &str, sep: char) -> Result<Vec<Example>> {
    text.split(sep)
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            let (x, y) = p.split_once(':').unwrap_or((p, "0"));
            let x: f64 = x.trim().parse().map_err(|_| invalid(format!("bad value `{x}`")))?;
            let y: u8 = match y.trim() {
                "0" => 0,
                "1" => 1,
                other => return Err(invalid(format!("labels are 0 or 1, got `{other}`"))),
            };
            Ok(Example::labelled(x, y))
        })
        .collect()
}

pub fn parse_adversary(text: &str) -> Result<Adversary> {
    let spec = Spec::parse(text)?;
    let a: Adversary = match spec.name {
        "identity" => Arc::new(|o: &Outcome| match o {
            Outcome::Int(v) => Ok(Hypothesis::point_indicator(*v as f64)),
            Outcome::Real(v) => Ok(Hypothesis::point_indicator(v.0)),
            other => Err(invalid(format!("identity adversary needs a numeric output, got {other}"))),
        }),
        "constant" => {
            let b = spec.usize("value", 1)?.min(1) as u8;
            Arc::new(move |_: &Outcome| Ok(Hypothesis::Constant(b)))
        }
        "memorize" => Arc::new(|o: &Outcome| Ok(Hypothesis::memorize(&decode_sample(o)?).loss())),
        "member-loss" => {
            let class = tiny_class();
            Arc::new(move |o: &Outcome| {
                let i = o.as_int().ok_or_else(|| invalid(format!("expected a hypothesis index, got {o}")))?;
                class
                    .member(i as usize)
                    .map(|h| h.loss())
                    .ok_or_else(|| invalid(format!("index {i} is outside the class")))
            })
        }
        other => return Err(unknown("adversary", other)),
    };
    spec.finish(a)
}

/// A mechanism with an exact law, together with a simulator and a small setting to check it on.
pub struct RegistryInstance {
    pub name: String,
    pub mech: MechanismRef,
    pub sim: SimulatorRef,
    pub dist: PopulationDistribution,
    pub domain: Vec<Example>,
    pub n: usize,
}

/// Every registered mechanism that exposes an exact law, at desk scale.
pub fn exact_instances() -> Result<Vec<RegistryInstance>> {
    let bits = PopulationDistribution::uniform_bits();
    let mk = |name: &str, sim: SimulatorRef, dist: &PopulationDistribution, n: usize| -> Result<RegistryInstance> {
        Ok(RegistryInstance {
            name: name.to_string(),
            mech: parse_mechanism(name)?,
            sim,
            dist: dist.clone(),
            domain: dist.support().to_vec(),
            n,
        })
    };
    let noisy = parse_mechanism("noisy-majority")?;
    Ok(vec![
        mk("majority", Arc::new(FixedSimulator::constant(Outcome::Int(1))), &bits, 5)?,
        mk("strange-normal", Arc::new(strange_normal_simulator()), &bits, 6)?,
        mk("noisy-majority", Arc::new(dp_to_pg_simulator(noisy.as_ref(), &bits, 6, EnumOptions::default())?), &bits, 6)?,
        mk("exp-learner", Arc::new(ExpLearnerSimulator::new(tiny_class(), 1.0, 0.1)?), &tiny_distribution(), 6)?,
        mk("noisy-max", Arc::new(NoisyMaxSimulator { queries: bit_queries(), b: 0.5 }), &bits, 6)?,
        mk("constant", Arc::new(FixedSimulator::constant(Outcome::Int(0))), &bits, 4)?,
        mk("leaky", Arc::new(FixedSimulator::constant(Outcome::Tuple(vec![]))), &bits, 3)?,
        mk("strange-normal/resample=4", Arc::new(strange_normal_simulator()), &bits, 4)?,
    ])
}
