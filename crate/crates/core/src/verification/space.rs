use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::enumerate::{composition_count, compositions, multinomial_prob, tuple_count, tuples};
use crate::error::{invalid, Error, Result};
use crate::mechanisms::Mechanism;
use crate::prob::{Example, FinitePmf, PopulationDistribution, Sample};

/// Default bound on exact PMF (pair) evaluations.
pub const DEFAULT_CAP: u64 = 10_000_000;

/// Enumeration settings shared by the exact verifiers.
#[derive(Clone, Copy, Debug)]
pub struct EnumOptions {
    pub cap: u64,
    /// Enumerate multisets when the mechanism declares a sufficient statistic.
    pub grouping: bool,
}

impl Default for EnumOptions {
    fn default() -> Self {
        Self {
            cap: DEFAULT_CAP,
            grouping: true,
        }
    }
}

impl EnumOptions {
    pub fn with_cap(cap: u64) -> Self {
        Self { cap, ..Self::default() }
    }

    pub fn ungrouped(self) -> Self {
        Self { grouping: false, ..self }
    }
}

pub(crate) fn check_cap(required: u128, cap: u64) -> Result<()> {
    if required > cap as u128 {
        Err(Error::CapExceeded {
            required: required as f64,
            cap,
        })
    } else {
        Ok(())
    }
}

/// Distinct values in descending order.
pub(crate) fn descending(values: &[Example]) -> Vec<Example> {
    let mut v = values.to_vec();
    v.sort_by(|a, b| b.cmp(a));
    v.dedup();
    v
}

/// Representative sample of a composition: each value repeated, values in the given order.
pub(crate) fn representative(values: &[Example], comp: &[usize]) -> Result<Sample> {
    Sample::new(
        comp.iter()
            .zip(values)
            .flat_map(|(&c, v)| std::iter::repeat_n(v.clone(), c))
            .collect(),
    )
}

pub(crate) fn from_tuple(values: &[Example], idx: &[usize]) -> Result<Sample> {
    Sample::new(idx.iter().map(|&i| values[i].clone()).collect())
}

/// Whether `m` is treated as exchangeable on samples over `values`.
pub(crate) fn use_grouping(m: &dyn Mechanism, values: &[Example], n: usize, opts: EnumOptions) -> Result<bool> {
    if !opts.grouping {
        return Ok(false);
    }
    let probe = Sample::new(vec![values[0].clone(); n])?;
    Ok(m.sufficient_stat(&probe).is_some())
}

/// One class of samples with a common output distribution.
#[derive(Clone, Debug)]
pub struct ProfileGroup {
    pub mass: f64,
    pub sample: Sample,
    pub pmf: FinitePmf,
}

/// The sample space of `d^n`, partitioned by the mechanism's output law.
#[derive(Clone, Debug)]
pub struct SampleProfile {
    pub groups: Vec<ProfileGroup>,
    pub grouped: bool,
}

impl SampleProfile {
    pub fn build(m: &dyn Mechanism, d: &PopulationDistribution, n: usize, opts: EnumOptions) -> Result<Self> {
        if n == 0 {
            return Err(invalid("sample size must be at least 1"));
        }
        if !m.has_exact_pmf() {
            return Err(Error::NoExactPmf(m.name()));
        }
        let mut pairs: Vec<(Example, f64)> = d.support().iter().cloned().zip(d.weights().iter().copied()).collect();
        pairs.sort_by(|a, b| b.0.cmp(&a.0));
        let (values, weights): (Vec<Example>, Vec<f64>) = pairs.into_iter().unzip();
        let k = values.len();
        let grouped = use_grouping(m, &values, n, opts)?;
        let groups: Vec<ProfileGroup> = if grouped {
            check_cap(composition_count(n, k), opts.cap)?;
            let comps: Vec<Vec<usize>> = compositions(n, k).collect();
            comps
                .par_iter()
                .map(|c| {
                    let sample = representative(&values, c)?;
                    Ok(ProfileGroup {
                        mass: multinomial_prob(c, &weights),
                        pmf: m.exact_pmf(&sample)?,
                        sample,
                    })
                })
                .collect::<Result<_>>()?
        } else {
            check_cap(tuple_count(n, k), opts.cap)?;
            let all: Vec<Vec<usize>> = tuples(n, k).collect();
            all.par_iter()
                .map(|idx| {
                    let sample = from_tuple(&values, idx)?;
                    Ok(ProfileGroup {
                        mass: idx.iter().map(|&i| weights[i]).product(),
                        pmf: m.exact_pmf(&sample)?,
                        sample,
                    })
                })
                .collect::<Result<_>>()?
        };
        Ok(Self { groups, grouped })
    }

    /// Merges groups with bitwise-equal output laws; keeps the first sample of each.
    pub fn collapsed(&self) -> Vec<ProfileGroup> {
        let mut seen: BTreeMap<Vec<(crate::prob::Outcome, u64)>, usize> = BTreeMap::new();
        let mut out: Vec<ProfileGroup> = Vec::new();
        for g in &self.groups {
            let key: Vec<_> = g.pmf.iter().map(|(o, p)| (o.clone(), p.to_bits())).collect();
            match seen.get(&key) {
                Some(&i) => out[i].mass += g.mass,
                None => {
                    seen.insert(key, out.len());
                    out.push(g.clone());
                }
            }
        }
        out
    }

    pub fn total_mass(&self) -> f64 {
        self.groups.iter().map(|g| g.mass).sum()
    }
}
