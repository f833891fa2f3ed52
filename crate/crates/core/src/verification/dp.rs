use std::cmp::Ordering;
use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use super::space::{check_cap, descending, from_tuple, representative, use_grouping, EnumOptions};
use crate::enumerate::{composition_count, compositions, tuple_count};
use crate::error::{invalid, Error, Result};
use crate::mechanisms::Mechanism;
use crate::prob::{delta_at_eps, Example, FinitePmf, Sample};

/// Exact differential-privacy certificate at a fixed `eps`.
#[derive(Clone, Debug, Serialize)]
pub struct DpVerdict {
    pub eps: f64,
    /// Worst hockey-stick divergence over all neighbouring pairs.
    pub delta_hat: f64,
    /// A maximizing pair `(S, S')` differing in one entry.
    #[serde(serialize_with = "serialize_witness")]
    pub witness: Option<(Sample, Sample)>,
    pub pairs_evaluated: u64,
    pub grouped: bool,
}

fn serialize_witness<S: serde::Serializer>(w: &Option<(Sample, Sample)>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match w {
        None => s.serialize_none(),
        Some((a, b)) => serde_json::json!([a.to_value_json(), b.to_value_json()]).serialize(s),
    }
}

impl DpVerdict {
    /// Whether the mechanism is (eps, delta)-DP on the enumerated domain.
    pub fn certifies(&self, delta: f64) -> bool {
        self.delta_hat <= delta + crate::prob::COMPARISON_TOL
    }
}

#[derive(Clone)]
struct Candidate {
    delta: f64,
    pair: (Vec<Example>, Vec<Example>),
}

/// Larger divergence wins; ties go to the lexicographically greater pair.
fn better(a: Candidate, b: Candidate) -> Candidate {
    match a.delta.total_cmp(&b.delta).then_with(|| a.pair.cmp(&b.pair)) {
        Ordering::Less => b,
        _ => a,
    }
}

fn worse_than(best: &Option<Candidate>, d: f64) -> bool {
    best.as_ref().is_some_and(|b| d < b.delta)
}

fn fold_best(best: Option<Candidate>, c: Candidate) -> Option<Candidate> {
    Some(match best {
        None => c,
        Some(b) => better(b, c),
    })
}

/// Exact worst-case divergence of `m` over all neighbouring samples of size `n` over `domain`.
///
/// Neighbours differ by replacing one entry. With a declared sufficient
/// statistic the sample space is enumerated by multiset; samples are then
/// represented with values in descending order.
pub fn verify_dp_exact(
    m: &dyn Mechanism,
    domain: &[Example],
    n: usize,
    eps: f64,
    opts: EnumOptions,
) -> Result<DpVerdict> {
    if n == 0 {
        return Err(invalid("sample size must be at least 1"));
    }
    if !(eps >= 0.0) {
        return Err(invalid(format!("eps must be >= 0, got {eps}")));
    }
    if !m.has_exact_pmf() {
        return Err(Error::NoExactPmf(m.name()));
    }
    let values = descending(domain);
    if values.is_empty() {
        return Err(invalid("domain must be nonempty"));
    }
    let k = values.len();
    let grouped = use_grouping(m, &values, n, opts)?;
    let (best, pairs) = if grouped { grouped_scan(m, &values, n, eps, opts)? } else { tuple_scan(m, &values, n, eps, opts)? };
    let (delta_hat, witness) = match best {
        Some(c) if k > 1 => (c.delta, Some((Sample::new(c.pair.0)?, Sample::new(c.pair.1)?))),
        _ => (0.0, None),
    };
    Ok(DpVerdict {
        eps,
        delta_hat,
        witness,
        pairs_evaluated: pairs,
        grouped,
    })
}

fn grouped_scan(
    m: &dyn Mechanism,
    values: &[Example],
    n: usize,
    eps: f64,
    opts: EnumOptions,
) -> Result<(Option<Candidate>, u64)> {
    let k = values.len();
    let count = composition_count(n, k);
    let pairs = count.saturating_mul((k * k.saturating_sub(1)) as u128);
    check_cap(pairs.max(count), opts.cap)?;
    let comps: Vec<Vec<usize>> = compositions(n, k).collect();
    let index: HashMap<&Vec<usize>, usize> = comps.iter().enumerate().map(|(i, c)| (c, i)).collect();
    let samples: Vec<Sample> = comps.iter().map(|c| representative(values, c)).collect::<Result<_>>()?;
    let pmfs: Vec<FinitePmf> = samples.par_iter().map(|s| m.exact_pmf(s)).collect::<Result<_>>()?;
    let evaluated = std::sync::atomic::AtomicU64::new(0);
    let best = comps
        .par_iter()
        .enumerate()
        .map(|(i, c)| -> Result<Option<Candidate>> {
            let mut best = None;
            for from in (0..k).filter(|&v| c[v] > 0) {
                for to in (0..k).filter(|&v| v != from) {
                    let mut nb = c.clone();
                    nb[from] -= 1;
                    nb[to] += 1;
                    let j = index[&nb];
                    let d = delta_at_eps(&pmfs[i], &pmfs[j], eps)?;
                    evaluated.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                    if worse_than(&best, d) {
                        continue;
                    }
                    best = fold_best(
                        best,
                        Candidate {
                            delta: d,
                            pair: (samples[i].entries().to_vec(), samples[j].entries().to_vec()),
                        },
                    );
                }
            }
            Ok(best)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .reduce(better);
    Ok((best, evaluated.into_inner()))
}

fn tuple_scan(
    m: &dyn Mechanism,
    values: &[Example],
    n: usize,
    eps: f64,
    opts: EnumOptions,
) -> Result<(Option<Candidate>, u64)> {
    let k = values.len();
    let count = tuple_count(n, k);
    let pairs = count.saturating_mul((n * (k - 1)) as u128);
    check_cap(pairs.max(count), opts.cap)?;
    let total = count as usize;
    // sample number `t` has digit i (most significant first) at position i
    let digits = |mut t: usize| {
        let mut idx = vec![0usize; n];
        for pos in (0..n).rev() {
            idx[pos] = t % k;
            t /= k;
        }
        idx
    };
    let pmfs: Vec<FinitePmf> = (0..total)
        .into_par_iter()
        .map(|t| m.exact_pmf(&from_tuple(values, &digits(t))?))
        .collect::<Result<_>>()?;
    let weight: Vec<usize> = (0..n).map(|pos| k.pow((n - 1 - pos) as u32)).collect();
    let best = (0..total)
        .into_par_iter()
        .map(|t| -> Result<Option<Candidate>> {
            let idx = digits(t);
            let mut best = None;
            for pos in 0..n {
                for v in (0..k).filter(|&v| v != idx[pos]) {
                    let u = t + v * weight[pos] - idx[pos] * weight[pos];
                    let d = delta_at_eps(&pmfs[t], &pmfs[u], eps)?;
                    if worse_than(&best, d) {
                        continue;
                    }
                    let mut nb = idx.clone();
                    nb[pos] = v;
                    best = fold_best(
                        best,
                        Candidate {
                            delta: d,
                            pair: (
                                idx.iter().map(|&i| values[i].clone()).collect(),
                                nb.iter().map(|&i| values[i].clone()).collect(),
                            ),
                        },
                    );
                }
            }
            Ok(best)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .reduce(better);
    Ok((best, pairs as u64))
}
