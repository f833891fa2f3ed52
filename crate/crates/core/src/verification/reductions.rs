use std::collections::BTreeMap;

use serde::Serialize;

use super::space::{EnumOptions, SampleProfile};
use crate::error::{invalid, Error, Result};
use crate::mechanisms::{FixedSimulator, Mechanism};
use crate::prob::{FinitePmf, Outcome, PopulationDistribution};

/// Simulator with law `∝ exp(E_{S~d^n} ln Pr[M(S) = r])`.
///
/// Fails with a divergence error if some sample gives an outcome zero probability.
pub fn dp_to_pg_simulator(
    m: &dyn Mechanism,
    d: &PopulationDistribution,
    n: usize,
    opts: EnumOptions,
) -> Result<FixedSimulator> {
    let profile = SampleProfile::build(m, d, n, opts)?;
    Ok(FixedSimulator::new(log_likelihood_simulator(&profile)?))
}

/// The log-likelihood simulator law of a prepared profile.
pub fn log_likelihood_simulator(profile: &SampleProfile) -> Result<FinitePmf> {
    let mut outcomes: Vec<Outcome> = profile.groups.iter().flat_map(|g| g.pmf.outcomes().iter().cloned()).collect();
    outcomes.sort();
    outcomes.dedup();
    let mut expected: BTreeMap<&Outcome, f64> = outcomes.iter().map(|o| (o, 0.0)).collect();
    for g in &profile.groups {
        if g.mass == 0.0 {
            continue;
        }
        for o in &outcomes {
            let p = g.pmf.prob(o);
            if p <= 0.0 {
                return Err(Error::Divergence(format!("{o}, e.g. on {}", g.sample.to_value_json())));
            }
            *expected.get_mut(o).expect("listed") += g.mass * p.ln();
        }
    }
    let top = expected.values().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = outcomes.iter().map(|o| (expected[o] - top).exp()).collect();
    FinitePmf::from_weights(outcomes, weights)
}

/// `ε′ = ε·sqrt(2n ln(2|R|/β))`: the perfect-generalization parameter of an (ε, 0)-DP mechanism.
pub fn dp_to_pg_bound(eps: f64, n: u64, range_size: u64, beta: f64) -> Result<f64> {
    if !(eps >= 0.0) || n == 0 || range_size == 0 || !(beta > 0.0 && beta < 1.0) {
        return Err(invalid(format!(
            "need eps >= 0, n >= 1, |R| >= 1, beta in (0,1); got eps={eps}, n={n}, |R|={range_size}, beta={beta}"
        )));
    }
    Ok(eps * (2.0 * n as f64 * (2.0 * range_size as f64 / beta).ln()).sqrt())
}

/// A `(β, ε, δ)` perfect-generalization triple.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PgTriple {
    pub beta: f64,
    pub eps: f64,
    pub delta: f64,
}

/// Group-privacy conversion of (ε, δ)-DP: `(0, nε, n e^{(n−1)ε} δ)`; overflow yields `+∞`.
pub fn group_privacy_pg(eps: f64, delta: f64, n: u64) -> Result<PgTriple> {
    if !(eps >= 0.0) || !(0.0..=1.0).contains(&delta) || n == 0 {
        return Err(invalid(format!("need eps >= 0, delta in [0,1], n >= 1; got {eps}, {delta}, {n}")));
    }
    let nf = n as f64;
    let delta_out = if delta == 0.0 {
        0.0
    } else {
        let v = nf * ((nf - 1.0) * eps).exp() * delta;
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };
    let eps_out = nf * eps;
    Ok(PgTriple {
        beta: 0.0,
        eps: if eps_out.is_finite() { eps_out } else { f64::INFINITY },
        delta: delta_out,
    })
}

/// Overfitting level `sqrt((2/n) ln(2(2ε+1)/(β+δ)))` guaranteed, except with
/// probability `2(β+δ)`, by (β, ε, δ)-perfect generalization.
pub fn pg_to_rg_alpha(n: u64, beta: f64, eps: f64, delta: f64) -> Result<f64> {
    if n == 0 || !(eps >= 0.0) || beta < 0.0 || delta < 0.0 {
        return Err(invalid(format!("need n >= 1 and nonnegative parameters; got {n}, {beta}, {eps}, {delta}")));
    }
    if beta + delta <= 0.0 {
        return Err(invalid("beta + delta must be positive"));
    }
    Ok(((2.0 / n as f64) * (2.0 * (2.0 * eps + 1.0) / (beta + delta)).ln()).sqrt())
}
