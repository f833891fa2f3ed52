use serde::Serialize;

use super::space::{EnumOptions, ProfileGroup, SampleProfile};
use crate::error::{invalid, Error, Result};
use crate::mechanisms::{Mechanism, Simulator};
use crate::prob::{delta_at_eps, FinitePmf, PopulationDistribution, Sample, COMPARISON_TOL};

/// Upper end of the search interval used by [`min_eps_pg`].
pub const MAX_EPS: f64 = 50.0;
const EPS_RESOLUTION: f64 = 1e-6;
const WORST_KEPT: usize = 10;

/// A failing sample class and its probability.
#[derive(Clone, Debug, Serialize)]
pub struct FailingSample {
    #[serde(serialize_with = "serialize_sample")]
    pub sample: Sample,
    pub mass: f64,
    pub delta: f64,
}

fn serialize_sample<S: serde::Serializer>(s: &Sample, ser: S) -> std::result::Result<S::Ok, S::Error> {
    s.to_value_json().serialize(ser)
}

/// Exact perfect-generalization certificate at target `(eps, delta)`.
#[derive(Clone, Debug, Serialize)]
pub struct PgVerdict {
    pub eps: f64,
    pub delta: f64,
    /// Probability of drawing a sample whose output law is not (eps, delta)-close to the simulator.
    pub beta_hat: f64,
    pub worst_samples: Vec<FailingSample>,
    pub groups: usize,
    pub grouped: bool,
}

impl PgVerdict {
    pub fn certifies(&self, beta: f64) -> bool {
        self.beta_hat <= beta + COMPARISON_TOL
    }
}

fn check_target(eps: f64, delta: f64) -> Result<()> {
    if !(eps >= 0.0) {
        return Err(invalid(format!("eps must be >= 0, got {eps}")));
    }
    if !(0.0..=1.0).contains(&delta) {
        return Err(invalid(format!("delta must lie in [0, 1], got {delta}")));
    }
    Ok(())
}

fn fails(g: &ProfileGroup, sim: &FinitePmf, eps: f64, delta: f64) -> Result<Option<f64>> {
    let d = delta_at_eps(&g.pmf, sim, eps)?;
    Ok((d > delta + COMPARISON_TOL).then_some(d))
}

/// Failing mass of a prepared profile against a simulator law.
pub fn pg_beta_hat(profile: &SampleProfile, sim: &FinitePmf, eps: f64, delta: f64) -> Result<f64> {
    let mut beta = 0.0;
    for g in &profile.groups {
        if fails(g, sim, eps, delta)?.is_some() {
            beta += g.mass;
        }
    }
    Ok(beta.clamp(0.0, 1.0))
}

/// Evaluates a prepared profile; see [`verify_pg_exact`].
pub fn verify_pg_profile(profile: &SampleProfile, sim: &FinitePmf, eps: f64, delta: f64) -> Result<PgVerdict> {
    check_target(eps, delta)?;
    let mut failing = Vec::new();
    let mut beta = 0.0;
    for g in &profile.groups {
        if let Some(d) = fails(g, sim, eps, delta)? {
            beta += g.mass;
            failing.push(FailingSample {
                sample: g.sample.clone(),
                mass: g.mass,
                delta: d,
            });
        }
    }
    failing.sort_by(|a, b| b.mass.total_cmp(&a.mass).then_with(|| a.sample.entries().cmp(b.sample.entries())));
    failing.truncate(WORST_KEPT);
    Ok(PgVerdict {
        eps,
        delta,
        beta_hat: beta.clamp(0.0, 1.0),
        worst_samples: failing,
        groups: profile.groups.len(),
        grouped: profile.grouped,
    })
}

/// Exact mass of samples `S ~ d^n` whose output law is not (eps, delta)-close to `sim`.
pub fn verify_pg_exact(
    m: &dyn Mechanism,
    sim: &dyn Simulator,
    d: &PopulationDistribution,
    n: usize,
    eps: f64,
    delta: f64,
    opts: EnumOptions,
) -> Result<PgVerdict> {
    check_target(eps, delta)?;
    let profile = SampleProfile::build(m, d, n, opts)?;
    verify_pg_profile(&profile, &sim.exact_pmf(d, n)?, eps, delta)
}

/// Smallest eps (to 1e-6) at which the failing mass is at most `beta`.
pub fn min_eps_pg(
    m: &dyn Mechanism,
    sim: &dyn Simulator,
    d: &PopulationDistribution,
    n: usize,
    beta: f64,
    delta: f64,
    opts: EnumOptions,
) -> Result<f64> {
    let profile = SampleProfile::build(m, d, n, opts)?;
    min_eps_profile(&profile, &sim.exact_pmf(d, n)?, beta, delta)
}

/// [`min_eps_pg`] on a prepared profile.
pub fn min_eps_profile(profile: &SampleProfile, sim: &FinitePmf, beta: f64, delta: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&beta) || beta == 0.0 {
        return Err(invalid(format!("beta must lie in (0, 1), got {beta}")));
    }
    check_target(0.0, delta)?;
    let groups = profile.collapsed();
    let mass_at = |eps: f64| -> Result<f64> {
        let mut m = 0.0;
        for g in &groups {
            if fails(g, sim, eps, delta)?.is_some() {
                m += g.mass;
            }
        }
        Ok(m)
    };
    if mass_at(0.0)? <= beta + COMPARISON_TOL {
        return Ok(0.0);
    }
    if mass_at(MAX_EPS)? > beta + COMPARISON_TOL {
        return Err(Error::UnboundedEps(MAX_EPS));
    }
    let (mut lo, mut hi) = (0.0, MAX_EPS);
    while hi - lo > EPS_RESOLUTION {
        let mid = 0.5 * (lo + hi);
        if mass_at(mid)? <= beta + COMPARISON_TOL {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Outcome of [`twin_check`].
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TwinCheck {
    /// Mass of independent pairs `(T1, T2)` whose laws are not (2eps, 3delta)-close.
    pub mass: f64,
    pub bound: f64,
    pub holds: bool,
}

/// Checks that two independent samples give (2ε, 3δ)-close output laws except
/// with probability `2β`.
pub fn twin_check(
    m: &dyn Mechanism,
    d: &PopulationDistribution,
    n: usize,
    eps: f64,
    delta: f64,
    beta: f64,
    opts: EnumOptions,
) -> Result<TwinCheck> {
    check_target(eps, delta)?;
    if eps >= std::f64::consts::LN_2 {
        return Err(Error::ChainHypothesis { eps });
    }
    let profile = SampleProfile::build(m, d, n, opts)?;
    let groups = profile.collapsed();
    let mut mass = 0.0;
    for a in &groups {
        for b in &groups {
            if delta_at_eps(&a.pmf, &b.pmf, 2.0 * eps)? > 3.0 * delta + COMPARISON_TOL {
                mass += a.mass * b.mass;
            }
        }
    }
    Ok(TwinCheck {
        mass,
        bound: 2.0 * beta,
        holds: mass <= 2.0 * beta + COMPARISON_TOL,
    })
}
