use rand::RngCore;

use super::{Mechanism, OutputRange, Query, Simulator, StatKey};
use crate::error::{invalid, Error, Result};
use crate::prob::{
    laplace_cdf_unchecked, laplace_pdf_unchecked, laplace_sample_unchecked, FinitePmf, Outcome,
    PopulationDistribution, Sample,
};

/// Target absolute error of each quadrature probability.
const QUAD_TOL: f64 = 1e-10;
const SUM_TOL: f64 = 1e-8;
const MAX_DEPTH: u32 = 40;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx) + f(c + dx);
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

fn adaptive(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> Option<f64> {
    let (v, err) = gk15(f, a, b);
    if err <= tol.max(1e-15 * v.abs()) {
        return Some(v);
    }
    if depth == 0 {
        return None;
    }
    let m = 0.5 * (a + b);
    Some(adaptive(f, a, m, 0.5 * tol, depth - 1)? + adaptive(f, m, b, 0.5 * tol, depth - 1)?)
}

fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    adaptive(f, a, b, tol, MAX_DEPTH).ok_or(Error::QuadratureNonConvergence {
        tolerance: tol,
        estimate: gk15(f, a, b).0,
    })
}

/// `Pr[argmax_j (means_j + Lap(b)) = j]` for every `j`, by quadrature.
///
/// The line is split at the distinct means; on each tail the substitution
/// `u = e^{-|t - edge|/b}` turns the integrand into a polynomial on `[0, 1]`.
pub fn report_noisy_max_probs(means: &[f64], b: f64) -> Result<Vec<f64>> {
    if means.is_empty() {
        return Err(invalid("noisy max needs at least one query"));
    }
    if !(b > 0.0 && b.is_finite()) {
        return Err(invalid(format!("Laplace scale must be positive, got {b}")));
    }
    if means.iter().any(|m| !m.is_finite()) {
        return Err(invalid("query averages must be finite"));
    }
    let m = means.len();
    if m == 1 {
        return Ok(vec![1.0]);
    }
    let mut knots: Vec<f64> = means.to_vec();
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    let lo = knots[0];
    let hi = *knots.last().unwrap();
    let tol = QUAD_TOL / (knots.len() + 1) as f64;

    let mut probs = Vec::with_capacity(m);
    for j in 0..m {
        let others = || means.iter().enumerate().filter(move |(k, _)| *k != j).map(|(_, a)| *a);
        let body = |t: f64| {
            laplace_pdf_unchecked(t - means[j], b) * others().map(|a| laplace_cdf_unchecked(t - a, b)).product::<f64>()
        };
        let mut p = 0.0;
        for w in knots.windows(2) {
            p += integrate(&body, w[0], w[1], tol)?;
        }
        // t > hi: f dt = ½ c_j du, F_k = 1 − ½ u c_k with c = e^{-(hi − a)/b}
        let upper = |u: f64| {
            0.5 * (-(hi - means[j]) / b).exp()
                * others().map(|a| 1.0 - 0.5 * u * (-(hi - a) / b).exp()).product::<f64>()
        };
        p += integrate(&upper, 0.0, 1.0, tol)?;
        // t < lo: f dt = ½ d_j du, F_k = ½ u d_k with d = e^{-(a − lo)/b}
        let lower = |u: f64| {
            0.5 * (-(means[j] - lo) / b).exp() * others().map(|a| 0.5 * u * (-(a - lo) / b).exp()).product::<f64>()
        };
        p += integrate(&lower, 0.0, 1.0, tol)?;
        probs.push(p);
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > SUM_TOL {
        return Err(Error::QuadratureNonConvergence {
            tolerance: SUM_TOL,
            estimate: total,
        });
    }
    Ok(probs.into_iter().map(|p| (p / total).max(0.0)).collect())
}

fn empirical_means(s: &Sample, queries: &[Query]) -> Result<Vec<f64>> {
    queries.iter().map(|q| q.empirical(s)).collect()
}

fn index_outcomes(m: usize) -> Vec<Outcome> {
    (0..m as i64).map(Outcome::Int).collect()
}

/// Index of the largest noisy empirical average, ties toward the lowest index.
pub fn noisy_max(s: &Sample, queries: &[Query], b: f64, rng: &mut dyn RngCore) -> Result<usize> {
    if queries.is_empty() {
        return Err(invalid("noisy max needs at least one query"));
    }
    if !(b > 0.0 && b.is_finite()) {
        return Err(invalid(format!("Laplace scale must be positive, got {b}")));
    }
    let mut best = (0usize, f64::NEG_INFINITY);
    for (j, a) in empirical_means(s, queries)?.into_iter().enumerate() {
        let v = a + laplace_sample_unchecked(b, rng);
        if v > best.1 {
            best = (j, v);
        }
    }
    Ok(best.0)
}

/// Exact output law of [`noisy_max`] over indices.
pub fn noisy_max_pmf(s: &Sample, queries: &[Query], b: f64) -> Result<FinitePmf> {
    let probs = report_noisy_max_probs(&empirical_means(s, queries)?, b)?;
    FinitePmf::new(index_outcomes(queries.len()), probs)
}

/// `b = sqrt(ln(m/β) / (2 n ε²))`.
pub fn noisy_max_scale(n: u64, m: usize, eps: f64, beta: f64) -> Result<f64> {
    if n == 0 || m == 0 || !(eps > 0.0) || !(beta > 0.0 && beta < 1.0) {
        return Err(invalid(format!("need n, m >= 1, eps > 0, beta in (0,1); got n={n}, m={m}, eps={eps}, beta={beta}")));
    }
    Ok(((m as f64 / beta).ln() / (2.0 * n as f64 * eps * eps)).sqrt())
}

#[derive(Clone, Debug)]
pub struct NoisyMax {
    pub queries: Vec<Query>,
    pub b: f64,
}

impl NoisyMax {
    pub fn new(queries: Vec<Query>, b: f64) -> Result<Self> {
        if queries.is_empty() {
            return Err(invalid("noisy max needs at least one query"));
        }
        if !(b > 0.0 && b.is_finite()) {
            return Err(invalid(format!("Laplace scale must be positive, got {b}")));
        }
        Ok(Self { queries, b })
    }
}

impl Mechanism for NoisyMax {
    fn name(&self) -> String {
        format!("noisy-max(m={},b={})", self.queries.len(), self.b)
    }

    fn range(&self) -> OutputRange {
        OutputRange::Finite(index_outcomes(self.queries.len()))
    }

    fn sample_output(&self, s: &Sample, rng: &mut dyn RngCore) -> Result<Outcome> {
        Ok(Outcome::Int(noisy_max(s, &self.queries, self.b, rng)? as i64))
    }

    fn has_exact_pmf(&self) -> bool {
        true
    }

    fn exact_pmf(&self, s: &Sample) -> Result<FinitePmf> {
        noisy_max_pmf(s, &self.queries, self.b)
    }

    fn sufficient_stat(&self, s: &Sample) -> Option<StatKey> {
        Some(StatKey::multiset(s))
    }
}

/// Noisy max over the population means.
#[derive(Clone, Debug)]
pub struct NoisyMaxSimulator {
    pub queries: Vec<Query>,
    pub b: f64,
}

impl Simulator for NoisyMaxSimulator {
    fn name(&self) -> String {
        "noisy-max-sim".into()
    }

    fn exact_pmf(&self, d: &PopulationDistribution, _n: usize) -> Result<FinitePmf> {
        let means = self.queries.iter().map(|q| q.population(d)).collect::<Result<Vec<_>>>()?;
        FinitePmf::new(index_outcomes(self.queries.len()), report_noisy_max_probs(&means, self.b)?)
    }
}
