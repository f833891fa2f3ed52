use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, RngCore};
use rayon::prelude::*;

use super::report::ExperimentReport;
use crate::compression::{
    adaptive_session, cats_side_condition, rg_bound_cats, run_compression_learner, threshold_scheme,
    CompressionScheme, ThresholdScheme,
};
use crate::error::{invalid, Error, Result};
use crate::hypothesis::{empirical_value, true_error, true_value, Hypothesis, HypothesisClass};
use crate::mechanisms::{decode_sample, sq_oracle, ExpLearner, LeakyMechanism, Mechanism, NoisyMajority, Query};
use crate::prob::{Example, Outcome, PopulationDistribution, RandomSeed, Sample};
use crate::verification::{log_likelihood_simulator, min_eps_profile, EnumOptions, RgVerdict, SampleProfile};

/// Grid resolution of the threshold tasks.
pub const THRESHOLD_GRID: usize = 1000;
/// Largest sample size the generic learner experiment will draw.
pub const GENERIC_N_LIMIT: u64 = 100_000_000;
/// Trials per arm of [`overfit_experiment`].
pub const OVERFIT_TRIALS: u64 = 200;
const SQ_TAU: f64 = 0.1;
const SQ_BETA: f64 = 0.05;

fn elapsed_ms(start: Instant) -> u64 {
    start.elapsed().as_millis() as u64
}

/// Uniform over `{0, 1/G, ..., (G−1)/G}`, labelled `1[x ≤ t*]` for a random grid point `t*`.
pub fn threshold_task(rng: &mut dyn RngCore) -> PopulationDistribution {
    let target = rng.random_range(0..THRESHOLD_GRID) as f64 / THRESHOLD_GRID as f64;
    let support = (0..THRESHOLD_GRID)
        .map(|i| {
            let x = i as f64 / THRESHOLD_GRID as f64;
            Example::labelled(x, (x <= target) as u8)
        })
        .collect();
    PopulationDistribution::uniform(support).expect("grid is nonempty")
}

fn gap(h: &Hypothesis, s: &Sample, d: &PopulationDistribution) -> f64 {
    (empirical_value(h, s) - true_value(h, d)).abs()
}

fn max_gap(hs: &[Hypothesis], s: &Sample, d: &PopulationDistribution) -> f64 {
    hs.iter().map(|h| gap(h, s, d)).fold(0.0, f64::max)
}

/// One run of the threshold compression learner: (true error, largest adversarial gap).
fn threshold_trial(n: usize, rng: &mut dyn RngCore) -> Result<(f64, f64)> {
    let d = threshold_task(rng);
    let s = d.draw_sample(n, rng)?;
    let (h, _) = run_compression_learner(&threshold_scheme(), &s, rng)?;
    let adversary = [h.loss(), Hypothesis::Complement(Box::new(h.clone())), h.clone()];
    Ok((true_error(&h, &d), max_gap(&adversary, &s, &d)))
}

fn verdict_metrics(r: &mut ExperimentReport, prefix: &str, v: &RgVerdict) {
    r.metric(&format!("{prefix}_failure_rate"), v.failure_rate);
    r.metric(&format!("{prefix}_half_width"), v.half_width());
    r.metric(&format!("{prefix}_mean"), v.mean_gap);
}

/// Threshold compression learner on random realizable tasks, checked at
/// `ε = rg_bound_cats(n, 1, δ)` for both accuracy and adversarial overfitting.
pub fn threshold_experiment(n: usize, delta: f64, trials: u64, seed: RandomSeed) -> Result<ExperimentReport> {
    let start = Instant::now();
    if trials == 0 {
        return Err(invalid("trials must be at least 1"));
    }
    let eps = rg_bound_cats(n as u64, 1, delta)?;
    let side = cats_side_condition(n as u64, 1, delta);
    if !side {
        log::warn!("n = {n} is below 8 ln(2n/delta); the bound is not guaranteed");
    }
    let runs: Vec<(f64, f64)> = (0..trials)
        .into_par_iter()
        .map(|t| threshold_trial(n, &mut seed.stream("threshold", t)))
        .collect::<Result<_>>()?;
    let errors: Vec<f64> = runs.iter().map(|r| r.0).collect();
    let gaps: Vec<f64> = runs.iter().map(|r| r.1).collect();
    let acc = RgVerdict::from_gaps(eps, &errors);
    let ovf = RgVerdict::from_gaps(eps, &gaps);
    let mut r = ExperimentReport::new("threshold")
        .config("n", n)
        .config("delta", delta)
        .config("trials", trials)
        .config("seed", seed.0);
    r.metric("eps", eps);
    r.metric("side_condition_met", side as u8 as f64);
    verdict_metrics(&mut r, "accuracy", &acc);
    verdict_metrics(&mut r, "overfit", &ovf);
    r.pass = acc.within(delta) && ovf.within(delta);
    r.runtime_ms = elapsed_ms(start);
    Ok(r)
}

/// Scheme choice for the `i`-th adaptive learner: thresholds strictly below the previous one.
fn descending_window(prev: &[Hypothesis]) -> Box<dyn CompressionScheme> {
    let hi = match prev.last() {
        None => 1.0,
        Some(Hypothesis::Threshold(t)) => t - 0.05,
        Some(_) => -1.0,
    };
    Box::new(ThresholdScheme::windowed(f64::NEG_INFINITY, hi))
}

fn adaptive_trial(n: usize, m: usize, rng: &mut dyn RngCore) -> Result<f64> {
    let d = threshold_task(rng);
    let s = d.draw_sample(n, rng)?;
    let session = adaptive_session(&s, &mut descending_window, m, rng)?;
    let mut adversary: Vec<Hypothesis> = Vec::new();
    let mut cuts = vec![1.0];
    for h in &session.hypotheses {
        adversary.push(h.loss());
        adversary.push(h.clone());
        if let Hypothesis::Threshold(t) = h {
            cuts.push(*t);
        }
    }
    for w in cuts.windows(2) {
        adversary.push(Hypothesis::Rectangle {
            lo: smallvec::smallvec![w[1]],
            hi: smallvec::smallvec![w[0]],
        });
    }
    Ok(max_gap(&adversary, &s, &d))
}

/// `m` adaptively chosen threshold learners on one sample; overfitting checked
/// at `rg_bound_cats(n, m, δ)`.
pub fn adaptive_compression_experiment(
    n: usize,
    m: usize,
    delta: f64,
    trials: u64,
    seed: RandomSeed,
) -> Result<ExperimentReport> {
    let start = Instant::now();
    if trials == 0 || m == 0 {
        return Err(invalid("trials and m must be at least 1"));
    }
    let eps = rg_bound_cats(n as u64, m as u64, delta)?;
    let gaps: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| adaptive_trial(n, m, &mut seed.stream("adaptive", t)))
        .collect::<Result<_>>()?;
    let v = RgVerdict::from_gaps(eps, &gaps);
    let mut r = ExperimentReport::new("adaptive-compression")
        .config("n", n)
        .config("m", m)
        .config("delta", delta)
        .config("trials", trials)
        .config("seed", seed.0);
    r.metric("eps", eps);
    r.metric("side_condition_met", cats_side_condition(n as u64, m as u64, delta) as u8 as f64);
    verdict_metrics(&mut r, "overfit", &v);
    r.metric("overfit_max", gaps.iter().copied().fold(0.0, f64::max));
    r.pass = v.within(delta);
    r.runtime_ms = elapsed_ms(start);
    Ok(r)
}

/// `ceil(6/(ε²α²)·(ln(2|H|) + ln(1/γ))³)`.
pub fn generic_learner_sample_size(class_size: usize, eps: f64, alpha: f64, gamma: f64) -> Result<u64> {
    if class_size == 0 || !(eps > 0.0) || !(alpha > 0.0) || !(gamma > 0.0 && gamma < 1.0) {
        return Err(invalid(format!(
            "need |H| >= 1, eps > 0, alpha > 0, gamma in (0,1); got {class_size}, {eps}, {alpha}, {gamma}"
        )));
    }
    let l = (2.0 * class_size as f64).ln() + (1.0 / gamma).ln();
    let n = (6.0 / (eps * eps * alpha * alpha) * l.powi(3)).ceil();
    if !(n <= GENERIC_N_LIMIT as f64) {
        return Err(Error::SampleSizeTooLarge {
            required: n,
            limit: GENERIC_N_LIMIT,
        });
    }
    Ok(n as u64)
}

/// The exponential learner (confidence parameter `γ`) at the sample size above;
/// counts outputs whose true error exceeds `OPT + α`.
pub fn generic_learner_experiment(
    class: &HypothesisClass,
    d: &PopulationDistribution,
    eps: f64,
    alpha: f64,
    gamma: f64,
    trials: u64,
    seed: RandomSeed,
) -> Result<ExperimentReport> {
    let start = Instant::now();
    if trials == 0 {
        return Err(invalid("trials must be at least 1"));
    }
    let n = generic_learner_sample_size(class.len(), eps, alpha, gamma)?;
    let learner = ExpLearner::new(class.clone(), eps, gamma)?;
    let errors: Vec<f64> = class.hypotheses().iter().map(|h| true_error(h, d)).collect();
    let opt = class.opt(d);
    let excess: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = seed.stream("generic", t);
            let s = d.draw_sample(n as usize, &mut rng)?;
            match learner.sample_output(&s, &mut rng)? {
                Outcome::Int(i) => Ok(errors[i as usize] - opt),
                other => Err(invalid(format!("unexpected learner output {other}"))),
            }
        })
        .collect::<Result<_>>()?;
    let v = RgVerdict::from_gaps(alpha, &excess);
    let mut r = ExperimentReport::new("generic-learner")
        .config("class", class.hypotheses().iter().map(|h| h.label()).collect::<Vec<_>>())
        .config("eps", eps)
        .config("alpha", alpha)
        .config("gamma", gamma)
        .config("trials", trials)
        .config("seed", seed.0);
    r.metric("n", n as f64);
    r.metric("opt", opt);
    r.metric("failure_rate", v.failure_rate);
    r.metric("half_width", v.half_width());
    r.metric("mean_excess", v.mean_gap);
    r.pass = v.within(gamma);
    r.runtime_ms = elapsed_ms(start);
    Ok(r)
}

/// Ordinary least-squares `(slope, intercept)`.
pub fn ols(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch(format!("{} abscissae, {} ordinates", xs.len(), ys.len())));
    }
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if xs.len() < 2 || !(sxx > 0.0) {
        return Err(Error::SlopeUndefined);
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// Smallest PG eps of noisy majority against its log-likelihood simulator, uniform bits, `δ = 0`.
pub fn noisy_majority_min_eps(eps: f64, beta: f64, n: usize, opts: EnumOptions) -> Result<f64> {
    let m = NoisyMajority::new(eps)?;
    let profile = SampleProfile::build(&m, &PopulationDistribution::uniform_bits(), n, opts)?;
    let sim = log_likelihood_simulator(&profile)?;
    min_eps_profile(&profile, &sim, beta, 0.0)
}

/// Growth of the smallest PG eps of noisy majority in `n`, as a log-log slope.
pub fn tightness_experiment(eps: f64, beta: f64, ns: &[usize], seed: RandomSeed) -> Result<ExperimentReport> {
    let start = Instant::now();
    let mut distinct = ns.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(Error::SlopeUndefined);
    }
    let mins: Vec<f64> = distinct
        .par_iter()
        .map(|&n| noisy_majority_min_eps(eps, beta, n, EnumOptions::default()))
        .collect::<Result<_>>()?;
    if let Some(i) = mins.iter().position(|m| *m <= 0.0) {
        return Err(invalid(format!("min eps is 0 at n = {}; the log-log fit is undefined", distinct[i])));
    }
    let xs: Vec<f64> = distinct.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = mins.iter().map(|m| m.ln()).collect();
    let (slope, intercept) = ols(&xs, &ys)?;
    let mut r = ExperimentReport::new("tightness")
        .config("eps", eps)
        .config("beta", beta)
        .config("ns", &distinct)
        .config("seed", seed.0);
    for (n, m) in distinct.iter().zip(&mins) {
        r.metric(&format!("min_eps_n{n:05}"), *m);
    }
    r.metric("slope", slope);
    r.metric("intercept", intercept);
    r.pass = (0.4..=0.6).contains(&slope);
    r.runtime_ms = elapsed_ms(start);
    Ok(r)
}

/// Uniform over `{0, ..., size−1} × {0, 1}`: labels carry no information.
pub fn noise_labels(size: usize) -> PopulationDistribution {
    let support = (0..size)
        .flat_map(|i| [Example::labelled(i as f64, 0), Example::labelled(i as f64, 1)])
        .collect();
    PopulationDistribution::uniform(support).expect("nonempty")
}

fn random_subset(size: usize, rng: &mut dyn RngCore) -> Hypothesis {
    let table: BTreeMap<Example, u8> = (0..size)
        .filter(|_| rng.random::<bool>())
        .map(|i| (Example::scalar(i as f64), 1u8))
        .collect();
    Hypothesis::Lookup {
        table: Arc::new(table),
        default: 0,
    }
}

/// Mean adversarial gap of three pipelines at the same `n`: a mechanism that
/// leaks its sample to a memorizer, noisy statistical queries, and the
/// threshold compression learner.
pub fn overfit_experiment(n: usize, queries: usize, seed: RandomSeed) -> Result<ExperimentReport> {
    let start = Instant::now();
    if n < 10 {
        return Err(invalid(format!("n must be at least 10, got {n}")));
    }
    let size = 50 * n;
    let d = noise_labels(size);

    let leaky: Vec<f64> = (0..OVERFIT_TRIALS)
        .into_par_iter()
        .map(|t| {
            let mut rng = seed.stream("overfit-leaky", t);
            let s = d.draw_sample(n, &mut rng)?;
            let seen = decode_sample(&LeakyMechanism.sample_output(&s, &mut rng)?)?;
            Ok(gap(&Hypothesis::memorize(&seen).loss(), &s, &d))
        })
        .collect::<Result<_>>()?;

    let mut qrng = seed.stream("overfit-queries", 0);
    let hs: Vec<Hypothesis> = (0..queries).map(|_| random_subset(size, &mut qrng)).collect();
    let qs: Vec<Query> = hs.iter().cloned().map(Query::from_hypothesis).collect();
    let truth: Vec<f64> = hs.iter().map(|h| true_value(h, &d)).collect();
    let sq: Vec<f64> = (0..OVERFIT_TRIALS)
        .into_par_iter()
        .map(|t| {
            if queries == 0 {
                return Ok(0.0);
            }
            let mut rng = seed.stream("overfit-sq", t);
            let s = d.draw_sample(n, &mut rng)?;
            let mut best = (f64::NEG_INFINITY, 0);
            for (j, q) in qs.iter().enumerate() {
                let a = sq_oracle(&s, q, SQ_TAU, SQ_BETA, &mut rng)?;
                if a > best.0 {
                    best = (a, j);
                }
            }
            Ok((empirical_value(&hs[best.1], &s) - truth[best.1]).abs())
        })
        .collect::<Result<_>>()?;

    let thr: Vec<f64> = (0..OVERFIT_TRIALS)
        .into_par_iter()
        .map(|t| threshold_trial(n, &mut seed.stream("overfit-threshold", t)).map(|r| r.1))
        .collect::<Result<_>>()?;

    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (a, b, c) = (mean(&leaky), mean(&sq), mean(&thr));
    let mut r = ExperimentReport::new("overfit")
        .config("n", n)
        .config("queries", queries)
        .config("trials", OVERFIT_TRIALS)
        .config("sq_tau", SQ_TAU)
        .config("sq_beta", SQ_BETA)
        .config("seed", seed.0);
    r.metric("mean_gap_leaky", a);
    r.metric("mean_gap_sq", b);
    r.metric("mean_gap_threshold", c);
    r.pass = a >= 5.0 * b && a >= 5.0 * c;
    r.runtime_ms = elapsed_ms(start);
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generic_size() {
        let l = 4f64.ln() + 10f64.ln();
        let oracle = (6.0 / 0.09 * l * l * l).ceil() as u64;
        assert_eq!(generic_learner_sample_size(2, 1.0, 0.3, 0.1).unwrap(), oracle);
        assert_eq!(oracle, 3347);
        assert!(matches!(
            generic_learner_sample_size(2, 0.001, 0.001, 0.1),
            Err(Error::SampleSizeTooLarge { .. })
        ));
    }

    #[test]
    fn ols_recovers_line() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 0.5 * x - 1.0).collect();
        let (s, i) = ols(&xs, &ys).unwrap();
        assert!((s - 0.5).abs() < 1e-12 && (i + 1.0).abs() < 1e-12);
        assert!(matches!(ols(&[1.0], &[2.0]), Err(Error::SlopeUndefined)));
        assert!(matches!(ols(&[1.0, 1.0], &[2.0, 3.0]), Err(Error::SlopeUndefined)));
    }

    #[test]
    fn single_n_is_degenerate() {
        assert!(matches!(tightness_experiment(0.2, 0.05, &[16, 16], RandomSeed(0)), Err(Error::SlopeUndefined)));
    }

    #[test]
    fn doubling_beta_lowers_min_eps() {
        for n in [16, 32] {
            let a = noisy_majority_min_eps(0.2, 0.05, n, EnumOptions::default()).unwrap();
            let b = noisy_majority_min_eps(0.2, 0.10, n, EnumOptions::default()).unwrap();
            assert!(b <= a, "{b} > {a}");
        }
    }

    #[test]
    fn threshold_single_trial_and_reproducibility() {
        let r = threshold_experiment(200, 0.05, 1, RandomSeed(3)).unwrap();
        assert_eq!(r.config["trials"], 1);
        let a = threshold_experiment(200, 0.05, 50, RandomSeed(3)).unwrap();
        let b = threshold_experiment(200, 0.05, 50, RandomSeed(3)).unwrap();
        assert_eq!(a.to_json(false), b.to_json(false));
        assert!(a.pass);
    }

    #[test]
    fn singleton_class_never_fails() {
        let class = HypothesisClass::new(vec![Hypothesis::Constant(1)], None).unwrap();
        let d = PopulationDistribution::new(vec![Example::labelled(0.0, 1), Example::labelled(1.0, 0)], vec![0.5, 0.5])
            .unwrap();
        let r = generic_learner_experiment(&class, &d, 1.0, 0.3, 0.1, 20, RandomSeed(1)).unwrap();
        assert_eq!(r.metrics["failure_rate"], 0.0);
        assert!(r.pass);
    }

    #[test]
    fn realizable_instance_is_accurate() {
        let class =
            HypothesisClass::new(vec![Hypothesis::Threshold(0.0), Hypothesis::Constant(0), Hypothesis::Constant(1)], None)
                .unwrap();
        let d = PopulationDistribution::new(vec![Example::labelled(0.0, 1), Example::labelled(1.0, 0)], vec![0.5, 0.5])
            .unwrap();
        let r = generic_learner_experiment(&class, &d, 1.0, 0.4, 0.1, 200, RandomSeed(2)).unwrap();
        assert_eq!(r.metrics["opt"], 0.0);
        assert!(r.pass, "{:?}", r.metrics);
    }

    #[test]
    fn overfit_arms_separate() {
        let r = overfit_experiment(50, 0, RandomSeed(4)).unwrap();
        assert_eq!(r.metrics["mean_gap_sq"], 0.0);
        assert!(r.metrics["mean_gap_leaky"] > 0.4);
        assert!(overfit_experiment(9, 3, RandomSeed(4)).is_err());
    }

    #[test]
    fn adaptive_replay_matches() {
        let mut rng = RandomSeed(9).rng();
        let d = threshold_task(&mut rng);
        let s = d.draw_sample(300, &mut rng).unwrap();
        let session = adaptive_session(&s, &mut descending_window, 5, &mut rng).unwrap();
        assert_eq!(session.k, 5);
        let replay = session.replay().unwrap();
        assert_eq!(format!("{replay:?}"), format!("{:?}", session.hypotheses));
        let ts: Vec<f64> = session
            .hypotheses
            .iter()
            .filter_map(|h| if let Hypothesis::Threshold(t) = h { Some(*t) } else { None })
            .collect();
        assert!(ts.windows(2).all(|w| w[1] <= w[0] - 0.05));
    }
}
