//! The (ε, δ)-closeness calculus on finite distributions.
//!
//! Two distributions `P`, `Q` over a finite range are (ε, δ)-close when for
//! every event `O`, `P(O) ≤ e^ε Q(O) + δ` and `Q(O) ≤ e^ε P(O) + δ`. The
//! smallest admissible δ at a fixed ε is the hockey-stick divergence, which
//! is attained by the event `{r : P(r) > e^ε Q(r)}` and so reduces to a sum
//! over outcomes.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use super::pmf::{FinitePmf, Outcome, COMPARISON_TOL};
use crate::error::{invalid, Error, Result};

/// Closeness parameters: multiplicative `eps` (nats) and additive `delta`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosenessParams {
    pub eps: f64,
    pub delta: f64,
}

impl ClosenessParams {
    pub fn new(eps: f64, delta: f64) -> Result<Self> {
        if !(eps >= 0.0) {
            return Err(invalid(format!("eps must be >= 0, got {eps}")));
        }
        if !(0.0..=1.0).contains(&delta) {
            return Err(invalid(format!("delta must lie in [0, 1], got {delta}")));
        }
        Ok(Self { eps, delta })
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if eps >= 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("eps must be >= 0, got {eps}")))
    }
}

fn one_sided(p: &[f64], q: &[f64], scale: f64) -> f64 {
    p.iter()
        .zip(q)
        .map(|(&a, &b)| (a - scale * b).max(0.0))
        .sum()
}

/// Smallest δ such that `p` and `q` are (eps, δ)-close.
pub fn delta_at_eps(p: &FinitePmf, q: &FinitePmf, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    let aligned = p.aligned(q);
    let (pp, qq) = aligned.columns();
    let scale = eps.exp();
    let d = one_sided(pp, qq, scale).max(one_sided(qq, pp, scale));
    Ok(d.clamp(0.0, 1.0))
}

/// Whether `p` and `q` are (c.eps, c.delta)-close, up to [`COMPARISON_TOL`].
pub fn are_close(p: &FinitePmf, q: &FinitePmf, c: ClosenessParams) -> Result<bool> {
    Ok(delta_at_eps(p, q, c.eps)? <= c.delta + COMPARISON_TOL)
}

/// Parameters certified for `J1 ~ J3` from `J1 ~c1 J2` and `J2 ~c2 J3`.
///
/// Requires both eps below ln 2.
pub fn chain_closeness(c1: ClosenessParams, c2: ClosenessParams) -> Result<ClosenessParams> {
    for eps in [c1.eps, c2.eps] {
        if eps >= LN_2 {
            return Err(Error::ChainHypothesis { eps });
        }
    }
    let eps = c1.eps + c2.eps;
    let delta = if (c1.delta - c2.delta).abs() <= COMPARISON_TOL {
        3.0 * c1.delta
    } else {
        2.0 * (c1.delta + c2.delta)
    };
    Ok(ClosenessParams {
        eps,
        delta: delta.min(1.0),
    })
}

/// Builds `W` with `W ~(eps,0) z` and `W ~(0,delta) y` from a pair `y ~(eps,delta) z`.
///
/// Outcomes where `y` exceeds `e^eps z` are clipped down to `e^eps z`, outcomes
/// where `z` exceeds `e^eps y` are lifted to `e^-eps z`, and the clipped
/// function is renormalized by shrinking the first set (total above one) or
/// inflating the second (total below one). When that proportional rescale is
/// unavailable or would leave `[e^-eps z, e^eps z]`, the surplus is instead
/// spread over every outcome that still has room inside the band, on the side
/// that keeps the total-variation distance to `y` within `delta`.
pub fn intermediate_pmf(y: &FinitePmf, z: &FinitePmf, c: ClosenessParams) -> Result<FinitePmf> {
    let actual = delta_at_eps(y, z, c.eps)?;
    if actual > c.delta + COMPARISON_TOL {
        return Err(Error::NotClose {
            eps: c.eps,
            delta: c.delta,
            actual,
        });
    }
    let aligned = y.aligned(z);
    let labels: Vec<Outcome> = match &aligned {
        super::pmf::Aligned::Same(..) => y.outcomes().to_vec(),
        super::pmf::Aligned::Merged { labels, .. } => labels.iter().map(|o| (*o).clone()).collect(),
    };
    let (yy, zz) = aligned.columns();
    let up = c.eps.exp();
    let down = (-c.eps).exp();

    #[derive(Clone, Copy, PartialEq)]
    enum Region {
        Above,
        Below,
        Inside,
    }
    let region: Vec<Region> = yy
        .iter()
        .zip(zz)
        .map(|(&a, &b)| {
            if a > up * b {
                Region::Above
            } else if b > up * a {
                Region::Below
            } else {
                Region::Inside
            }
        })
        .collect();

    let mut w: Vec<f64> = (0..yy.len())
        .map(|i| match region[i] {
            Region::Inside => yy[i],
            Region::Above => (up).min((c.delta + yy[i]) / zz[i]) * zz[i],
            Region::Below => (down).max((yy[i] - c.delta) / zz[i]) * zz[i],
        })
        .collect();

    let total: f64 = w.iter().sum();
    let lo = |i: usize| down * zz[i];
    let hi = |i: usize| up * zz[i];
    let within = |w: &[f64]| {
        w.iter()
            .enumerate()
            .all(|(i, &x)| x >= lo(i) * (1.0 - 1e-12) - 1e-15 && x <= hi(i) * (1.0 + 1e-12) + 1e-15)
    };

    if total > 1.0 {
        let mass_above: f64 = (0..w.len()).filter(|&i| region[i] == Region::Above).map(|i| w[i]).sum();
        let mut scaled = w.clone();
        if mass_above > 0.0 {
            let factor = 1.0 - (total - 1.0) / mass_above;
            for i in 0..w.len() {
                if region[i] == Region::Above {
                    scaled[i] *= factor;
                }
            }
        }
        if mass_above > 0.0 && within(&scaled) {
            w = scaled;
        } else {
            // shrink every non-lifted outcome toward its floor, proportionally to the room
            let room: Vec<f64> = (0..w.len())
                .map(|i| if region[i] == Region::Below { 0.0 } else { (w[i] - lo(i)).max(0.0) })
                .collect();
            let total_room: f64 = room.iter().sum();
            let excess = total - 1.0;
            if total_room < excess {
                return Err(invalid("intermediate distribution: no room to renormalize"));
            }
            for i in 0..w.len() {
                w[i] -= excess * room[i] / total_room;
            }
        }
    } else if total < 1.0 {
        let mass_below: f64 = (0..w.len()).filter(|&i| region[i] == Region::Below).map(|i| w[i]).sum();
        let mut scaled = w.clone();
        if mass_below > 0.0 {
            let factor = 1.0 + (1.0 - total) / mass_below;
            for i in 0..w.len() {
                if region[i] == Region::Below {
                    scaled[i] *= factor;
                }
            }
        }
        if mass_below > 0.0 && within(&scaled) {
            w = scaled;
        } else {
            let room: Vec<f64> = (0..w.len())
                .map(|i| if region[i] == Region::Above { 0.0 } else { (hi(i) - w[i]).max(0.0) })
                .collect();
            let total_room: f64 = room.iter().sum();
            let deficit = 1.0 - total;
            if total_room < deficit {
                return Err(invalid("intermediate distribution: no room to renormalize"));
            }
            for i in 0..w.len() {
                w[i] += deficit * room[i] / total_room;
            }
        }
    }

    let sum: f64 = w.iter().sum();
    let probs = w.into_iter().map(|x| x.max(0.0) / sum).collect();
    FinitePmf::new(labels, probs)
}

/// KL divergence `Σ p ln(p/q)` in nats.
pub fn kl_divergence(p: &FinitePmf, q: &FinitePmf) -> Result<f64> {
    let mut total = 0.0;
    for (o, pr) in p.iter() {
        if pr <= 0.0 {
            continue;
        }
        let qr = q.prob(o);
        if qr <= 0.0 {
            return Err(Error::SupportMismatch(o.to_string()));
        }
        total += pr * (pr / qr).ln();
    }
    Ok(total.max(0.0))
}

/// Two-sided Hoeffding bound `min(1, 2 exp(-2 n t^2))` for averages of `n` values in [0, 1].
pub fn hoeffding_tail(n: u64, t: f64) -> f64 {
    (2.0 * (-2.0 * n as f64 * t * t).exp()).min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pmf(probs: &[f64]) -> FinitePmf {
        FinitePmf::new((0..probs.len() as i64).map(Outcome::Int).collect(), probs.to_vec()).unwrap()
    }

    #[test]
    fn identical_distributions_have_zero_delta() {
        let p = pmf(&[0.2, 0.3, 0.5]);
        assert_eq!(delta_at_eps(&p, &p, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn disjoint_point_masses_have_unit_delta() {
        let a = FinitePmf::point("a".into());
        let b = FinitePmf::point("b".into());
        assert_eq!(delta_at_eps(&a, &b, 5.0).unwrap(), 1.0);
    }

    #[test]
    fn hand_computed_hockey_stick() {
        let p = pmf(&[0.5, 0.5]);
        let q = pmf(&[0.75, 0.25]);
        assert!((delta_at_eps(&p, &q, 0.0).unwrap() - 0.25).abs() < 1e-15);
        assert!(!are_close(&p, &q, ClosenessParams::new(0.0, 0.2).unwrap()).unwrap());
        assert!(are_close(&p, &q, ClosenessParams::new(0.0, 0.25).unwrap()).unwrap());
        assert!(are_close(&p, &p, ClosenessParams::new(0.0, 0.0).unwrap()).unwrap());
    }

    #[test]
    fn negative_eps_rejected() {
        let p = pmf(&[1.0]);
        assert!(delta_at_eps(&p, &p, -0.1).is_err());
        assert!(ClosenessParams::new(-1.0, 0.0).is_err());
        assert!(ClosenessParams::new(0.0, 1.5).is_err());
    }

    #[test]
    fn chain_examples() {
        let c = chain_closeness(ClosenessParams::new(0.1, 0.01).unwrap(), ClosenessParams::new(0.2, 0.02).unwrap()).unwrap();
        assert!((c.eps - 0.3).abs() < 1e-15 && (c.delta - 0.06).abs() < 1e-15);
        let c = chain_closeness(ClosenessParams::new(0.1, 0.01).unwrap(), ClosenessParams::new(0.2, 0.01).unwrap()).unwrap();
        assert!((c.eps - 0.3).abs() < 1e-15 && (c.delta - 0.03).abs() < 1e-15);
        let c = chain_closeness(ClosenessParams::new(0.0, 0.0).unwrap(), ClosenessParams::new(0.0, 0.0).unwrap()).unwrap();
        assert_eq!((c.eps, c.delta), (0.0, 0.0));
        let err = chain_closeness(ClosenessParams::new(0.7, 0.0).unwrap(), ClosenessParams::new(0.0, 0.0).unwrap());
        assert!(matches!(err, Err(Error::ChainHypothesis { .. })));
    }

    #[test]
    fn intermediate_of_identical_is_identity() {
        let y = pmf(&[0.1, 0.6, 0.3]);
        let w = intermediate_pmf(&y, &y, ClosenessParams::new(0.2, 0.0).unwrap()).unwrap();
        assert_eq!(w, y);
    }

    #[test]
    fn intermediate_two_point_example() {
        let y = pmf(&[0.5, 0.5]);
        let z = pmf(&[0.7, 0.3]);
        let c = ClosenessParams::new(0.0, 0.2).unwrap();
        let w = intermediate_pmf(&y, &z, c).unwrap();
        assert!(delta_at_eps(&w, &z, 0.0).unwrap() <= COMPARISON_TOL);
        assert!(delta_at_eps(&w, &y, 0.0).unwrap() <= 0.2 + COMPARISON_TOL);
    }

    #[test]
    fn intermediate_with_empty_clip_set_falls_back() {
        // z exceeds e^eps y on the first outcome while nothing exceeds on the y side
        let y = pmf(&[0.1, 0.9]);
        let z = pmf(&[0.3, 0.7]);
        let c = ClosenessParams::new(0.5, delta_at_eps(&y, &z, 0.5).unwrap()).unwrap();
        let w = intermediate_pmf(&y, &z, c).unwrap();
        assert!(delta_at_eps(&w, &z, 0.5).unwrap() <= COMPARISON_TOL);
        assert!(delta_at_eps(&w, &y, 0.0).unwrap() <= c.delta + COMPARISON_TOL);
    }

    #[test]
    fn intermediate_rejects_far_pairs() {
        let y = pmf(&[0.5, 0.5]);
        let z = pmf(&[0.9, 0.1]);
        assert!(matches!(
            intermediate_pmf(&y, &z, ClosenessParams::new(0.0, 0.1).unwrap()),
            Err(Error::NotClose { .. })
        ));
    }

    #[test]
    fn kl_examples() {
        let p = pmf(&[0.6, 0.4]);
        let q = pmf(&[0.4, 0.6]);
        assert_eq!(kl_divergence(&p, &p).unwrap(), 0.0);
        let expect = 0.6 * 1.5f64.ln() + 0.4 * (2.0f64 / 3.0).ln();
        assert!((kl_divergence(&p, &q).unwrap() - expect).abs() < 1e-15);
        assert!((expect - 0.08109).abs() < 1e-5);
        let r = pmf(&[1.0, 0.0]);
        assert!(matches!(kl_divergence(&p, &r), Err(Error::SupportMismatch(_))));
    }

    #[test]
    fn hoeffding_examples() {
        assert_eq!(hoeffding_tail(10, 0.0), 1.0);
        assert!((hoeffding_tail(100, 0.1) - 2.0 * (-2.0f64).exp()).abs() < 1e-15);
        assert!((hoeffding_tail(100, 0.1) - 0.27067).abs() < 1e-5);
        let mut last = 1.0;
        for n in [1, 10, 100, 1000, 10_000] {
            let v = hoeffding_tail(n, 0.05);
            assert!(v <= last);
            last = v;
        }
    }
}
