//! Enumeration of ordered samples and of multiset compositions.

use std::sync::OnceLock;

/// Number of weak compositions of `n` into `k` parts, `C(n + k − 1, k − 1)`, saturating.
pub(crate) fn composition_count(n: usize, k: usize) -> u128 {
    if k == 0 {
        return (n == 0) as u128;
    }
    let (top, r) = ((n + k - 1) as u128, (k - 1).min(n) as u128);
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = match acc.checked_mul(top - i) {
            Some(v) => v / (i + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// `k^n`, saturating.
pub(crate) fn tuple_count(n: usize, k: usize) -> u128 {
    let mut acc: u128 = 1;
    for _ in 0..n {
        acc = match acc.checked_mul(k as u128) {
            Some(v) => v,
            None => return u128::MAX,
        };
    }
    acc
}

/// Weak compositions of `n` into `k` parts in lexicographic order.
pub(crate) struct Compositions {
    current: Option<Vec<usize>>,
}

pub(crate) fn compositions(n: usize, k: usize) -> Compositions {
    assert!(k > 0);
    let mut first = vec![0; k];
    first[k - 1] = n;
    Compositions { current: Some(first) }
}

impl Iterator for Compositions {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.take()?;
        let k = out.len();
        // advance: find the rightmost position before the last with mass to its right
        let mut next = out.clone();
        let mut i = k.wrapping_sub(2);
        while i < k {
            let tail: usize = next[i + 1..].iter().sum();
            if tail > 0 {
                next[i] += 1;
                let rest = tail - 1;
                for v in &mut next[i + 1..] {
                    *v = 0;
                }
                next[k - 1] = rest;
                self.current = Some(next);
                break;
            }
            i = i.wrapping_sub(1);
        }
        Some(out)
    }
}

/// All `n`-tuples over `0..k`, least significant position last.
pub(crate) struct Tuples {
    k: usize,
    current: Option<Vec<usize>>,
}

pub(crate) fn tuples(n: usize, k: usize) -> Tuples {
    Tuples {
        k,
        current: if k == 0 { None } else { Some(vec![0; n]) },
    }
}

impl Iterator for Tuples {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.take()?;
        let mut next = out.clone();
        for pos in (0..next.len()).rev() {
            next[pos] += 1;
            if next[pos] < self.k {
                self.current = Some(next);
                break;
            }
            next[pos] = 0;
        }
        Some(out)
    }
}

fn ln_factorials() -> &'static Vec<f64> {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = Vec::with_capacity(4097);
        t.push(0.0);
        for i in 1..=4096usize {
            t.push(t[i - 1] + (i as f64).ln());
        }
        t
    })
}

pub(crate) fn ln_factorial(n: usize) -> f64 {
    let t = ln_factorials();
    if n < t.len() {
        t[n]
    } else {
        // Stirling with two correction terms; error far below 1e-15 relative here
        let x = n as f64;
        x * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI * x).ln() + 1.0 / (12.0 * x) - 1.0 / (360.0 * x.powi(3))
    }
}

/// Multinomial probability of `counts` under cell probabilities `probs`.
pub(crate) fn multinomial_prob(counts: &[usize], probs: &[f64]) -> f64 {
    let n: usize = counts.iter().sum();
    let mut ln = ln_factorial(n);
    for (&c, &p) in counts.iter().zip(probs) {
        if c == 0 {
            continue;
        }
        if p <= 0.0 {
            return 0.0;
        }
        ln += c as f64 * p.ln() - ln_factorial(c);
    }
    ln.exp()
}
