//! Gauss-Hermite rules for expectations over a normal variable.
//!
//! Rules use the probabilists' normalization: nodes are in standard-normal
//! units and the weights sum to one, so `E f(mean + std * Z)` is simply
//! `sum_i w_i f(mean + std * n_i)`.

use std::sync::OnceLock;

use crate::error::{Error, Result};

pub const DEFAULT_ORDER: usize = 64;
pub const MAX_ORDER: usize = 256;

/// A fixed-order Gauss-Hermite rule. Nodes are sorted ascending and exactly
/// symmetric about zero.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussHermite {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussHermite {
    pub fn new(order: usize) -> Result<Self> {
        if !(1..=MAX_ORDER).contains(&order) {
            return Err(Error::InvalidParameter(format!(
                "Gauss-Hermite order must be in 1..={MAX_ORDER}, got {order}"
            )));
        }
        let (nodes, weights) = probabilists_rule(order);
        Ok(Self { nodes, weights })
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn pairs(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    /// `E f(mean + std * Z)` for standard normal `Z`. A zero `std` returns
    /// `f(mean)` exactly.
    pub fn expect<F>(&self, f: F, mean: f64, std: f64) -> Result<f64>
    where
        F: Fn(f64) -> f64,
    {
        if std == 0.0 {
            let v = f(mean);
            return if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::NonFinite { at: mean })
            };
        }
        let mut acc = 0.0;
        for (n, w) in self.pairs() {
            let x = mean + std * n;
            let v = f(x);
            if !v.is_finite() {
                return Err(Error::NonFinite { at: x });
            }
            acc += w * v;
        }
        Ok(acc)
    }

    /// Same as [`expect`](Self::expect) without the finiteness check, for
    /// inner loops whose integrands are finite by construction.
    #[inline]
    pub(crate) fn expect_unchecked<F>(&self, f: F, mean: f64, std: f64) -> f64
    where
        F: Fn(f64) -> f64,
    {
        if std == 0.0 {
            return f(mean);
        }
        self.pairs().map(|(n, w)| w * f(mean + std * n)).sum()
    }
}

/// The shared order-64 rule.
pub fn default_rule() -> &'static GaussHermite {
    static RULE: OnceLock<GaussHermite> = OnceLock::new();
    RULE.get_or_init(|| GaussHermite::new(DEFAULT_ORDER).expect("default order is valid"))
}

/// Nodes and weights of the probabilists' rule of the given order.
pub fn gauss_hermite_rule(order: usize) -> Result<Vec<(f64, f64)>> {
    Ok(GaussHermite::new(order)?.pairs().collect())
}

/// `E f(mean + std * Z)` with a rule of the given order.
pub fn expect_gaussian<F>(f: F, mean: f64, std: f64, order: usize) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if std < 0.0 || !std.is_finite() || !mean.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "gaussian expectation needs finite mean and std >= 0, got ({mean}, {std})"
        )));
    }
    if order == DEFAULT_ORDER {
        default_rule().expect(f, mean, std)
    } else {
        GaussHermite::new(order)?.expect(f, mean, std)
    }
}

/// Probabilists' nodes and weights: eigenvalues of the Jacobi matrix (off
/// diagonal `sqrt(k)`) located by Sturm-sequence bisection, polished by
/// Newton steps, with Christoffel weights `1 / sum_k p_k(x)^2` from the
/// orthonormal recurrence.
fn probabilists_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    let off: Vec<f64> = (1..n).map(|k| (k as f64).sqrt()).collect();
    // number of Jacobi eigenvalues strictly below x
    let count_below = |x: f64| -> usize {
        let mut count = 0;
        let mut d = -x;
        if d < 0.0 {
            count += 1;
        }
        for &b in &off {
            let prev = if d == 0.0 { f64::EPSILON } else { d };
            d = -x - b * b / prev;
            if d < 0.0 {
                count += 1;
            }
        }
        count
    };
    let bound = 2.0 * (n as f64).sqrt() + 1.0;
    let half = n / 2;
    let mut nodes = vec![0.0; n];
    // positive roots only; the rule is symmetric
    for i in 0..half {
        let idx = n - 1 - i;
        let (mut lo, mut hi) = (0.0, bound);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if count_below(mid) > idx {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let mut x = 0.5 * (lo + hi);
        for _ in 0..3 {
            let (p, dp, _) = orthonormal(n, x);
            let step = p / dp;
            if step.is_finite() {
                x -= step;
            }
        }
        nodes[idx] = x;
        nodes[i] = -x;
    }
    let weights = nodes.iter().map(|&x| 1.0 / orthonormal(n, x).2).collect();
    (nodes, weights)
}

/// `(p_n(x), p_n'(x), sum_{k<n} p_k(x)^2)` for the orthonormal probabilists'
/// Hermite polynomials.
fn orthonormal(n: usize, x: f64) -> (f64, f64, f64) {
    let (mut p_prev, mut p) = (0.0, 1.0);
    let (mut d_prev, mut d) = (0.0, 0.0);
    let mut sum = 0.0;
    for k in 0..n {
        sum += p * p;
        let kf = k as f64;
        let s = (kf + 1.0).sqrt();
        let p_next = (x * p - kf.sqrt() * p_prev) / s;
        let d_next = (p + x * d - kf.sqrt() * d_prev) / s;
        p_prev = p;
        p = p_next;
        d_prev = d;
        d = d_next;
    }
    (p, d, sum)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_one_and_two() {
        let one = gauss_hermite_rule(1).unwrap();
        assert_eq!(one.len(), 1);
        assert!(one[0].0.abs() < 1e-15);
        assert!((one[0].1 - 1.0).abs() < 1e-15);

        let two = gauss_hermite_rule(2).unwrap();
        assert!((two[0].0 + 1.0).abs() < 1e-14 && (two[1].0 - 1.0).abs() < 1e-14);
        assert!((two[0].1 - 0.5).abs() < 1e-14 && (two[1].1 - 0.5).abs() < 1e-14);
    }

    #[test]
    fn order_64_moments() {
        let rule = GaussHermite::new(64).unwrap();
        let sum: f64 = rule.weights().iter().sum();
        assert!((sum - 1.0).abs() < 1e-14, "sum of weights {sum}");
        let second: f64 = rule.pairs().map(|(n, w)| w * n * n).sum();
        assert!((second - 1.0).abs() < 1e-12, "second moment {second}");
        let fourth: f64 = rule.pairs().map(|(n, w)| w * n.powi(4)).sum();
        assert!((fourth - 3.0).abs() < 1e-11);
    }

    #[test]
    fn nodes_symmetric_and_sorted() {
        for order in [3, 10, 64, 101, 256] {
            let rule = GaussHermite::new(order).unwrap();
            let n = rule.nodes();
            for i in 0..order {
                assert_eq!(n[i], -n[order - 1 - i]);
                if i > 0 {
                    assert!(n[i] > n[i - 1]);
                }
            }
            let sum: f64 = rule.weights().iter().sum();
            assert!((sum - 1.0).abs() < 1e-12, "order {order}: {sum}");
        }
    }

    #[test]
    fn rejects_bad_orders() {
        assert!(GaussHermite::new(0).is_err());
        assert!(GaussHermite::new(257).is_err());
    }

    #[test]
    fn simple_expectations() {
        assert!((expect_gaussian(|_| 1.0, 0.3, 2.0, 64).unwrap() - 1.0).abs() < 1e-14);
        for order in [2, 5, 64] {
            let v = expect_gaussian(|x| x * x, 0.0, 1.0, order).unwrap();
            assert!((v - 1.0).abs() < 1e-12);
        }
        let exact = expect_gaussian(|x| x.cos(), 0.7, 0.0, 64).unwrap();
        assert_eq!(exact, 0.7f64.cos());
    }

    #[test]
    fn odd_integrands_vanish() {
        for mean in [-1.3, 0.0, 0.4, 2.0] {
            let v = expect_gaussian(|x| (x - mean).tanh(), mean, 0.8, 64).unwrap();
            assert!(v.abs() < 1e-13, "mean {mean}: {v}");
        }
    }

    #[test]
    fn non_finite_is_an_error() {
        let r = expect_gaussian(|x| 1.0 / x, 0.0, 1.0, 3);
        assert!(matches!(r, Err(Error::NonFinite { .. })));
    }

    #[test]
    fn deterministic() {
        let f = |x: f64| x.cosh().ln();
        let a = expect_gaussian(f, 0.2, 1.3, 64).unwrap();
        let b = expect_gaussian(f, 0.2, 1.3, 64).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
