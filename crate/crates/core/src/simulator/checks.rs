//! Finite-size identities and inequalities checked on samples.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::disorder::{sample_disorder, SpinConfig, SpinModel};
use super::enumerate::enumerate_exact;
use super::observables::{map_disorders, run_chains, EstimateConfig, TupleTally};
use super::rng::{stream_rng, Purpose};
use crate::error::{invalid, Result};
use crate::model::{GaussianField, TemperaturePoint};

/// `sum_l |m_l| <= (n + sum_{l != l'} |R_ll'|)^(1/2)`, decided in exact
/// integer arithmetic: with `S_l = N m_l` and `Q_ll' = N R_ll'` it reads
/// `(sum |S_l|)^2 <= N (N n + sum_{l != l'} |Q_ll'|)`.
pub fn replica_inequality_check(replicas: &[SpinConfig]) -> Result<bool> {
    let Some(first) = replicas.first() else {
        return Err(invalid("no replicas"));
    };
    let sums: Vec<i64> = replicas.iter().map(SpinConfig::sum).collect();
    let mut dots = Vec::new();
    for (a, x) in replicas.iter().enumerate() {
        for y in &replicas[a + 1..] {
            dots.push(x.dot(y)?);
        }
    }
    Ok(inequality_holds(first.len(), &sums, &dots))
}

/// The integer form of the inequality from the spin sums `S_l` and the
/// overlaps `Q_ll'` of the unordered pairs.
pub(crate) fn inequality_holds(n: usize, sums: &[i64], pair_dots: &[i64]) -> bool {
    let n = n as i128;
    let k = sums.len() as i128;
    let lhs: i128 = sums.iter().map(|s| s.unsigned_abs() as i128).sum();
    let cross: i128 = pair_dots.iter().map(|q| 2 * q.unsigned_abs() as i128).sum();
    lhs * lhs <= n * (n * k + cross)
}

/// Number of violations among `count` uniformly random replica tuples with
/// `N <= max_n` spins and at most `max_replicas` replicas.
pub fn replica_inequality_random(
    root_seed: u64,
    count: usize,
    max_n: usize,
    max_replicas: usize,
) -> Result<usize> {
    if max_n == 0 || max_replicas == 0 {
        return Err(invalid("max_n and max_replicas must be positive"));
    }
    let mut rng = stream_rng(root_seed, Purpose::Tuples, 0, 0);
    let mut violations = 0;
    for _ in 0..count {
        let n = rng.random_range(1..=max_n);
        let k = rng.random_range(1..=max_replicas);
        // biased spins make large magnetizations common
        let bias: f64 = rng.random();
        let reps: Vec<SpinConfig> = (0..k)
            .map(|_| {
                let s = (0..n)
                    .map(|_| if rng.random::<f64>() < bias { 1 } else { -1 })
                    .collect();
                SpinConfig::new(s)
            })
            .collect::<Result<_>>()?;
        if !replica_inequality_check(&reps)? {
            violations += 1;
        }
    }
    Ok(violations)
}

/// Result of the Ghirlanda-Guerra residual estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GgResidual {
    /// Largest absolute residual over the test-function family.
    pub residual: f64,
    /// Residual for each test function, labelled by the replica pairs whose
    /// overlap signs it multiplies (empty label: the constant function).
    pub per_function: Vec<(String, f64)>,
    pub tuples: TupleTally,
}

/// Monte Carlo estimate of
/// `n E<psi(R_1,n+1) f> - E<psi(R_12)> E<f> - sum_{l=2..n} E<psi(R_1l) f>`
/// for `f` ranging over the products of overlap signs of the pairs among
/// replicas `1..n`. Every term is averaged over all assignments of distinct
/// chains to the replica labels.
pub fn gg_residual(
    temp: &TemperaturePoint,
    h: GaussianField,
    cfg: &EstimateConfig,
    n_level: usize,
    psi: &(dyn Fn(f64) -> f64 + Sync),
) -> Result<GgResidual> {
    cfg.validate()?;
    if !(2..=4).contains(&n_level) {
        return Err(invalid("n_level must be in 2..=4"));
    }
    if cfg.n_replicas < n_level + 1 {
        return Err(invalid(format!(
            "n_level {n_level} needs at least {} replicas",
            n_level + 1
        )));
    }
    let nr = cfg.n_replicas;
    let label_pairs: Vec<(usize, usize)> = (0..n_level)
        .flat_map(|a| (a + 1..n_level).map(move |b| (a, b)))
        .collect();
    let n_f = 1usize << label_pairs.len();
    let tuples = injective_tuples(nr, n_level + 1);
    let ordered_pairs = injective_tuples(nr, 2);

    // per disorder: [T1_f, T3_f, T4_f] for each f, then T2
    let per_disorder = map_disorders(cfg.n_disorder, |index| {
        let d = sample_disorder(cfg.n, temp, h, cfg.root_seed, index)?;
        let model = SpinModel::new(&d, temp)?;
        let nf = cfg.n as f64;
        let mut sums = vec![0.0; 3 * n_f + 1];
        let mut r = vec![0.0; nr * nr];
        let tally = run_chains(model, cfg, index, |_, set| {
            for a in 0..nr {
                for b in a + 1..nr {
                    let v = set.spin_dot(a, b) as f64 / nf;
                    r[a * nr + b] = v;
                    r[b * nr + a] = v;
                }
            }
            let tw = 1.0 / tuples.len() as f64;
            for t in &tuples {
                let p_new = psi(r[t[0] * nr + t[n_level]]);
                let p_sum: f64 = (1..n_level).map(|l| psi(r[t[0] * nr + t[l]])).sum();
                for fi in 0..n_f {
                    let f = sign_product(fi, &label_pairs, t, &r, nr);
                    sums[3 * fi] += tw * p_new * f;
                    sums[3 * fi + 1] += tw * f;
                    sums[3 * fi + 2] += tw * p_sum * f;
                }
            }
            let pw = 1.0 / ordered_pairs.len() as f64;
            for p in &ordered_pairs {
                sums[3 * n_f] += pw * psi(r[p[0] * nr + p[1]]);
            }
        })?;
        let inv = 1.0 / cfg.sweeps as f64;
        Ok((sums.into_iter().map(|s| s * inv).collect::<Vec<f64>>(), tally))
    })?;

    let nd = per_disorder.len() as f64;
    let mean = |k: usize| per_disorder.iter().map(|v| v.0[k]).sum::<f64>() / nd;
    let mut tuples = TupleTally::default();
    for (_, t) in &per_disorder {
        tuples.add(*t);
    }
    let e_psi = mean(3 * n_f);
    let mut per_function = Vec::with_capacity(n_f);
    for fi in 0..n_f {
        let res = n_level as f64 * mean(3 * fi) - e_psi * mean(3 * fi + 1) - mean(3 * fi + 2);
        let label = label_pairs
            .iter()
            .enumerate()
            .filter(|(b, _)| fi >> b & 1 == 1)
            .map(|(_, (a, b))| format!("{}{}", a + 1, b + 1))
            .collect::<Vec<_>>()
            .join("*");
        per_function.push((label, res));
    }
    let residual = per_function.iter().map(|(_, r)| r.abs()).fold(0.0, f64::max);
    Ok(GgResidual {
        residual,
        per_function,
        tuples,
    })
}

fn sign_product(fi: usize, pairs: &[(usize, usize)], t: &[usize], r: &[f64], nr: usize) -> f64 {
    let mut f = 1.0;
    for (b, &(x, y)) in pairs.iter().enumerate() {
        if fi >> b & 1 == 1 && r[t[x] * nr + t[y]] < 0.0 {
            f = -f;
        }
    }
    f
}

fn injective_tuples(n: usize, len: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(len);
    fn rec(n: usize, len: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == len {
            out.push(cur.clone());
            return;
        }
        for x in 0..n {
            if !cur.contains(&x) {
                cur.push(x);
                rec(n, len, cur, out);
                cur.pop();
            }
        }
    }
    rec(n, len, &mut cur, &mut out);
    out
}

/// Both sides of `d/d beta_p (1/N) E ln Z = beta_p (1 - E<R_12^(2p)>)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivativeCheck {
    pub p: usize,
    pub n: usize,
    pub n_disorder: usize,
    /// Central finite difference of the disorder-averaged free energy.
    pub lhs: f64,
    pub rhs: f64,
    /// Standard error of `lhs - rhs` over disorder samples.
    pub stderr: f64,
}

impl DerivativeCheck {
    pub fn difference(&self) -> f64 {
        self.lhs - self.rhs
    }
}

/// Exact-enumeration check of the derivative identity. The couplings are
/// shared between `beta_p +- eps`, so the finite difference has no sampling
/// noise of its own beyond the disorder average.
#[allow(clippy::too_many_arguments)]
pub fn finite_n_derivative_check(
    temp: &TemperaturePoint,
    h: GaussianField,
    n: usize,
    n_disorder: usize,
    p: usize,
    eps: f64,
    root_seed: u64,
) -> Result<DerivativeCheck> {
    if !(1..=2).contains(&p) {
        return Err(invalid("p must be 1 or 2"));
    }
    if !(eps > 0.0) {
        return Err(invalid("eps must be positive"));
    }
    if n_disorder < 2 {
        return Err(invalid("need at least two disorder samples"));
    }
    let bp = temp.xi.beta_p(p);
    let at = |v: f64| TemperaturePoint::new(temp.beta, temp.xi.with_beta_p(p, v));
    let (t_plus, t_minus) = (at(bp + eps)?, at(bp - eps)?);
    let nf = n as f64;
    let diffs = map_disorders(n_disorder, |index| {
        // the +eps point always carries every coupling array needed
        let d = sample_disorder(n, &t_plus, h, root_seed, index)?;
        let lp = enumerate_exact(&d, &t_plus)?.log_z();
        let lm = enumerate_exact(&d, &t_minus)?.log_z();
        let g = enumerate_exact(&d, temp)?;
        let r = g.expect_overlap(|x| x.powi(2 * p as i32));
        Ok(((lp - lm) / (2.0 * eps * nf), bp * (1.0 - r)))
    })?;
    let k = diffs.len() as f64;
    let lhs = diffs.iter().map(|d| d.0).sum::<f64>() / k;
    let rhs = diffs.iter().map(|d| d.1).sum::<f64>() / k;
    let dm = lhs - rhs;
    let var = diffs
        .iter()
        .map(|d| (d.0 - d.1 - dm).powi(2))
        .sum::<f64>()
        / (k - 1.0);
    Ok(DerivativeCheck {
        p,
        n,
        n_disorder,
        lhs,
        rhs,
        stderr: (var / k).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::MixtureXi;
    use crate::simulator::enumerate::enumerate_model;
    use proptest::prelude::*;

    #[test]
    fn inequality_edge_cases() {
        let up = SpinConfig::all_up(5);
        assert!(replica_inequality_check(&[up.clone()]).unwrap());
        assert!(replica_inequality_check(&[up.clone(), up.clone(), up]).unwrap());
        assert!(replica_inequality_check(&[]).is_err());
        assert_eq!(replica_inequality_random(3, 20_000, 64, 5).unwrap(), 0);
    }

    proptest! {
        #[test]
        fn inequality_holds_and_matches_float_form(
            n in 1usize..40,
            k in 1usize..6,
            bits in proptest::collection::vec(any::<u64>(), 6),
        ) {
            let reps: Vec<SpinConfig> = bits[..k].iter().map(|&b| SpinConfig::from_bits(b, n)).collect();
            prop_assert!(replica_inequality_check(&reps).unwrap());
            let lhs: f64 = reps.iter().map(|s| s.magnetization().abs()).sum();
            let mut rhs = k as f64;
            for a in 0..k {
                for b in 0..k {
                    if a != b {
                        rhs += reps[a].overlap(&reps[b]).unwrap().abs();
                    }
                }
            }
            prop_assert!(lhs <= rhs.sqrt() + 1e-12);
        }

        #[test]
        fn free_energy_convex_in_field_shift(
            seed in any::<u64>(),
            a in -1.5f64..1.5,
            b in -1.5f64..1.5,
        ) {
            // mu -> (1/N) ln Z^SK(beta mu + h) at fixed disorder
            let t = TemperaturePoint::new(0.0, MixtureXi::new(vec![0.7, 0.3]).unwrap()).unwrap();
            let d = sample_disorder(6, &t, GaussianField::centered(0.3).unwrap(), seed, 0).unwrap();
            let f = |mu: f64| {
                let mut shifted = d.clone();
                for x in &mut shifted.fields {
                    *x += 1.3 * mu;
                }
                enumerate_model(&SpinModel::new(&shifted, &t).unwrap()).unwrap().free_energy()
            };
            let mid = f(0.5 * (a + b));
            prop_assert!(mid <= 0.5 * (f(a) + f(b)) + 1e-12);
        }
    }

    #[test]
    fn derivative_identity_small() {
        let t = TemperaturePoint::new(1.0, MixtureXi::new(vec![0.5, 0.3]).unwrap()).unwrap();
        let h = GaussianField::centered(0.3).unwrap();
        for p in [1, 2] {
            let c = finite_n_derivative_check(&t, h, 6, 400, p, 1e-4, 2).unwrap();
            assert!(c.difference().abs() < 3.5 * c.stderr + 1e-6, "{c:?}");
        }
    }

    #[test]
    fn derivative_identity_zero_coefficient() {
        // at beta_2 = 0 the right side vanishes and the left has mean zero
        let t = TemperaturePoint::new(0.7, MixtureXi::sk(0.4)).unwrap();
        let c = finite_n_derivative_check(&t, GaussianField::zero(), 5, 300, 2, 1e-3, 1).unwrap();
        assert_eq!(c.rhs, 0.0);
        assert!(c.lhs.abs() < 3.5 * c.stderr, "{c:?}");
    }

    #[test]
    fn gg_constant_function_cancels() {
        let t = TemperaturePoint::new(0.8, MixtureXi::sk(0.7)).unwrap();
        let h = GaussianField::centered(0.3).unwrap();
        let mut cfg = EstimateConfig::new(8, 6, 400, 3);
        cfg.burnin = 100;
        let g = gg_residual(&t, h, &cfg, 2, &|x| x).unwrap();
        assert_eq!(g.per_function.len(), 2);
        assert_eq!(g.per_function[0].0, "");
        assert!(g.per_function[0].1.abs() < 1e-12);
        assert_eq!(g.per_function[1].0, "12");
        assert!(g.residual.is_finite());
        assert!(gg_residual(&t, h, &cfg, 3, &|x| x).is_err());
    }

    #[test]
    fn injective_tuple_count() {
        assert_eq!(injective_tuples(4, 3).len(), 24);
        assert_eq!(injective_tuples(3, 3).len(), 6);
    }
}
