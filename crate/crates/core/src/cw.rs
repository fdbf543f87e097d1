//! Curie-Weiss layer: the CW free-energy curve, its maximizer `mu(beta)`, the
//! inverse map `u -> beta_u`, the gap `delta_u`, the region `R_u`, the field
//! condition and the replica-symmetric fixed-point system.

use serde::Serialize;
use std::f64::consts::LN_2;

use crate::error::{invalid, Error, Result};
use crate::model::{GaussianField, TemperaturePoint};
use crate::quadrature::default_rule;
use crate::special::{bisect, ln_cosh, normal_cdf, sech2};

const ROOT_TOL: f64 = 1e-13;
const BETA_BRACKET_MAX: f64 = 1e3;

/// `f(mu, beta) = ln 2 + E ln cosh(beta mu + h) - beta mu^2 / 2`.
pub fn cw_curve(mu: f64, beta: f64, h: GaussianField) -> Result<f64> {
    if mu.is_nan() || mu.abs() > 1.0 {
        return Err(Error::Domain {
            name: "mu",
            value: mu,
            domain: "[-1,1]",
        });
    }
    let e = default_rule().expect(ln_cosh, beta * mu + h.mean, h.std)?;
    Ok(LN_2 + e - 0.5 * beta * mu * mu)
}

/// `d f / d mu = E tanh(beta mu + h) - mu`, scaled by `beta`.
pub fn cw_curve_slope(mu: f64, beta: f64, h: GaussianField) -> Result<f64> {
    let e = default_rule().expect(f64::tanh, beta * mu + h.mean, h.std)?;
    Ok(beta * (e - mu))
}

/// Critical temperature `alpha` with `alpha E sech^2(h) = 1`.
pub fn alpha_critical(h: GaussianField) -> Result<f64> {
    h.require_centered()?;
    Ok(1.0 / default_rule().expect(sech2, 0.0, h.std)?)
}

/// `(E tanh(beta mu + h) - mu) / mu` for centered `h`, evaluated without the
/// cancellation that plagues small `mu`. Continuous at `mu = 0`.
fn relative_excess(mu: f64, beta: f64, h: GaussianField) -> f64 {
    let a = beta * mu;
    let ratio = if mu == 0.0 {
        2.0 * beta
    } else {
        (2.0 * a).sinh() / mu
    };
    // E tanh(a + h) = E [tanh(a + h) + tanh(a - h)] / 2 for symmetric h
    let pair = |x: f64| -> f64 {
        if a < 1.0 {
            ratio / ((2.0 * a).cosh() + (2.0 * x).cosh())
        } else {
            ((a + x).tanh() + (a - x).tanh()) / (2.0 * mu)
        }
    };
    default_rule().expect_unchecked(pair, 0.0, h.std) - 1.0
}

/// The unique maximizer `mu(beta)` in `(0,1)` of the CW curve, i.e. the
/// positive root of `E tanh(beta mu + h) = mu`.
pub fn cw_fixed_point(beta: f64, h: GaussianField) -> Result<f64> {
    h.require_centered()?;
    let alpha = alpha_critical(h)?;
    if beta.is_nan() || beta <= alpha {
        return Err(invalid(format!(
            "beta={beta} must exceed the critical value alpha={alpha}"
        )));
    }
    let g = |mu: f64| relative_excess(mu, beta, h);
    if g(0.0) <= 0.0 {
        return Err(invalid(format!(
            "beta={beta} is numerically indistinguishable from alpha={alpha}"
        )));
    }
    bisect(g, 0.0, 1.0, ROOT_TOL)
}

/// The unique `beta_u > alpha` with `mu(beta_u) = u`.
pub fn beta_for_magnetization(u: f64, h: GaussianField) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::Domain {
            name: "u",
            value: u,
            domain: "(0,1)",
        });
    }
    let alpha = alpha_critical(h)?;
    let lo = alpha * (1.0 + 1e-9);
    let hi = BETA_BRACKET_MAX;
    let excess = |beta: f64| cw_fixed_point(beta, h).map(|m| m - u).unwrap_or(f64::NAN);
    let (flo, fhi) = (excess(lo), excess(hi));
    if !(flo < 0.0 && fhi > 0.0) {
        return Err(Error::Bracket { lo, hi });
    }
    bisect(excess, lo, hi, 1e-14 * alpha)
}

/// `delta_u(beta) = f(mu(beta), beta) - f(u, beta)` for `beta >= beta_u`.
pub fn delta_u(u: f64, beta: f64, h: GaussianField) -> Result<f64> {
    let beta_u = beta_for_magnetization(u, h)?;
    delta_u_given(u, beta_u, beta, h)
}

fn delta_u_given(u: f64, beta_u: f64, beta: f64, h: GaussianField) -> Result<f64> {
    if beta < beta_u * (1.0 - 1e-12) {
        return Err(invalid(format!(
            "delta_u needs beta >= beta_u = {beta_u}, got {beta}"
        )));
    }
    let mu = cw_fixed_point(beta.max(beta_u), h)?;
    Ok((cw_curve(mu, beta, h)? - cw_curve(u, beta, h)?).max(0.0))
}

/// Membership in `R_u` without the differentiability requirement: `beta >
/// beta_u` and `xi(1) < 2 delta_u(beta)`.
pub fn region_contains(u: f64, temp: &TemperaturePoint, h: GaussianField) -> Result<bool> {
    h.require_centered()?;
    let beta_u = beta_for_magnetization(u, h)?;
    if temp.beta <= beta_u {
        return Ok(false);
    }
    let delta = delta_u_given(u, beta_u, temp.beta, h)?;
    Ok(temp.xi.value(1.0) < 2.0 * delta)
}

/// Both sides of the field condition `E e^{2|h|} < 1 / max_b b / cosh^2 b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FieldCondition {
    pub expectation: f64,
    pub threshold: f64,
    /// Maximizer of `b / cosh^2 b`, the root of `2 b tanh b = 1`.
    pub maximizer: f64,
    pub holds: bool,
}

pub fn field_condition_report(h: GaussianField) -> Result<FieldCondition> {
    h.require_centered()?;
    let s = h.std;
    // E e^{2|h|} = 2 e^{2 s^2} Phi(2 s), exact at the kink of |h|
    let expectation = 2.0 * (2.0 * s * s).exp() * normal_cdf(2.0 * s);
    let maximizer = bisect(|b| 2.0 * b * b.tanh() - 1.0, 0.1, 2.0, 1e-15)?;
    let c = maximizer.cosh();
    let threshold = c * c / maximizer;
    Ok(FieldCondition {
        expectation,
        threshold,
        maximizer,
        holds: expectation < threshold,
    })
}

pub fn field_condition(h: GaussianField) -> Result<bool> {
    Ok(field_condition_report(h)?.holds)
}

/// `beta E sech^2(beta + h)`.
pub fn lemma_field_bound_value(beta: f64, h: GaussianField) -> Result<f64> {
    h.require_centered()?;
    if beta < 0.0 {
        return Err(Error::Domain {
            name: "beta",
            value: beta,
            domain: "[0,inf)",
        });
    }
    Ok(beta * default_rule().expect(sech2, beta, h.std)?)
}

/// Whether `beta E sech^2(beta + h) < 1`. Guaranteed under the field
/// condition; evaluated regardless so fields violating it can be probed.
pub fn lemma_field_bound_check(beta: f64, h: GaussianField) -> Result<bool> {
    Ok(lemma_field_bound_value(beta, h)? < 1.0)
}

/// A solution of the replica-symmetric system
/// `mu = E tanh(beta1 z sqrt(2q) + beta mu + h)`,
/// `q = E tanh^2(beta1 z sqrt(2q) + beta mu + h)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RsSolution {
    pub mu: f64,
    pub q: f64,
    pub iterations: usize,
}

const RS_DAMPING: f64 = 0.5;
const RS_TOL: f64 = 1e-12;
const RS_MAX_ITER: usize = 100_000;

/// `z` and `h` are independent normals, so the argument of `tanh` is itself
/// normal with variance `2 beta1^2 q + std(h)^2`.
fn rs_argument(beta1: f64, beta: f64, h: GaussianField, mu: f64, q: f64) -> (f64, f64) {
    let var = 2.0 * beta1 * beta1 * q + h.std * h.std;
    (beta * mu + h.mean, var.max(0.0).sqrt())
}

fn rs_rhs(beta1: f64, beta: f64, h: GaussianField, mu: f64, q: f64) -> (f64, f64) {
    let rule = default_rule();
    let (mean, std) = rs_argument(beta1, beta, h, mu, q);
    let m = rule.expect_unchecked(f64::tanh, mean, std);
    let t2 = rule.expect_unchecked(|x| x.tanh().powi(2), mean, std);
    (m, t2)
}

/// Damped alternating fixed-point iteration from the ordered start
/// `(mu, q) = (1, 1)`.
pub fn rs_solve(beta1: f64, beta: f64, h: GaussianField) -> Result<RsSolution> {
    let (mut mu, mut q) = (1.0f64, 1.0f64);
    for it in 1..=RS_MAX_ITER {
        let (m_new, _) = rs_rhs(beta1, beta, h, mu, q);
        let mu_next = (1.0 - RS_DAMPING) * mu + RS_DAMPING * m_new;
        let (_, q_new) = rs_rhs(beta1, beta, h, mu_next, q);
        let q_next = ((1.0 - RS_DAMPING) * q + RS_DAMPING * q_new).clamp(0.0, 1.0);
        let change = (mu_next - mu).abs().max((q_next - q).abs());
        mu = mu_next;
        q = q_next;
        if change < RS_TOL {
            let (rm, rq) = rs_rhs(beta1, beta, h, mu, q);
            let residual = (mu - rm).abs().max((q - rq).abs());
            if residual <= 1e-10 {
                return Ok(RsSolution {
                    mu,
                    q,
                    iterations: it,
                });
            }
        }
    }
    let (rm, rq) = rs_rhs(beta1, beta, h, mu, q);
    Err(Error::NoConvergence {
        what: "replica-symmetric iteration",
        iterations: RS_MAX_ITER,
        residual: (mu - rm).abs().max((q - rq).abs()),
    })
}

/// `E 2 beta1^2 / cosh^4(beta1 z sqrt(2q) + beta mu + h)` at the RS solution.
pub fn at_line_value(beta1: f64, beta: f64, h: GaussianField) -> Result<f64> {
    let sol = rs_solve(beta1, beta, h)?;
    let (mean, std) = rs_argument(beta1, beta, h, sol.mu, sol.q);
    let e = default_rule().expect(|x| sech2(x).powi(2), mean, std)?;
    Ok(2.0 * beta1 * beta1 * e)
}

/// The replica-symmetric stability heuristic: the AT expectation is below one.
pub fn at_line_check(beta1: f64, beta: f64, h: GaussianField) -> Result<bool> {
    Ok(at_line_value(beta1, beta, h)? < 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::MixtureXi;
    use crate::testutil::{adaptive_gaussian, cw_root, scalar_bisect};

    fn field(std: f64) -> GaussianField {
        GaussianField::centered(std).unwrap()
    }

    #[test]
    fn curve_values() {
        let v = cw_curve(0.0, 3.0, field(0.0)).unwrap();
        assert!((v - LN_2).abs() < 1e-15);
        let v = cw_curve(1.0, 2.0, field(0.0)).unwrap();
        assert!((v - (LN_2 + 2f64.cosh().ln() - 1.0)).abs() < 1e-14);
        let oracle = LN_2 + adaptive_gaussian(|x| x.cosh().ln(), 0.5, 0.3, 1e-14) - 0.125;
        let v = cw_curve(0.5, 1.0, field(0.3)).unwrap();
        assert!((v - oracle).abs() < 1e-10, "{v} vs {oracle}");
        assert!(cw_curve(1.2, 1.0, field(0.0)).is_err());
    }

    #[test]
    fn quadrature_matches_adaptive_for_log_cosh() {
        let oracle = adaptive_gaussian(|x| x.cosh().ln(), 0.0, 1.0, 1e-14);
        let v = default_rule().expect(ln_cosh, 0.0, 1.0).unwrap();
        assert!((v - oracle).abs() < 1e-10);
        // doubling the order barely moves the result
        let v128 = crate::quadrature::expect_gaussian(ln_cosh, 0.0, 1.0, 128).unwrap();
        assert!((v - v128).abs() < 1e-10);
    }

    #[test]
    fn alpha_values() {
        assert_eq!(alpha_critical(field(0.0)).unwrap(), 1.0);
        let oracle = 1.0 / adaptive_gaussian(|x| 1.0 / x.cosh().powi(2), 0.0, 0.3, 1e-14);
        assert!((alpha_critical(field(0.3)).unwrap() - oracle).abs() < 1e-11);
        assert!(alpha_critical(GaussianField::constant(0.2).unwrap()).is_err());
    }

    #[test]
    fn fixed_point_values() {
        let mu = cw_fixed_point(2.0, field(0.0)).unwrap();
        assert!((mu - cw_root(2.0)).abs() < 1e-12);
        assert!((mu - 0.9575).abs() < 1e-4);
        let near = cw_fixed_point(1.0 + 1e-6, field(0.0)).unwrap();
        assert!(near > 0.0 && near < 1e-2);
        let alpha = alpha_critical(field(0.3)).unwrap();
        let near = cw_fixed_point(alpha * (1.0 + 1e-6), field(0.3)).unwrap();
        assert!(near > 0.0 && near < 1e-2);
        assert!(cw_fixed_point(10.0, field(0.0)).unwrap() > 0.999);
        assert!(cw_fixed_point(0.5, field(0.0)).is_err());
        assert!(cw_fixed_point(1.0, field(0.0)).is_err());
    }

    #[test]
    fn fixed_point_is_the_curve_maximizer() {
        let h = field(0.3);
        for beta in [1.5, 2.0, 4.0] {
            let mu = cw_fixed_point(beta, h).unwrap();
            let e = adaptive_gaussian(f64::tanh, beta * mu, 0.3, 1e-14);
            assert!((e - mu).abs() < 1e-11);
            let fmax = cw_curve(mu, beta, h).unwrap();
            for i in 0..=100 {
                let m = i as f64 / 100.0;
                assert!(cw_curve(m, beta, h).unwrap() <= fmax + 1e-14);
            }
        }
    }

    #[test]
    fn slope_sign_structure() {
        let h = field(0.3);
        let beta = 2.5;
        let mu = cw_fixed_point(beta, h).unwrap();
        assert!(cw_curve_slope(0.0, beta, h).unwrap().abs() < 1e-14);
        for i in 1..100 {
            let m = i as f64 / 100.0;
            let s = cw_curve_slope(m, beta, h).unwrap();
            if m < mu - 1e-9 {
                assert!(s > 0.0, "m={m}");
            } else if m > mu + 1e-9 {
                assert!(s < 0.0, "m={m}");
            }
        }
    }

    #[test]
    fn free_energy_at_maximum_has_derivative_mu_squared_over_two() {
        let h = field(0.3);
        let eps = 1e-5;
        for beta in [1.5, 2.0, 3.0] {
            let at = |b: f64| cw_curve(cw_fixed_point(b, h).unwrap(), b, h).unwrap();
            let fd = (at(beta + eps) - at(beta - eps)) / (2.0 * eps);
            let mu = cw_fixed_point(beta, h).unwrap();
            assert!((fd - 0.5 * mu * mu).abs() < 1e-6);
        }
    }

    #[test]
    fn magnetization_increases_and_curve_is_even() {
        let h = field(0.3);
        let alpha = alpha_critical(h).unwrap();
        let mut prev = 0.0;
        for i in 1..40 {
            let beta = alpha + 0.1 * i as f64;
            let mu = cw_fixed_point(beta, h).unwrap();
            assert!(mu > prev);
            prev = mu;
        }
        for m in [0.1, 0.5, 0.9] {
            let a = cw_curve(m, 1.7, h).unwrap();
            let b = cw_curve(-m, 1.7, h).unwrap();
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn inverse_map() {
        let h = field(0.0);
        let mu2 = cw_root(2.0);
        let b = beta_for_magnetization(mu2, h).unwrap();
        assert!((b - 2.0).abs() < 1e-8);
        let b = beta_for_magnetization(0.9575, h).unwrap();
        assert!((b - 2.0).abs() < 1e-3);
        let b = beta_for_magnetization(0.01, h).unwrap();
        assert!((b - 1.0).abs() < 1e-3 && b > 1.0);
        // independent: m = tanh(b m) inverts to b = atanh(m) / m
        for u in [0.2, 0.6, 0.95] {
            let b = beta_for_magnetization(u, h).unwrap();
            assert!((b - u.atanh() / u).abs() < 1e-9);
        }
        let h3 = field(0.3);
        let b1 = beta_for_magnetization(0.3, h3).unwrap();
        let b2 = beta_for_magnetization(0.6, h3).unwrap();
        assert!(b1 < b2);
        assert!((cw_fixed_point(b2, h3).unwrap() - 0.6).abs() < 1e-10);
        assert!(beta_for_magnetization(1.0, h).is_err());
    }

    #[test]
    fn delta_u_behaviour() {
        let h = field(0.0);
        let bu = beta_for_magnetization(0.5, h).unwrap();
        assert!(delta_u(0.5, bu, h).unwrap().abs() < 1e-9);
        let d1 = delta_u(0.5, bu + 0.5, h).unwrap();
        let d2 = delta_u(0.5, bu + 1.0, h).unwrap();
        assert!(d2 > d1 && d1 > 0.0);
        assert!(delta_u(0.5, bu - 0.1, h).is_err());

        // scalar oracle at u=0.5, beta=3, zero field
        let m = cw_root(3.0);
        let f = |x: f64| LN_2 + (3.0 * x).cosh().ln() - 1.5 * x * x;
        let oracle = f(m) - f(0.5);
        assert!((delta_u(0.5, 3.0, h).unwrap() - oracle).abs() < 1e-12);
    }

    #[test]
    fn region_membership() {
        let h = field(0.0);
        let bu = beta_for_magnetization(0.6, h).unwrap();
        let zero = TemperaturePoint::new(bu + 0.3, MixtureXi::zero()).unwrap();
        assert!(region_contains(0.6, &zero, h).unwrap());
        let at = TemperaturePoint::new(bu, MixtureXi::zero()).unwrap();
        assert!(!region_contains(0.6, &at, h).unwrap());

        let temp = TemperaturePoint::new(3.0, MixtureXi::sk(0.1)).unwrap();
        let m = cw_root(3.0);
        let f = |x: f64| LN_2 + (3.0 * x).cosh().ln() - 1.5 * x * x;
        let expect = 0.01 < 2.0 * (f(m) - f(0.6));
        assert_eq!(region_contains(0.6, &temp, h).unwrap(), expect);
        assert!(expect);
        let big = TemperaturePoint::new(3.0, MixtureXi::sk(1.0)).unwrap();
        assert!(!region_contains(0.6, &big, h).unwrap());
    }

    #[test]
    fn field_condition_values() {
        let r = field_condition_report(field(0.0)).unwrap();
        assert_eq!(r.expectation, 1.0);
        assert!(r.holds);
        // independent root of 2 b tanh b = 1
        let b = scalar_bisect(|b| 2.0 * b * b.tanh() - 1.0, 0.1, 2.0);
        assert!((r.maximizer - b).abs() < 1e-12);
        assert!((r.maximizer - 0.7717).abs() < 1e-4);
        assert!((r.threshold - b.cosh().powi(2) / b).abs() < 1e-12);
        assert!((r.threshold - 2.2332).abs() < 1e-3);
        // reference from an independent high-precision root solve
        assert!((r.threshold - 2.233_423_063_746_441_6).abs() < 1e-12);

        let r = field_condition_report(field(0.3)).unwrap();
        let oracle = adaptive_gaussian(|x| (2.0 * x.abs()).exp(), 0.0, 0.3, 1e-14);
        assert!((r.expectation - oracle).abs() < 1e-9);
        assert!((r.expectation - 1.7376).abs() < 1e-3);
        assert!((r.expectation - 1.737_753_537_322_263_7).abs() < 1e-12);
        assert!(r.holds);
        assert!(!field_condition(field(1.0)).unwrap());
    }

    #[test]
    fn lemma_bound() {
        assert!(lemma_field_bound_check(0.0, field(0.3)).unwrap());
        let v = lemma_field_bound_value(0.7717, field(0.0)).unwrap();
        assert!((v - 0.7717 / 0.7717f64.cosh().powi(2)).abs() < 1e-12);
        assert!((v - 0.4478).abs() < 1e-3);
        for i in 1..=100 {
            let beta = 0.1 * i as f64;
            assert!(lemma_field_bound_check(beta, field(0.3)).unwrap(), "beta={beta}");
        }
    }

    #[test]
    fn rs_system() {
        let s = rs_solve(0.0, 0.0, field(0.0)).unwrap();
        assert!(s.mu.abs() < 1e-12 && s.q.abs() < 1e-12);

        let s = rs_solve(0.0, 2.0, field(0.0)).unwrap();
        let m = cw_root(2.0);
        assert!((s.mu - m).abs() < 1e-10);
        assert!((s.q - m * m).abs() < 1e-10);

        let h = field(0.3);
        let s = rs_solve(0.3, 0.0, h).unwrap();
        let std = (2.0 * 0.09 * s.q + 0.09f64).sqrt();
        let rm = adaptive_gaussian(f64::tanh, 0.0, std, 1e-14);
        let rq = adaptive_gaussian(|x| x.tanh().powi(2), 0.0, std, 1e-14);
        assert!((s.mu - rm).abs() <= 1e-10);
        assert!((s.q - rq).abs() <= 1e-10);
    }

    #[test]
    fn at_line() {
        assert!(at_line_check(0.0, 1.0, field(0.3)).unwrap());
        assert!(at_line_check(0.1, 2.0, field(0.3)).unwrap());
        assert!(!at_line_check(2.0, 0.0, field(0.0)).unwrap());
    }
}
