//! The SKFI variational layer: `mu -> F^SK(B, beta mu + h) - beta mu^2 / 2`,
//! its argmax set, the B_d verdict and the predicted overlap law.

use serde::{Deserialize, Serialize};

use crate::cw::cw_curve;
use crate::error::{invalid, Error, Result};
use crate::model::{GaussianField, TemperaturePoint};
use crate::parisi::{parisi_minimize, parisi_moment, sk_free_energy, DiscreteMeasure, ParisiResult};
use crate::special::golden_min;

pub const TOL_OMEGA: f64 = 1e-6;
pub const MU_MERGE_RADIUS: f64 = 1e-4;
pub const SCAN_STEP: f64 = 1e-3;
pub const REFINE_TOL: f64 = 1e-10;
pub const FD_EPS: f64 = 1e-4;
/// Half-width of the refinement window around each scan candidate.
const REFINE_HALF_WIDTH: f64 = 1e-2;
/// Scan maxima this far below the best scan value are not refined.
const SCAN_SLACK: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    Unique,
    SymmetricPair,
    DegenerateBetaZero,
    Ambiguous,
}

impl Classification {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Unique => "unique",
            Self::SymmetricPair => "symmetric-pair",
            Self::DegenerateBetaZero => "degenerate-beta-zero",
            Self::Ambiguous => "ambiguous",
        }
    }

    /// Numerical membership in the set where the argmax is one point or a
    /// symmetric pair. A verdict at the reported tolerance only.
    pub fn in_bd(self) -> bool {
        matches!(self, Self::Unique | Self::SymmetricPair)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArgmaxReport {
    pub value: f64,
    pub maximizers: Vec<f64>,
    pub classification: Classification,
    pub tol: f64,
}

impl ArgmaxReport {
    /// The nonnegative maximizer used for the overlap law, or 0 when the
    /// argmax is degenerate.
    pub fn nonnegative_maximizer(&self) -> f64 {
        self.maximizers
            .iter()
            .copied()
            .find(|m| *m >= 0.0)
            .unwrap_or_else(|| self.maximizers.first().map_or(0.0, |m| m.abs()))
    }
}

/// `F^SK(B, beta mu + h) - beta mu^2 / 2`.
pub fn skfi_objective(mu: f64, temp: &TemperaturePoint, h: GaussianField) -> Result<f64> {
    if mu.is_nan() || mu.abs() > 1.0 {
        return Err(Error::Domain {
            name: "mu",
            value: mu,
            domain: "[-1,1]",
        });
    }
    if temp.xi.is_zero() {
        return cw_curve(mu, temp.beta, h);
    }
    Ok(sk_free_energy(&temp.xi, temp.beta * mu, h)? - 0.5 * temp.beta * mu * mu)
}

/// The same objective restricted to one-atom measures; an upper bound of
/// the full objective used only to locate candidate maximizers.
fn scan_objective(mu: f64, temp: &TemperaturePoint, h: GaussianField) -> Result<f64> {
    if temp.xi.is_zero() {
        return cw_curve(mu, temp.beta, h);
    }
    let field = GaussianField::new((h.mean + temp.beta * mu).abs(), h.std)?;
    Ok(parisi_minimize(&temp.xi, field, 1)?.value - 0.5 * temp.beta * mu * mu)
}

/// Classifies a sorted list of maximizers.
pub fn classify_maximizers(maximizers: &[f64], tol: f64) -> Classification {
    match maximizers {
        [] => Classification::DegenerateBetaZero,
        [_] => Classification::Unique,
        [a, b] if (a + b).abs() <= tol && *b > 0.0 => Classification::SymmetricPair,
        _ => Classification::Ambiguous,
    }
}

/// Clusters candidate `(mu, value)` pairs: keeps those within `tol` of the
/// best value and merges points closer than `MU_MERGE_RADIUS`.
fn cluster(mut cands: Vec<(f64, f64)>, tol: f64) -> (f64, Vec<f64>) {
    let best = cands.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max);
    cands.retain(|c| c.1 >= best - tol);
    cands.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::new();
    for c in cands {
        match out.last_mut() {
            Some(last) if c.0 - last.0 < MU_MERGE_RADIUS => {
                if c.1 > last.1 {
                    *last = c;
                }
            }
            _ => out.push(c),
        }
    }
    (best, out.into_iter().map(|c| c.0).collect())
}

/// `max_mu` of the objective with the argmax set at the default tolerance.
pub fn skfi_free_energy(temp: &TemperaturePoint, h: GaussianField) -> Result<ArgmaxReport> {
    skfi_free_energy_with_tol(temp, h, TOL_OMEGA)
}

pub fn skfi_free_energy_with_tol(
    temp: &TemperaturePoint,
    h: GaussianField,
    tol: f64,
) -> Result<ArgmaxReport> {
    if temp.beta == 0.0 {
        return Ok(ArgmaxReport {
            value: sk_free_energy(&temp.xi, 0.0, h)?,
            maximizers: Vec::new(),
            classification: Classification::DegenerateBetaZero,
            tol,
        });
    }
    let even = h.is_centered();
    let lo = if even { 0.0 } else { -1.0 };
    let steps = ((1.0 - lo) / SCAN_STEP).round() as usize;
    let grid: Vec<f64> = (0..=steps)
        .map(|i| (lo + i as f64 * SCAN_STEP).min(1.0))
        .collect();
    let scan = grid
        .iter()
        .map(|&mu| scan_objective(mu, temp, h))
        .collect::<Result<Vec<f64>>>()?;
    let top = scan.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut candidates = Vec::new();
    for i in 0..scan.len() {
        let left = i == 0 || scan[i] >= scan[i - 1];
        let right = i + 1 == scan.len() || scan[i] >= scan[i + 1];
        if left && right && scan[i] >= top - SCAN_SLACK {
            candidates.push(grid[i]);
        }
    }
    let mut refined = Vec::with_capacity(candidates.len());
    for c in candidates {
        let a = (c - REFINE_HALF_WIDTH).max(lo);
        let b = (c + REFINE_HALF_WIDTH).min(1.0);
        let failure = std::cell::RefCell::new(None);
        let (mu, neg) = golden_min(
            |m| match skfi_objective(m, temp, h) {
                Ok(v) => -v,
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                    f64::INFINITY
                }
            },
            a,
            b,
            REFINE_TOL,
        );
        if let Some(e) = failure.into_inner() {
            return Err(e);
        }
        let mu = if even && mu < MU_MERGE_RADIUS { 0.0 } else { mu };
        let value = if mu == 0.0 { skfi_objective(0.0, temp, h)? } else { -neg };
        refined.push((mu, value));
    }
    let (value, mut maximizers) = cluster(refined, tol);
    if even {
        let mirrored: Vec<f64> = maximizers.iter().filter(|m| **m > 0.0).map(|m| -m).collect();
        maximizers.extend(mirrored);
        maximizers.sort_by(f64::total_cmp);
    }
    Ok(ArgmaxReport {
        value,
        classification: classify_maximizers(&maximizers, tol),
        maximizers,
        tol,
    })
}

/// Numerical B_d verdict; `beta` must be positive.
pub fn classify_bd(temp: &TemperaturePoint, h: GaussianField, tol: f64) -> Result<Classification> {
    if temp.beta <= 0.0 {
        return Err(invalid("classify_bd needs beta > 0"));
    }
    Ok(skfi_free_energy_with_tol(temp, h, tol)?.classification)
}

/// Minimizer of the Parisi functional at field `beta mu + h`, with `mu` the
/// nonnegative maximizer. The measure is the predicted limiting overlap law.
pub fn predicted_overlap_law(temp: &TemperaturePoint, h: GaussianField) -> Result<ParisiResult> {
    let report = skfi_free_energy(temp, h)?;
    overlap_law_for(temp, h, &report)
}

pub fn overlap_law_for(
    temp: &TemperaturePoint,
    h: GaussianField,
    report: &ArgmaxReport,
) -> Result<ParisiResult> {
    if report.classification == Classification::Ambiguous {
        return Err(Error::Ambiguous(report.maximizers.len()));
    }
    let mu = report.nonnegative_maximizer();
    let field = GaussianField::new((h.mean + temp.beta * mu).abs(), h.std)?;
    parisi_minimize(&temp.xi, field, crate::parisi::DEFAULT_K_MAX)
}

/// Smallest atom of the measure.
pub fn overlap_support_min(measure: &DiscreteMeasure) -> f64 {
    measure.atoms()[0]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundStatus {
    Checked,
    NonIdentifiable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MagnetizationOverlapBound {
    pub mu_squared: f64,
    pub c: f64,
    pub holds: Option<bool>,
    pub status: BoundStatus,
}

/// `mu^2 <= c + 1e-6` with `c` the smallest atom of the predicted law.
pub fn magnetization_overlap_bound_check(
    temp: &TemperaturePoint,
    h: GaussianField,
) -> Result<MagnetizationOverlapBound> {
    let report = skfi_free_energy(temp, h)?;
    let law = overlap_law_for(temp, h, &report)?;
    let mu = report.nonnegative_maximizer();
    let c = overlap_support_min(&law.measure);
    let (holds, status) = if law.diagnostics.non_identifiable {
        (None, BoundStatus::NonIdentifiable)
    } else {
        (Some(mu * mu <= c + 1e-6), BoundStatus::Checked)
    };
    Ok(MagnetizationOverlapBound {
        mu_squared: mu * mu,
        c,
        holds,
        status,
    })
}

/// Central difference of `F(beta, B, h)` in `beta`.
pub fn free_energy_beta_derivative(temp: &TemperaturePoint, h: GaussianField, eps: f64) -> Result<f64> {
    let lo = (temp.beta - eps).max(0.0);
    let hi = temp.beta + eps;
    let up = skfi_free_energy(&TemperaturePoint::new(hi, temp.xi.clone())?, h)?.value;
    let dn = skfi_free_energy(&TemperaturePoint::new(lo, temp.xi.clone())?, h)?.value;
    Ok((up - dn) / (hi - lo))
}

/// Central difference of `F(beta, B, h)` in `beta_p`.
pub fn free_energy_beta_p_derivative(
    temp: &TemperaturePoint,
    h: GaussianField,
    p: usize,
    eps: f64,
) -> Result<f64> {
    check_p(temp, p)?;
    let b = temp.xi.beta_p(p);
    let at = |v: f64| -> Result<f64> {
        let t = TemperaturePoint::new(temp.beta, temp.xi.with_beta_p(p, v))?;
        Ok(skfi_free_energy(&t, h)?.value)
    };
    Ok((at(b + eps)? - at(b - eps)?) / (2.0 * eps))
}

/// `beta_p (1 - int q^{2p} dnu)` with `nu` the predicted overlap law.
pub fn beta_p_derivative_formula(temp: &TemperaturePoint, h: GaussianField, p: usize) -> Result<f64> {
    check_p(temp, p)?;
    let b = temp.xi.beta_p(p);
    if b == 0.0 {
        return Ok(0.0);
    }
    let law = predicted_overlap_law(temp, h)?;
    Ok(b * (1.0 - parisi_moment(&law.measure, p)))
}

fn check_p(temp: &TemperaturePoint, p: usize) -> Result<()> {
    if p == 0 || p > temp.xi.coeffs().len() {
        return Err(invalid(format!(
            "p must be in 1..={}, got {p}",
            temp.xi.coeffs().len()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::MixtureXi;
    use crate::testutil::{adaptive_gaussian, cw_root};
    use std::f64::consts::LN_2;

    fn tp(beta: f64, coeffs: Vec<f64>) -> TemperaturePoint {
        let xi = if coeffs.is_empty() { MixtureXi::zero() } else { MixtureXi::new(coeffs).unwrap() };
        TemperaturePoint::new(beta, xi).unwrap()
    }

    fn lncosh(x: f64) -> f64 {
        x.abs() + (-2.0 * x.abs()).exp().ln_1p() - LN_2
    }

    #[test]
    fn cw_supercritical() {
        let r = skfi_free_energy(&tp(2.0, vec![]), GaussianField::zero()).unwrap();
        let mu = cw_root(2.0);
        assert!((mu - 0.9575).abs() < 1e-4);
        assert_eq!(r.classification, Classification::SymmetricPair);
        assert_eq!(r.maximizers.len(), 2);
        assert!((r.maximizers[1] - mu).abs() < 1e-4);
        assert_eq!(r.maximizers[0], -r.maximizers[1]);
        let want = LN_2 + lncosh(2.0 * mu) - mu * mu;
        assert!((r.value - want).abs() < 1e-8);
    }

    #[test]
    fn cw_subcritical() {
        let r = skfi_free_energy(&tp(0.5, vec![]), GaussianField::zero()).unwrap();
        assert_eq!(r.maximizers, vec![0.0]);
        assert_eq!(r.classification, Classification::Unique);
        assert!((r.value - LN_2).abs() < 1e-12);
        assert_eq!(classify_bd(&tp(0.5, vec![]), GaussianField::zero(), TOL_OMEGA).unwrap(), Classification::Unique);
        assert!(classify_bd(&tp(0.0, vec![]), GaussianField::zero(), TOL_OMEGA).is_err());
    }

    #[test]
    fn cw_with_biased_field_has_one_maximizer() {
        let h = GaussianField::new(0.2, 0.3).unwrap();
        let r = skfi_free_energy(&tp(1.5, vec![]), h).unwrap();
        assert_eq!(r.classification, Classification::Unique);
        let mu = r.maximizers[0];
        assert!(mu > 0.0);
        let slope = adaptive_gaussian(f64::tanh, 1.5 * mu + 0.2, 0.3, 1e-13) - mu;
        assert!(slope.abs() < 1e-7, "{slope}");
    }

    #[test]
    fn beta_zero_is_degenerate() {
        let t = tp(0.0, vec![0.3]);
        let r = skfi_free_energy(&t, GaussianField::zero()).unwrap();
        assert_eq!(r.classification, Classification::DegenerateBetaZero);
        assert!(r.maximizers.is_empty());
        assert!((r.value - (LN_2 + 0.045)).abs() < 1e-6);
        let a = skfi_objective(0.3, &t, GaussianField::zero()).unwrap();
        let b = skfi_objective(-0.8, &t, GaussianField::zero()).unwrap();
        assert!((a - b).abs() < 1e-12 && (a - r.value).abs() < 1e-12);
    }

    #[test]
    fn classification_contract() {
        assert_eq!(classify_maximizers(&[0.3, 0.7], 1e-6), Classification::Ambiguous);
        assert_eq!(classify_maximizers(&[-0.5, 0.5], 1e-6), Classification::SymmetricPair);
        assert_eq!(classify_maximizers(&[-0.5, 0.0, 0.5], 1e-6), Classification::Ambiguous);
        assert_eq!(classify_maximizers(&[0.1], 1e-6), Classification::Unique);
        assert_eq!(classify_maximizers(&[], 1e-6), Classification::DegenerateBetaZero);
        let (v, m) = cluster(vec![(0.3, 1.0), (0.30001, 1.0 - 1e-9), (0.7, 1.0 - 2e-7), (0.9, 0.5)], 1e-6);
        assert_eq!(v, 1.0);
        assert_eq!(m, vec![0.3, 0.7]);
        assert_eq!(classify_maximizers(&m, 1e-6), Classification::Ambiguous);
        let s = serde_json::to_string(&ArgmaxReport {
            value: 1.0,
            maximizers: vec![-0.5, 0.5],
            classification: Classification::SymmetricPair,
            tol: 1e-6,
        })
        .unwrap();
        assert_eq!(s, r#"{"value":1.0,"maximizers":[-0.5,0.5],"classification":"symmetric-pair","tol":1e-6}"#);
    }

    #[test]
    fn objective_domain_and_cw_identity() {
        let t = tp(1.3, vec![]);
        let h = GaussianField::new(0.1, 0.4).unwrap();
        assert!(skfi_objective(1.01, &t, h).is_err());
        assert_eq!(skfi_objective(0.4, &t, h).unwrap(), cw_curve(0.4, 1.3, h).unwrap());
    }

    #[test]
    fn objective_matches_one_atom_composition() {
        let t = tp(2.0, vec![0.3]);
        let mu: f64 = 0.9;
        let v = skfi_objective(mu, &t, GaussianField::zero()).unwrap();
        let shift = 2.0 * mu;
        let best = (0..=10_000)
            .map(|i| {
                let q = i as f64 * 1e-4;
                let e = adaptive_gaussian(lncosh, shift, (0.18 * q).sqrt().max(1e-300), 1e-13);
                let e = if q == 0.0 { lncosh(shift) } else { e };
                LN_2 + e + 0.5 * (0.09 - 0.09 * q * q - (1.0 - q) * 0.18 * q)
            })
            .fold(f64::INFINITY, f64::min);
        assert!((v - (best - mu * mu)).abs() < 1e-6, "{v} {}", best - mu * mu);
    }

    #[test]
    fn evenness_and_sandwich() {
        let t = tp(2.0, vec![0.3]);
        let h = GaussianField::centered(0.3).unwrap();
        for mu in [0.2, 0.55] {
            let a = skfi_objective(mu, &t, h).unwrap();
            let b = skfi_objective(-mu, &t, h).unwrap();
            assert!((a - b).abs() < 1e-10);
            let c = cw_curve(mu, 2.0, h).unwrap();
            assert!(c <= a && a <= c + 0.045 + 1e-6);
        }
    }

    #[test]
    fn zero_mixture_bound_is_non_identifiable() {
        let r = magnetization_overlap_bound_check(&tp(2.0, vec![]), GaussianField::zero()).unwrap();
        assert_eq!(r.status, BoundStatus::NonIdentifiable);
        assert_eq!(r.holds, None);
        let law = predicted_overlap_law(&tp(2.0, vec![]), GaussianField::zero()).unwrap();
        assert!(law.diagnostics.non_identifiable);
    }

    #[test]
    fn support_min() {
        let m = DiscreteMeasure::new(vec![0.2, 0.8], vec![0.5, 0.5]).unwrap();
        assert_eq!(overlap_support_min(&m), 0.2);
        assert_eq!(overlap_support_min(&DiscreteMeasure::dirac(0.4).unwrap()), 0.4);
    }

    #[test]
    fn cw_beta_derivative_is_half_mu_squared() {
        // at the maximizer, dF/dbeta = mu E tanh(beta mu + h) - mu^2 / 2 = mu^2 / 2
        let t = tp(2.0, vec![]);
        let d = free_energy_beta_derivative(&t, GaussianField::zero(), FD_EPS).unwrap();
        let mu = cw_root(2.0);
        assert!((d - 0.5 * mu * mu).abs() < 1e-6, "{d}");
    }

    #[test]
    fn predicted_laws() {
        let small = predicted_overlap_law(&tp(0.0, vec![0.1]), GaussianField::zero()).unwrap();
        assert!(parisi_moment(&small.measure, 1) < 0.05);

        let h = GaussianField::centered(0.3).unwrap();
        let t = tp(2.0, vec![0.7]);
        let report = skfi_free_energy(&t, h).unwrap();
        assert_eq!(report.classification, Classification::SymmetricPair);
        let law = overlap_law_for(&t, h, &report).unwrap();
        assert!(overlap_support_min(&law.measure) >= 1e-3);

        let b = magnetization_overlap_bound_check(&tp(2.0, vec![0.5]), h).unwrap();
        assert_eq!(b.status, BoundStatus::Checked);
        assert_eq!(b.holds, Some(true), "{b:?}");
    }
}
