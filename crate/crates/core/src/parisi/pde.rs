use serde::{Deserialize, Serialize};

use super::measure::DiscreteMeasure;
use crate::error::{invalid, Error, Result};
use crate::model::{GaussianField, MixtureXi};
use crate::quadrature::{default_rule, GaussHermite};
use crate::special::ln_cosh;

pub const DEFAULT_SPACING: f64 = 1e-2;
const MONOTONE_TOL: f64 = 1e-14;

/// Sampling grid for `Phi(., q)` on `[0, half_width]`; negative arguments use
/// evenness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub half_width: f64,
    pub spacing: f64,
}

impl GridSpec {
    pub fn new(half_width: f64, spacing: f64) -> Result<Self> {
        if !(half_width > 0.0 && half_width.is_finite() && spacing > 0.0 && 3.0 * spacing <= half_width)
        {
            return Err(invalid(format!(
                "grid needs 0 < 3 spacing <= half_width, got ({half_width}, {spacing})"
            )));
        }
        Ok(Self {
            half_width,
            spacing,
        })
    }

    /// `|mean| + 10 sqrt(std^2 + xi'(1)) (k + 1)` with spacing 0.01, and at
    /// least 8 beyond the outermost field node.
    pub fn default_for(xi: &MixtureXi, h: GaussianField, atoms: usize) -> Self {
        let spread = (h.std * h.std + xi.first(1.0)).sqrt();
        let w = h.mean.abs() + 10.0 * spread * (atoms as f64 + 1.0);
        let z_max = default_rule().nodes().last().copied().unwrap_or(0.0);
        let floor = h.mean.abs() + z_max * h.std + 8.0;
        Self {
            half_width: w.max(floor),
            spacing: DEFAULT_SPACING,
        }
    }
}

/// `Phi_nu(x, 0)` sampled at `x = i * spacing`, `i = 0..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiGrid {
    spacing: f64,
    values: Vec<f64>,
}

impl PhiGrid {
    fn from_fn(grid: GridSpec, f: impl Fn(f64) -> f64) -> Self {
        let n = (grid.half_width / grid.spacing).ceil() as usize;
        let values = (0..=n).map(|i| f(i as f64 * grid.spacing)).collect();
        Self {
            spacing: grid.spacing,
            values,
        }
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Right edge of the sampled range.
    pub fn edge(&self) -> f64 {
        (self.values.len() - 1) as f64 * self.spacing
    }

    pub fn xs(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(|i| i as f64 * self.spacing)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Cubic interpolation inside the grid, reflection for negative `x`, and
    /// a unit-slope linear extension beyond the edge.
    pub fn eval(&self, x: f64) -> f64 {
        let a = x.abs();
        let n = self.values.len() - 1;
        let edge = self.edge();
        if a >= edge {
            return self.values[n] + (a - edge);
        }
        let t = a / self.spacing;
        let i = (t.floor() as usize).min(n - 1);
        // four nodes i-1..=i+2, shifted inward at the right edge
        let base = if i + 2 > n { n - 2 } else { i } as isize - 1;
        let u = t - base as f64;
        let v = |j: isize| self.values[(base + j).unsigned_abs()];
        let (f0, f1, f2, f3) = (v(0), v(1), v(2), v(3));
        let (u0, u1, u2, u3) = (u, u - 1.0, u - 2.0, u - 3.0);
        -f0 * u1 * u2 * u3 / 6.0 + f1 * u0 * u2 * u3 / 2.0 - f2 * u0 * u1 * u3 / 2.0
            + f3 * u0 * u1 * u2 / 6.0
    }
}

/// Constancy intervals `(lo, hi, mass)` of `q -> nu([0, q])` on `[0, 1]`,
/// from the top down.
pub(crate) fn intervals(nu: &DiscreteMeasure) -> Vec<(f64, f64, f64)> {
    let atoms = nu.atoms();
    let masses = nu.cumulative();
    let k = atoms.len();
    let mut out = Vec::with_capacity(k + 1);
    if atoms[k - 1] < 1.0 {
        out.push((atoms[k - 1], 1.0, 1.0));
    }
    for l in (0..k - 1).rev() {
        out.push((atoms[l], atoms[l + 1], masses[l]));
    }
    if atoms[0] > 0.0 {
        out.push((0.0, atoms[0], 0.0));
    }
    out
}

pub(crate) fn increment(xi: &MixtureXi, lo: f64, hi: f64) -> Result<f64> {
    let d = xi.first(hi) - xi.first(lo);
    if d < -MONOTONE_TOL {
        return Err(invalid(format!(
            "xi' decreases on [{lo}, {hi}] by {d}"
        )));
    }
    Ok(d.max(0.0))
}

/// `(1/m) ln E exp(m f(Y))` over the rule points, or `E f(Y)` when `m == 0`.
/// Evaluated around the mean so small `m` keeps full precision.
#[inline]
pub(crate) fn tilted_mean(m: f64, weights: &[f64], vals: &[f64]) -> f64 {
    let mean: f64 = weights.iter().zip(vals).map(|(w, v)| w * v).sum();
    if m == 0.0 {
        return mean;
    }
    let e: f64 = weights
        .iter()
        .zip(vals)
        .map(|(w, v)| w * (m * (v - mean)).exp_m1())
        .sum();
    mean + e.ln_1p() / m
}

/// `Phi_nu(., 0)` by backward recursion over the constancy intervals of
/// `nu([0, .])`, using the default rule.
pub fn phi_solve(nu: &DiscreteMeasure, xi: &MixtureXi, grid: GridSpec) -> Result<PhiGrid> {
    phi_solve_with(nu, xi, grid, default_rule())
}

pub fn phi_solve_with(
    nu: &DiscreteMeasure,
    xi: &MixtureXi,
    grid: GridSpec,
    rule: &GaussHermite,
) -> Result<PhiGrid> {
    let grid = GridSpec::new(grid.half_width, grid.spacing)?;
    let z_max = rule.nodes().last().copied().unwrap_or(0.0);
    let mut phi = PhiGrid::from_fn(grid, ln_cosh);
    let mut vals = vec![0.0; rule.order()];
    for (lo, hi, m) in intervals(nu) {
        let delta = increment(xi, lo, hi)?;
        if delta == 0.0 {
            continue;
        }
        let s = delta.sqrt();
        if z_max * s > phi.edge() {
            return Err(Error::GridTooNarrow {
                half_width: phi.edge(),
                detail: format!("level [{lo}, {hi}] needs {:.3}", z_max * s),
            });
        }
        let next: Vec<f64> = phi
            .xs()
            .map(|x| {
                for (v, z) in vals.iter_mut().zip(rule.nodes()) {
                    *v = phi.eval(x + s * z);
                }
                tilted_mean(m, rule.weights(), &vals)
            })
            .collect();
        phi.values = next;
    }
    Ok(phi)
}

/// `ln 2 + E Phi_nu(h, 0) - theta(1)/2 + (1/2) sum_l w_l theta(q_l)` with the
/// default grid for this measure.
pub fn parisi_functional(xi: &MixtureXi, h: GaussianField, nu: &DiscreteMeasure) -> Result<f64> {
    let grid = GridSpec::default_for(xi, h, nu.len());
    parisi_functional_with(xi, h, nu, grid, default_rule())
}

pub fn parisi_functional_with(
    xi: &MixtureXi,
    h: GaussianField,
    nu: &DiscreteMeasure,
    grid: GridSpec,
    rule: &GaussHermite,
) -> Result<f64> {
    let phi = phi_solve_with(nu, xi, grid, rule)?;
    let z_max = rule.nodes().last().copied().unwrap_or(0.0);
    let reach = h.mean.abs() + z_max * h.std;
    if reach > phi.edge() {
        return Err(Error::GridTooNarrow {
            half_width: phi.edge(),
            detail: format!("field expectation reaches {reach:.3}"),
        });
    }
    let e_phi = rule.expect(|x| phi.eval(x), h.mean, h.std)?;
    Ok(e_phi + measure_terms(xi, nu))
}

/// `ln 2 - theta(1)/2 + (1/2) sum_l w_l theta(q_l)`.
pub(crate) fn measure_terms(xi: &MixtureXi, nu: &DiscreteMeasure) -> f64 {
    let tail: f64 = nu
        .atoms()
        .iter()
        .zip(nu.weights())
        .map(|(q, w)| w * xi.theta_unchecked(*q))
        .sum();
    std::f64::consts::LN_2 - 0.5 * xi.theta_unchecked(1.0) + 0.5 * tail
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::adaptive_gaussian;

    fn sk(b: f64) -> MixtureXi {
        MixtureXi::sk(b)
    }

    fn one_atom_oracle(xi: &MixtureXi, h: GaussianField, q: f64) -> f64 {
        let v = |x: f64| x.abs() + (-2.0 * x.abs()).exp().ln_1p() - std::f64::consts::LN_2;
        let s = (h.std * h.std + xi.first(q)).sqrt();
        let e = if s == 0.0 {
            v(h.mean)
        } else {
            adaptive_gaussian(v, h.mean, s, 1e-13)
        };
        std::f64::consts::LN_2 + e + 0.5 * (xi.value(1.0) - xi.value(q) - (1.0 - q) * xi.first(q))
    }

    #[test]
    fn interpolation_reproduces_cubics_and_extends_linearly() {
        let g = GridSpec::new(5.0, 0.1).unwrap();
        let p = PhiGrid::from_fn(g, |x| 1.0 + x * x * x - 0.5 * x * x);
        for x in [0.33, 1.27, 4.95, 4.999] {
            let exact = 1.0 + x * x * x - 0.5 * x * x;
            assert!((p.eval(x) - exact).abs() < 1e-10, "{x}");
        }
        let e = PhiGrid::from_fn(g, |x| x * x);
        // reflection uses even data, so even functions are exact near zero
        assert!((e.eval(-0.05) - 0.0025).abs() < 1e-14);
        assert!((e.eval(6.0) - (25.0 + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn dirac_zero_has_closed_form() {
        let xi = MixtureXi::new(vec![0.8, 0.4]).unwrap();
        let nu = DiscreteMeasure::dirac(0.0).unwrap();
        let phi = phi_solve(&nu, &xi, GridSpec::new(30.0, 0.01).unwrap()).unwrap();
        let c = xi.first(1.0) / 2.0;
        for x in [0.0, 0.5, 3.0, 12.0] {
            assert!((phi.eval(x) - (ln_cosh(x) + c)).abs() < 1e-10, "{x}");
        }
    }

    #[test]
    fn zero_mixture_leaves_ln_cosh() {
        let nu = DiscreteMeasure::new(vec![0.2, 0.7], vec![0.4, 0.6]).unwrap();
        let phi = phi_solve(&nu, &MixtureXi::zero(), GridSpec::new(10.0, 0.01).unwrap()).unwrap();
        for x in [0.0, 0.77, 4.2] {
            assert!((phi.eval(x) - ln_cosh(x)).abs() < 1e-12);
        }
        let h = GaussianField::new(0.3, 0.5).unwrap();
        let v = parisi_functional(&MixtureXi::zero(), h, &nu).unwrap();
        let want = std::f64::consts::LN_2 + adaptive_gaussian(ln_cosh, 0.3, 0.5, 1e-13);
        assert!((v - want).abs() < 1e-9, "{}", v - want);
    }

    #[test]
    fn delta_zero_sk_one() {
        let v = parisi_functional(&sk(1.0), GaussianField::zero(), &DiscreteMeasure::dirac(0.0).unwrap())
            .unwrap();
        assert!((v - (std::f64::consts::LN_2 + 0.5)).abs() < 1e-10);
        assert!((v - 1.193147).abs() < 1e-6);
    }

    #[test]
    fn one_atom_matches_closed_form() {
        let xi = sk(0.7);
        let h = GaussianField::centered(0.3).unwrap();
        let v = parisi_functional(&xi, h, &DiscreteMeasure::dirac(0.4).unwrap()).unwrap();
        assert!((v - one_atom_oracle(&xi, h, 0.4)).abs() < 1e-8);
    }

    #[test]
    fn one_atom_grid_of_q() {
        for xi in [sk(0.7), MixtureXi::new(vec![0.7, 0.3]).unwrap()] {
            for h in [GaussianField::zero(), GaussianField::centered(0.3).unwrap()] {
                for i in 0..20 {
                    let q = i as f64 * 0.05;
                    let nu = DiscreteMeasure::dirac(q).unwrap();
                    let v = parisi_functional(&xi, h, &nu).unwrap();
                    let o = one_atom_oracle(&xi, h, q);
                    assert!((v - o).abs() < 1e-8, "{:?} {:?} q={q}: {}", xi, h, v - o);
                }
            }
        }
    }

    #[test]
    fn phi_is_even_convex_with_slope_below_one() {
        let xi = MixtureXi::new(vec![0.9, 0.4]).unwrap();
        let nu = DiscreteMeasure::new(vec![0.1, 0.5, 0.8], vec![0.3, 0.3, 0.4]).unwrap();
        let phi = phi_solve(&nu, &xi, GridSpec::new(30.0, 0.01).unwrap()).unwrap();
        let v = phi.values();
        let d = phi.spacing();
        for i in 1..v.len() - 1 {
            assert!(v[i + 1] - 2.0 * v[i] + v[i - 1] > -1e-12, "convexity at {i}");
            let slope = (v[i + 1] - v[i - 1]) / (2.0 * d);
            assert!(slope > -1.0 && slope < 1.0 + 1e-9, "slope at {i}");
        }
        let n = v.len() - 1;
        assert!((v[n] - v[n - 1]) / d > 1.0 - 1e-6);
        assert!((phi.eval(-2.3) - phi.eval(2.3)).abs() == 0.0);
    }

    #[test]
    fn refinement_is_stable() {
        let fine_rule = GaussHermite::new(128).unwrap();
        for coeffs in [vec![1.0], vec![0.6, 0.5], vec![-1.0, 0.3]] {
            let xi = MixtureXi::new(coeffs).unwrap();
            let h = GaussianField::new(0.2, 0.4).unwrap();
            let nu = DiscreteMeasure::new(vec![0.05, 0.4, 0.7], vec![0.2, 0.5, 0.3]).unwrap();
            let g = GridSpec::default_for(&xi, h, nu.len());
            let coarse = parisi_functional_with(&xi, h, &nu, g, default_rule()).unwrap();
            let fine = parisi_functional_with(
                &xi,
                h,
                &nu,
                GridSpec::new(g.half_width, g.spacing / 2.0).unwrap(),
                &fine_rule,
            )
            .unwrap();
            assert!((coarse - fine).abs() < 1e-8, "{}", coarse - fine);
        }
    }

    #[test]
    fn narrow_grid_is_an_error() {
        let xi = sk(1.0);
        let nu = DiscreteMeasure::dirac(0.0).unwrap();
        let err = phi_solve(&nu, &xi, GridSpec::new(1.0, 0.01).unwrap()).unwrap_err();
        assert!(matches!(err, Error::GridTooNarrow { .. }));
        let h = GaussianField::new(3.0, 1.0).unwrap();
        let err = parisi_functional_with(&xi, h, &nu, GridSpec::new(15.0, 0.01).unwrap(), default_rule())
            .unwrap_err();
        assert!(matches!(err, Error::GridTooNarrow { .. }));
        assert!(GridSpec::new(1.0, 0.0).is_err());
        assert!(GridSpec::new(-1.0, 0.1).is_err());
    }

    #[test]
    fn tilted_mean_limits() {
        let w = [0.25, 0.5, 0.25];
        let v = [1.0, 2.0, 5.0];
        let mean = 0.25 + 1.0 + 1.25;
        assert_eq!(tilted_mean(0.0, &w, &v), mean);
        let small = tilted_mean(1e-12, &w, &v);
        assert!((small - mean).abs() < 1e-11);
        let one = tilted_mean(1.0, &w, &v);
        let direct = (0.25 * 1f64.exp() + 0.5 * 2f64.exp() + 0.25 * 5f64.exp()).ln();
        assert!((one - direct).abs() < 1e-14);
    }
}
