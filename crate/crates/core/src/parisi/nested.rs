//! Grid-free evaluation of the Parisi functional by nested quadrature.
//!
//! The lowest interval (mass zero) is folded into the field expectation, the
//! top interval (mass one) is solved in closed form, and every interval in
//! between costs one quadrature level. The cost is `order^k` for `k` atoms.

use super::measure::DiscreteMeasure;
use super::pde::{increment, measure_terms, tilted_mean};
use crate::error::{Error, Result};
use crate::model::{GaussianField, MixtureXi};
use crate::quadrature::{GaussHermite, MAX_ORDER};
use crate::special::ln_cosh;

struct Levels<'a> {
    rule: &'a GaussHermite,
    top: f64,
    // (mass, sqrt of the variance increment)
    inner: Vec<(f64, f64)>,
}

impl Levels<'_> {
    fn eval(&self, l: usize, x: f64) -> f64 {
        if l == self.inner.len() {
            return ln_cosh(x) + self.top;
        }
        let (m, s) = self.inner[l];
        if s == 0.0 {
            return self.eval(l + 1, x);
        }
        let mut vals = [0.0; MAX_ORDER];
        let n = self.rule.order();
        for (v, z) in vals[..n].iter_mut().zip(self.rule.nodes()) {
            *v = self.eval(l + 1, x + s * z);
        }
        tilted_mean(m, self.rule.weights(), &vals[..n])
    }
}

/// The Parisi functional by nested quadrature with the given rule.
pub fn parisi_functional_nested(
    xi: &MixtureXi,
    h: GaussianField,
    nu: &DiscreteMeasure,
    rule: &GaussHermite,
) -> Result<f64> {
    let atoms = nu.atoms();
    let masses = nu.cumulative();
    let k = atoms.len();
    let top = 0.5 * increment(xi, atoms[k - 1], 1.0)?;
    let mut inner = Vec::with_capacity(k - 1);
    for l in 0..k - 1 {
        inner.push((masses[l], increment(xi, atoms[l], atoms[l + 1])?.sqrt()));
    }
    let bottom = increment(xi, 0.0, atoms[0])?;
    let levels = Levels { rule, top, inner };
    let std = (h.std * h.std + bottom).sqrt();
    let e = rule.expect_unchecked(|y| levels.eval(0, y), h.mean, std);
    if !e.is_finite() {
        return Err(Error::NonFinite { at: h.mean });
    }
    Ok(e + measure_terms(xi, nu))
}

/// `P(delta_q) = ln 2 + E ln cosh(h + z sqrt(xi'(q))) + [xi(1) - xi(q) - (1 - q) xi'(q)] / 2`.
pub fn one_atom_value(xi: &MixtureXi, h: GaussianField, q: f64) -> Result<f64> {
    parisi_functional_nested(xi, h, &DiscreteMeasure::dirac(q)?, crate::quadrature::default_rule())
}
