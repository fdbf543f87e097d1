//! Model parameters: the even mixture, the Gaussian external field and the
//! combined temperature point.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// The even mixture `xi(x) = sum_p beta_p^2 x^(2p)`.
///
/// `coeffs[p - 1]` is the coefficient of the `2p`-spin term. Only the squares
/// enter `xi`, so negative coefficients are allowed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct MixtureXi {
    coeffs: Vec<f64>,
}

impl MixtureXi {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(invalid("mixture needs at least one coefficient"));
        }
        if let Some(c) = coeffs.iter().find(|c| !c.is_finite()) {
            return Err(invalid(format!("non-finite mixture coefficient {c}")));
        }
        Ok(Self { coeffs })
    }

    /// Pure SK mixture `xi(x) = beta1^2 x^2`.
    pub fn sk(beta1: f64) -> Self {
        Self {
            coeffs: vec![beta1],
        }
    }

    /// The identically zero mixture (no spin-glass couplings).
    pub fn zero() -> Self {
        Self { coeffs: vec![0.0] }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Coefficient `beta_p` (1-based); zero beyond the stored list.
    pub fn beta_p(&self, p: usize) -> f64 {
        if p == 0 {
            return 0.0;
        }
        self.coeffs.get(p - 1).copied().unwrap_or(0.0)
    }

    /// Copy with `beta_p` replaced, extending the list with zeros if needed.
    pub fn with_beta_p(&self, p: usize, value: f64) -> Self {
        assert!(p >= 1, "mixture index is 1-based");
        let mut coeffs = self.coeffs.clone();
        if coeffs.len() < p {
            coeffs.resize(p, 0.0);
        }
        coeffs[p - 1] = value;
        Self { coeffs }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    /// Largest `p` with a nonzero coefficient (0 for the zero mixture).
    pub fn max_degree(&self) -> usize {
        self.coeffs
            .iter()
            .rposition(|&c| c != 0.0)
            .map_or(0, |i| i + 1)
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        check_unit(x)?;
        Ok(self.value(x))
    }

    /// `(xi'(x), xi''(x))`.
    pub fn derivs(&self, x: f64) -> Result<(f64, f64)> {
        check_unit(x)?;
        Ok((self.first(x), self.second(x)))
    }

    /// `theta(q) = q xi'(q) - xi(q)`, nonnegative and nondecreasing on `[0,1]`.
    pub fn theta(&self, q: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::Domain {
                name: "q",
                value: q,
                domain: "[0,1]",
            });
        }
        Ok(self.theta_unchecked(q))
    }

    pub(crate) fn value(&self, x: f64) -> f64 {
        let x2 = x * x;
        let mut pow = x2;
        let mut acc = 0.0;
        for &b in &self.coeffs {
            acc += b * b * pow;
            pow *= x2;
        }
        acc
    }

    pub(crate) fn first(&self, x: f64) -> f64 {
        let x2 = x * x;
        let mut pow = x; // x^(2p-1)
        let mut acc = 0.0;
        for (i, &b) in self.coeffs.iter().enumerate() {
            let two_p = 2.0 * (i + 1) as f64;
            acc += two_p * b * b * pow;
            pow *= x2;
        }
        acc
    }

    pub(crate) fn second(&self, x: f64) -> f64 {
        let x2 = x * x;
        let mut pow = 1.0; // x^(2p-2)
        let mut acc = 0.0;
        for (i, &b) in self.coeffs.iter().enumerate() {
            let two_p = 2.0 * (i + 1) as f64;
            acc += two_p * (two_p - 1.0) * b * b * pow;
            pow *= x2;
        }
        acc
    }

    pub(crate) fn theta_unchecked(&self, q: f64) -> f64 {
        // sum_p (2p - 1) beta_p^2 q^(2p), avoids cancellation in q xi' - xi
        let q2 = q * q;
        let mut pow = q2;
        let mut acc = 0.0;
        for (i, &b) in self.coeffs.iter().enumerate() {
            let two_p = 2.0 * (i + 1) as f64;
            acc += (two_p - 1.0) * b * b * pow;
            pow *= q2;
        }
        acc
    }
}

impl TryFrom<Vec<f64>> for MixtureXi {
    type Error = Error;

    fn try_from(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            Ok(Self::zero())
        } else {
            Self::new(coeffs)
        }
    }
}

impl From<MixtureXi> for Vec<f64> {
    fn from(xi: MixtureXi) -> Self {
        xi.coeffs
    }
}

fn check_unit(x: f64) -> Result<()> {
    if x.is_nan() || x.abs() > 1.0 {
        return Err(Error::Domain {
            name: "x",
            value: x,
            domain: "[-1,1]",
        });
    }
    Ok(())
}

/// External field `h ~ N(mean, std^2)`; `std == 0` is the constant field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianField {
    pub mean: f64,
    pub std: f64,
}

impl GaussianField {
    pub fn new(mean: f64, std: f64) -> Result<Self> {
        if !mean.is_finite() || !std.is_finite() || std < 0.0 {
            return Err(invalid(format!(
                "field needs finite mean and std >= 0, got ({mean}, {std})"
            )));
        }
        Ok(Self { mean, std })
    }

    pub fn centered(std: f64) -> Result<Self> {
        Self::new(0.0, std)
    }

    pub fn constant(value: f64) -> Result<Self> {
        Self::new(value, 0.0)
    }

    pub fn zero() -> Self {
        Self { mean: 0.0, std: 0.0 }
    }

    pub fn is_centered(&self) -> bool {
        self.mean == 0.0
    }

    pub fn require_centered(&self) -> Result<()> {
        if self.is_centered() {
            Ok(())
        } else {
            Err(invalid(format!(
                "a centered field is required, got mean {}",
                self.mean
            )))
        }
    }

    /// The field `shift + h`.
    pub fn shifted(&self, shift: f64) -> Self {
        Self {
            mean: self.mean + shift,
            std: self.std,
        }
    }
}

/// CW temperature `beta` together with the SK temperatures.
#[derive(Debug, Clone, PartialEq)]
pub struct TemperaturePoint {
    pub beta: f64,
    pub xi: MixtureXi,
}

impl TemperaturePoint {
    pub fn new(beta: f64, xi: MixtureXi) -> Result<Self> {
        if !beta.is_finite() || beta < 0.0 {
            return Err(Error::Domain {
                name: "beta",
                value: beta,
                domain: "[0,inf)",
            });
        }
        Ok(Self { beta, xi })
    }
}

/// The canonical parameter block shared by configs and run manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamBlock {
    pub beta: f64,
    pub coeffs: Vec<f64>,
    pub h_mean: f64,
    pub h_std: f64,
}

impl ParamBlock {
    pub fn temperature(&self) -> Result<TemperaturePoint> {
        TemperaturePoint::new(self.beta, MixtureXi::try_from(self.coeffs.clone())?)
    }

    pub fn field(&self) -> Result<GaussianField> {
        GaussianField::new(self.h_mean, self.h_std)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_term() -> MixtureXi {
        MixtureXi::new(vec![1.0, 0.5]).unwrap()
    }

    #[test]
    fn xi_values() {
        assert_eq!(MixtureXi::sk(1.0).eval(0.5).unwrap(), 0.25);
        assert_eq!(two_term().eval(1.0).unwrap(), 1.25);
        assert_eq!(two_term().eval(0.0).unwrap(), 0.0);
    }

    #[test]
    fn xi_derivatives() {
        assert_eq!(MixtureXi::sk(1.0).derivs(1.0).unwrap(), (2.0, 2.0));
        assert_eq!(two_term().derivs(1.0).unwrap(), (3.0, 5.0));
        assert_eq!(two_term().derivs(0.0).unwrap(), (0.0, 2.0));
    }

    #[test]
    fn theta_values() {
        let b = 0.7;
        for q in [0.0, 0.2, 0.9, 1.0] {
            let t = MixtureXi::sk(b).theta(q).unwrap();
            assert!((t - b * b * q * q).abs() < 1e-15);
        }
        assert_eq!(two_term().theta(0.0).unwrap(), 0.0);
        assert!((two_term().theta(1.0).unwrap() - 1.75).abs() < 1e-15);
    }

    #[test]
    fn domain_errors() {
        assert!(two_term().eval(1.5).is_err());
        assert!(two_term().derivs(-1.01).is_err());
        assert!(two_term().theta(-0.1).is_err());
        assert!(two_term().eval(f64::NAN).is_err());
        assert!(MixtureXi::new(vec![]).is_err());
        assert!(GaussianField::new(0.0, -1.0).is_err());
        assert!(TemperaturePoint::new(-0.5, MixtureXi::zero()).is_err());
    }

    #[test]
    fn negative_coefficients_enter_squared() {
        let a = MixtureXi::new(vec![-0.3, 0.2]).unwrap();
        let b = MixtureXi::new(vec![0.3, -0.2]).unwrap();
        assert_eq!(a.eval(0.7).unwrap(), b.eval(0.7).unwrap());
    }

    #[test]
    fn finite_difference_matches_derivative() {
        let xi = MixtureXi::new(vec![0.8, -0.4, 0.3]).unwrap();
        let eps = 1e-5;
        for i in 1..20 {
            let x = i as f64 / 20.0 - 0.01;
            let fd = (xi.value(x + eps) - xi.value(x - eps)) / (2.0 * eps);
            assert!((fd - xi.first(x)).abs() < 1e-8, "x={x}");
            let fd2 = (xi.first(x + eps) - xi.first(x - eps)) / (2.0 * eps);
            assert!((fd2 - xi.second(x)).abs() < 1e-7, "x={x}");
        }
    }

    #[test]
    fn param_block_json() {
        let json = r#"{"beta": 2, "coeffs": [0.1, 0.2], "h_mean": 0, "h_std": 0.3}"#;
        let block: ParamBlock = serde_json::from_str(json).unwrap();
        assert_eq!(block.temperature().unwrap().xi.coeffs(), &[0.1, 0.2]);
        assert_eq!(block.field().unwrap().std, 0.3);
        let empty: ParamBlock =
            serde_json::from_str(r#"{"beta": 0, "coeffs": [], "h_mean": 0, "h_std": 0}"#)
                .unwrap();
        assert!(empty.temperature().unwrap().xi.is_zero());
        assert!(serde_json::from_str::<ParamBlock>(
            r#"{"beta": 0, "coeffs": [], "h_mean": 0, "h_std": 0, "extra": 1}"#
        )
        .is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn xi_shape(coeffs in prop::collection::vec(-2.0f64..2.0, 1..5), x in 0.0f64..1.0) {
                let xi = MixtureXi::new(coeffs).unwrap();
                prop_assert!(xi.value(x) >= 0.0);
                prop_assert!(xi.first(x) >= 0.0);
                prop_assert!(xi.theta_unchecked(x) >= 0.0);
                prop_assert_eq!(xi.value(-x), xi.value(x));
                let y = (x + 0.05).min(1.0);
                prop_assert!(xi.value(y) >= xi.value(x));
                prop_assert!(xi.theta_unchecked(y) >= xi.theta_unchecked(x));
                let direct = x * xi.first(x) - xi.value(x);
                prop_assert!((direct - xi.theta_unchecked(x)).abs() < 1e-12);
            }
        }
    }
}
