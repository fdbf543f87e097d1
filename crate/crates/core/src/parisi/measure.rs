use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

const SUM_TOL: f64 = 1e-14;

/// A probability measure on `[0, 1]` with finitely many atoms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMeasure", into = "RawMeasure")]
pub struct DiscreteMeasure {
    atoms: Vec<f64>,
    weights: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMeasure {
    atoms: Vec<f64>,
    weights: Vec<f64>,
}

impl TryFrom<RawMeasure> for DiscreteMeasure {
    type Error = crate::Error;

    fn try_from(raw: RawMeasure) -> Result<Self> {
        Self::new(raw.atoms, raw.weights)
    }
}

impl From<DiscreteMeasure> for RawMeasure {
    fn from(m: DiscreteMeasure) -> Self {
        RawMeasure {
            atoms: m.atoms,
            weights: m.weights,
        }
    }
}

impl DiscreteMeasure {
    pub fn new(atoms: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() || atoms.len() != weights.len() {
            return Err(invalid(format!(
                "measure needs matching non-empty atoms and weights, got {} and {}",
                atoms.len(),
                weights.len()
            )));
        }
        if atoms.iter().any(|q| !(0.0..=1.0).contains(q)) {
            return Err(invalid("atoms must lie in [0,1]"));
        }
        if atoms.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("atoms must be strictly increasing"));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(invalid("weights must be positive"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > SUM_TOL {
            return Err(invalid(format!("weights sum to {total}, not 1")));
        }
        Ok(Self { atoms, weights })
    }

    /// Point mass at `q`.
    pub fn dirac(q: f64) -> Result<Self> {
        Self::new(vec![q], vec![1.0])
    }

    /// Builds a measure from atoms and cumulative masses `m_l = nu([0, q_l])`.
    /// The last mass must be 1.
    pub fn from_cumulative(atoms: Vec<f64>, masses: &[f64]) -> Result<Self> {
        if masses.len() != atoms.len() || masses.is_empty() {
            return Err(invalid("atoms and cumulative masses must match"));
        }
        if masses[masses.len() - 1] != 1.0 {
            return Err(invalid("the last cumulative mass must be 1"));
        }
        let mut prev = 0.0;
        let weights = masses
            .iter()
            .map(|&m| {
                let w = m - prev;
                prev = m;
                w
            })
            .collect();
        Self::new(atoms, weights)
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Cumulative masses `nu([0, q_l])`, ending exactly at 1.
    pub fn cumulative(&self) -> Vec<f64> {
        let mut acc = 0.0;
        let mut out: Vec<f64> = self
            .weights
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        if let Some(last) = out.last_mut() {
            *last = 1.0;
        }
        out
    }

    /// `nu([0, q])`.
    pub fn cdf(&self, q: f64) -> f64 {
        let mut acc = 0.0;
        for (a, w) in self.atoms.iter().zip(&self.weights) {
            if *a <= q {
                acc += w;
            } else {
                break;
            }
        }
        if q >= self.atoms[self.atoms.len() - 1] {
            1.0
        } else {
            acc
        }
    }

    /// Merges atoms closer than `merge_radius` (weights summed, atom at the
    /// weighted mean) and drops atoms lighter than `weight_floor`, then
    /// renormalizes.
    pub fn cleaned(&self, merge_radius: f64, weight_floor: f64) -> Self {
        let mut atoms: Vec<f64> = Vec::with_capacity(self.len());
        let mut weights: Vec<f64> = Vec::with_capacity(self.len());
        for (&q, &w) in self.atoms.iter().zip(&self.weights) {
            match (atoms.last_mut(), weights.last_mut()) {
                (Some(a), Some(wl)) if q - *a < merge_radius => {
                    *a = (*a * *wl + q * w) / (*wl + w);
                    *wl += w;
                }
                _ => {
                    atoms.push(q);
                    weights.push(w);
                }
            }
        }
        let heaviest = weights
            .iter()
            .copied()
            .enumerate()
            .fold((0, 0.0), |b, (i, w)| if w > b.1 { (i, w) } else { b })
            .0;
        let keep: Vec<usize> = (0..atoms.len())
            .filter(|&i| i == heaviest || weights[i] >= weight_floor)
            .collect();
        let atoms: Vec<f64> = keep.iter().map(|&i| atoms[i].clamp(0.0, 1.0)).collect();
        let mut weights: Vec<f64> = keep.iter().map(|&i| weights[i]).collect();
        let total: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= total;
        }
        let n = weights.len();
        let head: f64 = weights[..n - 1].iter().sum();
        weights[n - 1] = 1.0 - head;
        Self { atoms, weights }
    }
}

/// `int_0^1 |nu1([0,q]) - nu2([0,q])| dq`, exact for step CDFs.
pub fn measure_distance(nu1: &DiscreteMeasure, nu2: &DiscreteMeasure) -> f64 {
    let mut cuts: Vec<f64> = nu1
        .atoms()
        .iter()
        .chain(nu2.atoms())
        .copied()
        .chain([0.0, 1.0])
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    cuts.windows(2)
        .map(|w| (nu1.cdf(w[0]) - nu2.cdf(w[0])).abs() * (w[1] - w[0]))
        .sum()
}

/// `sum_l w_l q_l^{2p}`.
pub fn parisi_moment(nu: &DiscreteMeasure, p: usize) -> f64 {
    nu.atoms()
        .iter()
        .zip(nu.weights())
        .map(|(q, w)| w * q.powi(2 * p as i32))
        .sum()
}
