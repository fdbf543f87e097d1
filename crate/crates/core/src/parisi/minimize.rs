use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::measure::{measure_distance, parisi_moment, DiscreteMeasure};
use super::nested::parisi_functional_nested;
use super::pde::{parisi_functional_with, GridSpec};
use crate::error::{invalid, Result};
use crate::model::{GaussianField, MixtureXi};
use crate::quadrature::{default_rule, DEFAULT_ORDER};
use crate::special::golden_min;

pub const DEFAULT_K_MAX: usize = 4;
pub const RESTARTS: usize = 8;
pub const MERGE_RADIUS: f64 = 1e-6;
pub const WEIGHT_FLOOR: f64 = 1e-10;
/// Largest atom count evaluated by nested quadrature; larger measures use the
/// grid solver.
pub const NESTED_MAX_ATOMS: usize = 3;

const PASS_TOL: f64 = 1e-9;
const LEVEL_TOL: f64 = 1e-7;
const COORD_TOL: f64 = 1e-8;
const MAX_PASSES: usize = 60;
const MIN_REACH: f64 = 1e-4;
const PRUNE_WEIGHT: f64 = 1e-8;
const TIE_VALUE: f64 = 1e-7;
const TIE_DISTANCE: f64 = 1e-3;
const SEED: u64 = 0x5eed_9a21_51;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParisiDiagnostics {
    pub grid_half_width: f64,
    pub grid_spacing: f64,
    pub quadrature_order: usize,
    pub atoms_used: usize,
    pub levels_tried: usize,
    pub level_values: Vec<f64>,
    pub restarts: usize,
    pub near_ties: usize,
    pub nested_max_atoms: usize,
    pub non_identifiable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParisiResult {
    pub value: f64,
    pub measure: DiscreteMeasure,
    pub diagnostics: ParisiDiagnostics,
}

/// Atoms `q_1 < ... < q_k` followed by cumulative masses `m_1 < ... < m_{k-1}`.
#[derive(Debug, Clone)]
struct Point {
    k: usize,
    x: Vec<f64>,
}

impl Point {
    fn measure(&self) -> Option<DiscreteMeasure> {
        let atoms = self.x[..self.k].to_vec();
        let mut masses = self.x[self.k..].to_vec();
        masses.push(1.0);
        DiscreteMeasure::from_cumulative(atoms, &masses).ok()
    }


    /// Feasible interval of coordinate `i` with the others held fixed.
    fn range(&self, i: usize) -> (f64, f64) {
        let k = self.k;
        if i < k {
            let lo = if i == 0 { 0.0 } else { self.x[i - 1] + MERGE_RADIUS };
            let hi = if i + 1 == k { 1.0 } else { self.x[i + 1] - MERGE_RADIUS };
            (lo, hi)
        } else {
            let lo = if i == k { WEIGHT_FLOOR } else { self.x[i - 1] + WEIGHT_FLOOR };
            let hi = if i + 1 == self.x.len() { 1.0 - WEIGHT_FLOOR } else { self.x[i + 1] - WEIGHT_FLOOR };
            (lo, hi)
        }
    }
}

struct Objective<'a> {
    xi: &'a MixtureXi,
    h: GaussianField,
}

impl Objective<'_> {
    fn measure_value(&self, nu: &DiscreteMeasure) -> f64 {
        let v = if nu.len() <= NESTED_MAX_ATOMS {
            parisi_functional_nested(self.xi, self.h, nu, default_rule())
        } else {
            let grid = GridSpec::default_for(self.xi, self.h, nu.len());
            parisi_functional_with(self.xi, self.h, nu, grid, default_rule())
        };
        v.unwrap_or(f64::INFINITY)
    }

    fn value(&self, p: &Point) -> f64 {
        p.measure().map_or(f64::INFINITY, |nu| self.measure_value(&nu))
    }

    /// Coordinate-wise golden-section passes until a pass gains less than
    /// `PASS_TOL`. The first pass searches each feasible interval in full;
    /// later passes search a bracket sized by the coordinate's last move.
    fn descend(&self, mut p: Point) -> (Point, f64) {
        let mut best = self.value(&p);
        let mut reach = vec![f64::INFINITY; p.x.len()];
        for _ in 0..MAX_PASSES {
            let start = best;
            for i in 0..p.x.len() {
                let (lo, hi) = p.range(i);
                let (lo, hi) = (lo.max(p.x[i] - reach[i]), hi.min(p.x[i] + reach[i]));
                if hi <= lo {
                    continue;
                }
                let (x, fx) = golden_min(
                    |t| {
                        let mut trial = p.clone();
                        trial.x[i] = t;
                        self.value(&trial)
                    },
                    lo,
                    hi,
                    COORD_TOL,
                );
                let moved = if fx < best {
                    let d = (x - p.x[i]).abs();
                    p.x[i] = x;
                    best = fx;
                    d
                } else {
                    0.0
                };
                reach[i] = (8.0 * moved).max(MIN_REACH);
            }
            if start - best < PASS_TOL {
                break;
            }
        }
        (p, best)
    }
}

fn random_start(k: usize, rng: &mut ChaCha8Rng) -> Point {
    let span_q = 1.0 - (k - 1) as f64 * MERGE_RADIUS;
    let mut q: Vec<f64> = (0..k).map(|_| rng.random::<f64>() * span_q).collect();
    q.sort_by(f64::total_cmp);
    let span_m = 1.0 - k as f64 * WEIGHT_FLOOR;
    let mut m: Vec<f64> = (0..k - 1).map(|_| rng.random::<f64>() * span_m).collect();
    m.sort_by(f64::total_cmp);
    let mut x: Vec<f64> = q
        .iter()
        .enumerate()
        .map(|(i, v)| v + i as f64 * MERGE_RADIUS)
        .collect();
    x.extend(m.iter().enumerate().map(|(i, v)| v + (i + 1) as f64 * WEIGHT_FLOOR));
    Point { k, x }
}

/// The `(k-1)`-atom optimum with one extra atom of weight `WEIGHT_FLOOR`
/// split off the top atom.
fn warm_start(prev: &Point) -> Point {
    let k = prev.k + 1;
    let mut atoms = prev.x[..prev.k].to_vec();
    let mut masses = prev.x[prev.k..].to_vec();
    let top = atoms[prev.k - 1];
    if top + MERGE_RADIUS <= 1.0 {
        atoms.push(top + MERGE_RADIUS);
    } else {
        atoms[prev.k - 1] = top - MERGE_RADIUS;
        atoms.push(top);
    }
    let below = atoms.len() >= 3 && atoms[prev.k - 1] - atoms[prev.k - 2] < MERGE_RADIUS;
    if below {
        return Point { k, x: random_start(k, &mut ChaCha8Rng::seed_from_u64(SEED)).x };
    }
    masses.push(1.0 - WEIGHT_FLOOR);
    let mut x = atoms;
    x.extend(masses);
    Point { k, x }
}

fn run_starts(obj: &Objective<'_>, starts: Vec<Point>) -> Vec<(Point, f64)> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        starts.into_par_iter().map(|p| obj.descend(p)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        starts.into_iter().map(|p| obj.descend(p)).collect()
    }
}

/// Infimum of the Parisi functional over measures with at most `k_max`
/// atoms, growing `k` until the gain drops below `1e-7`.
pub fn parisi_minimize(xi: &MixtureXi, h: GaussianField, k_max: usize) -> Result<ParisiResult> {
    if k_max == 0 {
        return Err(invalid("k_max must be at least 1"));
    }
    let obj = Objective { xi, h };
    if xi.is_zero() {
        let nu = DiscreteMeasure::dirac(0.0)?;
        let value = parisi_functional_nested(xi, h, &nu, default_rule())?;
        return Ok(finish(xi, h, value, nu, vec![value], 0, true));
    }
    let mut level_values = Vec::new();
    let mut best: Option<(Point, f64)> = None;
    let mut near_ties = 0;
    for k in 1..=k_max {
        let mut starts: Vec<Point> = (0..RESTARTS)
            .map(|r| {
                let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ ((k as u64) << 32) ^ r as u64);
                random_start(k, &mut rng)
            })
            .collect();
        if let Some((prev, _)) = &best {
            starts.push(warm_start(prev));
        }
        let results = run_starts(&obj, starts);
        let (bi, level_best) = results
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |b, (i, r)| if r.1 < b.1 { (i, r.1) } else { b });
        level_values.push(level_best);
        let prev_value = best.as_ref().map_or(f64::INFINITY, |b| b.1);
        if level_best < prev_value {
            let winner = results[bi].0.measure().map(|m| m.cleaned(MERGE_RADIUS, 0.0));
            near_ties = results
                .iter()
                .filter(|r| r.1 - level_best < TIE_VALUE)
                .filter_map(|r| r.0.measure())
                .filter(|m| match &winner {
                    Some(w) => measure_distance(&m.cleaned(MERGE_RADIUS, 0.0), w) > TIE_DISTANCE,
                    None => false,
                })
                .count();
            best = Some((results[bi].0.clone(), level_best));
        }
        if k > 1 && prev_value - level_best < LEVEL_TOL {
            break;
        }
    }
    let (point, raw_value) = best.expect("at least one level ran");
    let raw = point.measure().expect("optimizer points are feasible");
    let merged = raw.cleaned(MERGE_RADIUS, 0.0);
    let pruned = raw.cleaned(MERGE_RADIUS, PRUNE_WEIGHT);
    let pruned_value = obj.measure_value(&pruned);
    let (value, measure) = if pruned_value <= raw_value + 1e-10 {
        (pruned_value, pruned)
    } else {
        let merged_value = obj.measure_value(&merged);
        if merged_value <= raw_value + 1e-10 {
            (merged_value, merged)
        } else {
            (raw_value, raw)
        }
    };
    let tried = level_values.len();
    let mut out = finish(xi, h, value, measure, level_values, near_ties, false);
    out.diagnostics.levels_tried = tried;
    Ok(out)
}

fn finish(
    xi: &MixtureXi,
    h: GaussianField,
    value: f64,
    measure: DiscreteMeasure,
    level_values: Vec<f64>,
    near_ties: usize,
    non_identifiable: bool,
) -> ParisiResult {
    let grid = GridSpec::default_for(xi, h, measure.len());
    ParisiResult {
        value,
        diagnostics: ParisiDiagnostics {
            grid_half_width: grid.half_width,
            grid_spacing: grid.spacing,
            quadrature_order: DEFAULT_ORDER,
            atoms_used: measure.len(),
            levels_tried: level_values.len(),
            level_values,
            restarts: RESTARTS,
            near_ties,
            nested_max_atoms: NESTED_MAX_ATOMS,
            non_identifiable,
        },
        measure,
    }
}

/// `F^SK(xi, shift + h)`. The field enters only through its law, and the
/// law of `-h` gives the same value, so the mean is taken in absolute value.
pub fn sk_free_energy(xi: &MixtureXi, shift: f64, h: GaussianField) -> Result<f64> {
    Ok(sk_minimize(xi, shift, h)?.value)
}

pub(crate) fn sk_minimize(xi: &MixtureXi, shift: f64, h: GaussianField) -> Result<ParisiResult> {
    let field = GaussianField::new((h.mean + shift).abs(), h.std)?;
    parisi_minimize(xi, field, DEFAULT_K_MAX)
}

/// `beta_p (1 - int q^{2p} dnu*)` at the numerical minimizer.
pub fn sk_beta_p_derivative(xi: &MixtureXi, h: GaussianField, p: usize) -> Result<f64> {
    if p == 0 || p > xi.coeffs().len() {
        return Err(invalid(format!(
            "p must be in 1..={}, got {p}",
            xi.coeffs().len()
        )));
    }
    let b = xi.beta_p(p);
    if b == 0.0 {
        return Ok(0.0);
    }
    let nu = sk_minimize(xi, 0.0, h)?.measure;
    Ok(b * (1.0 - parisi_moment(&nu, p)))
}
