//! Disorder-averaged Gibbs observables estimated by Monte Carlo.
//!
//! For each disorder sample a [`ReplicaSet`] is equilibrated for `burnin`
//! sweeps and measured after each of the following `sweeps` sweeps. Gibbs
//! averages are time averages over the chains; their standard errors use
//! batch means. Disorder averages and their standard errors come from the
//! spread over disorder samples.

use serde::{Deserialize, Serialize};

use super::accumulator::MomentAccumulator;
use super::checks::inequality_holds;
use super::disorder::{sample_disorder, SpinModel};
use super::enumerate::{enumerate_model, MAX_ENUM_N, MAX_ENUM_N_QUARTIC};
use super::mc::{heat_bath_sweep, ReplicaSet, Start};
use crate::error::{invalid, Result};
use crate::model::{GaussianField, TemperaturePoint};

/// Largest number of replicas per disorder sample.
pub const MAX_REPLICAS: usize = 8;

/// Indicator window `|m - center| <= half_width`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Window {
    pub center: f64,
    pub half_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateConfig {
    pub n: usize,
    pub n_disorder: usize,
    pub n_replicas: usize,
    pub burnin: usize,
    pub sweeps: usize,
    #[serde(default = "default_batches")]
    pub batches: usize,
    pub root_seed: u64,
    /// Slack in the ultrametric and magnetization-overlap indicators.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Cutoff `c'` in `I(R_12 <= c')`.
    #[serde(default)]
    pub overlap_cutoff: Option<f64>,
    #[serde(default)]
    pub magnetization_window: Option<Window>,
    /// Add the exact `(1/N) ln Z` when the size allows enumeration.
    #[serde(default = "default_true")]
    pub exact_free_energy: bool,
}

fn default_batches() -> usize {
    50
}

fn default_epsilon() -> f64 {
    0.05
}

fn default_true() -> bool {
    true
}

impl EstimateConfig {
    pub fn new(n: usize, n_disorder: usize, sweeps: usize, root_seed: u64) -> Self {
        Self {
            n,
            n_disorder,
            n_replicas: 3,
            burnin: sweeps / 5,
            sweeps,
            batches: default_batches(),
            root_seed,
            epsilon: default_epsilon(),
            overlap_cutoff: None,
            magnetization_window: None,
            exact_free_energy: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.n_disorder == 0 {
            return Err(invalid("n and n_disorder must be positive"));
        }
        if !(2..=MAX_REPLICAS).contains(&self.n_replicas) {
            return Err(invalid(format!(
                "n_replicas must be in 2..={MAX_REPLICAS}, got {}",
                self.n_replicas
            )));
        }
        if self.batches < 2 || self.sweeps < self.batches {
            return Err(invalid("need at least two batches and one sweep per batch"));
        }
        if self.n_disorder > u32::MAX as usize {
            return Err(invalid("too many disorder samples"));
        }
        if !(self.epsilon >= 0.0) {
            return Err(invalid("epsilon must be nonnegative"));
        }
        if let Some(w) = self.magnetization_window {
            if !(w.half_width >= 0.0) || !w.center.is_finite() {
                return Err(invalid("bad magnetization window"));
            }
        }
        Ok(())
    }

    /// Replica `r` starts hot when `r` is even and cold otherwise.
    pub fn starts(&self) -> Vec<Start> {
        (0..self.n_replicas)
            .map(|r| if r % 2 == 0 { Start::Hot } else { Start::Cold })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    M,
    AbsM,
    M2,
    R12,
    R12Sq,
    R12Fourth,
    OverlapBelowCutoff,
    UltrametricViolation,
    MagnetizationOverlapViolation,
    MagnetizationWindow,
    MixingGap,
    FreeEnergy,
}

impl Observable {
    pub fn name(self) -> &'static str {
        match self {
            Observable::M => "m",
            Observable::AbsM => "abs_m",
            Observable::M2 => "m2",
            Observable::R12 => "r12",
            Observable::R12Sq => "r12_2",
            Observable::R12Fourth => "r12_4",
            Observable::OverlapBelowCutoff => "overlap_below_cutoff",
            Observable::UltrametricViolation => "ultrametric_violation",
            Observable::MagnetizationOverlapViolation => "magnetization_overlap_violation",
            Observable::MagnetizationWindow => "magnetization_window",
            Observable::MixingGap => "mixing_gap",
            Observable::FreeEnergy => "free_energy",
        }
    }
}

/// One Gibbs average with its Monte Carlo standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GibbsValue {
    pub observable: Observable,
    pub mean: f64,
    pub stderr: f64,
}

/// Gibbs averages for one disorder sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisorderEstimate {
    pub index: u32,
    pub values: Vec<GibbsValue>,
    pub tuples: TupleTally,
}

impl DisorderEstimate {
    pub fn get(&self, o: Observable) -> Option<GibbsValue> {
        self.values.iter().copied().find(|v| v.observable == o)
    }
}

/// One line of the observable table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableRow {
    pub observable: String,
    pub n: usize,
    pub estimate: f64,
    pub stderr: f64,
    pub n_disorder: usize,
    pub sweeps: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableReport {
    pub rows: Vec<ObservableRow>,
    pub per_disorder: Vec<DisorderEstimate>,
    pub tuples: TupleTally,
}

impl ObservableReport {
    pub fn row(&self, o: Observable) -> Option<&ObservableRow> {
        self.rows.iter().find(|r| r.observable == o.name())
    }
}

fn disorder_model(
    temp: &TemperaturePoint,
    h: GaussianField,
    n: usize,
    root_seed: u64,
    index: u32,
) -> Result<SpinModel> {
    let d = sample_disorder(n, temp, h, root_seed, index)?;
    SpinModel::new(&d, temp)
}

/// Count of replica tuples tested against the replica inequality.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TupleTally {
    pub checked: u64,
    pub violations: u64,
}

impl TupleTally {
    pub fn add(&mut self, other: TupleTally) {
        self.checked += other.checked;
        self.violations += other.violations;
    }
}

/// Equilibrate and then call `measure` after every measurement sweep with
/// the sweep number (from zero). Every measured replica set is also tested
/// against the replica inequality.
pub(crate) fn run_chains(
    model: SpinModel,
    cfg: &EstimateConfig,
    index: u32,
    mut measure: impl FnMut(usize, &ReplicaSet),
) -> Result<TupleTally> {
    let mut set = ReplicaSet::new(model, &cfg.starts(), cfg.root_seed, index)?;
    let nr = set.n_replicas();
    let mut tally = TupleTally::default();
    let mut sums = vec![0i64; nr];
    let mut dots = Vec::with_capacity(nr * nr);
    heat_bath_sweep(&mut set, cfg.burnin);
    for t in 0..cfg.sweeps {
        heat_bath_sweep(&mut set, 1);
        measure(t, &set);
        dots.clear();
        for a in 0..nr {
            sums[a] = set.spin_sum(a);
            for b in a + 1..nr {
                dots.push(set.spin_dot(a, b));
            }
        }
        tally.checked += 1;
        if !inequality_holds(cfg.n, &sums, &dots) {
            tally.violations += 1;
        }
    }
    Ok(tally)
}

fn enumerable(model: &SpinModel) -> bool {
    let limit = if model.has_quartic() {
        MAX_ENUM_N_QUARTIC
    } else {
        MAX_ENUM_N
    };
    model.n() <= limit
}

struct Batches {
    obs: Vec<Observable>,
    // per batch, per observable: sum
    sums: Vec<Vec<f64>>,
    counts: Vec<usize>,
}

impl Batches {
    fn new(obs: Vec<Observable>, batches: usize) -> Self {
        let k = obs.len();
        Self {
            obs,
            sums: vec![vec![0.0; k]; batches],
            counts: vec![0; batches],
        }
    }

    fn finish(&self) -> Vec<GibbsValue> {
        let b = self.counts.len() as f64;
        let total: usize = self.counts.iter().sum();
        self.obs
            .iter()
            .enumerate()
            .map(|(k, &o)| {
                let mean = self.sums.iter().map(|s| s[k]).sum::<f64>() / total as f64;
                let bm: Vec<f64> = self
                    .sums
                    .iter()
                    .zip(&self.counts)
                    .map(|(s, &c)| s[k] / c as f64)
                    .collect();
                let bmean = bm.iter().sum::<f64>() / b;
                let var = bm.iter().map(|x| (x - bmean).powi(2)).sum::<f64>() / (b - 1.0);
                GibbsValue {
                    observable: o,
                    mean,
                    stderr: (var / b).sqrt(),
                }
            })
            .collect()
    }
}

/// Monte Carlo Gibbs averages for disorder sample `index`.
pub fn estimate_disorder(
    temp: &TemperaturePoint,
    h: GaussianField,
    cfg: &EstimateConfig,
    index: u32,
) -> Result<DisorderEstimate> {
    cfg.validate()?;
    let model = disorder_model(temp, h, cfg.n, cfg.root_seed, index)?;
    let exact = if cfg.exact_free_energy && enumerable(&model) {
        Some(enumerate_model(&model)?.free_energy())
    } else {
        None
    };

    let nr = cfg.n_replicas;
    let starts = cfg.starts();
    let hot: Vec<usize> = (0..nr).filter(|&r| starts[r] == Start::Hot).collect();
    let cold: Vec<usize> = (0..nr).filter(|&r| starts[r] == Start::Cold).collect();
    let mut obs = vec![
        Observable::M,
        Observable::AbsM,
        Observable::M2,
        Observable::R12,
        Observable::R12Sq,
        Observable::R12Fourth,
    ];
    if cfg.overlap_cutoff.is_some() {
        obs.push(Observable::OverlapBelowCutoff);
    }
    if nr >= 3 {
        obs.push(Observable::UltrametricViolation);
        obs.push(Observable::MagnetizationOverlapViolation);
    }
    if cfg.magnetization_window.is_some() {
        obs.push(Observable::MagnetizationWindow);
    }
    if !hot.is_empty() && !cold.is_empty() {
        obs.push(Observable::MixingGap);
    }
    let mut batches = Batches::new(obs.clone(), cfg.batches);
    let nf = cfg.n as f64;
    let eps = cfg.epsilon;
    let pairs: Vec<(usize, usize)> = (0..nr)
        .flat_map(|a| (a + 1..nr).map(move |b| (a, b)))
        .collect();
    let mut m = vec![0.0; nr];
    let mut r = vec![0.0; nr * nr];
    let mut row = vec![0.0; obs.len()];

    let tuples = run_chains(model, cfg, index, |t, set| {
        for a in 0..nr {
            m[a] = set.spin_sum(a) as f64 / nf;
        }
        for &(a, b) in &pairs {
            let v = set.spin_dot(a, b) as f64 / nf;
            r[a * nr + b] = v;
            r[b * nr + a] = v;
        }
        let per_rep = |f: &dyn Fn(f64) -> f64| m.iter().map(|&x| f(x)).sum::<f64>() / nr as f64;
        let per_pair = |f: &dyn Fn(f64) -> f64| {
            pairs.iter().map(|&(a, b)| f(r[a * nr + b])).sum::<f64>() / pairs.len() as f64
        };
        for (slot, o) in row.iter_mut().zip(&obs) {
            *slot = match o {
                Observable::M => per_rep(&|x| x),
                Observable::AbsM => per_rep(&f64::abs),
                Observable::M2 => per_rep(&|x| x * x),
                Observable::R12 => per_pair(&|x| x),
                Observable::R12Sq => per_pair(&|x| x * x),
                Observable::R12Fourth => per_pair(&|x| x.powi(4)),
                Observable::OverlapBelowCutoff => {
                    let c = cfg.overlap_cutoff.unwrap_or(0.0);
                    per_pair(&|x| indicator(x <= c))
                }
                Observable::MagnetizationWindow => {
                    let w = cfg.magnetization_window.expect("window present");
                    per_rep(&|x| indicator((x - w.center).abs() <= w.half_width))
                }
                Observable::UltrametricViolation => {
                    // every pair in the role of (1,2), every third replica
                    let mut s = 0.0;
                    let mut k = 0.0;
                    for &(a, b) in &pairs {
                        for c in (0..nr).filter(|&c| c != a && c != b) {
                            let low = r[a * nr + c].min(r[b * nr + c]);
                            s += indicator(r[a * nr + b] < low - eps);
                            k += 1.0;
                        }
                    }
                    s / k
                }
                Observable::MagnetizationOverlapViolation => {
                    let mut s = 0.0;
                    let mut k = 0.0;
                    for &(a, b) in &pairs {
                        for c in (0..nr).filter(|&c| c != a && c != b) {
                            s += indicator(m[c] * m[c] > r[a * nr + b].abs() + eps);
                            k += 1.0;
                        }
                    }
                    s / k
                }
                Observable::MixingGap => {
                    let mean = |rs: &[usize]| rs.iter().map(|&a| m[a]).sum::<f64>() / rs.len() as f64;
                    mean(&hot) - mean(&cold)
                }
                Observable::FreeEnergy => unreachable!("not a chain observable"),
            };
        }
        let b = t * cfg.batches / cfg.sweeps;
        batches.counts[b] += 1;
        for (s, v) in batches.sums[b].iter_mut().zip(&row) {
            *s += v;
        }
    })?;

    let mut values = batches.finish();
    if let Some(f) = exact {
        values.push(GibbsValue {
            observable: Observable::FreeEnergy,
            mean: f,
            stderr: 0.0,
        });
    }
    Ok(DisorderEstimate {
        index,
        values,
        tuples,
    })
}

fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Map `f` over disorder indices `0..count`, in parallel when enabled, and
/// return the results in index order.
pub(crate) fn map_disorders<T: Send>(
    count: usize,
    f: impl Fn(u32) -> Result<T> + Sync + Send,
) -> Result<Vec<T>> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..count as u32).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..count as u32).map(f).collect()
    }
}

/// Disorder-averaged observables for `cfg.n_disorder` samples.
pub fn estimate_observables(
    temp: &TemperaturePoint,
    h: GaussianField,
    cfg: &EstimateConfig,
) -> Result<ObservableReport> {
    cfg.validate()?;
    let per_disorder = map_disorders(cfg.n_disorder, |i| estimate_disorder(temp, h, cfg, i))?;
    let mut acc: std::collections::BTreeMap<Observable, MomentAccumulator> = Default::default();
    for d in &per_disorder {
        for v in &d.values {
            acc.entry(v.observable).or_default().push(v.mean)?;
        }
    }
    let rows = acc
        .into_iter()
        .map(|(o, a)| ObservableRow {
            observable: o.name().to_string(),
            n: cfg.n,
            estimate: a.mean(),
            stderr: if a.count() > 1 { a.stderr() } else { 0.0 },
            n_disorder: a.count() as usize,
            sweeps: cfg.sweeps,
            seed: cfg.root_seed,
        })
        .collect();
    let mut tuples = TupleTally::default();
    for d in &per_disorder {
        tuples.add(d.tuples);
    }
    Ok(ObservableReport {
        rows,
        per_disorder,
        tuples,
    })
}
