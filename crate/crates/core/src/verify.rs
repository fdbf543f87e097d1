//! Verification suites: each runs one oracle or trend check end to end and
//! reports the measured values together with a pass/fail verdict.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::cw::{beta_for_magnetization, cw_curve, delta_u, field_condition, region_contains};
use crate::error::{invalid, Result};
use crate::model::{GaussianField, MixtureXi, TemperaturePoint};
use crate::parisi::{measure_distance, parisi_functional, parisi_minimize, DiscreteMeasure};
use crate::simulator::{
    enumerate_exact, estimate_disorder, estimate_observables, finite_n_derivative_check,
    gg_residual, replica_inequality_random, sample_disorder, EstimateConfig, Observable,
    TupleTally, Window,
};
use crate::special::ln_cosh;
use crate::variational::{
    overlap_law_for, overlap_support_min, skfi_free_energy, skfi_objective, ArgmaxReport,
    Classification,
};

/// Suite names accepted by [`Verifier::run_suite`].
pub const SUITES: &[&str] = &[
    "parisi-oracle",
    "sk-high-temperature",
    "cw-oracle",
    "sandwich-bound",
    "free-energy-trend",
    "enumeration-vs-mc",
    "derivative-identity",
    "replica-inequality",
    "gg-trend",
    "positivity-trend",
    "ultrametric-trend",
    "magnetization-overlap",
    "region-thm",
    "bernoulli-histogram",
    "determinism",
];

/// How much work the stochastic suites do.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Effort {
    /// The sample sizes of the acceptance criteria.
    Full,
    /// Roughly a tenth of the work; verdicts are indicative only.
    Quick,
}

impl Effort {
    fn pick(self, full: usize, quick: usize) -> usize {
        match self {
            Effort::Full => full,
            Effort::Quick => quick,
        }
    }
}

/// Outcome of one suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub criterion: u32,
    pub suite: String,
    pub passed: bool,
    pub summary: String,
    pub measured: BTreeMap<String, f64>,
    #[serde(skip)]
    pub seconds: f64,
}

impl Outcome {
    fn new(criterion: u32, suite: &str) -> Self {
        Self {
            criterion,
            suite: suite.to_string(),
            passed: false,
            summary: String::new(),
            measured: BTreeMap::new(),
            seconds: 0.0,
        }
    }

    fn set(&mut self, key: impl Into<String>, v: f64) {
        self.measured.insert(key.into(), v);
    }

    /// One line `[PASS] 3 cw-oracle: ... (0.1 s)`.
    pub fn line(&self) -> String {
        format!(
            "[{}] {:>2} {}: {} ({:.1} s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.criterion,
            self.suite,
            self.summary,
            self.seconds
        )
    }
}

/// Runs suites and keeps the replica tuples seen by the Monte Carlo suites
/// so that the replica-inequality suite can include them.
#[derive(Debug, Clone)]
pub struct Verifier {
    pub seed: u64,
    pub effort: Effort,
    tuples: TupleTally,
}

fn temp(beta: f64, coeffs: Vec<f64>) -> Result<TemperaturePoint> {
    TemperaturePoint::new(beta, MixtureXi::new(coeffs)?)
}

fn centered(std: f64) -> Result<GaussianField> {
    GaussianField::centered(std)
}

/// `E ln cosh(mean + std Z)` by composite Simpson on `[-12, 12]` standard
/// deviations.
fn simpson_ln_cosh(mean: f64, std: f64) -> f64 {
    if std == 0.0 {
        return ln_cosh(mean);
    }
    let n = 6000;
    let (a, b) = (-12.0, 12.0);
    let step = (b - a) / n as f64;
    let f = |z: f64| ln_cosh(mean + std * z) * (-0.5 * z * z).exp();
    let mut s = f(a) + f(b);
    for i in 1..n {
        let z = a + i as f64 * step;
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(z);
    }
    s * step / 3.0 / (2.0 * std::f64::consts::PI).sqrt()
}

fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

/// Parameters shared by the trend criteria.
fn trend_point() -> Result<(TemperaturePoint, GaussianField)> {
    Ok((temp(1.0, vec![0.5])?, centered(0.3)?))
}

/// Parameters of the region and histogram criteria.
#[derive(Debug, Clone)]
struct RegionPoint {
    temp: TemperaturePoint,
    h: GaussianField,
    beta_u: f64,
    delta: f64,
}

fn region_point() -> Result<RegionPoint> {
    let h = centered(0.3)?;
    let beta_u = beta_for_magnetization(0.6, h)?;
    let beta = beta_u + 0.5;
    let delta = delta_u(0.6, beta, h)?;
    Ok(RegionPoint {
        temp: temp(beta, vec![delta.sqrt()])?,
        h,
        beta_u,
        delta,
    })
}

/// Whether a sequence is nonincreasing, allowing one increase no larger
/// than its combined standard error.
fn nonincreasing_with_slack(values: &[(f64, f64)]) -> bool {
    let mut inversions = 0;
    for w in values.windows(2) {
        let ((a, sa), (b, sb)) = (w[0], w[1]);
        if b > a {
            if b - a > (sa * sa + sb * sb).sqrt() {
                return false;
            }
            inversions += 1;
        }
    }
    inversions <= 1
}

impl Verifier {
    pub fn new(seed: u64, effort: Effort) -> Self {
        Self {
            seed,
            effort,
            tuples: TupleTally::default(),
        }
    }

    pub fn tuples(&self) -> TupleTally {
        self.tuples
    }

    /// Run one named suite. Some suites check several criteria parts and
    /// return one outcome per part.
    pub fn run_suite(&mut self, name: &str) -> Result<Vec<Outcome>> {
        let start = Instant::now();
        let mut out = match name {
            "parisi-oracle" => vec![self.parisi_oracle()?],
            "sk-high-temperature" => vec![self.sk_high_temperature()?],
            "cw-oracle" => vec![self.cw_oracle()?],
            "sandwich-bound" => vec![self.sandwich_bound()?],
            "free-energy-trend" => vec![self.free_energy_trend()?],
            "enumeration-vs-mc" => vec![self.enumeration_vs_mc()?],
            "derivative-identity" => vec![self.derivative_identity()?],
            "replica-inequality" => vec![self.replica_inequality()?],
            "gg-trend" => vec![self.gg_trend()?],
            "positivity-trend" => vec![self.trend_rates(Some(Observable::OverlapBelowCutoff))?],
            "ultrametric-trend" => vec![self.trend_rates(Some(Observable::UltrametricViolation))?],
            "magnetization-overlap" => {
                vec![self.trend_rates(Some(Observable::MagnetizationOverlapViolation))?]
            }
            "region-thm" => vec![self.region_theorem()?],
            "bernoulli-histogram" => vec![self.bernoulli_histogram()?],
            "determinism" => vec![self.determinism()?],
            _ => {
                return Err(invalid(format!(
                    "unknown suite {name:?}; available: {}",
                    SUITES.join(", ")
                )))
            }
        };
        let secs = start.elapsed().as_secs_f64();
        for o in &mut out {
            o.seconds = secs;
        }
        Ok(out)
    }

    /// Criterion 1: one-atom measures against the closed form.
    pub fn parisi_oracle(&mut self) -> Result<Outcome> {
        let mut o = Outcome::new(1, "parisi-oracle");
        let mut worst: f64 = 0.0;
        let mut count = 0;
        for coeffs in [vec![0.7], vec![0.7, 0.3]] {
            let xi = MixtureXi::new(coeffs)?;
            for std in [0.0, 0.3] {
                let h = centered(std)?;
                for i in 0..20 {
                    let q = i as f64 * 0.05;
                    let got = parisi_functional(&xi, h, &DiscreteMeasure::dirac(q)?)?;
                    let (x1, xq, dq) = (xi.eval(1.0)?, xi.eval(q)?, xi.derivs(q)?.0);
                    let sd = (std * std + dq).sqrt();
                    let want = std::f64::consts::LN_2
                        + simpson_ln_cosh(0.0, sd)
                        + 0.5 * (x1 - xq - (1.0 - q) * dq);
                    worst = worst.max((got - want).abs());
                    count += 1;
                }
            }
        }
        o.set("max_abs_error", worst);
        o.set("points", count as f64);
        o.passed = worst <= 1e-8;
        o.summary = format!("max |error| = {worst:.3e} over {count} points (tol 1e-8)");
        Ok(o)
    }

    /// Criterion 2: replica-symmetric high temperature SK.
    pub fn sk_high_temperature(&mut self) -> Result<Outcome> {
        let mut o = Outcome::new(2, "sk-high-temperature");
        let r = parisi_minimize(&MixtureXi::sk(0.3), GaussianField::zero(), crate::parisi::DEFAULT_K_MAX)?;
        let want = std::f64::consts::LN_2 + 0.045;
        let dv = (r.value - want).abs();
        let dm = measure_distance(&r.measure, &DiscreteMeasure::dirac(0.0)?);
        o.set("value", r.value);
        o.set("value_error", dv);
        o.set("distance_to_delta0", dm);
        o.passed = dv <= 1e-4 && dm <= 1e-3;
        o.summary = format!("value {:.8} (|err| {dv:.2e}), distance to delta_0 {dm:.2e}", r.value);
        Ok(o)
    }

    /// Criterion 3: pure Curie-Weiss at beta = 2.
    pub fn cw_oracle(&mut self) -> Result<Outcome> {
        let mut o = Outcome::new(3, "cw-oracle");
        let t = temp(2.0, vec![0.0])?;
        let rep = skfi_free_energy(&t, GaussianField::zero())?;
        // mu = tanh(2 mu) by plain bisection
        let (mut lo, mut hi) = (0.5f64, 1.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if (2.0 * mid).tanh() - mid > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let oracle = 0.5 * (lo + hi);
        let pair = rep.maximizers.len() == 2 && (rep.maximizers[0] + rep.maximizers[1]).abs() <= 1e-12;
        let mu = rep.nonnegative_maximizer();
        let closed = std::f64::consts::LN_2 + ln_cosh(2.0 * mu) - mu * mu;
        o.set("mu", mu);
        o.set("mu_oracle", oracle);
        o.set("value", rep.value);
        o.set("value_error", (rep.value - closed).abs());
        o.passed = pair
            && (mu - oracle).abs() <= 1e-4
            && (mu - 0.9575).abs() <= 1e-4
            && (rep.value - closed).abs() <= 1e-8;
        o.summary = format!(
            "maximizers {:?}, mu {mu:.8} vs bisection {oracle:.8}, value error {:.2e}",
            rep.maximizers,
            (rep.value - closed).abs()
        );
        Ok(o)
    }

    /// Criterion 4: `f(mu, beta) <= f(mu, beta, B) <= f(mu, beta) + xi(1)/2`.
    pub fn sandwich_bound(&mut self) -> Result<Outcome> {
        let mut o = Outcome::new(4, "sandwich-bound");
        let t = temp(2.0, vec![0.3])?;
        let h = centered(0.3)?;
        let half = 0.5 * t.xi.eval(1.0)?;
        let mut worst_low: f64 = f64::INFINITY;
        let mut worst_high: f64 = f64::INFINITY;
        for i in 0..=20 {
            let mu = i as f64 * 0.05;
            let cw = cw_curve(mu, t.beta, h)?;
            let full = skfi_objective(mu, &t, h)?;
            worst_low = worst_low.min(full - cw);
            worst_high = worst_high.min(cw + half - full);
        }
        o.set("min_lower_gap", worst_low);
        o.set("min_upper_gap", worst_high);
        o.passed = worst_low >= -1e-6 && worst_high >= -1e-6;
        o.summary = format!(
            "smallest gaps: lower {worst_low:.3e}, upper {worst_high:.3e} over 21 points"
        );
        Ok(o)
    }

    /// Criterion 5: exact finite-N free energies approach the variational
    /// value.
    pub fn free_energy_trend(&mut self) -> Result<Outcome> {
        let mut o = Outcome::new(5, "free-energy-trend");
        let t = temp(1.5, vec![0.5])?;
        let nd = self.effort.pick(200, 20);
        let sizes = [8usize, 10, 12, 14, 16];
        let mut passed = true;
        let mut parts = Vec::new();
        for (label, h) in [("h0", GaussianField::zero()), ("h0.2", GaussianField::constant(0.2)?)] {
            let limit = skfi_free_energy(&t, h)?.value;
            let mut gaps = Vec::new();
            for &n in &sizes {
                let fs: Vec<f64> = crate::simulator::observables::map_disorders(nd, |i| {
                    let d = sample_disorder(n, &t, h, self.seed, i)?;
                    Ok(enumerate_exact(&d, &t)?.free_energy())
                })?;
                let (m, se) = mean_stderr(&fs);
                o.set(format!("{label}_F{n}"), m);
                o.set(format!("{label}_F{n}_stderr"), se);
                gaps.push(((m - limit).abs(), se));
            }
            o.set(format!("{label}_F_inf"), limit);
            let mono = nonincreasing_with_slack(&gaps);
            let last = gaps[gaps.len() - 1].0;
            passed &= mono && last <= 0.05;
            parts.push(format!(
                "{label}: gaps {} monotone={mono} |F16-F|={last:.4}",
                gaps.iter()
                    .map(|g| format!("{:.4}", g.0))
                    .collect::<Vec<_>>()
                    .join(",")
            ));
        }
        o.passed = passed;
        o.summary = parts.join("; ");
        Ok(o)
    }

    /// Criterion 6: Monte Carlo against exact enumeration, disorder by
    /// disorder.
    pub fn enumeration_vs_mc(&mut self) -> Result<Outcome> {
        let mut o = Outcome::new(6, "enumeration-vs-mc");
        let (t, h) = trend_point()?;
        let nd = self.effort.pick(100, 10);
        let mut cfg = EstimateConfig::new(10, nd, self.effort.pick(100_000, 10_000), self.seed);
        cfg.n_replicas = 2;
        cfg.burnin = 1000;
        cfg.exact_free_energy = false;
        let results = crate::simulator::observables::map_disorders(nd, |i| {
            let est = estimate_disorder(&t, h, &cfg, i)?;
            let d = sample_disorder(10, &t, h, self.seed, i)?;
            let ex = enumerate_exact(&d, &t)?.summary();
            let mut worst: f64 = 0.0;
            for (obs, want) in [(Observable::M, ex.m), (Observable::M2, ex.m2), (Observable::R12Sq, ex.r2)] {
                let v = est.get(obs).expect("observable measured");
                worst = worst.max((v.mean - want).abs() / v.stderr);
            }
            Ok((worst, est.tuples))
        })?;
        let agree = results.iter().filter(|r| r.0 <= 3.0).count();
        for r in &results {
            self.tuples.add(r.1);
        }
        let need = (nd * 95).div_ceil(100);
        o.set("agreeing_disorders", agree as f64);
        o.set("disorders", nd as f64);
        o.passed = agree >= need;
        o.summary = format!("{agree}/{nd} disorders agree within 3 stderr on m, m^2, R^2 (need {need})");
        Ok(o)
    }

    /// Criterion 7: the finite-N derivative identity for `p = 1, 2`.
    pub fn derivative_identity(&mut self) -> Result<Outcome> {
        let mut o = Outcome::new(7, "derivative-identity");
        let h = centered(0.3)?;
        let nd = self.effort.pick(200, 40);
        let mut passed = true;
        let mut parts = Vec::new();
        for (p, coeffs) in [(1, vec![0.5]), (2, vec![0.5, 0.3])] {
            let t = temp(1.0, coeffs)?;
            let c = finite_n_derivative_check(&t, h, 10, nd, p, 1e-3, self.seed)?;
            let d = c.difference().abs();
            o.set(format!("p{p}_lhs"), c.lhs);
            o.set(format!("p{p}_rhs"), c.rhs);
            o.set(format!("p{p}_stderr"), c.stderr);
            passed &= d <= 3.0 * c.stderr;
            parts.push(format!(
                "p={p}: lhs {:.6} rhs {:.6} |diff| {d:.2e} <= 3*{:.2e}",
                c.lhs, c.rhs, c.stderr
            ));
        }
        o.passed = passed;
        o.summary = parts.join("; ");
        Ok(o)
    }

    /// Criterion 8: random tuples plus every tuple sampled so far.
    pub fn replica_inequality(&mut self) -> Result<Outcome> {
        let mut o = Outcome::new(8, "replica-inequality");
        let count = self.effort.pick(1_000_000, 100_000);
        let random = replica_inequality_random(self.seed, count, 64, 5)?;
        let sampled = self.tuples;
        o.set("random_tuples", count as f64);
        o.set("random_violations", random as f64);
        o.set("sampled_tuples", sampled.checked as f64);
        o.set("sampled_violations", sampled.violations as f64);
        o.passed = random == 0 && sampled.violations == 0;
        o.summary = format!(
            "{random} violations in {count} random tuples, {} in {} sampled tuples",
            sampled.violations, sampled.checked
        );
        Ok(o)
    }

    fn trend_config(&self, n: usize) -> EstimateConfig {
        let mut cfg = EstimateConfig::new(
            n,
            self.effort.pick(200, 20),
            self.effort.pick(10_000, 2_000),
            self.seed,
        );
        cfg.n_replicas = 3;
        cfg.burnin = 1000;
        cfg.exact_free_energy = false;
        cfg
    }

    /// Criterion 9: Ghirlanda-Guerra residual at N = 8 and 24.
    pub fn gg_trend(&mut self) -> Result<Outcome> {
        let mut o = Outcome::new(9, "gg-trend");
        let (t, h) = trend_point()?;
        let mut res = Vec::new();
        for n in [8, 24] {
            let g = gg_residual(&t, h, &self.trend_config(n), 2, &|x| x)?;
            self.tuples.add(g.tuples);
            o.set(format!("residual_N{n}"), g.residual);
            res.push(g.residual);
        }
        o.passed = res[1] < res[0] && res[1] <= 0.1;
        o.summary = format!("residual N=8 {:.4}, N=24 {:.4} (need decrease and <= 0.1)", res[0], res[1]);
        Ok(o)
    }

    /// Criterion 10, all three rates when `only` is `None`.
    pub fn trend_rates(&mut self, only: Option<Observable>) -> Result<Outcome> {
        let suite = match only {
            Some(Observable::OverlapBelowCutoff) => "positivity-trend",
            Some(Observable::UltrametricViolation) => "ultrametric-trend",
            Some(Observable::MagnetizationOverlapViolation) => "magnetization-overlap",
            _ => "overlap-trends",
        };
        let mut o = Outcome::new(10, suite);
        let (t, h) = trend_point()?;
        let report = skfi_free_energy(&t, h)?;
        let law = overlap_law_for(&t, h, &report)?;
        let cutoff = 0.5 * overlap_support_min(&law.measure);
        o.set("c_prime", cutoff);
        let observables = [
            Observable::OverlapBelowCutoff,
            Observable::UltrametricViolation,
            Observable::MagnetizationOverlapViolation,
        ];
        let mut rates = BTreeMap::new();
        for n in [8, 24] {
            let mut cfg = self.trend_config(n);
            cfg.overlap_cutoff = Some(cutoff);
            let rep = estimate_observables(&t, h, &cfg)?;
            self.tuples.add(rep.tuples);
            for obs in observables {
                let row = rep.row(obs).expect("rate measured");
                rates.insert((obs, n), row.estimate);
                o.set(format!("{}_N{n}", obs.name()), row.estimate);
                o.set(format!("{}_N{n}_stderr", obs.name()), row.stderr);
            }
        }
        let mut passed = true;
        let mut parts = Vec::new();
        for obs in observables.into_iter().filter(|&x| only.is_none_or(|y| y == x)) {
            let (a, b) = (rates[&(obs, 8)], rates[&(obs, 24)]);
            passed &= b < a && b <= 0.15;
            parts.push(format!("{} N=8 {a:.4} N=24 {b:.4}", obs.name()));
        }
        o.passed = passed;
        o.summary = format!("c'={cutoff:.4}; {} (need decrease and <= 0.15)", parts.join(", "));
        Ok(o)
    }

    /// Criterion 11: the maximizers avoid `[-u, u]`.
    pub fn region_theorem(&mut self) -> Result<Outcome> {
        let mut o = Outcome::new(11, "region-thm");
        let rp = region_point()?;
        let cond = field_condition(rp.h)?;
        let inside = region_contains(0.6, &rp.temp, rp.h)?;
        let rep = skfi_free_energy(&rp.temp, rp.h)?;
        let min_abs = rep
            .maximizers
            .iter()
            .map(|m| m.abs())
            .fold(f64::INFINITY, f64::min);
        o.set("beta_u", rp.beta_u);
        o.set("beta", rp.temp.beta);
        o.set("beta1", rp.temp.xi.beta_p(1));
        o.set("delta_u", rp.delta);
        o.set("min_abs_maximizer", min_abs);
        o.passed = cond && inside && !rep.maximizers.is_empty() && min_abs > 0.6;
        o.summary = format!(
            "field condition {cond}, in region {inside}, beta {:.5}, beta1 {:.5}, maximizers {:?}",
            rp.temp.beta,
            rp.temp.xi.beta_p(1),
            rep.maximizers
        );
        Ok(o)
    }

    /// Criterion 12: the per-disorder weight near `+mu`.
    pub fn bernoulli_histogram(&mut self) -> Result<Outcome> {
        let mut o = Outcome::new(12, "bernoulli-histogram");
        let rp = region_point()?;
        let nd = self.effort.pick(400, 40);
        let mut run = |h: GaussianField, report: &ArgmaxReport| -> Result<Vec<f64>> {
            let mut cfg = EstimateConfig::new(20, nd, self.effort.pick(20_000, 4_000), self.seed);
            cfg.n_replicas = 2;
            cfg.burnin = 2000;
            cfg.exact_free_energy = false;
            cfg.magnetization_window = Some(Window {
                center: report.nonnegative_maximizer(),
                half_width: 0.1,
            });
            let rep = estimate_observables(&rp.temp, h, &cfg)?;
            self.tuples.add(rep.tuples);
            Ok(rep
                .per_disorder
                .iter()
                .map(|d| d.get(Observable::MagnetizationWindow).expect("window measured").mean)
                .collect())
        };

        let report = skfi_free_energy(&rp.temp, rp.h)?;
        let vals = run(rp.h, &report)?;
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let extreme = vals.iter().filter(|&&v| v <= 0.1 || v >= 0.9).count() as f64 / vals.len() as f64;

        let zero = GaussianField::zero();
        let report0 = skfi_free_energy(&rp.temp, zero)?;
        let vals0 = run(zero, &report0)?;
        let within = vals0.iter().filter(|&&v| (v - 0.5).abs() <= 0.1).count();
        let (lo0, hi0) = vals0
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));

        o.set("mu", report.nonnegative_maximizer());
        o.set("mean", mean);
        o.set("extreme_fraction", extreme);
        o.set("h0_mu", report0.nonnegative_maximizer());
        o.set("h0_within", within as f64);
        o.set("h0_min", lo0);
        o.set("h0_max", hi0);
        let c = report.classification == Classification::SymmetricPair;
        o.passed = (mean - 0.5).abs() <= 0.08 && extreme >= 0.7 && within == vals0.len();
        o.summary = format!(
            "symmetric pair {c}; mean {mean:.3}, extreme mass {extreme:.3}; h=0: {within}/{} in 0.5+-0.1 (range {lo0:.3}..{hi0:.3})",
            vals0.len()
        );
        Ok(o)
    }

    /// Criterion 13: repeated runs serialize to identical bytes, also
    /// across thread counts.
    pub fn determinism(&mut self) -> Result<Outcome> {
        let mut o = Outcome::new(13, "determinism");
        let (t, h) = trend_point()?;
        let probe = |threads: usize| -> Result<String> {
            let mut cfg = EstimateConfig::new(12, 8, 2000, self.seed);
            cfg.overlap_cutoff = Some(0.05);
            let job = || -> Result<String> {
                let rep = estimate_observables(&t, h, &cfg)?;
                let mut v = Verifier::new(self.seed, self.effort);
                let cw = v.cw_oracle()?;
                let sk = v.sk_high_temperature()?;
                serde_json::to_string(&(rep, cw, sk)).map_err(|e| invalid(e.to_string()))
            };
            with_threads(threads, job)
        };
        let a = probe(1)?;
        let b = probe(1)?;
        let c = probe(4)?;
        o.set("bytes", a.len() as f64);
        o.passed = a == b && a == c;
        o.summary = format!(
            "{} bytes; rerun identical {}, 1 vs 4 threads identical {}",
            a.len(),
            a == b,
            a == c
        );
        Ok(o)
    }

    /// Every acceptance criterion in order.
    pub fn run_all(&mut self) -> Result<Vec<Outcome>> {
        let mut out = Vec::new();
        for name in [
            "parisi-oracle",
            "sk-high-temperature",
            "cw-oracle",
            "sandwich-bound",
            "free-energy-trend",
            "enumeration-vs-mc",
            "derivative-identity",
            "gg-trend",
        ] {
            out.extend(self.run_suite(name)?);
        }
        let start = Instant::now();
        let mut c10 = self.trend_rates(None)?;
        c10.seconds = start.elapsed().as_secs_f64();
        out.push(c10);
        for name in ["region-thm", "bernoulli-histogram", "replica-inequality", "determinism"] {
            out.extend(self.run_suite(name)?);
        }
        out.sort_by_key(|o| o.criterion);
        Ok(out)
    }
}

#[cfg(feature = "parallel")]
fn with_threads<T: Send>(threads: usize, job: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| invalid(e.to_string()))?;
    pool.install(job)
}

#[cfg(not(feature = "parallel"))]
fn with_threads<T: Send>(_threads: usize, job: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    job()
}
