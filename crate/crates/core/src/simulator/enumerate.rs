//! Exact Gibbs measures for small systems by full enumeration.
//!
//! Configurations are visited in Gray-code order so each step flips one spin
//! and updates the energy from the cached local fields. The two-replica
//! overlap law is exact: the XOR autocorrelation of the Gibbs weights is
//! computed with a fast Walsh-Hadamard transform and binned by Hamming
//! distance.

use serde::{Deserialize, Serialize};

use super::disorder::{DisorderSample, SpinConfig, SpinModel};
use crate::error::{Error, Result};
use crate::model::TemperaturePoint;

/// Size limit without quartic couplings.
pub const MAX_ENUM_N: usize = 20;
/// Size limit with quartic couplings.
pub const MAX_ENUM_N_QUARTIC: usize = 12;

/// The Gibbs measure of one disorder sample, stored configuration by
/// configuration (bit `i` set means `s_i = +1`).
#[derive(Debug, Clone)]
pub struct ExactGibbs {
    n: usize,
    log_z: f64,
    probs: Vec<f64>,
}

/// Summary statistics of an exact Gibbs measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExactSummary {
    pub n: usize,
    pub log_z: f64,
    pub m: f64,
    pub abs_m: f64,
    pub m2: f64,
    pub r2: f64,
    pub r4: f64,
}

pub fn enumerate_exact(d: &DisorderSample, temp: &TemperaturePoint) -> Result<ExactGibbs> {
    let model = SpinModel::new(d, temp)?;
    enumerate_model(&model)
}

pub fn enumerate_model(model: &SpinModel) -> Result<ExactGibbs> {
    let n = model.n();
    let limit = if model.has_quartic() {
        MAX_ENUM_N_QUARTIC
    } else {
        MAX_ENUM_N
    };
    if n > limit {
        return Err(Error::SizeLimit {
            n,
            limit,
            what: "exact enumeration",
        });
    }
    let count = 1usize << n;
    let mut s = vec![-1.0; n];
    let mut fields = model.local_fields(&s);
    let mut e = model.energy(&s);
    let mut energies = vec![0.0; count];
    energies[0] = e;
    let mut bits = 0usize;

    let mut max = e;
    let mut acc = 1.0;
    for t in 1..count {
        let i = t.trailing_zeros() as usize;
        e -= 2.0 * s[i] * fields[i];
        s[i] = -s[i];
        model.propagate_flip(&s, &mut fields, i, s[i]);
        bits ^= 1 << i;
        energies[bits] = e;
        if e > max {
            acc = acc * (max - e).exp() + 1.0;
            max = e;
        } else {
            acc += (e - max).exp();
        }
    }
    let log_z = max + acc.ln();
    if !log_z.is_finite() {
        return Err(Error::NonFinite { at: max });
    }
    let probs = energies.iter().map(|&x| (x - log_z).exp()).collect();
    Ok(ExactGibbs { n, log_z, probs })
}

impl ExactGibbs {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn log_z(&self) -> f64 {
        self.log_z
    }

    /// `(1/N) ln Z`.
    pub fn free_energy(&self) -> f64 {
        self.log_z / self.n as f64
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    pub fn config(&self, bits: usize) -> SpinConfig {
        SpinConfig::from_bits(bits as u64, self.n)
    }

    /// Law of the magnetization: `p[k]` is the mass of `m = 2k/N - 1`.
    pub fn magnetization_law(&self) -> Vec<f64> {
        let mut law = vec![0.0; self.n + 1];
        for (bits, &p) in self.probs.iter().enumerate() {
            law[bits.count_ones() as usize] += p;
        }
        law
    }

    /// `<f(m)>`.
    pub fn expect_m(&self, f: impl Fn(f64) -> f64) -> f64 {
        let nf = self.n as f64;
        self.magnetization_law()
            .iter()
            .enumerate()
            .map(|(k, &p)| p * f(2.0 * k as f64 / nf - 1.0))
            .sum()
    }

    /// `<s_i s_j>` as a dense matrix.
    pub fn correlations(&self) -> Vec<f64> {
        let n = self.n;
        let mut c = vec![0.0; n * n];
        for (bits, &p) in self.probs.iter().enumerate() {
            for i in 0..n {
                let si = if bits >> i & 1 == 1 { 1.0 } else { -1.0 };
                for j in 0..n {
                    let sj = if bits >> j & 1 == 1 { 1.0 } else { -1.0 };
                    c[i * n + j] += p * si * sj;
                }
            }
        }
        c
    }

    /// Law of the two-replica overlap: `p[d]` is the mass of `R = 1 - 2d/N`.
    pub fn overlap_law(&self) -> Vec<f64> {
        let mut a = self.probs.clone();
        walsh_hadamard(&mut a);
        for v in &mut a {
            *v *= *v;
        }
        walsh_hadamard(&mut a);
        let scale = 1.0 / a.len() as f64;
        let mut law = vec![0.0; self.n + 1];
        for (x, v) in a.iter().enumerate() {
            law[x.count_ones() as usize] += v * scale;
        }
        for p in &mut law {
            if *p < 0.0 {
                *p = 0.0;
            }
        }
        law
    }

    /// `<g(R_12)>` under the product measure.
    pub fn expect_overlap(&self, g: impl Fn(f64) -> f64) -> f64 {
        let nf = self.n as f64;
        self.overlap_law()
            .iter()
            .enumerate()
            .map(|(d, &p)| p * g(1.0 - 2.0 * d as f64 / nf))
            .sum()
    }

    pub fn summary(&self) -> ExactSummary {
        let law = self.overlap_law();
        let nf = self.n as f64;
        let (mut r2, mut r4) = (0.0, 0.0);
        for (d, &p) in law.iter().enumerate() {
            let r = 1.0 - 2.0 * d as f64 / nf;
            r2 += p * r * r;
            r4 += p * r.powi(4);
        }
        ExactSummary {
            n: self.n,
            log_z: self.log_z,
            m: self.expect_m(|m| m),
            abs_m: self.expect_m(f64::abs),
            m2: self.expect_m(|m| m * m),
            r2,
            r4,
        }
    }
}

fn walsh_hadamard(a: &mut [f64]) {
    let mut h = 1;
    while h < a.len() {
        for block in a.chunks_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (x, y) in lo.iter_mut().zip(hi.iter_mut()) {
                let (u, v) = (*x, *y);
                *x = u + v;
                *y = u - v;
            }
        }
        h *= 2;
    }
}
