//! Disorder samples, spin configurations and the Hamiltonian.
//!
//! The Hamiltonian is
//! `H = (beta N / 2) m^2 + sum_p beta_p N^-(p - 1/2) sum g_{i1..i2p} s_i1..s_i2p + sum h_i s_i`
//! where the inner sum runs over all ordered index tuples, diagonal ones
//! included. [`hamiltonian`] evaluates that sum literally. [`SpinModel`] is the
//! same function reduced to a multilinear polynomial in the spins, which is
//! what the enumerator and the sampler use.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::rng::{stream_rng, Purpose};
use crate::error::{invalid, Error, Result};
use crate::model::{GaussianField, TemperaturePoint};

/// Largest system for which the quartic tensor is materialized.
pub const MAX_QUARTIC_N: usize = 28;

/// Largest supported system size.
pub const MAX_N: usize = 4096;

/// One realization of the couplings and the external field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisorderSample {
    pub n: usize,
    /// `n x n` row-major, `g2[i * n + j]`.
    pub g2: Vec<f64>,
    /// `n^4` row-major; present only when the quartic term is switched on.
    pub g4: Option<Vec<f64>>,
    pub fields: Vec<f64>,
    pub root_seed: u64,
    pub index: u32,
}

/// Draw disorder sample `index` of the run keyed by `root_seed`.
///
/// Couplings and fields come from separate streams, so changing `beta_p` or
/// the field law leaves the other arrays untouched.
pub fn sample_disorder(
    n: usize,
    temp: &TemperaturePoint,
    h: GaussianField,
    root_seed: u64,
    index: u32,
) -> Result<DisorderSample> {
    if n == 0 {
        return Err(invalid("system size must be positive"));
    }
    if n > MAX_N {
        return Err(Error::SizeLimit {
            n,
            limit: MAX_N,
            what: "disorder sampling",
        });
    }
    let quartic = check_mixture(temp)?;
    if quartic && n > MAX_QUARTIC_N {
        return Err(Error::SizeLimit {
            n,
            limit: MAX_QUARTIC_N,
            what: "the quartic coupling tensor",
        });
    }
    let gauss = |purpose, len: usize| -> Vec<f64> {
        let mut rng = stream_rng(root_seed, purpose, index, 0);
        (0..len).map(|_| rng.sample(StandardNormal)).collect()
    };
    let g2 = gauss(Purpose::Couplings2, n * n);
    let g4 = quartic.then(|| gauss(Purpose::Couplings4, n * n * n * n));
    let fields = gauss(Purpose::Fields, n)
        .into_iter()
        .map(|z: f64| h.mean + h.std * z)
        .collect();
    Ok(DisorderSample {
        n,
        g2,
        g4,
        fields,
        root_seed,
        index,
    })
}

/// Rejects mixtures with terms beyond `p = 2`; returns whether `beta_2 != 0`.
fn check_mixture(temp: &TemperaturePoint) -> Result<bool> {
    let c = temp.xi.coeffs();
    if let Some(p) = c.iter().skip(2).position(|&b| b != 0.0) {
        return Err(invalid(format!(
            "the simulator supports p <= 2, got a nonzero beta_{}",
            p + 3
        )));
    }
    Ok(temp.xi.beta_p(2) != 0.0)
}

/// A configuration of `+-1` spins.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpinConfig {
    spins: Vec<i8>,
}

impl SpinConfig {
    pub fn new(spins: Vec<i8>) -> Result<Self> {
        if spins.is_empty() {
            return Err(invalid("empty spin configuration"));
        }
        if let Some(s) = spins.iter().find(|&&s| s != 1 && s != -1) {
            return Err(invalid(format!("spin value {s} is not +-1")));
        }
        Ok(Self { spins })
    }

    pub fn all_up(n: usize) -> Self {
        Self { spins: vec![1; n] }
    }

    /// Configuration encoded by the low `n` bits of `bits` (bit set means `+1`).
    pub fn from_bits(bits: u64, n: usize) -> Self {
        Self {
            spins: (0..n)
                .map(|i| if bits >> i & 1 == 1 { 1 } else { -1 })
                .collect(),
        }
    }

    pub fn spins(&self) -> &[i8] {
        &self.spins
    }

    pub fn len(&self) -> usize {
        self.spins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spins.is_empty()
    }

    pub fn sum(&self) -> i64 {
        self.spins.iter().map(|&s| s as i64).sum()
    }

    pub fn magnetization(&self) -> f64 {
        self.sum() as f64 / self.len() as f64
    }

    /// Integer overlap `sum_i s_i t_i`.
    pub fn dot(&self, other: &SpinConfig) -> Result<i64> {
        if self.len() != other.len() {
            return Err(invalid("configurations of different sizes"));
        }
        Ok(self
            .spins
            .iter()
            .zip(&other.spins)
            .map(|(&a, &b)| (a * b) as i64)
            .sum())
    }

    pub fn overlap(&self, other: &SpinConfig) -> Result<f64> {
        Ok(self.dot(other)? as f64 / self.len() as f64)
    }
}

/// The Hamiltonian evaluated term by term over all ordered index tuples.
pub fn hamiltonian(d: &DisorderSample, sigma: &SpinConfig, temp: &TemperaturePoint) -> Result<f64> {
    let n = d.n;
    if sigma.len() != n {
        return Err(invalid(format!(
            "configuration has {} spins, disorder has {n}",
            sigma.len()
        )));
    }
    let quartic = check_mixture(temp)?;
    if quartic && d.g4.is_none() {
        return Err(invalid("beta_2 != 0 but the sample has no quartic couplings"));
    }
    let s: Vec<f64> = sigma.spins().iter().map(|&x| x as f64).collect();
    let nf = n as f64;
    let m = s.iter().sum::<f64>() / nf;
    let mut h = 0.5 * temp.beta * nf * m * m;

    let mut pair = 0.0;
    for i in 0..n {
        for j in 0..n {
            pair += d.g2[i * n + j] * s[i] * s[j];
        }
    }
    h += temp.xi.beta_p(1) * pair / nf.sqrt();

    if quartic {
        let g4 = d.g4.as_deref().unwrap_or(&[]);
        let mut quad = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let base = ((i * n + j) * n + k) * n;
                    let sijk = s[i] * s[j] * s[k];
                    for l in 0..n {
                        quad += g4[base + l] * sijk * s[l];
                    }
                }
            }
        }
        h += temp.xi.beta_p(2) * quad / nf.powf(1.5);
    }

    h += d.fields.iter().zip(&s).map(|(a, b)| a * b).sum::<f64>();
    Ok(h)
}

/// The Hamiltonian as a multilinear polynomial
/// `c + sum_i f_i s_i + sum_{i<j} J_ij s_i s_j + sum_{i<j<k<l} K_ijkl s_i s_j s_k s_l`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinModel {
    pub(crate) n: usize,
    pub(crate) constant: f64,
    pub(crate) fields: Vec<f64>,
    /// Symmetric `n x n`, zero diagonal.
    pub(crate) pair: Vec<f64>,
    /// For each site `s`, the quartic terms `(a, b, c, K)` with `{s, a, b, c}`
    /// the support of `K`.
    pub(crate) quartic: Vec<Vec<(u16, u16, u16, f64)>>,
}

impl SpinModel {
    pub fn new(d: &DisorderSample, temp: &TemperaturePoint) -> Result<Self> {
        let n = d.n;
        let quartic_on = check_mixture(temp)?;
        if quartic_on && d.g4.is_none() {
            return Err(invalid("beta_2 != 0 but the sample has no quartic couplings"));
        }
        let nf = n as f64;
        let mut constant = 0.5 * temp.beta;
        let mut pair = vec![0.0; n * n];
        let cw = temp.beta / nf;

        let b1 = temp.xi.beta_p(1) / nf.sqrt();
        for i in 0..n {
            constant += b1 * d.g2[i * n + i];
            for j in i + 1..n {
                let v = cw + b1 * (d.g2[i * n + j] + d.g2[j * n + i]);
                pair[i * n + j] = v;
                pair[j * n + i] = v;
            }
        }

        let mut quartic = vec![Vec::new(); n];
        if quartic_on {
            let g4 = d.g4.as_deref().unwrap_or(&[]);
            let b2 = temp.xi.beta_p(2) / nf.powf(1.5);
            // Reduce each ordered tuple to the set of indices with odd
            // multiplicity; the tensor is accumulated in sorted-index slots.
            let mut k4 = vec![0.0; n * n * n * n];
            let mut pair4 = vec![0.0; n * n];
            let mut const4 = 0.0;
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        for l in 0..n {
                            let g = g4[((i * n + j) * n + k) * n + l];
                            let mut idx = [i, j, k, l];
                            idx.sort_unstable();
                            let odd = odd_support(idx);
                            match odd.len() {
                                0 => const4 += g,
                                2 => pair4[odd[0] * n + odd[1]] += g,
                                _ => k4[((idx[0] * n + idx[1]) * n + idx[2]) * n + idx[3]] += g,
                            }
                        }
                    }
                }
            }
            constant += b2 * const4;
            for i in 0..n {
                for j in i + 1..n {
                    let v = b2 * pair4[i * n + j];
                    pair[i * n + j] += v;
                    pair[j * n + i] += v;
                }
            }
            for a in 0..n {
                for b in a + 1..n {
                    for c in b + 1..n {
                        for e in c + 1..n {
                            let v = b2 * k4[((a * n + b) * n + c) * n + e];
                            let t = [a, b, c, e];
                            for (pos, &s) in t.iter().enumerate() {
                                let mut o = t.iter().enumerate().filter(|&(q, _)| q != pos);
                                let (_, &x) = o.next().unwrap();
                                let (_, &y) = o.next().unwrap();
                                let (_, &z) = o.next().unwrap();
                                quartic[s].push((x as u16, y as u16, z as u16, v));
                            }
                        }
                    }
                }
            }
        }

        Ok(Self {
            n,
            constant,
            fields: d.fields.clone(),
            pair,
            quartic,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn has_quartic(&self) -> bool {
        self.quartic.iter().any(|v| !v.is_empty())
    }

    /// Energy of a configuration given as `+-1.0` values.
    pub fn energy(&self, s: &[f64]) -> f64 {
        let n = self.n;
        let mut e = self.constant;
        for i in 0..n {
            e += self.fields[i] * s[i];
            let row = &self.pair[i * n..(i + 1) * n];
            for j in i + 1..n {
                e += row[j] * s[i] * s[j];
            }
            for &(a, b, c, k) in &self.quartic[i] {
                if (a as usize) > i {
                    e += k * s[i] * s[a as usize] * s[b as usize] * s[c as usize];
                }
            }
        }
        e
    }

    /// `(H(s_i = +1) - H(s_i = -1)) / 2`.
    pub fn local_field(&self, s: &[f64], i: usize) -> f64 {
        let n = self.n;
        let row = &self.pair[i * n..(i + 1) * n];
        let mut b = self.fields[i];
        for j in 0..n {
            b += row[j] * s[j];
        }
        for &(a, c, e, k) in &self.quartic[i] {
            b += k * s[a as usize] * s[c as usize] * s[e as usize];
        }
        b
    }

    /// Update cached local fields after spin `i` changed to `new`.
    pub(crate) fn propagate_flip(&self, s: &[f64], fields: &mut [f64], i: usize, new: f64) {
        let n = self.n;
        let d = 2.0 * new;
        let row = &self.pair[i * n..(i + 1) * n];
        for (f, &j) in fields.iter_mut().zip(row) {
            *f += d * j;
        }
        for &(a, b, c, k) in &self.quartic[i] {
            let (a, b, c) = (a as usize, b as usize, c as usize);
            fields[a] += d * k * s[b] * s[c];
            fields[b] += d * k * s[a] * s[c];
            fields[c] += d * k * s[a] * s[b];
        }
    }

    pub fn local_fields(&self, s: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| self.local_field(s, i)).collect()
    }
}

fn odd_support(sorted: [usize; 4]) -> Vec<usize> {
    let mut out = Vec::with_capacity(4);
    let mut i = 0;
    while i < 4 {
        let mut j = i;
        while j < 4 && sorted[j] == sorted[i] {
            j += 1;
        }
        if (j - i) % 2 == 1 {
            out.push(sorted[i]);
        }
        i = j;
    }
    out
}
