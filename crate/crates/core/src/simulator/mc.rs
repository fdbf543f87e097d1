//! Heat-bath Monte Carlo on independent replicas of one disorder sample.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::disorder::{SpinConfig, SpinModel};
use super::rng::{stream_rng, Purpose, MAX_CHAIN};
use crate::error::{invalid, Result};

const REFRESH_EVERY: usize = 256;

/// How a chain is initialized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Start {
    /// Independent uniform spins.
    Hot,
    /// All spins up.
    Cold,
}

#[derive(Debug, Clone)]
struct Chain {
    spins: Vec<f64>,
    fields: Vec<f64>,
    order: Vec<usize>,
    rng: ChaCha8Rng,
    start: Start,
}

/// Independent chains sharing one Hamiltonian.
#[derive(Debug, Clone)]
pub struct ReplicaSet {
    model: SpinModel,
    chains: Vec<Chain>,
    sweeps_done: usize,
}

/// Probability that the heat-bath update sets the spin to `+1`.
pub fn heat_bath_probability(local_field: f64) -> f64 {
    1.0 / (1.0 + (-2.0 * local_field).exp())
}

impl ReplicaSet {
    /// Chain `r` uses stream `(root_seed, Chain, disorder, r)`.
    pub fn new(
        model: SpinModel,
        starts: &[Start],
        root_seed: u64,
        disorder: u32,
    ) -> Result<Self> {
        if starts.is_empty() || starts.len() > MAX_CHAIN as usize {
            return Err(invalid(format!("bad replica count {}", starts.len())));
        }
        let n = model.n();
        let chains = starts
            .iter()
            .enumerate()
            .map(|(r, &start)| {
                let mut rng = stream_rng(root_seed, Purpose::Chain, disorder, r as u32);
                let spins: Vec<f64> = match start {
                    Start::Cold => vec![1.0; n],
                    Start::Hot => (0..n)
                        .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
                        .collect(),
                };
                let fields = model.local_fields(&spins);
                Chain {
                    spins,
                    fields,
                    order: (0..n).collect(),
                    rng,
                    start,
                }
            })
            .collect();
        Ok(Self {
            model,
            chains,
            sweeps_done: 0,
        })
    }

    pub fn model(&self) -> &SpinModel {
        &self.model
    }

    pub fn n_replicas(&self) -> usize {
        self.chains.len()
    }

    pub fn start(&self, r: usize) -> Start {
        self.chains[r].start
    }

    pub fn spins(&self, r: usize) -> &[f64] {
        &self.chains[r].spins
    }

    pub fn config(&self, r: usize) -> SpinConfig {
        SpinConfig::new(
            self.chains[r]
                .spins
                .iter()
                .map(|&s| if s > 0.0 { 1 } else { -1 })
                .collect(),
        )
        .expect("chains hold +-1 spins")
    }

    /// Integer magnetization `sum_i s_i` of replica `r`.
    pub fn spin_sum(&self, r: usize) -> i64 {
        self.chains[r].spins.iter().map(|&s| s as i64).sum()
    }

    /// Integer overlap `sum_i s_i t_i` of replicas `a` and `b`.
    pub fn spin_dot(&self, a: usize, b: usize) -> i64 {
        self.chains[a]
            .spins
            .iter()
            .zip(&self.chains[b].spins)
            .map(|(&x, &y)| (x * y) as i64)
            .sum()
    }

    pub fn sweeps_done(&self) -> usize {
        self.sweeps_done
    }
}

/// Run `sweeps` heat-bath sweeps on every chain. Each sweep visits all sites
/// once in a fresh random order.
pub fn heat_bath_sweep(set: &mut ReplicaSet, sweeps: usize) {
    let model = &set.model;
    for chain in &mut set.chains {
        for t in 0..sweeps {
            chain.order.shuffle(&mut chain.rng);
            for k in 0..chain.order.len() {
                let i = chain.order[k];
                let p = heat_bath_probability(chain.fields[i]);
                let new = if chain.rng.random::<f64>() < p { 1.0 } else { -1.0 };
                if new != chain.spins[i] {
                    chain.spins[i] = new;
                    model.propagate_flip(&chain.spins, &mut chain.fields, i, new);
                }
            }
            if (set.sweeps_done + t + 1) % REFRESH_EVERY == 0 {
                chain.fields = model.local_fields(&chain.spins);
            }
        }
    }
    set.sweeps_done += sweeps;
}
