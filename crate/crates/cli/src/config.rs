//! Versioned JSON run configuration.

use serde::{Deserialize, Serialize};
use skfi_core::simulator::{EstimateConfig, Window};
use skfi_core::verify::Effort;
use skfi_core::{GaussianField, MixtureXi, TemperaturePoint};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default = "default_version")]
    pub version: u32,
    #[serde(default)]
    pub beta: f64,
    /// `beta_p` for `p = 1, 2, ...`; empty means no spin-glass term.
    #[serde(default)]
    pub coeffs: Vec<f64>,
    #[serde(default)]
    pub h_mean: f64,
    #[serde(default)]
    pub h_std: f64,
    #[serde(default)]
    pub u: Option<f64>,
    #[serde(default = "default_k_max")]
    pub k_max: usize,
    #[serde(default)]
    pub simulate: SimulateConfig,
    #[serde(default)]
    pub enumerate: EnumerateConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
}

fn default_version() -> u32 {
    CONFIG_VERSION
}

fn default_k_max() -> usize {
    skfi_core::parisi::DEFAULT_K_MAX
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    #[serde(default = "default_ladder")]
    pub n_ladder: Vec<usize>,
    #[serde(default = "default_n_disorder")]
    pub n_disorder: usize,
    #[serde(default = "default_replicas")]
    pub n_replicas: usize,
    #[serde(default = "default_burnin")]
    pub burnin: usize,
    #[serde(default = "default_sweeps")]
    pub sweeps: usize,
    #[serde(default = "default_batches")]
    pub batches: usize,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub overlap_cutoff: Option<f64>,
    #[serde(default)]
    pub magnetization_window: Option<Window>,
    #[serde(default = "default_true")]
    pub exact_free_energy: bool,
}

fn default_ladder() -> Vec<usize> {
    vec![8, 12, 16, 20, 24]
}
fn default_n_disorder() -> usize {
    50
}
fn default_replicas() -> usize {
    3
}
fn default_burnin() -> usize {
    1000
}
fn default_sweeps() -> usize {
    5000
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

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            n_ladder: default_ladder(),
            n_disorder: default_n_disorder(),
            n_replicas: default_replicas(),
            burnin: default_burnin(),
            sweeps: default_sweeps(),
            batches: default_batches(),
            epsilon: default_epsilon(),
            overlap_cutoff: None,
            magnetization_window: None,
            exact_free_energy: true,
        }
    }
}

impl SimulateConfig {
    pub fn estimate(&self, n: usize, seed: u64) -> EstimateConfig {
        EstimateConfig {
            n,
            n_disorder: self.n_disorder,
            n_replicas: self.n_replicas,
            burnin: self.burnin,
            sweeps: self.sweeps,
            batches: self.batches,
            root_seed: seed,
            epsilon: self.epsilon,
            overlap_cutoff: self.overlap_cutoff,
            magnetization_window: self.magnetization_window,
            exact_free_energy: self.exact_free_energy,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnumerateConfig {
    #[serde(default = "default_enum_n")]
    pub n: usize,
    #[serde(default = "default_enum_disorder")]
    pub n_disorder: usize,
}

fn default_enum_n() -> usize {
    10
}
fn default_enum_disorder() -> usize {
    10
}

impl Default for EnumerateConfig {
    fn default() -> Self {
        Self {
            n: default_enum_n(),
            n_disorder: default_enum_disorder(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    #[serde(default = "default_effort")]
    pub effort: Effort,
}

fn default_effort() -> Effort {
    Effort::Full
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            effort: default_effort(),
        }
    }
}

impl Default for Config {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults parse")
    }
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, String> {
        let c: Config = serde_json::from_str(text).map_err(|e| format!("config: {e}"))?;
        if c.version != CONFIG_VERSION {
            return Err(format!(
                "config: unsupported version {} (expected {CONFIG_VERSION})",
                c.version
            ));
        }
        Ok(c)
    }

    pub fn xi(&self) -> skfi_core::Result<MixtureXi> {
        if self.coeffs.is_empty() {
            Ok(MixtureXi::zero())
        } else {
            MixtureXi::new(self.coeffs.clone())
        }
    }

    pub fn temperature(&self) -> skfi_core::Result<TemperaturePoint> {
        TemperaturePoint::new(self.beta, self.xi()?)
    }

    pub fn field(&self) -> skfi_core::Result<GaussianField> {
        GaussianField::new(self.h_mean, self.h_std)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_unknown_keys() {
        let c = Config::parse(r#"{"beta":2,"h_std":0}"#).unwrap();
        assert_eq!(c.beta, 2.0);
        assert!(c.xi().unwrap().is_zero());
        let e = Config::parse("{\n \"beta\": 2,\n \"bogus\": 1\n}").unwrap_err();
        assert!(e.contains("bogus") && e.contains("line 3"), "{e}");
        assert!(Config::parse(r#"{"version":2}"#).is_err());
        assert!(Config::parse(r#"{"simulate":{"sweeps":10,"x":1}}"#).is_err());
    }
}
