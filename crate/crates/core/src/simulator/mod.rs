//! Finite-N sampling: disorder, exact enumeration, heat-bath Monte Carlo and
//! the finite-size identities.

pub mod accumulator;
pub mod checks;
pub mod disorder;
pub mod enumerate;
pub mod mc;
pub mod observables;
pub mod rng;

pub use accumulator::MomentAccumulator;
pub use checks::{
    finite_n_derivative_check, gg_residual, replica_inequality_check, replica_inequality_random,
    DerivativeCheck, GgResidual,
};
pub use disorder::{hamiltonian, sample_disorder, DisorderSample, SpinConfig, SpinModel};
pub use enumerate::{enumerate_exact, enumerate_model, ExactGibbs, ExactSummary};
pub use mc::{heat_bath_probability, heat_bath_sweep, ReplicaSet, Start};
pub use observables::{
    estimate_disorder, estimate_observables, DisorderEstimate, EstimateConfig, GibbsValue,
    Observable, ObservableReport, ObservableRow, TupleTally, Window,
};
