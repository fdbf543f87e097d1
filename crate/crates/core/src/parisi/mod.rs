//! The Parisi functional for finitely supported measures and its infimum.

mod measure;
mod minimize;
mod nested;
mod pde;

pub use measure::{measure_distance, parisi_moment, DiscreteMeasure};
pub use minimize::{
    parisi_minimize, sk_beta_p_derivative, sk_free_energy, ParisiDiagnostics, ParisiResult,
    DEFAULT_K_MAX, MERGE_RADIUS, NESTED_MAX_ATOMS, RESTARTS, WEIGHT_FLOOR,
};
pub use nested::{one_atom_value, parisi_functional_nested};
pub use pde::{
    parisi_functional, parisi_functional_with, phi_solve, phi_solve_with, GridSpec, PhiGrid,
    DEFAULT_SPACING,
};
