//! Spectral tools for structurally damped evolution equations with a
//! dispersion term, `u_tt + (-Delta)^sigma u + (-Delta)^(2 delta) u
//! + 2(-Delta)^delta u_t = |u|^p` on a periodic box.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod analysis;
pub mod blowup;
pub mod data;
pub mod error;
pub mod exec;
pub mod exponents;
pub mod models;
pub mod propagator;
pub mod quadrature;
pub mod solver;
pub mod spectral;

pub use data::InitialData;
pub use error::{Error, Result};
pub use models::{ModelSpec, ModelVariant, RegimeClass, RegimeKind};
pub use propagator::{CauchyState, DampingOrders, Propagator};
pub use solver::{run_simulation, NormRecord, SimConfig, Trajectory, Verdict};
pub use spectral::{Grid, PhysicalField, SpectralField};
