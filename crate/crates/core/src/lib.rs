//! Solvers for the driven-dissipative Bose-Hubbard dimer: exact Liouvillian
//! steady states, the closed-form Kerr solution, homogeneous mean-field
//! states, Gutzwiller decouplings, quantum trajectories and an EPR
//! entanglement witness. All rates are in units of the loss rate.

pub mod checks;
pub mod entanglement;
pub mod error;
pub mod figures;
pub mod fock;
pub mod gutzwiller;
pub mod kerr;
pub mod linalg;
pub mod liouvillian;
pub mod params;
pub mod semiclassical;
pub mod state;
pub mod steady;
pub mod trajectory;

pub use error::{Error, Result};
pub use fock::{Basis, FockSpace, Operator, Truncation};
pub use gutzwiller::{FixedPointReport, SqueezedThermalParams};
pub use kerr::{GaussianMoments, KerrParams, ModeMoments};
pub use liouvillian::Superoperator;
pub use params::ModelParams;
pub use semiclassical::{DimerGaussianMoments, ScBranch};
pub use state::DensityMatrix;
pub use entanglement::EprReport;
pub use figures::Method;
pub use trajectory::{TrajectoryConfig, TrajectoryEnsemble};
