//! Variational Lanczos propagation with recycled Krylov states, together
//! with the original Lanczos stepper, a Chebyshev reference propagator, a
//! Hénon-Heiles grid Hamiltonian and a dense Hermitian oracle.

// `!(a > b)` guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dense;
pub mod error;
pub mod grid;
pub mod observables;
pub mod propagators;
pub mod state;
pub mod subspace;

pub use dense::{exact_evolve_dense, DenseHermitianOracle};
pub use error::{Error, Result};
pub use grid::{
    gaussian_packet, henon_heiles_potential, spectral_bounds, Grid2D, GridHamiltonian,
    HenonHeilesParams, Packet,
};
pub use observables::{
    autocorrelation, error_metric, error_parts, spectrum, ErrorParts, TimeSeries, Window,
};
pub use propagators::{
    bessel_j, chebyshev_propagate, chebyshev_series, extended_step, first_step_basis, lanczos_step,
    replace_dependent, BasisEntry, BasisWindow, ChebyshevPlan, LanczosStep, StepReport,
    WindowConfig,
};
pub use state::{
    inner, linear_combination, norm, HermitianOperator, MatvecCounter, WaveState, ZeroOperator,
};
pub use subspace::{
    evolve_subspace, hermitian_eig, thresholded_cholesky, CMatrix, CholeskyResult, SubspaceSystem,
    DEFAULT_DEPENDENCY_THRESHOLD, HBAR,
};
