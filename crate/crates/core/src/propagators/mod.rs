//! Time steppers: original Lanczos, the recycling variational Lanczos, and
//! the Chebyshev global propagator.

pub mod bessel;
pub mod chebyshev;
pub mod extended;
pub mod lanczos;

pub use bessel::{bessel_j, bessel_j_all};
pub use chebyshev::{chebyshev_propagate, chebyshev_series, ChebyshevPlan};
pub use extended::{
    extended_step, first_step_basis, replace_dependent, BasisEntry, BasisWindow, StepBasis,
    StepReport, WindowConfig,
};
pub use lanczos::{lanczos_step, LanczosStep};
