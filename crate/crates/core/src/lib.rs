//! Numerical laboratory for a damped extensible-plate equation with
//! variable-exponent damping and source terms.
//!
//! The crate provides, in rough dependency order:
//!
//! * [`grid`]: tensor-product grids on a line or rectangle with homogeneous
//!   clamped boundary data, plus the discrete differential operators
//!   (laplacian, clamped biharmonic, gradient quadratic form).
//! * [`solver`]: shared numeric kernels (conjugate gradients, eigenvalue
//!   solvers, quadrature, root finding, small fits).
//! * [`varexp`]: variable-exponent machinery: exponent fields, the modular,
//!   the Luxemburg norm, and the log-Holder regularity check.
//! * [`embedding`]: discrete embedding/Poincare constants used by the
//!   threshold and bound formulas.
//! * [`functionals`]: the energy and the auxiliary monitor functionals, with
//!   their exact discrete dissipation accounting.
//! * [`dynamics`]: the time integrator (linearly implicit midpoint scheme),
//!   adaptive step control, and blow-up detection.
//! * [`bounds`]: closed-form thresholds, blow-up time bounds (upper and
//!   lower), and the decay-rate certificate, evaluated from initial data.
//! * [`init`]: ready-made initial-condition families.

// Guards spelled `!(x > y)` are deliberate: the negation is true for NaN, so
// non-finite inputs land in the rejection branch. Indexed loops mirror the
// stencil arithmetic they implement.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bounds;
pub mod dynamics;
pub mod embedding;
pub mod error;
pub mod functionals;
pub mod grid;
pub mod init;
pub mod solver;
pub mod varexp;

pub use error::{Error, Result};
pub use grid::{Grid, GridFunction};
