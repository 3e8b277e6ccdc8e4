//! Lattice solver for Markovian backward SDEs with quadratic-growth drivers.
//!
//! The solver discretizes the backward equation with the explicit-in-Z,
//! implicit-in-Y scheme on a bounded spatial lattice, replaces Brownian
//! increments by an optimal quantization of the Gaussian, and truncates the
//! driver adaptively (`N = n^alpha`, `R = log n`) to keep the quadratic
//! z-term from destabilizing the induction. Reference values for the purely
//! quadratic driver come from the exponential (Cole-Hopf) transform evaluated
//! by tensor Gauss-Hermite quadrature, so convergence studies are
//! self-verifying.
//!
//! Modules follow the pipeline:
//! - [`quantizer`]: stationary quantization grids for the standard Gaussian;
//! - [`lattice`]: the bounded spatial grid, projection and index maps;
//! - [`driver`]: drivers, truncation and clamped increment weights;
//! - [`forward`]: Euler steps, quantized transitions, path simulation;
//! - [`backward`]: the dynamic-programming induction and its brute-force oracle;
//! - [`oracle`]: closed-form reference values via Cole-Hopf + quadrature;
//! - [`models`]: the built-in experiment problems;
//! - [`harness`]: studies, CSV/plot emission and run configuration.

pub mod backward;
pub mod driver;
pub mod forward;
pub mod harness;
pub mod lattice;
pub mod models;
pub mod oracle;
pub mod quantizer;

pub(crate) mod fit;
pub mod gauss;

pub use backward::{solve, SchemeParams, SolveResult, ValueField};
pub use driver::{Driver, TruncationLevels, TruncationPolicy};
pub use forward::{SdeCoeffs, TimeGrid};
pub use lattice::Lattice;
pub use models::Problem;
pub use quantizer::{QuantGrid1D, QuantGridD};
