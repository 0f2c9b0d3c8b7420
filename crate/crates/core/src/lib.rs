//! Moment-SOS relaxations for nonlinear heat equations on the torus.
//!
//! The crate assembles truncated semidefinite relaxations over occupation and
//! terminal measures of `u_t = F(u)` on `[0,1] × T`, solves them with an
//! embedded operator-splitting conic solver (or exports SDPA files for an
//! external one), and validates pseudo-moments against two independent
//! references: closed-form moments of the linear heat flow and a
//! Fourier–Galerkin integrator.
//!
//! All numerical code is generic over [`Real`] (`f32` or `f64`); the `*64`
//! aliases below fix the double-precision instantiation used by the CLI.

pub mod analytic;
pub mod compare;
pub mod error;
pub mod galerkin;
pub mod index;
pub mod model;
pub mod quadrature;
pub mod relaxation;
pub mod scalar;
pub mod solver;
pub mod table;

pub use analytic::AnalyticOracle;
pub use error::{Error, Result};
pub use index::{canonicalize, BasisMonomial, CanonicalIndex, Frequency, MomentIndex, TruncationDegrees};
pub use model::{generate_constraints, HeatModel, InitialData, LinearConstraint, MeasureTag};
pub use relaxation::{ConicProblem, VariableLayout};
pub use scalar::{Complex, Real};
pub use solver::{SolveReport, SolveStatus, SolverSettings};
pub use table::{MeasureTables, MomentTable};

pub type HeatModel64 = HeatModel<f64>;
pub type InitialData64 = InitialData<f64>;
pub type MomentTable64 = MomentTable<f64>;
pub type MeasureTables64 = MeasureTables<f64>;
pub type ConicProblem64 = ConicProblem<f64>;
pub type SolverSettings64 = SolverSettings<f64>;
pub type SolveReport64 = SolveReport<f64>;

pub type MomentTable32 = MomentTable<f32>;
pub type ConicProblem32 = ConicProblem<f32>;
