//! Synchronized flat surfaces: configuration data, admissible character
//! pairs, extremal-length height fields, structural audits, and the
//! reflexivity solver.
//!
//! The crate is organized in layers:
//!
//! * [`scalar`] — the [`Scalar`](scalar::Scalar) (exact-capable) and
//!   [`Real`](scalar::Real) (floating-point) abstractions.
//! * [`intlinalg`] / [`reallinalg`] — exact integer-lattice routines
//!   (Smith normal form, kernels) and small dense real routines
//!   (RREF, nullspaces, Jacobi singular values).
//! * [`config`] — configuration data `C = (E, ι, R, τ, σ)`, validation,
//!   and the scale-fixed slice chart of the positive cone.
//! * [`characters`] — period characters, admissibility checking with unit
//!   witnesses, and normalization.
//! * [`surfaces`] — cylinders, the slit dumbbell and stacked-cylinder
//!   geometries, their closed-form extremal lengths, and the discrete
//!   resistor-network oracle.
//! * [`height`] — mismatch functions and the height functional on a
//!   parameter domain, with finite-difference derivatives.
//! * [`audit`] — the three structural hypotheses (regularity,
//!   degeneration, pushability) as machine-checkable audits.
//! * [`solver`] — push-field descent, grid scans, and reflexive-point
//!   certificates.
//! * [`families`] — the dumbbell and stacked parameter families wired
//!   end to end, plus the JSON field spec.
//!
//! Generic types take any [`Real`](scalar::Real) scalar; the `*64`
//! aliases below fix `f64` for ordinary use.

pub mod audit;
pub mod characters;
pub mod config;
pub mod families;
pub mod height;
pub mod intlinalg;
pub mod reallinalg;
pub mod scalar;
pub mod solver;
pub mod surfaces;

pub use scalar::{big_ratio, Real, Scalar};

/// `f64` slice chart.
pub type SliceChart64 = config::SliceChart<f64>;
/// `f64` edge-coordinate solution space.
pub type VCSpace64 = config::VCSpace<f64>;
/// `f64` period character.
pub type Character64 = characters::Character<f64>;
/// `f64` admissible character pair.
pub type AdmissiblePair64 = characters::AdmissiblePair<f64>;
/// `f64` height field.
pub type HeightField64 = height::HeightField<f64>;
/// `f64` domain.
pub type Domain64 = height::Domain<f64>;
/// `f64` extremal-length assignment.
pub type ExtremalLengthAssignment64 = height::ExtremalLengthAssignment<f64>;
/// `f64` push-field collection.
pub type PushFieldSpec64 = audit::PushFieldSpec<f64>;
/// `f64` boundary ray.
pub type Ray64 = audit::Ray<f64>;
/// `f64` audit sample set.
pub type Samples64 = audit::Samples<f64>;
/// `f64` solver options.
pub type SolveOptions64 = solver::SolveOptions<f64>;
/// `f64` solver result.
pub type SolveResult64 = solver::SolveResult<f64>;
/// `f64` cylinder.
pub type EuclideanCylinder64 = surfaces::EuclideanCylinder<f64>;
/// `f64` slit dumbbell surface.
pub type SlitDumbbellSurface64 = surfaces::SlitDumbbellSurface<f64>;
/// `f64` stacked-cylinder surface.
pub type StackedCylinderSurface64 = surfaces::StackedCylinderSurface<f64>;
