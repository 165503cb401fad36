//! Periodic grids, fields on them, trigonometric coefficient models and the
//! spectral transform layer.

mod coefficient;
mod domain;
mod field;
mod grid;
pub mod index;
mod modes;
mod spectral;

pub use coefficient::{ellipticity_bounds, CoefficientSpec, CoefficientTerm, EllipticityReport, TwoScaleCoefficient};
pub use domain::{Domain, DomainKind};
pub use field::{mean, pairwise_sum, ScalarField, Tensor4Field, TwoScaleField, VectorField};
pub use grid::{PeriodicGrid, TwoScaleGrid};
pub use modes::{Mode, ModeSum};
pub use spectral::Spectral;
