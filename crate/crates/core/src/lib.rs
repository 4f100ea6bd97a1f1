//! Dimensional analysis driven volume models for standing trees.
//!
//! - [`units`]: exact-rational dimensions, unit expressions and quantities
//! - [`pi`]: dimension matrices and Buckingham Pi bases
//! - [`regress`]: least squares, coefficient correlation, ellipsoid tests
//! - [`geometry`]: cylinder/cone/frustum, taper, Honer, Smalian
//! - [`propagate`]: transmission of measurement error to volume
//! - [`data`]: the embedded black cherry dataset and CSV ingestion

// Errors carry exact dimensions; NaN must fail the `!(x > 0.0)` style guards.
#![allow(clippy::result_large_err, clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod geometry;
pub mod pi;
pub mod propagate;
pub mod regress;
pub mod units;

pub use nalgebra;

pub use data::{cherry_dataset, summary, Dataset, SourceUnits, Summary, TreeRecord};
pub use geometry::{HonerParams, LogSegment, SolidKind, SolidModel, TaperEstimate};
pub use pi::{DimensionlessGroup, Formulation, PiBasis, VariableSpec};
pub use propagate::{CrossTerm, ErrorModel, GridAxis, VarianceBudget, VarianceGrid};
pub use regress::{EllipsoidVerdict, OlsFit, OriginFit};
pub use units::{Dimension, Quantity, Unit};
