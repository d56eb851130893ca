//! Contrast coding for factorial designs: standard contrast families,
//! hypothesis-matrix conversion through the generalized (Moore-Penrose)
//! inverse, design-matrix expansion, OLS fitting with coefficient
//! statistics, sequential ANOVA with per-contrast effect sizes, and a
//! factorial simulator with exact sample moments.

pub mod contrast;
pub mod design;
pub mod dist;
pub mod effect;
pub mod error;
pub mod fit;
pub mod matrix;
pub mod sim;
pub mod specfile;

pub use contrast::{ContrastKind, ContrastMatrix, Diagnostics, HypothesisMatrix};
pub use design::{ContrastSet, Dataset, Factor, ModelSpec, Term};
pub use error::{Error, Result};
pub use fit::{AnovaRow, AnovaTable, CellMeans, Coefficient, FitOptions, FitResult};
pub use matrix::DenseMatrix;
pub use sim::{CorrelationSpec, DesignSpec, SdSpec};
