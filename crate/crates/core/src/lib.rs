//! Estimation, sharp bounds and Bonferroni inference for partial effects in
//! IV-Tobit and IV-Probit models whose endogenous regressor carries both
//! structural endogeneity and classical measurement error.

pub mod bounds;
pub mod cli;
pub mod effects;
pub mod error;
pub mod estimate_gaussian;
pub mod inference;
pub mod mixture;
pub mod model;
pub mod simulate;
pub mod stats_core;

pub use error::{Error, Result, ValidationError};
pub use model::{
    validate, Dataset, EffectKind, EffectQuery, Estimator, Interval, ModelKind, ReducedFormFit,
    StructuralParams, Validated,
};
