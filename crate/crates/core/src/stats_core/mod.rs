//! Numerical primitives shared by the estimators.

pub mod dual;
pub mod normal;
pub mod optimize;
pub mod rng;

pub use normal::{
    bvn_cdf_equal, inv_mills, log_norm_cdf, log_norm_pdf, max2_normal_quantile, norm_cdf,
    norm_pdf, norm_quantile, BivariateNormalParams, NormalParams,
};
pub use optimize::{
    central_gradient, golden_maximize, golden_minimize, numeric_hessian, quasi_newton_maximize,
    FnObjective, GradObjective, Maximum, Objective, QnOptions,
};
