//! Network synthesis from Taylor polynomials and smooth splines.

pub mod local;
pub mod matrix;
pub mod nd;
pub mod negative;
pub mod refine;
pub mod sharpen;
pub mod spline1d;
pub mod tanh;

pub use matrix::{solve_spline_matrix, spline_matrix, SplineMatrix, SplineSpace};
pub use sharpen::{sharpen, SharpenResult};
pub use spline1d::{build_spline_1d, implement_spline_1d, ConstructionReport, Implementation, RhoRule, SplineOptions};
pub use tanh::tanh_constant_compensation;
pub use nd::{build_spline_nd, implement_spline_nd, refit_output_weights, NdImplementation, NdOptions, NdReport};
pub use refine::{refine, RefineOptions, RefineSummary};
pub use local::{local_approx, local_approx_with, taylor_polynomial};
pub use negative::{add_negative_unit, NegativeUnitResult};
