//! Two-sided bases: appending a unit with negative weight at a knot and
//! re-solving the remaining output weights.

use super::matrix::{self, SplineMatrix, SplineSpace};
use super::spline1d::{local_unit, SplineOptions};
use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::net::TwoLayerNet;
use crate::polyspline::KnotSet1D;

#[derive(Clone, Debug)]
pub struct NegativeUnitResult {
    pub net: TwoLayerNet,
    /// Augmented matrix, one column per unit of `net`.
    pub matrix: SplineMatrix,
    pub index: usize,
}

/// Appends a unit with w < 0 whose zero part lies right of `knot`, fixes its
/// output weight to `lambda_free` and re-solves the other weights so the
/// network keeps its spline coordinates on `knots`.
pub fn add_negative_unit(
    net: &TwoLayerNet,
    knots: &KnotSet1D,
    m: usize,
    knot: f64,
    lambda_free: f64,
    opts: &SplineOptions,
) -> Result<NegativeUnitResult> {
    if net.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, found: net.dim() });
    }
    let bp = knots.breakpoints();
    let pos = knots
        .knots()
        .iter()
        .position(|&k| (k - knot).abs() < 1e-12)
        .ok_or_else(|| Error::InvalidArgument(format!("{knot} is not a knot")))?;
    let kind = net.units.first().map(|u| u.kind.clone()).unwrap_or_default();
    let prev = bp[pos];
    let (r, _) = local_unit(&kind, knot, prev, knot - prev, 0.0, m, f64::INFINITY, opts)?;
    let old: Vec<f64> = net.units.iter().map(|u| u.lambda).collect();
    let mut out = net.clone();
    out.units.push(r.unit);
    let index = out.len() - 1;
    let space = SplineSpace::one_d(m, knots);
    let mat = matrix::spline_matrix_in(&out, &space, opts.mask_eps, None)?;
    let prior = mat.full.columns(0, index) * Vector::from_column_slice(&old);
    let lam = matrix::solve_rows(&mat, prior.as_slice(), &[(index, lambda_free)])?;
    for (u, l) in out.units.iter_mut().zip(lam) {
        u.lambda = l;
    }
    Ok(NegativeUnitResult { net: out, matrix: mat, index })
}
