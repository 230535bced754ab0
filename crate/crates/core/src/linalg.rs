//! Dense linear algebra on top of nalgebra.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub type Mat = DMatrix<f64>;
pub type Vector = DVector<f64>;

pub fn singular_values(a: &Mat) -> Vec<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return vec![];
    }
    let mut s: Vec<f64> = a.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// 2-norm condition number (infinite when singular).
pub fn cond(a: &Mat) -> f64 {
    let s = singular_values(a);
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        _ => f64::INFINITY,
    }
}

/// Numerical rank with singular values below `rtol * s_max` treated as zero.
pub fn rank(a: &Mat, rtol: f64) -> usize {
    let s = singular_values(a);
    let Some(&hi) = s.first() else { return 0 };
    s.iter().filter(|&&v| v > rtol * hi).count()
}

/// Determinant; NaN for non-square input.
pub fn det(a: &Mat) -> f64 {
    if a.nrows() != a.ncols() {
        return f64::NAN;
    }
    a.clone().lu().determinant()
}

/// Square solve by LU with partial pivoting.
pub fn solve_square(a: &Mat, b: &Vector) -> Result<Vector> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch { expected: a.nrows(), found: a.ncols() });
    }
    a.clone().lu().solve(b).ok_or_else(|| Error::Singular("LU found a zero pivot".into()))
}

/// Least-squares (over-determined) or least-norm (under-determined) solution.
pub fn lstsq(a: &Mat, b: &Vector) -> Result<Vector> {
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let tol = smax * f64::EPSILON * a.nrows().max(a.ncols()) as f64;
    svd.solve(b, tol).map_err(|e| Error::Singular(e.to_string()))
}

pub fn residual(a: &Mat, x: &Vector, b: &Vector) -> f64 {
    (a * x - b).norm()
}

/// Lower-triangular forward substitution.
pub fn forward_substitute(l: &Mat, b: &Vector) -> Result<Vector> {
    let n = l.nrows();
    let mut x = Vector::zeros(n);
    for i in 0..n {
        let mut s = b[i];
        for j in 0..i {
            s -= l[(i, j)] * x[j];
        }
        if l[(i, i)] == 0.0 {
            return Err(Error::Singular(format!("zero diagonal at {i}")));
        }
        x[i] = s / l[(i, i)];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basics() {
        let a = Mat::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0]);
        let b = Vector::from_vec(vec![3.0, 5.0]);
        let x = solve_square(&a, &b).unwrap();
        assert!(residual(&a, &x, &b) < 1e-14);
        assert!((det(&a) - 5.0).abs() < 1e-12);
        assert_eq!(rank(&Mat::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]), 1e-10), 1);
        let wide = Mat::from_row_slice(1, 2, &[1.0, 1.0]);
        let x = lstsq(&wide, &Vector::from_vec(vec![2.0])).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 1.0).abs() < 1e-12);
    }
}
