//! Spline matrix: maps output weights to the spline coefficients of the
//! network's output on a fixed partition.

use serde::Serialize;

use crate::error::{CellResidual, Error, Result};
use crate::linalg::{self, Mat, Vector};
use crate::net::{TwoLayerNet, Unit};
use crate::polyspline::{truncated_power, KnotSet1D, Spline1D, StandardPartitionSpline};
use crate::terms::{multi_factorial, TermOrder};

pub const DEFAULT_RESIDUAL_THRESHOLD: f64 = 1e-4;
const RANK_RTOL: f64 = 1e-10;

/// Spline space over an axis-aligned grid: degree-m polynomials in
/// (x - x0) plus one truncated power per grid hyperplane.
#[derive(Clone, Debug)]
pub struct SplineSpace {
    pub m: usize,
    pub grid: Vec<Vec<f64>>,
    pub x0: Vec<f64>,
    pub order: TermOrder,
    samples_per_axis: usize,
}

impl SplineSpace {
    pub fn new(m: usize, grid: Vec<Vec<f64>>) -> Result<Self> {
        for g in &grid {
            KnotSet1D::new(g.clone())?;
        }
        let n = grid.len();
        let x0 = grid.iter().map(|g| 0.5 * g.first().copied().unwrap_or(1.0)).collect();
        let samples_per_axis = if n == 1 { 10 * (m + 1) } else { 3 * (m + 1) };
        Ok(SplineSpace { m, order: TermOrder::new(n, m), grid, x0, samples_per_axis })
    }

    pub fn one_d(m: usize, knots: &KnotSet1D) -> Self {
        SplineSpace::new(m, vec![knots.knots().to_vec()]).expect("validated knots")
    }

    pub fn n(&self) -> usize {
        self.grid.len()
    }

    pub fn tau(&self) -> usize {
        self.order.len()
    }

    pub fn knot_count(&self) -> usize {
        self.grid.iter().map(|g| g.len()).sum()
    }

    pub fn dim(&self) -> usize {
        self.tau() + self.knot_count()
    }

    fn cells_per_axis(&self) -> Vec<usize> {
        self.grid.iter().map(|g| g.len() + 1).collect()
    }

    pub fn cell_count(&self) -> usize {
        self.cells_per_axis().iter().product()
    }

    fn cell_index(&self, cell: &[usize]) -> usize {
        let dims = self.cells_per_axis();
        cell.iter().zip(&dims).fold(0, |acc, (c, d)| acc * d + c)
    }

    fn breakpoints(&self, axis: usize) -> Vec<f64> {
        let mut v = vec![0.0];
        v.extend_from_slice(&self.grid[axis]);
        v.push(1.0);
        v
    }

    /// Chebyshev sample points grouped by cell.
    pub fn samples(&self) -> Vec<(usize, Vec<f64>)> {
        let k = self.samples_per_axis;
        let per_axis: Vec<Vec<Vec<f64>>> = (0..self.n())
            .map(|a| {
                self.breakpoints(a)
                    .windows(2)
                    .map(|w| {
                        (0..k)
                            .map(|i| {
                                let t = ((2 * i + 1) as f64 * std::f64::consts::PI / (2 * k) as f64).cos();
                                0.5 * (w[0] + w[1]) + 0.5 * (w[1] - w[0]) * t
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let dims = self.cells_per_axis();
        let mut out = Vec::new();
        let total: usize = dims.iter().product();
        for ci in 0..total {
            let mut cell = vec![0; self.n()];
            let mut r = ci;
            for a in (0..self.n()).rev() {
                cell[a] = r % dims[a];
                r /= dims[a];
            }
            let mut pts: Vec<Vec<f64>> = vec![vec![]];
            for (a, &c) in cell.iter().enumerate() {
                let mut next = Vec::with_capacity(pts.len() * k);
                for p in &pts {
                    for &v in &per_axis[a][c] {
                        let mut q = p.clone();
                        q.push(v);
                        next.push(q);
                    }
                }
                pts = next;
            }
            out.extend(pts.into_iter().map(|p| (ci, p)));
        }
        out
    }

    /// Basis values at x: monomials in TermOrder, then truncated powers axis by axis.
    pub fn basis(&self, x: &[f64]) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.dim());
        for alpha in &self.order.terms {
            v.push(alpha.iter().zip(x.iter().zip(&self.x0)).map(|(&a, (xi, ci))| (xi - ci).powi(a as i32)).product());
        }
        for (a, g) in self.grid.iter().enumerate() {
            for &k in g {
                v.push(truncated_power(x[a], k, self.m));
            }
        }
        v
    }

    /// Converts fitted coefficients to the row layout of the spline matrix:
    /// partial derivatives of the base piece at x0, then truncated-power coefficients.
    fn coeffs_to_rows(&self, c: &[f64]) -> Vec<f64> {
        let tau = self.tau();
        let mut out = c.to_vec();
        for (j, alpha) in self.order.terms.iter().enumerate().take(tau) {
            out[j] = c[j] * multi_factorial(alpha);
        }
        out
    }

    /// Least-squares fit of `f` in the space.
    pub fn fit(&self, f: &dyn Fn(&[f64]) -> f64) -> SpaceFit {
        let samples = self.samples();
        let dim = self.dim();
        let mut a = Mat::zeros(samples.len(), dim);
        let mut y = Vector::zeros(samples.len());
        for (r, (_, p)) in samples.iter().enumerate() {
            for (j, b) in self.basis(p).into_iter().enumerate() {
                a[(r, j)] = b;
            }
            y[r] = f(p);
        }
        let scales: Vec<f64> = (0..dim).map(|j| a.column(j).norm().max(1e-300)).collect();
        let mut an = a.clone();
        for (j, s) in scales.iter().enumerate() {
            an.column_mut(j).scale_mut(1.0 / s);
        }
        let sol = linalg::lstsq(&an, &y).unwrap_or_else(|_| Vector::zeros(dim));
        let coeffs: Vec<f64> = sol.iter().zip(&scales).map(|(c, s)| c / s).collect();
        let fitted = &a * Vector::from_column_slice(&coeffs);
        let mut resid = vec![0.0f64; self.cell_count()];
        let mut norm2 = vec![0.0f64; self.cell_count()];
        let mut count = vec![0usize; self.cell_count()];
        let mut scale = 0.0f64;
        for (r, (ci, _)) in samples.iter().enumerate() {
            resid[*ci] = resid[*ci].max((fitted[r] - y[r]).abs());
            norm2[*ci] += y[r] * y[r];
            count[*ci] += 1;
            scale = scale.max(y[r].abs());
        }
        let vols = self.cell_volumes();
        let cell_l2 = norm2.iter().zip(&count).zip(&vols).map(|((s, c), v)| (s / *c as f64 * v).sqrt()).collect();
        SpaceFit { rows: self.coeffs_to_rows(&coeffs), cell_residuals: resid, cell_l2, scale }
    }

    fn cell_volumes(&self) -> Vec<f64> {
        let widths: Vec<Vec<f64>> =
            (0..self.n()).map(|a| self.breakpoints(a).windows(2).map(|w| w[1] - w[0]).collect()).collect();
        let dims = self.cells_per_axis();
        (0..self.cell_count())
            .map(|mut ci| {
                let mut v = 1.0;
                for a in (0..self.n()).rev() {
                    v *= widths[a][ci % dims[a]];
                    ci /= dims[a];
                }
                v
            })
            .collect()
    }

    /// Cells adjacent to each row's region: the first cell for polynomial
    /// rows, both sides of the hyperplane for truncated-power rows.
    fn row_cells(&self) -> Vec<Vec<usize>> {
        let n = self.n();
        let dims = self.cells_per_axis();
        let first = self.cell_index(&vec![0; n]);
        let mut rows = vec![vec![first]; self.tau()];
        for (a, g) in self.grid.iter().enumerate() {
            for nu in 0..g.len() {
                let mut cells = Vec::new();
                for ci in 0..self.cell_count() {
                    let mut r = ci;
                    let mut idx = vec![0; n];
                    for b in (0..n).rev() {
                        idx[b] = r % dims[b];
                        r /= dims[b];
                    }
                    if idx[a] == nu || idx[a] == nu + 1 {
                        cells.push(ci);
                    }
                }
                rows.push(cells);
            }
        }
        rows
    }

    /// Spline-matrix rows of a one-dimensional spline target.
    pub fn rhs_1d(&self, s: &Spline1D) -> Result<Vec<f64>> {
        if self.n() != 1 || s.knots.knots() != self.grid[0].as_slice() || s.m != self.m {
            return Err(Error::InvalidArgument("target spline does not live in this space".into()));
        }
        let mut out: Vec<f64> = (0..=self.m).map(|k| s.first_piece.deriv_at(k, self.x0[0])).collect();
        out.extend_from_slice(&s.alphas);
        Ok(out)
    }

    /// Spline-matrix rows of a standard-partition spline target.
    pub fn rhs_nd(&self, s: &StandardPartitionSpline) -> Result<Vec<f64>> {
        if s.grid != self.grid || s.m != self.m {
            return Err(Error::InvalidArgument("target spline does not live in this space".into()));
        }
        let mut out: Vec<f64> = self.order.terms.iter().map(|a| s.base_piece.partial_at(a, &self.x0)).collect();
        for a in &s.axis_alphas {
            out.extend_from_slice(a);
        }
        Ok(out)
    }
}

#[derive(Clone, Debug)]
pub struct SpaceFit {
    pub rows: Vec<f64>,
    /// Max absolute residual per cell.
    pub cell_residuals: Vec<f64>,
    /// L2 norm of the fitted function per cell.
    pub cell_l2: Vec<f64>,
    /// Max |f| over the samples.
    pub scale: f64,
}

/// Block system 𝔄 lambda = b with indicator masking.
#[derive(Clone, Debug, Serialize)]
pub struct SplineMatrix {
    pub m: usize,
    /// Number of polynomial rows (m+1 in one dimension).
    pub tau: usize,
    /// Leading units active on every cell.
    pub mu: usize,
    #[serde(skip)]
    pub full: Mat,
    /// indicator[unit][cell]: unit's L2 norm on the cell is at least eps.
    pub indicator: Vec<Vec<bool>>,
    pub eps: f64,
    pub rank: usize,
    pub cond: f64,
    pub cell_residuals: Vec<CellResidual>,
    #[serde(skip)]
    pub space: Option<SplineSpace>,
}

impl SplineMatrix {
    pub fn rows(&self) -> usize {
        self.full.nrows()
    }

    pub fn a1(&self) -> Mat {
        self.full.view((0, 0), (self.tau, self.mu)).into_owned()
    }

    pub fn b(&self) -> Mat {
        self.full.view((0, self.mu), (self.tau, self.full.ncols() - self.mu)).into_owned()
    }

    pub fn c(&self) -> Mat {
        self.full.view((self.tau, 0), (self.rows() - self.tau, self.mu)).into_owned()
    }

    pub fn d(&self) -> Mat {
        self.full.view((self.tau, self.mu), (self.rows() - self.tau, self.full.ncols() - self.mu)).into_owned()
    }

    pub fn det(&self) -> Option<f64> {
        (self.full.nrows() == self.full.ncols()).then(|| linalg::det(&self.full))
    }

    /// Largest fit residual relative to the unit's scale, or error listing cells over `threshold`.
    pub fn check_residuals(&self, threshold: f64) -> Result<()> {
        let bad: Vec<CellResidual> = self.cell_residuals.iter().copied().filter(|c| c.residual > threshold).collect();
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::FitResidual(bad))
        }
    }

    /// Block forward substitution for one-sided bases: solve A1 for the
    /// leading units, then each local weight from its own diagonal entry.
    pub fn solve_one_sided(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let cols = self.full.ncols();
        if self.mu != self.tau || cols != self.rows() {
            return Err(Error::InvalidArgument("one-sided solve needs mu = tau and a square matrix".into()));
        }
        let a1 = self.a1();
        let head = linalg::solve_square(&a1, &Vector::from_column_slice(&rhs[..self.tau]))?;
        let mut lam: Vec<f64> = head.iter().copied().collect();
        for r in self.tau..self.rows() {
            let j = r;
            let beta = self.full[(r, j)];
            if beta.abs() < 1e-300 {
                return Err(Error::Singular(format!("zero increment for unit {j}")));
            }
            let gamma: f64 = (0..j).map(|i| self.full[(r, i)] * lam[i]).sum();
            lam.push((rhs[r] - gamma) / beta);
        }
        Ok(lam)
    }
}

/// Which units' activations are measured with the tail constant removed.
pub type ShiftMask<'a> = Option<&'a [bool]>;

fn unit_fn<'a>(u: &'a Unit, shifted: bool) -> impl Fn(&[f64]) -> f64 + 'a {
    move |x: &[f64]| {
        let y = u.pre_activation(x);
        if shifted {
            u.kind.eval_shifted(y)
        } else {
            u.kind.eval(y)
        }
    }
}

/// Spline matrix over an arbitrary grid space.
pub fn spline_matrix_in(net: &TwoLayerNet, space: &SplineSpace, eps: f64, shifted: ShiftMask) -> Result<SplineMatrix> {
    if net.dim() != space.n() {
        return Err(Error::DimensionMismatch { expected: space.n(), found: net.dim() });
    }
    let fits: Vec<SpaceFit> = net
        .units
        .iter()
        .enumerate()
        .map(|(i, u)| {
            let s = shifted.map(|m| m[i]).unwrap_or(false);
            space.fit(&unit_fn(u, s))
        })
        .collect();
    let rows = space.dim();
    let mut full = Mat::zeros(rows, net.len());
    let row_cells = space.row_cells();
    let mut indicator = Vec::with_capacity(net.len());
    let mut cell_residuals = Vec::new();
    for (j, f) in fits.iter().enumerate() {
        let active: Vec<bool> = f.cell_l2.iter().map(|&v| v >= eps).collect();
        for r in 0..rows {
            if row_cells[r].iter().any(|&c| active[c]) {
                full[(r, j)] = f.rows[r];
            }
        }
        for (c, &res) in f.cell_residuals.iter().enumerate() {
            cell_residuals.push(CellResidual { unit: j, cell: c, residual: res / f.scale.max(1e-300) });
        }
        indicator.push(active);
    }
    cell_residuals.sort_by(|a, b| b.residual.total_cmp(&a.residual));
    let mu = indicator.iter().take_while(|a| a.iter().all(|&v| v)).count().min(space.tau());
    Ok(SplineMatrix {
        m: space.m,
        tau: space.tau(),
        mu,
        rank: linalg::rank(&full, RANK_RTOL),
        cond: linalg::cond(&full),
        full,
        indicator,
        eps,
        cell_residuals,
        space: Some(space.clone()),
    })
}

/// One-dimensional spline matrix of size (zeta+m) x units.
pub fn spline_matrix(net: &TwoLayerNet, knots: &KnotSet1D, m: usize, eps: f64) -> Result<SplineMatrix> {
    spline_matrix_in(net, &SplineSpace::one_d(m, knots), eps, None)
}

/// Solves 𝔄 lambda = rhs; columns listed in `fixed` keep the given values.
pub fn solve_rows(mat: &SplineMatrix, rhs: &[f64], fixed: &[(usize, f64)]) -> Result<Vec<f64>> {
    let rows = mat.rows();
    if mat.rank < rows {
        return Err(Error::RankDeficient { rank: mat.rank, required: rows });
    }
    let cols = mat.full.ncols();
    let mut b = Vector::from_column_slice(rhs);
    let free: Vec<usize> = (0..cols).filter(|j| !fixed.iter().any(|(f, _)| f == j)).collect();
    for &(j, v) in fixed {
        b -= mat.full.column(j) * v;
    }
    let sub = mat.full.select_columns(free.iter());
    let r = linalg::rank(&sub, RANK_RTOL);
    if r < rows {
        return Err(Error::RankDeficient { rank: r, required: rows });
    }
    let x = if sub.ncols() == rows { linalg::solve_square(&sub, &b)? } else { linalg::lstsq(&sub, &b)? };
    let mut lam = vec![0.0; cols];
    for (k, &j) in free.iter().enumerate() {
        lam[j] = x[k];
    }
    for &(j, v) in fixed {
        lam[j] = v;
    }
    Ok(lam)
}

/// Output weights whose network output has the target's spline coefficients.
pub fn solve_spline_matrix(mat: &SplineMatrix, target: &Spline1D) -> Result<Vec<f64>> {
    let space = mat.space.as_ref().ok_or_else(|| Error::InvalidArgument("matrix has no space".into()))?;
    solve_rows(mat, &space.rhs_1d(target)?, &[])
}

/// Spline realized by output weights `lambda` in this basis.
pub fn realized_rows(mat: &SplineMatrix, lambda: &[f64]) -> Vec<f64> {
    (&mat.full * Vector::from_column_slice(lambda)).iter().copied().collect()
}
