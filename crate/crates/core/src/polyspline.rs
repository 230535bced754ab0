//! Smooth splines built from truncated powers, in one and n dimensions.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::func::{Field, Function1D, OnLine};
use crate::poly::{Poly1D, PolyND};
use crate::terms::{multi_factorial, TermOrder};

pub const JUMP_TOL: f64 = 1e-6;
const DOMAIN_SLACK: f64 = 1e-12;

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

#[inline]
pub fn truncated_power(x: f64, knot: f64, m: usize) -> f64 {
    if x > knot {
        (x - knot).powi(m as i32)
    } else {
        0.0
    }
}

/// Interior knots 0 < x_1 < ... < x_{zeta-1} < 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct KnotSet1D {
    knots: Vec<f64>,
}

impl TryFrom<Vec<f64>> for KnotSet1D {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        KnotSet1D::new(v)
    }
}

impl From<KnotSet1D> for Vec<f64> {
    fn from(k: KnotSet1D) -> Vec<f64> {
        k.knots
    }
}

impl KnotSet1D {
    pub fn new(knots: Vec<f64>) -> Result<Self> {
        for &k in &knots {
            ensure_finite(k, "knot")?;
            if !(k > 0.0 && k < 1.0) {
                return Err(Error::InvalidArgument(format!("knot {k} outside (0,1)")));
            }
        }
        if knots.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("knots must be strictly increasing".into()));
        }
        Ok(KnotSet1D { knots })
    }

    /// zeta equal pieces.
    pub fn uniform(zeta: usize) -> Self {
        let zeta = zeta.max(1);
        KnotSet1D { knots: (1..zeta).map(|j| j as f64 / zeta as f64).collect() }
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Number of pieces.
    pub fn zeta(&self) -> usize {
        self.knots.len() + 1
    }

    /// Interval endpoints including 0 and 1.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.knots.len() + 2);
        v.push(0.0);
        v.extend_from_slice(&self.knots);
        v.push(1.0);
        v
    }

    /// Index of the interval containing x (I_1 = [0,x_1], I_j = (x_{j-1}, x_j]).
    pub fn interval_of(&self, x: f64) -> usize {
        self.knots.iter().take_while(|&&k| x > k).count()
    }

    pub fn max_spacing(&self) -> f64 {
        self.breakpoints().windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }
}

/// s = first_piece + sum alpha_nu (x - x_nu)_+^m.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spline1D {
    pub m: usize,
    pub knots: KnotSet1D,
    pub first_piece: Poly1D,
    pub alphas: Vec<f64>,
}

impl Spline1D {
    pub fn new(m: usize, knots: KnotSet1D, first_piece: Poly1D, alphas: Vec<f64>) -> Result<Self> {
        if alphas.len() != knots.knots().len() {
            return Err(Error::DimensionMismatch { expected: knots.knots().len(), found: alphas.len() });
        }
        if first_piece.degree() > m {
            return Err(Error::InvalidArgument(format!(
                "first piece degree {} exceeds m={m}",
                first_piece.degree()
            )));
        }
        Ok(Spline1D { m, knots, first_piece, alphas })
    }

    /// Single polynomial, no knots.
    pub fn polynomial(m: usize, p: Poly1D) -> Self {
        Spline1D { m, knots: KnotSet1D { knots: vec![] }, first_piece: p, alphas: vec![] }
    }

    pub fn zeta(&self) -> usize {
        self.knots.zeta()
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        ensure_finite(x, "spline argument")?;
        if !(-DOMAIN_SLACK..=1.0 + DOMAIN_SLACK).contains(&x) {
            return Err(Error::Domain(format!("{x} outside [0,1]")));
        }
        Ok(self.value(x))
    }

    /// Expanded polynomial on each interval.
    pub fn pieces(&self) -> Vec<Poly1D> {
        let mut out = vec![self.first_piece.clone()];
        for (k, a) in self.knots.knots().iter().zip(&self.alphas) {
            let next = out.last().unwrap().add(&Poly1D::power_of_shift(*k, self.m).scale(*a));
            out.push(next);
        }
        out
    }

    /// Evaluation through the expanded pieces.
    pub fn eval_by_pieces(&self, x: f64) -> f64 {
        self.pieces()[self.knots.interval_of(x)].eval(x)
    }

    /// Derivative jumps of orders 0..=m at knot index `nu` (0-based).
    pub fn jumps(&self, nu: usize) -> Vec<f64> {
        let p = self.pieces();
        let k = self.knots.knots()[nu];
        (0..=self.m).map(|o| p[nu + 1].deriv_at(o, k) - p[nu].deriv_at(o, k)).collect()
    }

    /// Checks C^{m-1} continuity at every knot.
    pub fn check_smoothness(&self, tol: f64) -> Result<()> {
        for nu in 0..self.alphas.len() {
            let j = self.jumps(nu);
            for (o, v) in j.iter().take(self.m).enumerate() {
                if v.abs() > tol {
                    return Err(Error::SmoothnessViolation { order: o, jump: *v });
                }
            }
        }
        Ok(())
    }
}

impl Function1D for Spline1D {
    fn value(&self, x: f64) -> f64 {
        let mut s = self.first_piece.eval(x);
        for (k, a) in self.knots.knots().iter().zip(&self.alphas) {
            s += a * truncated_power(x, *k, self.m);
        }
        s
    }

    fn derivative(&self, order: usize, x: f64) -> f64 {
        let mut s = self.first_piece.deriv_at(order, x);
        if order <= self.m {
            let c = factorial(self.m) / factorial(self.m - order);
            for (k, a) in self.knots.knots().iter().zip(&self.alphas) {
                s += a * c * truncated_power(x, *k, self.m - order);
            }
        }
        s
    }
}

/// Spline whose (m-1)-th derivative is a continuous piecewise-linear
/// approximation of f^(m-1): slopes are f^(m) at interval midpoints, the
/// first piece is the Taylor polynomial at the first midpoint, and the
/// constant is fixed by `anchor` (default (0, f(0))).
pub fn construct_spline_from_derivative(
    f: &dyn Function1D,
    m: usize,
    knots: &KnotSet1D,
    anchor: Option<(f64, f64)>,
) -> Result<Spline1D> {
    if m < 1 {
        return Err(Error::InvalidArgument("construction needs m >= 1".into()));
    }
    let bp = knots.breakpoints();
    let mids: Vec<f64> = bp.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    let slopes: Vec<f64> = mids.iter().map(|&c| f.derivative(m, c)).collect();
    for s in &slopes {
        ensure_finite(*s, "derivative estimate")?;
    }
    let derivs: Vec<f64> = (0..=m).map(|k| f.derivative(k, mids[0])).collect();
    let mut first = Poly1D::from_taylor(mids[0], &derivs);
    let (ax, ay) = anchor.unwrap_or_else(|| (0.0, f.value(0.0)));
    let shift = ay - first.eval(ax);
    first.coeffs[0] += shift;
    let mf = factorial(m);
    let alphas = slopes.windows(2).map(|w| (w[1] - w[0]) / mf).collect();
    Spline1D::new(m, knots.clone(), first, alphas)
}

/// Oriented hyperplane w.x + b = 0, normalized so max |w_i| = 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyperplane {
    pub w: Vec<f64>,
    pub b: f64,
}

impl Hyperplane {
    pub fn new(w: Vec<f64>, b: f64) -> Result<Self> {
        let s = w.iter().fold(0.0, |a: f64, v| a.max(v.abs()));
        if s == 0.0 || !s.is_finite() || !b.is_finite() {
            return Err(Error::InvalidArgument("hyperplane needs finite nonzero w".into()));
        }
        Ok(Hyperplane { w: w.iter().map(|v| v / s).collect(), b: b / s })
    }

    /// x_axis = value.
    pub fn axis(n: usize, axis: usize, value: f64) -> Self {
        let mut w = vec![0.0; n];
        w[axis] = 1.0;
        Hyperplane { w, b: -value }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + self.b
    }

    /// Projection of the unit-cube centre onto the hyperplane.
    pub fn anchor_point(&self) -> Vec<f64> {
        let c = vec![0.5; self.w.len()];
        let ww: f64 = self.w.iter().map(|v| v * v).sum();
        let r = self.eval(&c) / ww;
        c.iter().zip(&self.w).map(|(ci, wi)| ci - r * wi).collect()
    }
}

/// k-th derivative of t -> f(x + t d) at t = 0, computed as
/// sum over |alpha| = k of k!/alpha! d^alpha D^alpha f(x).
/// Non-unit directions are normalized.
pub fn directional_derivative_surface(f: &dyn Field, d: &[f64], k: usize, x: &[f64]) -> Result<f64> {
    if d.len() != f.dim() || x.len() != f.dim() {
        return Err(Error::DimensionMismatch { expected: f.dim(), found: d.len().min(x.len()) });
    }
    let norm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::InvalidArgument("zero direction".into()));
    }
    let d: Vec<f64> = d.iter().map(|v| v / norm).collect();
    let order = TermOrder::new(f.dim(), k);
    let kf = factorial(k);
    let mut s = 0.0;
    for alpha in order.terms.iter().filter(|a| a.iter().sum::<u32>() as usize == k) {
        let dp: f64 = alpha.iter().zip(&d).map(|(&a, &di)| di.powi(a as i32)).product();
        if dp == 0.0 {
            continue;
        }
        s += kf / multi_factorial(alpha) * dp * f.partial(alpha, x);
    }
    ensure_finite(s, "directional derivative")
}

/// Spline on an axis-aligned grid: base piece plus per-axis truncated powers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StandardPartitionSpline {
    pub n: usize,
    pub m: usize,
    pub grid: Vec<Vec<f64>>,
    pub base_piece: PolyND,
    pub axis_alphas: Vec<Vec<f64>>,
}

impl StandardPartitionSpline {
    pub fn new(m: usize, grid: Vec<Vec<f64>>, base_piece: PolyND, axis_alphas: Vec<Vec<f64>>) -> Result<Self> {
        let n = grid.len();
        if n == 0 || base_piece.n != n || axis_alphas.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: base_piece.n });
        }
        for (g, a) in grid.iter().zip(&axis_alphas) {
            KnotSet1D::new(g.clone())?;
            if g.len() != a.len() {
                return Err(Error::DimensionMismatch { expected: g.len(), found: a.len() });
            }
        }
        Ok(StandardPartitionSpline { n, m, grid, base_piece, axis_alphas })
    }

    /// Uniform grid with `cells[i]` cells along axis i.
    pub fn uniform_grid(cells: &[usize]) -> Vec<Vec<f64>> {
        cells.iter().map(|&c| KnotSet1D::uniform(c).knots).collect()
    }

    pub fn cells_per_axis(&self) -> Vec<usize> {
        self.grid.iter().map(|g| g.len() + 1).collect()
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: x.len() });
        }
        for &xi in x {
            ensure_finite(xi, "spline argument")?;
            if !(-DOMAIN_SLACK..=1.0 + DOMAIN_SLACK).contains(&xi) {
                return Err(Error::Domain(format!("{xi} outside [0,1]")));
            }
        }
        Ok(self.value(x))
    }

    pub fn cell_of(&self, x: &[f64]) -> Vec<usize> {
        self.grid.iter().zip(x).map(|(g, &xi)| g.iter().take_while(|&&k| xi > k).count()).collect()
    }

    /// All cell multi-indices in lexicographic order.
    pub fn cells(&self) -> Vec<Vec<usize>> {
        let dims = self.cells_per_axis();
        let total: usize = dims.iter().product();
        (0..total)
            .map(|mut idx| {
                let mut c = vec![0; self.n];
                for i in (0..self.n).rev() {
                    c[i] = idx % dims[i];
                    idx /= dims[i];
                }
                c
            })
            .collect()
    }

    /// Cells with at most one nonzero index; they number (M-1)n + 1.
    pub fn boundary_cells(&self) -> Vec<Vec<usize>> {
        self.cells().into_iter().filter(|c| c.iter().filter(|&&v| v > 0).count() <= 1).collect()
    }

    /// Expanded polynomial on a cell.
    pub fn piece(&self, cell: &[usize]) -> PolyND {
        let mut p = self.base_piece.clone();
        for (i, &ci) in cell.iter().enumerate() {
            for nu in 0..ci {
                let mut w = vec![0.0; self.n];
                w[i] = 1.0;
                let t = PolyND::affine_power(&w, -self.grid[i][nu], self.m).scale(self.axis_alphas[i][nu]);
                p = p.add(&t);
            }
        }
        p
    }

    pub fn eval_by_pieces(&self, x: &[f64]) -> f64 {
        self.piece(&self.cell_of(x)).eval(x)
    }

    /// Rebuilds the whole spline from the pieces on the boundary cells.
    /// `piece_at` is queried only for boundary cells.
    pub fn from_boundary<F>(m: usize, grid: Vec<Vec<f64>>, piece_at: F) -> Result<Self>
    where
        F: Fn(&[usize]) -> PolyND,
    {
        let n = grid.len();
        let origin = vec![0usize; n];
        let base = piece_at(&origin);
        let mut axis_alphas = Vec::with_capacity(n);
        for (i, g) in grid.iter().enumerate() {
            let mut alphas = Vec::with_capacity(g.len());
            for (nu, &k) in g.iter().enumerate() {
                let mut a = origin.clone();
                a[i] = nu;
                let mut b = origin.clone();
                b[i] = nu + 1;
                let h = Hyperplane::axis(n, i, k);
                alphas.push(recurrence_jump(&piece_at(&a), &piece_at(&b), &h, m, None, JUMP_TOL)?);
            }
            axis_alphas.push(alphas);
        }
        StandardPartitionSpline::new(m, grid, base, axis_alphas)
    }
}

impl Field for StandardPartitionSpline {
    fn dim(&self) -> usize {
        self.n
    }

    fn value(&self, x: &[f64]) -> f64 {
        let mut s = self.base_piece.eval(x);
        for (i, (g, a)) in self.grid.iter().zip(&self.axis_alphas).enumerate() {
            for (k, al) in g.iter().zip(a) {
                s += al * truncated_power(x[i], *k, self.m);
            }
        }
        s
    }
}

/// Standard-partition spline approximating f: base piece is the degree-m
/// Taylor polynomial at the centre of the first cell, axis coefficients
/// come from the 1-D construction along axis lines through that centre.
pub fn construct_spline_nd(f: &dyn Field, m: usize, grid: &[Vec<f64>]) -> Result<StandardPartitionSpline> {
    let n = f.dim();
    if grid.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: grid.len() });
    }
    if m < 1 {
        return Err(Error::InvalidArgument("construction needs m >= 1".into()));
    }
    let knots: Vec<KnotSet1D> = grid.iter().map(|g| KnotSet1D::new(g.clone())).collect::<Result<_>>()?;
    let centre: Vec<f64> = knots.iter().map(|k| 0.5 * k.breakpoints()[1]).collect();
    let order = TermOrder::new(n, m);
    let derivs: Vec<f64> = order.terms.iter().map(|a| f.partial(a, &centre)).collect();
    for d in &derivs {
        ensure_finite(*d, "partial derivative")?;
    }
    let base = PolyND::from_taylor(&centre, &order, &derivs);
    let mf = factorial(m);
    let mut axis_alphas = Vec::with_capacity(n);
    for (i, ks) in knots.iter().enumerate() {
        let mut origin = centre.clone();
        origin[i] = 0.0;
        let mut dir = vec![0.0; n];
        dir[i] = 1.0;
        let line = OnLine { field: f, origin, dir };
        let bp = ks.breakpoints();
        let slopes: Vec<f64> = bp.windows(2).map(|w| line.derivative(m, 0.5 * (w[0] + w[1]))).collect();
        axis_alphas.push(slopes.windows(2).map(|w| (w[1] - w[0]) / mf).collect());
    }
    StandardPartitionSpline::new(m, grid.to_vec(), base, axis_alphas)
}

/// Truncated-power coefficient lambda with p2 - p1 = lambda (w.x + b)^m.
/// Lower-order directional jumps across the hyperplane must vanish.
/// `d` is the probing direction (default: the normal).
pub fn recurrence_jump(
    p1: &PolyND,
    p2: &PolyND,
    h: &Hyperplane,
    m: usize,
    d: Option<&[f64]>,
    tol: f64,
) -> Result<f64> {
    let n = h.w.len();
    let q = p2.sub(p1);
    let scale = p1.max_abs_coeff().max(p2.max_abs_coeff()).max(1.0);
    let dir: Vec<f64> = d.map(|v| v.to_vec()).unwrap_or_else(|| h.w.clone());
    let wd: f64 = h.w.iter().zip(&dir).map(|(a, b)| a * b).sum();
    if wd.abs() < 1e-12 {
        return Err(Error::InvalidArgument("probing direction parallel to the hyperplane".into()));
    }
    let x0 = h.anchor_point();
    // a few points on the hyperplane
    let mut probes = vec![x0.clone()];
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 0.25;
        let ew: f64 = e.iter().zip(&h.w).map(|(a, b)| a * b).sum();
        let ww: f64 = h.w.iter().map(|v| v * v).sum();
        let t: Vec<f64> = e.iter().zip(&h.w).map(|(a, b)| a - ew / ww * b).collect();
        if t.iter().any(|v| v.abs() > 1e-12) {
            probes.push(x0.iter().zip(&t).map(|(a, b)| a + b).collect());
        }
    }
    let mut lambda = None;
    for p in &probes {
        let r = q.restrict_to_line(p, &dir);
        for o in 0..m {
            let jump = r.deriv_at(o, 0.0);
            if jump.abs() > tol * scale {
                return Err(Error::SmoothnessViolation { order: o, jump });
            }
        }
        if lambda.is_none() {
            lambda = Some(r.deriv_at(m, 0.0) / (factorial(m) * wd.powi(m as i32)));
        }
    }
    let lambda = lambda.unwrap_or(0.0);
    let rest = q.sub(&PolyND::affine_power(&h.w, h.b, m).scale(lambda));
    let worst = rest.max_abs_coeff();
    if worst > tol * scale {
        return Err(Error::SmoothnessViolation { order: m, jump: worst });
    }
    Ok(lambda)
}

/// One-dimensional form: p2 - p1 = alpha (x - knot)^m.
pub fn recurrence_jump_1d(p1: &Poly1D, p2: &Poly1D, knot: f64, m: usize, tol: f64) -> Result<f64> {
    let q = p2.sub(p1);
    let scale = p1.max_abs_coeff().max(p2.max_abs_coeff()).max(1.0);
    for o in 0..m {
        let jump = q.deriv_at(o, knot);
        if jump.abs() > tol * scale {
            return Err(Error::SmoothnessViolation { order: o, jump });
        }
    }
    Ok(q.deriv_at(m, knot) / factorial(m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::func::Fn1;

    #[test]
    fn eval_examples() {
        let s = Spline1D::new(3, KnotSet1D::new(vec![0.5]).unwrap(), Poly1D::zero(), vec![1.0]).unwrap();
        assert_eq!(s.eval(0.25).unwrap(), 0.0);
        assert!((s.eval(0.75).unwrap() - 0.015625).abs() < 1e-15);
        assert!(s.eval(1.5).is_err());
        let g = vec![vec![0.5], vec![0.5]];
        let sp = StandardPartitionSpline::new(2, g, PolyND::zero(2), vec![vec![1.0], vec![1.0]]).unwrap();
        assert!((sp.eval(&[0.75, 0.75]).unwrap() - 0.125).abs() < 1e-15);
    }

    #[test]
    fn knot_validation() {
        assert!(KnotSet1D::new(vec![0.5, 0.5]).is_err());
        assert!(KnotSet1D::new(vec![0.0]).is_err());
        assert_eq!(KnotSet1D::uniform(4).knots(), &[0.25, 0.5, 0.75]);
    }

    #[test]
    fn quadratic_is_reproduced() {
        let f = Fn1(|x: f64| x * x / 2.0);
        let s = construct_spline_from_derivative(&f, 2, &KnotSet1D::uniform(5), None).unwrap();
        assert!(s.alphas.iter().all(|a| a.abs() < 1e-8));
        for (a, b) in s.first_piece.coeffs.iter().zip([0.0, 0.0, 0.5]) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn jump_examples() {
        let p2 = Poly1D::power_of_shift(0.5, 3);
        assert!((recurrence_jump_1d(&Poly1D::zero(), &p2, 0.5, 3, 1e-9).unwrap() - 1.0).abs() < 1e-12);
        let h = Hyperplane::new(vec![1.0, 1.0], -1.0).unwrap();
        let q = PolyND::affine_power(&[1.0, 1.0], -1.0, 2);
        let l = recurrence_jump(&PolyND::zero(2), &q, &h, 2, None, 1e-9).unwrap();
        assert!((l - 1.0).abs() < 1e-12);
        let bad = PolyND::affine_power(&[1.0, 1.0], -0.9, 2);
        assert!(matches!(
            recurrence_jump(&PolyND::zero(2), &bad, &h, 2, None, 1e-9),
            Err(Error::SmoothnessViolation { .. })
        ));
    }

    #[test]
    fn spline_json_shape() {
        let s = Spline1D::new(2, KnotSet1D::new(vec![0.5]).unwrap(), Poly1D::new(vec![1.0, 2.0]), vec![3.0]).unwrap();
        let v = serde_json::to_value(&s).unwrap();
        assert_eq!(v, serde_json::json!({"m":2,"knots":[0.5],"first_piece":[1.0,2.0],"alphas":[3.0]}));
        let back: Spline1D = serde_json::from_value(v).unwrap();
        assert_eq!(back, s);
    }
}
