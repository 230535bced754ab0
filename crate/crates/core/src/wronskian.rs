//! Generalized Wronskian matrices, weight-scaling schedules and polynomial
//! realization by small networks.

use serde::Serialize;

use crate::activation::{ActivationKind, DerivativeOracle};
use crate::error::{Error, Result};
use crate::func::Field;
use crate::linalg::{self, Mat, Vector};
use crate::net::{TwoLayerNet, Unit};
use crate::par::{self, Exec};
pub use crate::terms::TermOrder;

pub const DEFAULT_COND_CAP: f64 = 1e12;
/// Exponent 1 + c used for the first row and for uninvolved variables.
const SMALL_EXPONENT: f64 = 2.0;
const FEASIBILITY_ITERS: usize = 100;

/// Weight exponents (in powers of delta_t) and pre-activation targets per unit.
#[derive(Clone, Debug, Serialize)]
pub struct ScalingSchedule {
    pub n: usize,
    pub m: usize,
    pub delta_t: f64,
    pub c_params: Vec<f64>,
    pub exponents: Vec<Vec<f64>>,
    pub weights: Vec<Vec<f64>>,
    /// Pre-activation value y_i each unit should take at the expansion point.
    pub y_targets: Vec<f64>,
}

impl ScalingSchedule {
    fn from_exponents(n: usize, m: usize, delta_t: f64, c_params: Vec<f64>, exponents: Vec<Vec<f64>>, ys: Vec<f64>) -> Self {
        let weights = exponents.iter().map(|row| row.iter().map(|e| delta_t.powf(*e)).collect()).collect();
        ScalingSchedule { n, m, delta_t, c_params, exponents, weights, y_targets: ys }
    }

    /// Biases placing unit i at y_i when evaluated at x0.
    pub fn biases(&self, x0: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.y_targets)
            .map(|(w, y)| y - w.iter().zip(x0).map(|(a, b)| a * b).sum::<f64>())
            .collect()
    }

    pub fn units(&self, x0: &[f64], kind: &ActivationKind) -> Vec<Unit> {
        self.weights
            .iter()
            .zip(self.biases(x0))
            .map(|(w, b)| Unit::new(w.clone(), b, 0.0, kind.clone()))
            .collect()
    }
}

/// Per-order points where |sigma^(k)| peaks.
pub fn bias_table(kind: &ActivationKind, max_order: usize) -> Vec<f64> {
    let o = DerivativeOracle::new(kind.clone(), max_order.max(1));
    (0..=max_order).map(|k| o.argmax_abs(k)).collect()
}

fn check_dt(delta_t: f64) -> Result<()> {
    if !(delta_t > 0.0 && delta_t < 1.0) {
        return Err(Error::InvalidArgument(format!("delta_t {delta_t} outside (0,1)")));
    }
    Ok(())
}

/// w_1 = dt^(1+c), w_j = dt^(1/(j-1)) for 2 <= j <= m, w_{m+1} = dt^-(m-1).
pub fn univariate_schedule(m: usize, delta_t: f64, c: f64, kind: &ActivationKind) -> Result<ScalingSchedule> {
    check_dt(delta_t)?;
    if c <= 0.0 {
        return Err(Error::InvalidArgument("c must be positive".into()));
    }
    let mut e = vec![vec![1.0 + c]];
    for j in 2..=m {
        e.push(vec![1.0 / (j - 1) as f64]);
    }
    if m >= 1 {
        e.push(vec![-(m as f64 - 1.0)]);
    }
    let table = bias_table(kind, m);
    Ok(ScalingSchedule::from_exponents(1, m, delta_t, vec![c], e, table))
}

/// Exponents for a diagonal term with at least two variables present.
/// Solves c1 k1/(k+1) + sum c_j k_j / k = k1/(k(k+1)) with c_j > c1 > 0.
fn mixed_row(alpha: &[u32], row: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = alpha.len();
    let k: f64 = alpha.iter().sum::<u32>() as f64;
    let mu = alpha.iter().position(|&a| a > 0).unwrap();
    let k1 = alpha[mu] as f64;
    let mut c1 = 0.1;
    for _ in 0..FEASIBILITY_ITERS {
        let c = k1 * (1.0 - c1 * k) / ((k + 1.0) * (k - k1));
        if c > c1 && c1 > 0.0 {
            let mut e = vec![SMALL_EXPONENT; n];
            e[mu] = (1.0 + c1) / (k + 1.0);
            for j in mu + 1..n {
                if alpha[j] > 0 {
                    e[j] = (1.0 + c) / k;
                }
            }
            return Ok((e, vec![c1, c]));
        }
        c1 *= 0.5;
    }
    Err(Error::ScheduleInfeasible { row, detail: format!("no c1 found for term {alpha:?}") })
}

/// Default schedule for n >= 2: one weight vector per term in TermOrder.
pub fn multivariate_schedule(n: usize, m: usize, delta_t: f64, kind: &ActivationKind) -> Result<ScalingSchedule> {
    check_dt(delta_t)?;
    if n < 2 || m < 1 {
        return Err(Error::InvalidArgument("multivariate schedule needs n >= 2 and m >= 1".into()));
    }
    let order = TermOrder::new(n, m);
    let tau = order.len();
    let table = bias_table(kind, m);
    let mut exps = Vec::with_capacity(tau);
    let mut cs = Vec::new();
    let mut ys = Vec::with_capacity(tau);
    for (row, alpha) in order.terms.iter().enumerate() {
        let k: u32 = alpha.iter().sum();
        ys.push(table[k as usize]);
        let present: Vec<usize> = (0..n).filter(|&j| alpha[j] > 0).collect();
        let e = if row == 0 {
            vec![SMALL_EXPONENT; n]
        } else if row == tau - 1 {
            let mut e = vec![SMALL_EXPONENT; n];
            e[n - 1] = -((tau - 2) as f64) / m as f64;
            e
        } else if present.len() == 1 {
            let mut e = vec![SMALL_EXPONENT; n];
            e[present[0]] = 1.0 / k as f64;
            e
        } else {
            let (e, c) = mixed_row(alpha, row)?;
            cs.extend(c);
            e
        };
        exps.push(e);
    }
    Ok(ScalingSchedule::from_exponents(n, m, delta_t, cs, exps, ys))
}

/// Rows are units, columns are derivative terms in TermOrder.
#[derive(Clone, Debug)]
pub struct WronskianMatrix {
    pub entries: Mat,
    pub order: TermOrder,
    pub x0: Vec<f64>,
    pub m: usize,
}

pub fn assemble(units: &[Unit], x0: &[f64], m: usize) -> Result<WronskianMatrix> {
    let n = x0.len();
    let order = TermOrder::new(n, m);
    if units.len() < order.len() {
        return Err(Error::InvalidArgument(format!(
            "need at least {} units, got {}",
            order.len(),
            units.len()
        )));
    }
    let mut entries = Mat::zeros(units.len(), order.len());
    for (i, u) in units.iter().enumerate() {
        let o = DerivativeOracle::new(u.kind.clone(), m.max(1));
        for (j, alpha) in order.terms.iter().enumerate() {
            entries[(i, j)] = o.composed_derivative(alpha, &u.w, u.b, x0)?;
        }
    }
    Ok(WronskianMatrix { entries, order, x0: x0.to_vec(), m })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Diagnostics {
    pub delta_t: f64,
    pub cond_estimate: f64,
    pub residual: f64,
    pub max_abs_lambda: f64,
}

/// Partial derivatives of the target at x0, listed in TermOrder.
pub fn taylor_vector(target: &dyn Field, x0: &[f64], order: &TermOrder) -> Vec<f64> {
    order.terms.iter().map(|a| target.partial(a, x0)).collect()
}

/// Solves W^T lambda = a (least-norm when there are more units than terms).
pub fn solve_weights(w: &WronskianMatrix, a: &[f64], cond_cap: f64, delta_t: f64) -> Result<(Vec<f64>, Diagnostics)> {
    let wt = w.entries.transpose();
    let rhs = Vector::from_column_slice(a);
    let cond = linalg::cond(&wt);
    if !(cond <= cond_cap) {
        return Err(Error::IllConditioned { cond, cap: cond_cap, hint: "try a larger delta_t".into() });
    }
    let lam = if wt.nrows() == wt.ncols() { linalg::solve_square(&wt, &rhs)? } else { linalg::lstsq(&wt, &rhs)? };
    let residual = linalg::residual(&wt, &lam, &rhs);
    let max_abs_lambda = lam.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    Ok((lam.iter().copied().collect(), Diagnostics { delta_t, cond_estimate: cond, residual, max_abs_lambda }))
}

/// Output weights making the schedule's units reproduce the target's
/// degree-m Taylor polynomial at x0.
pub fn realize_polynomial(
    target: &dyn Field,
    x0: &[f64],
    schedule: &ScalingSchedule,
    kind: &ActivationKind,
) -> Result<(Vec<f64>, Diagnostics)> {
    if target.dim() != x0.len() || schedule.n != x0.len() {
        return Err(Error::DimensionMismatch { expected: schedule.n, found: x0.len() });
    }
    let units = schedule.units(x0, kind);
    let w = assemble(&units, x0, schedule.m)?;
    let a = taylor_vector(target, x0, &w.order);
    solve_weights(&w, &a, DEFAULT_COND_CAP, schedule.delta_t)
}

#[derive(Clone, Debug)]
pub struct SweepOptions {
    pub dt_max: f64,
    pub dt_min: f64,
    pub count: usize,
    /// c for the univariate schedule.
    pub c: f64,
    pub cond_cap: f64,
    /// Residual tolerance relative to max(1, |a|).
    pub residual_tol: f64,
    pub exec: Exec,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            dt_max: 0.3,
            dt_min: 1e-3,
            count: 16,
            c: 1.0,
            cond_cap: DEFAULT_COND_CAP,
            residual_tol: 1e-8,
            exec: Exec::default(),
        }
    }
}

impl SweepOptions {
    pub fn grid(&self) -> Vec<f64> {
        if self.count <= 1 {
            return vec![self.dt_max];
        }
        let r = (self.dt_min / self.dt_max).powf(1.0 / (self.count - 1) as f64);
        (0..self.count).map(|i| self.dt_max * r.powi(i as i32)).collect()
    }
}

/// A realized polynomial: network plus the schedule and solve diagnostics.
#[derive(Clone, Debug)]
pub struct Realization {
    pub net: TwoLayerNet,
    pub schedule: ScalingSchedule,
    pub diagnostics: Diagnostics,
}

pub fn schedule_for(n: usize, m: usize, delta_t: f64, c: f64, kind: &ActivationKind) -> Result<ScalingSchedule> {
    if n == 1 {
        univariate_schedule(m, delta_t, c, kind)
    } else if m == 0 {
        check_dt(delta_t)?;
        Ok(ScalingSchedule::from_exponents(n, 0, delta_t, vec![], vec![vec![SMALL_EXPONENT; n]], bias_table(kind, 0)))
    } else {
        multivariate_schedule(n, m, delta_t, kind)
    }
}

/// Sweeps delta_t geometrically and keeps the best-conditioned solve whose
/// residual passes.
pub fn realize_with_sweep(
    target: &dyn Field,
    x0: &[f64],
    m: usize,
    kind: &ActivationKind,
    opts: &SweepOptions,
) -> Result<Realization> {
    let n = x0.len();
    let grid = opts.grid();
    let order = TermOrder::new(n, m);
    let a = taylor_vector(target, x0, &order);
    let scale = a.iter().fold(1.0, |s: f64, v| s.max(v.abs()));
    let candidates = par::map(opts.exec, &grid, |&dt| -> Result<Realization> {
        let schedule = schedule_for(n, m, dt, opts.c, kind)?;
        let mut units = schedule.units(x0, kind);
        let w = assemble(&units, x0, m)?;
        let (lam, diagnostics) = solve_weights(&w, &a, opts.cond_cap, dt)?;
        if !(diagnostics.residual <= opts.residual_tol * scale) {
            return Err(Error::IllConditioned {
                cond: diagnostics.cond_estimate,
                cap: opts.cond_cap,
                hint: format!("residual {:.3e} too large", diagnostics.residual),
            });
        }
        for (u, l) in units.iter_mut().zip(lam) {
            u.lambda = l;
        }
        Ok(Realization { net: TwoLayerNet::new(units), schedule, diagnostics })
    });
    let mut best: Option<Realization> = None;
    let mut last_err = None;
    for c in candidates {
        match c {
            Ok(r) => {
                if best.as_ref().is_none_or(|b| r.diagnostics.cond_estimate < b.diagnostics.cond_estimate) {
                    best = Some(r);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    best.ok_or_else(|| last_err.unwrap_or(Error::InvalidArgument("empty delta_t grid".into())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn univariate_weights() {
        let s = univariate_schedule(2, 0.1, 1.0, &ActivationKind::Logistic).unwrap();
        let w: Vec<f64> = s.weights.iter().map(|v| v[0]).collect();
        for (a, b) in w.iter().zip([0.01, 0.1, 10.0]) {
            assert!((a - b).abs() < 1e-12 * b.max(1.0));
        }
        let s = univariate_schedule(1, 0.5, 0.5, &ActivationKind::Logistic).unwrap();
        assert!((s.weights[0][0] - 0.5f64.powf(1.5)).abs() < 1e-15);
        assert_eq!(s.weights[1][0], 1.0);
        assert!(univariate_schedule(2, 1.5, 1.0, &ActivationKind::Logistic).is_err());
    }

    #[test]
    fn bias_table_peaks() {
        let t = bias_table(&ActivationKind::Logistic, 3);
        assert!(t[1].abs() < 1e-9);
        assert!((t[2].abs() - (2.0 + 3f64.sqrt()).ln()).abs() < 1e-3);
        assert!(t[3].abs() < 1e-9);
    }

    #[test]
    fn mixed_row_normalizes() {
        let s = multivariate_schedule(2, 2, 0.01, &ActivationKind::Logistic).unwrap();
        let order = TermOrder::new(2, 2);
        for (row, alpha) in order.terms.iter().enumerate().skip(1).take(order.len() - 2) {
            let logp: f64 = alpha.iter().zip(&s.exponents[row]).map(|(&a, e)| a as f64 * e).sum();
            assert!((logp - 1.0).abs() < 1e-9, "row {row}");
        }
        let e = &s.exponents[4];
        assert!(e[0] < 0.5 && (e[0] + e[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_target_single_unit() {
        let s = schedule_for(1, 0, 0.5, 1.0, &ActivationKind::Logistic).unwrap();
        let p = crate::poly::Poly1D::new(vec![3.0]);
        let (lam, _) = realize_polynomial(&crate::func::AsField(&p), &[0.4], &s, &ActivationKind::Logistic).unwrap();
        let u = &s.units(&[0.4], &ActivationKind::Logistic)[0];
        assert!((lam[0] - 3.0 / u.activation(&[0.4])).abs() < 1e-12);
    }
}
