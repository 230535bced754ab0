//! Networks realizing one-dimensional smooth splines.

use serde::Serialize;

use super::matrix::{self, SplineMatrix, SplineSpace};
use super::sharpen::{sharpen, SharpenResult};
use super::tanh::tanh_constant_compensation;
use crate::activation::ActivationKind;
use crate::error::{Error, Result};
use crate::par;
use crate::func::{AsField, Function1D};
use crate::net::{TwoLayerNet, Unit};
use crate::quad;
use crate::polyspline::Spline1D;
use crate::wronskian::{realize_with_sweep, Diagnostics, SweepOptions};

/// How the sharpening factor of local units is chosen.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RhoRule {
    /// Doubling sweep with one rho for all knots; keeps the smallest L2 error.
    MinError,
    /// Per knot, smallest doubling rho with |lambda| * zero-part norm <= tol/(2 zeta + 1).
    Budget,
    Fixed(f64),
}

#[derive(Clone, Debug)]
pub struct SplineOptions {
    /// Tail-relative level at the knot before sharpening; default half of sigma(0).
    pub eps_level: Option<f64>,
    /// Slope of a local unit before sharpening, in units of 1/h.
    pub base_slope: f64,
    pub rho_rule: RhoRule,
    pub rho_max: f64,
    /// Indicator threshold used when solving; 0 solves the full system.
    pub mask_eps: f64,
    pub sweep: SweepOptions,
}

impl Default for SplineOptions {
    fn default() -> Self {
        SplineOptions {
            eps_level: None,
            base_slope: 0.25,
            rho_rule: RhoRule::MinError,
            rho_max: 64.0, mask_eps: 0.0,
            sweep: SweepOptions::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct KnotReport {
    pub knot: f64,
    pub rho: f64,
    pub gamma: f64,
    pub c_k: f64,
    pub zero_part_l2: f64,
    pub budget_met: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConstructionReport {
    pub global: Diagnostics,
    pub knots: Vec<KnotReport>,
    pub matrix_rank: usize,
    pub matrix_cond: f64,
    pub max_fit_residual: f64,
    pub l2_error: f64,
    pub max_error: f64,
}

#[derive(Clone, Debug)]
pub struct Implementation {
    pub net: TwoLayerNet,
    pub matrix: SplineMatrix,
    pub report: ConstructionReport,
    /// Index of the first local unit.
    pub first_local: usize,
}

/// L2 and max error of a network against a one-variable target on [0,1].
pub fn errors_1d(net: &TwoLayerNet, target: &dyn Function1D) -> (f64, f64) {
    let l2 = quad::l2(&|x| net.eval1(x) - target.value(x), 0.0, 1.0);
    let max = (0..=2000).map(|i| i as f64 / 2000.0).fold(0.0, |m: f64, x| m.max((net.eval1(x) - target.value(x)).abs()));
    (l2, max)
}

/// Local unit sharpened at `knot`; rho doubles until the zero-part budget holds.
pub(crate) fn local_unit(
    kind: &ActivationKind,
    knot: f64,
    next: f64,
    h: f64,
    alpha: f64,
    m: usize,
    budget: f64,
    opts: &SplineOptions,
) -> Result<(SharpenResult, bool)> {
    let top = kind.eval_shifted(0.0);
    let eps_level = opts.eps_level.unwrap_or(0.5 * top);
    let sign = if next > knot { 1.0 } else { -1.0 };
    let w = sign * opts.base_slope / h;
    let b = kind.inverse_shifted(eps_level)? - w * knot;
    let base = Unit::new(vec![w], b, 0.0, kind.clone());
    if let RhoRule::Fixed(rho) = opts.rho_rule {
        let r = sharpen(&base, knot, rho, eps_level, next, m)?;
        let met = (alpha / r.c_k).abs() * r.zero_part_l2 <= budget;
        return Ok((r, met));
    }
    let mut rho = 1.0;
    loop {
        let r = sharpen(&base, knot, rho, eps_level, next, m)?;
        let lam = if r.c_k.abs() > 0.0 { alpha / r.c_k } else { 0.0 };
        let met = lam.abs() * r.zero_part_l2 <= budget;
        if met || rho * 2.0 > opts.rho_max {
            return Ok((r, met));
        }
        rho *= 2.0;
    }
}

/// Network with m+1 global units for the first piece and one sharpened
/// local unit per knot; output weights solve the spline matrix system.
/// Fails when the achieved L2 error exceeds `tol`.
pub fn implement_spline_1d(s: &Spline1D, kind: &ActivationKind, tol: f64, opts: &SplineOptions) -> Result<Implementation> {
    let imp = build_spline_1d(s, kind, tol, opts)?;
    if imp.report.l2_error > tol {
        return Err(Error::ToleranceUnreachable { tol, best: imp.report.l2_error, knot: limiting_knot(&imp.net, s) });
    }
    Ok(imp)
}

/// Knot bounding the interval with the largest error.
pub fn limiting_knot(net: &TwoLayerNet, s: &Spline1D) -> f64 {
    let bp = s.knots.breakpoints();
    let mut worst = (0.0, f64::MIN);
    for w in bp.windows(2) {
        let e = quad::l2(&|x| net.eval1(x) - s.value(x), w[0], w[1]);
        if e > worst.1 {
            worst = (if w[0] == 0.0 { w[1] } else { w[0] }, e);
        }
    }
    worst.0
}

/// Same construction without the tolerance check.
pub fn build_spline_1d(s: &Spline1D, kind: &ActivationKind, tol: f64, opts: &SplineOptions) -> Result<Implementation> {
    if let RhoRule::MinError = opts.rho_rule {
        let mut rhos = vec![1.0];
        while rhos.last().unwrap() * 2.0 <= opts.rho_max {
            rhos.push(rhos.last().unwrap() * 2.0);
        }
        let tries = par::map(opts.sweep.exec, &rhos, |&rho| {
            let o = SplineOptions { rho_rule: RhoRule::Fixed(rho), ..opts.clone() };
            build_with_rule(s, kind, tol, &o)
        });
        let mut best: Option<Implementation> = None;
        let mut err = None;
        for t in tries {
            match t {
                Ok(imp) if best.as_ref().is_none_or(|b| imp.report.l2_error < b.report.l2_error) => best = Some(imp),
                Ok(_) => {}
                Err(e) => err = Some(e),
            }
        }
        return best.ok_or_else(|| err.unwrap());
    }
    build_with_rule(s, kind, tol, opts)
}

fn build_with_rule(s: &Spline1D, kind: &ActivationKind, tol: f64, opts: &SplineOptions) -> Result<Implementation> {
    let m = s.m;
    let zeta = s.zeta();
    let bp = s.knots.breakpoints();
    let x0 = 0.5 * (bp[0] + bp[1]);
    let real = realize_with_sweep(&AsField(&s.first_piece), &[x0], m, kind, &opts.sweep)?;
    let mut units = real.net.units.clone();
    let first_local = units.len();
    let budget = tol / (2 * zeta + 1) as f64;
    let mut reports = Vec::new();
    for (nu, &k) in s.knots.knots().iter().enumerate() {
        let next = bp[nu + 2];
        let h = next - k;
        let (r, met) = local_unit(kind, k, next, h, s.alphas[nu], m, budget, opts)?;
        reports.push(KnotReport { knot: k, rho: r.rho, gamma: r.gamma, c_k: r.c_k, zero_part_l2: r.zero_part_l2, budget_met: met });
        units.push(r.unit);
    }
    let mut net = TwoLayerNet::new(units);
    let space = SplineSpace::one_d(m, &s.knots);
    let shifted: Vec<bool> = (0..net.len()).map(|i| i >= first_local).collect();
    let mat = matrix::spline_matrix_in(&net, &space, opts.mask_eps, kind.is_tanh().then_some(&shifted[..]))?;
    let rhs = space.rhs_1d(s)?;
    let lam = if opts.mask_eps > 0.0 { mat.solve_one_sided(&rhs)? } else { matrix::solve_rows(&mat, &rhs, &[])? };
    for (u, l) in net.units.iter_mut().zip(&lam) {
        u.lambda = *l;
    }
    if kind.is_tanh() {
        let locals: Vec<usize> = (first_local..net.len()).collect();
        net = tanh_constant_compensation(&net, &locals)?;
    }
    let (l2_error, max_error) = errors_1d(&net, s);
    let report = ConstructionReport {
        global: real.diagnostics,
        knots: reports,
        matrix_rank: mat.rank,
        matrix_cond: mat.cond,
        max_fit_residual: mat.cell_residuals.first().map(|c| c.residual).unwrap_or(0.0),
        l2_error,
        max_error,
    };
    Ok(Implementation { net, matrix: mat, report, first_local })
}
