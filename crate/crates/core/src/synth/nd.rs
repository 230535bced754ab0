//! Networks realizing standard-partition splines in n dimensions.

use serde::Serialize;

use super::refine::{refine, RefineOptions, RefineSummary};
use super::matrix::{self, SplineMatrix, SplineSpace};
use super::sharpen::sharpen;
use super::spline1d::{KnotReport, RhoRule, SplineOptions};
use super::tanh::tanh_constant_compensation;
use crate::activation::ActivationKind;
use crate::error::{Error, Result};
use crate::func::Field;
use crate::linalg::{self, Mat, Vector};
use crate::net::{TwoLayerNet, Unit};
use crate::par;
use crate::polyspline::StandardPartitionSpline;
use crate::quad;
use crate::wronskian::{realize_with_sweep, Diagnostics};

#[derive(Clone, Debug)]
pub struct NdOptions {
    pub spline: SplineOptions,
    /// Norms tried for the global directions; `None` keeps the schedule
    /// magnitudes.
    pub global_scales: Vec<Option<f64>>,
    /// Local-unit slopes (times 1/h) tried; empty uses `spline.base_slope`.
    pub base_slopes: Vec<f64>,
    /// Margin of min over the cube of w.x + b for global units.
    pub global_margin: f64,
    /// Also fit output weights directly to the spline on the sample set
    /// and keep them when the error drops.
    pub refit: bool,
    /// Parameter polish applied when the construction misses the tolerance.
    pub refine: Option<RefineOptions>,
    /// How many of the best constructions are polished.
    pub refine_candidates: usize,
}

impl Default for NdOptions {
    fn default() -> Self {
        NdOptions {
            spline: SplineOptions::default(),
            global_scales: vec![None, Some(1.0), Some(0.3)],
            base_slopes: vec![0.25, 0.5],
            global_margin: 0.1,
            refit: true,
            refine: Some(RefineOptions::default()),
            refine_candidates: 4,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AxisKnotReport {
    pub axis: usize,
    #[serde(flatten)]
    pub knot: KnotReport,
}

#[derive(Clone, Debug, Serialize)]
pub struct NdReport {
    pub global: Diagnostics,
    pub global_scale: Option<f64>,
    pub knots: Vec<AxisKnotReport>,
    pub matrix_rank: usize,
    pub matrix_cond: f64,
    /// Error of the network before any parameter polish.
    pub construction_l2: f64,
    pub refinement: Option<RefineSummary>,
    pub l2_error: f64,
    pub max_error: f64,
}

#[derive(Clone, Debug)]
pub struct NdImplementation {
    pub net: TwoLayerNet,
    pub matrix: SplineMatrix,
    pub report: NdReport,
    pub first_local: usize,
}

/// L2 error on the unit square (n = 2) or via a midpoint grid otherwise.
pub fn errors_nd(net: &TwoLayerNet, target: &dyn Field) -> (f64, f64) {
    let n = target.dim();
    let diff = |x: &[f64]| net.eval(x) - target.value(x);
    let l2 = if n == 2 {
        quad::l2_square(&diff, 40)
    } else {
        let k = 24usize;
        let total = k.pow(n as u32);
        let mut s = 0.0;
        for i in 0..total {
            let mut r = i;
            let x: Vec<f64> = (0..n)
                .map(|_| {
                    let v = (r % k) as f64;
                    r /= k;
                    (v + 0.5) / k as f64
                })
                .collect();
            s += diff(&x).powi(2);
        }
        (s / total as f64).sqrt()
    };
    let k: usize = if n == 2 { 101 } else { 21 };
    let total = k.pow(n as u32);
    let mut max = 0.0f64;
    for i in 0..total {
        let mut r = i;
        let x: Vec<f64> = (0..n)
            .map(|_| {
                let v = (r % k) as f64;
                r /= k;
                v / (k - 1) as f64
            })
            .collect();
        max = max.max(diff(&x).abs());
    }
    (l2, max)
}

/// Least-squares output weights against the target on the space's
/// sample points.
pub fn refit_output_weights(net: &TwoLayerNet, target: &dyn Field, space: &SplineSpace) -> Result<TwoLayerNet> {
    let pts = space.samples();
    let a = Mat::from_fn(pts.len(), net.len(), |i, j| net.units[j].activation(&pts[i].1));
    let y = Vector::from_iterator(pts.len(), pts.iter().map(|(_, x)| target.value(x) - net.output_bias));
    let lam = linalg::lstsq(&a, &y)?;
    let mut out = net.clone();
    for (u, l) in out.units.iter_mut().zip(lam.iter()) {
        u.lambda = *l;
    }
    Ok(out)
}

/// Moves the bias up so the unit is positive on the whole cube.
fn make_universal(u: &mut Unit, margin: f64) {
    let min = u.b + u.w.iter().map(|w| w.min(0.0)).sum::<f64>();
    if min < margin {
        u.b += margin - min;
    }
}

/// C(n+m, m) global units for the base piece plus one sharpened local
/// unit per grid hyperplane; output weights solve the spline system.
pub fn implement_spline_nd(
    s: &StandardPartitionSpline,
    kind: &ActivationKind,
    tol: f64,
    opts: &NdOptions,
) -> Result<NdImplementation> {
    let imp = build_spline_nd(s, kind, tol, opts)?;
    if imp.report.l2_error > tol {
        return Err(Error::ToleranceUnreachable { tol, best: imp.report.l2_error, knot: f64::NAN });
    }
    Ok(imp)
}

/// Same construction without the tolerance check; keeps the best global
/// scale and rho found.
pub fn build_spline_nd(
    s: &StandardPartitionSpline,
    kind: &ActivationKind,
    tol: f64,
    opts: &NdOptions,
) -> Result<NdImplementation> {
    let mut rhos: Vec<f64> = match opts.spline.rho_rule {
        RhoRule::Fixed(r) => vec![r],
        _ => {
            let mut v = vec![1.0];
            while v.last().unwrap() * 2.0 <= opts.spline.rho_max {
                v.push(v.last().unwrap() * 2.0);
            }
            v
        }
    };
    rhos.dedup();
    let slopes = if opts.base_slopes.is_empty() { vec![opts.spline.base_slope] } else { opts.base_slopes.clone() };
    let mut combos = Vec::new();
    for &g in &opts.global_scales {
        for &r in &rhos {
            for &b in &slopes {
                combos.push((g, r, b));
            }
        }
    }
    let tries = par::map(opts.spline.sweep.exec, &combos, |&(g, r, b)| build_once(s, kind, tol, opts, g, r, b));
    let mut built = Vec::new();
    let mut err = None;
    for t in tries {
        match t {
            Ok(imp) => built.push(imp),
            Err(e) => err = Some(e),
        }
    }
    if built.is_empty() {
        return Err(err.unwrap_or(Error::InvalidArgument("nothing to try".into())));
    }
    built.sort_by(|a, b| a.report.l2_error.total_cmp(&b.report.l2_error));
    let ro = match &opts.refine {
        Some(ro) if built[0].report.l2_error > tol => ro,
        _ => return Ok(built.swap_remove(0)),
    };
    let (xs, ys) = dense_samples(s);
    let ro = RefineOptions { target_rms: ro.target_rms.max(0.5 * tol), ..ro.clone() };
    let mut best: Option<NdImplementation> = None;
    for mut imp in built.into_iter().take(opts.refine_candidates.max(1)) {
        let (net, summary) = refine(&imp.net, &xs, &ys, &ro);
        let (l2, max) = errors_nd(&net, s);
        if l2 < imp.report.l2_error {
            imp.net = net;
            imp.report.l2_error = l2;
            imp.report.max_error = max;
        }
        imp.report.refinement = Some(summary);
        if best.as_ref().is_none_or(|b| imp.report.l2_error < b.report.l2_error) {
            best = Some(imp);
        }
        if best.as_ref().is_some_and(|b| b.report.l2_error <= tol) {
            break;
        }
    }
    Ok(best.expect("at least one candidate"))
}

fn dense_samples(s: &StandardPartitionSpline) -> (Vec<Vec<f64>>, Vec<f64>) {
    let n = s.n;
    let k: usize = if n <= 2 { 24 } else { 12 };
    let total = k.pow(n as u32);
    let xs: Vec<Vec<f64>> = (0..total)
        .map(|i| {
            let mut r = i;
            (0..n)
                .map(|_| {
                    let v = (r % k) as f64;
                    r /= k;
                    (v + 0.5) / k as f64
                })
                .collect()
        })
        .collect();
    let ys = xs.iter().map(|x| s.value(x)).collect();
    (xs, ys)
}

fn build_once(
    s: &StandardPartitionSpline,
    kind: &ActivationKind,
    tol: f64,
    opts: &NdOptions,
    global_scale: Option<f64>,
    rho: f64,
    base_slope: f64,
) -> Result<NdImplementation> {
    let n = s.n;
    let m = s.m;
    let space = SplineSpace::new(m, s.grid.clone())?;
    let real = realize_with_sweep(&s.base_piece, &space.x0, m, kind, &opts.spline.sweep)?;
    let mut units = real.net.units.clone();
    for u in units.iter_mut() {
        if let Some(r) = global_scale {
            let norm = u.w.iter().map(|v| v * v).sum::<f64>().sqrt();
            for w in u.w.iter_mut() {
                *w *= r / norm;
            }
        }
        make_universal(u, opts.global_margin);
    }
    let first_local = units.len();
    let top = kind.eval_shifted(0.0);
    let eps_level = opts.spline.eps_level.unwrap_or(0.5 * top);
    let zeta = s.cells_per_axis().iter().product::<usize>();
    let budget = tol / (2 * zeta + 1) as f64;
    let mut reports = Vec::new();
    for (axis, g) in s.grid.iter().enumerate() {
        let mut bp = vec![0.0];
        bp.extend_from_slice(g);
        bp.push(1.0);
        for (nu, &k) in g.iter().enumerate() {
            let next = bp[nu + 2];
            let w = base_slope / (next - k);
            let b = kind.inverse_shifted(eps_level)? - w * k;
            let base = Unit::new(vec![w], b, 0.0, kind.clone());
            let r = sharpen(&base, k, rho, eps_level, next, m)?;
            let alpha = s.axis_alphas[axis][nu];
            let met = (alpha / r.c_k).abs() * r.zero_part_l2 <= budget;
            let mut wv = vec![0.0; n];
            wv[axis] = r.unit.w[0];
            units.push(Unit::new(wv, r.unit.b, 0.0, kind.clone()));
            reports.push(AxisKnotReport {
                axis,
                knot: KnotReport { knot: k, rho, gamma: r.gamma, c_k: r.c_k, zero_part_l2: r.zero_part_l2, budget_met: met },
            });
        }
    }
    let mut net = TwoLayerNet::new(units);
    let shifted: Vec<bool> = (0..net.len()).map(|i| i >= first_local).collect();
    let mat = matrix::spline_matrix_in(&net, &space, opts.spline.mask_eps, kind.is_tanh().then_some(&shifted[..]))?;
    let rhs = space.rhs_nd(s)?;
    let lam = matrix::solve_rows(&mat, &rhs, &[])?;
    for (u, l) in net.units.iter_mut().zip(&lam) {
        u.lambda = *l;
    }
    if kind.is_tanh() {
        let locals: Vec<usize> = (first_local..net.len()).collect();
        net = tanh_constant_compensation(&net, &locals)?;
    }
    let (mut l2_error, mut max_error) = errors_nd(&net, s);
    if opts.refit {
        if let Ok(refit) = refit_output_weights(&net, s, &space) {
            let (l2, max) = errors_nd(&refit, s);
            if l2 < l2_error {
                net = refit;
                l2_error = l2;
                max_error = max;
            }
        }
    }
    Ok(NdImplementation {
        report: NdReport {
            global: real.diagnostics,
            global_scale,
            knots: reports,
            matrix_rank: mat.rank,
            matrix_cond: mat.cond,
            construction_l2: l2_error,
            refinement: None,
            l2_error,
            max_error,
        },
        net,
        matrix: mat,
        first_local,
    })
}
