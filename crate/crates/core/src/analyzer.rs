//! Unit classification for fitted networks: zero-error points and lines,
//! inactivated units, constant-term units and the overall solution mode.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::net::TwoLayerNet;
use crate::par::{self, Exec};
use crate::trainer::{self, Dataset};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Thresholds {
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma3: f64,
    pub gamma4: f64,
    pub scan_step: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds { gamma1: 0.01, gamma2: 0.01, gamma3: 0.01, gamma4: 0.05, scan_step: 0.01 }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("gamma1", self.gamma1), ("gamma2", self.gamma2), ("gamma3", self.gamma3), ("gamma4", self.gamma4)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::InvalidArgument(format!("{name} = {v} must lie in (0,1)")));
            }
        }
        if !(self.scan_step > 0.0 && self.scan_step < 1.0) {
            return Err(Error::InvalidArgument(format!("scan step {} must lie in (0,1)", self.scan_step)));
        }
        Ok(())
    }

    fn scan_points(&self) -> Vec<f64> {
        let k = (1.0 / self.scan_step).round() as usize;
        (0..=k).map(|i| (i as f64 * self.scan_step).min(1.0)).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Local,
    Global,
    Inactivated,
    ConstantTerm,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolutionMode {
    #[serde(rename = "local")]
    LocalApproximation,
    #[serde(rename = "global")]
    GlobalApproximation,
}

/// Zero-error hyperplane w.x + b0 = 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZeroLine {
    pub w: Vec<f64>,
    pub b0: f64,
}

impl ZeroLine {
    /// |cos| of the angle between the normal and the nearest axis.
    pub fn axis_alignment(&self) -> f64 {
        let norm = self.w.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        self.w.iter().fold(0.0f64, |m, v| m.max(v.abs())) / norm
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitReport {
    pub index: usize,
    pub verdict: Verdict,
    pub z: Option<f64>,
    pub line: Option<ZeroLine>,
    pub eps_truncated: Option<f64>,
    pub eps_without: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub eps: f64,
    pub mode: SolutionMode,
    pub units: Vec<UnitReport>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub note: Option<String>,
}

impl AnalysisReport {
    pub fn count(&self, v: Verdict) -> usize {
        self.units.iter().filter(|u| u.verdict == v).count()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Fit error sqrt(sum (y - g)^2); same as the training loss.
pub fn baseline_eps(net: &TwoLayerNet, data: &Dataset) -> f64 {
    trainer::loss(net, data)
}

/// Per-sample residuals and one unit's contributions, reused across scans.
struct Probe {
    resid: Vec<f64>,
    contrib: Vec<f64>,
}

impl Probe {
    fn new(net: &TwoLayerNet, unit: usize, data: &Dataset) -> Self {
        let u = &net.units[unit];
        let resid = data.inputs.iter().zip(&data.targets).map(|(x, y)| y - net.eval(x)).collect();
        let contrib = data.inputs.iter().map(|x| u.contribution(x)).collect();
        Probe { resid, contrib }
    }

    /// Error with the unit's contribution dropped where `mask` holds.
    fn eps_masked(&self, data: &Dataset, mask: impl Fn(&[f64]) -> bool) -> f64 {
        let mut s = 0.0;
        for ((x, r), c) in data.inputs.iter().zip(&self.resid).zip(&self.contrib) {
            let e = if mask(x) { r + c } else { *r };
            s += e * e;
        }
        s.sqrt()
    }
}

fn check_unit(net: &TwoLayerNet, unit: usize, data: &Dataset) -> Result<()> {
    if unit >= net.len() {
        return Err(Error::InvalidArgument(format!("unit {unit} out of range 0..{}", net.len())));
    }
    if net.dim() != data.dim() {
        return Err(Error::DimensionMismatch { expected: net.dim(), found: data.dim() });
    }
    Ok(())
}

/// Feasibility of each scan point x_k: dropping the unit on its zero side
/// (x <= x_k for w >= 0, x >= x_k for w < 0) moves the error by less than
/// gamma1 * eps.
pub fn zero_error_feasibility(net: &TwoLayerNet, unit: usize, data: &Dataset, th: &Thresholds, eps: f64) -> Vec<(f64, bool)> {
    let probe = Probe::new(net, unit, data);
    let positive = net.units[unit].w[0] >= 0.0;
    th.scan_points()
        .into_iter()
        .map(|xk| {
            let e = if positive {
                probe.eps_masked(data, |x| x[0] <= xk)
            } else {
                probe.eps_masked(data, |x| x[0] >= xk)
            };
            (xk, (e - eps).abs() < th.gamma1 * eps)
        })
        .collect()
}

fn pick_zero_point(feasible: &[(f64, bool)], positive: bool) -> Option<f64> {
    let mut it = feasible.iter().filter(|(_, ok)| *ok).map(|(x, _)| *x);
    if positive {
        it.last()
    } else {
        it.next()
    }
}

/// Largest feasible truncation point (smallest for w < 0), or None.
pub fn zero_error_point(net: &TwoLayerNet, unit: usize, data: &Dataset, th: &Thresholds) -> Result<Option<f64>> {
    check_unit(net, unit, data)?;
    if data.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, found: data.dim() });
    }
    let eps = baseline_eps(net, data);
    if eps == 0.0 {
        return Err(Error::ExactFit);
    }
    let f = zero_error_feasibility(net, unit, data, th, eps);
    Ok(pick_zero_point(&f, net.units[unit].w[0] >= 0.0))
}

/// Offsets b' for which w.x + b' = 0 meets the unit cube, from the line
/// through the corner minimizing w.x to the one maximizing it.
fn offset_range(w: &[f64]) -> (f64, f64) {
    let lo: f64 = w.iter().map(|v| v.min(0.0)).sum();
    let hi: f64 = w.iter().map(|v| v.max(0.0)).sum();
    (-hi, -lo)
}

/// Scanned offsets with their feasibility; the zero side of offset b' is
/// w.x + b' <= 0.
pub fn zero_line_feasibility(net: &TwoLayerNet, unit: usize, data: &Dataset, eps: f64, th: &Thresholds) -> Vec<(f64, bool)> {
    let u = &net.units[unit];
    let probe = Probe::new(net, unit, data);
    let (a, b) = offset_range(&u.w);
    (0..101)
        .map(|i| {
            let off = a + (b - a) * i as f64 / 100.0;
            let e = probe.eps_masked(data, |x| u.w.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + off <= 0.0);
            (off, (e - eps).abs() < th.gamma1 * eps)
        })
        .collect()
}

/// Offset of the zero-error hyperplane: the feasible offset with the
/// largest zero side, or None.
pub fn zero_error_hyperplane(net: &TwoLayerNet, unit: usize, data: &Dataset, th: &Thresholds) -> Result<Option<f64>> {
    check_unit(net, unit, data)?;
    let eps = baseline_eps(net, data);
    if eps == 0.0 {
        return Err(Error::ExactFit);
    }
    Ok(zero_line_feasibility(net, unit, data, eps, th).into_iter().find(|(_, ok)| *ok).map(|(o, _)| o))
}

fn corners(n: usize) -> Vec<Vec<f64>> {
    (0..1usize << n).map(|m| (0..n).map(|i| ((m >> i) & 1) as f64).collect()).collect()
}

/// Tanh units nearly constant over the cube: at every corner the
/// activation is within gamma4 of its largest sampled value.
fn is_constant_term(net: &TwoLayerNet, unit: usize, data: &Dataset, th: &Thresholds) -> bool {
    let u = &net.units[unit];
    let m = data.inputs.iter().map(|x| u.activation(x)).fold(f64::MIN, f64::max);
    if m == 0.0 || !m.is_finite() {
        return false;
    }
    corners(data.dim()).iter().all(|c| ((u.activation(c) - m) / m).abs() < th.gamma4)
}

/// Indices of activated tanh units acting as constants.
pub fn constant_term_units(net: &TwoLayerNet, data: &Dataset, th: &Thresholds) -> Result<Vec<usize>> {
    let r = analyze(net, data, th)?;
    Ok(r.units.iter().filter(|u| u.verdict == Verdict::ConstantTerm).map(|u| u.index).collect())
}

fn classify_with(net: &TwoLayerNet, unit: usize, data: &Dataset, th: &Thresholds, eps: f64) -> UnitReport {
    let u = &net.units[unit];
    let probe = Probe::new(net, unit, data);
    let eps_without = probe.eps_masked(data, |_| true);
    let mut rep = UnitReport { index: unit, verdict: Verdict::Global, z: None, line: None, eps_truncated: None, eps_without };
    if (eps_without - eps).abs() < th.gamma3 * eps {
        rep.verdict = Verdict::Inactivated;
        return rep;
    }
    if u.kind.is_tanh() && is_constant_term(net, unit, data, th) {
        rep.verdict = Verdict::ConstantTerm;
        return rep;
    }
    if data.dim() == 1 {
        let positive = u.w[0] >= 0.0;
        let feas = zero_error_feasibility(net, unit, data, th, eps);
        let z = pick_zero_point(&feas, positive);
        rep.z = z;
        if let Some(z) = z {
            rep.eps_truncated =
                Some(if positive { probe.eps_masked(data, |x| x[0] <= z) } else { probe.eps_masked(data, |x| x[0] >= z) });
            let end = u.contribution(&[if positive { 0.0 } else { 1.0 }]).abs();
            if z > 0.0 && z < 1.0 && end < th.gamma2 * eps {
                rep.verdict = Verdict::Local;
            }
        }
    } else {
        let feas = zero_line_feasibility(net, unit, data, eps, th);
        let pos = feas.iter().position(|(_, ok)| *ok);
        if let Some(p) = pos {
            let b0 = feas[p].0;
            rep.line = Some(ZeroLine { w: u.w.clone(), b0 });
            let dot = |x: &[f64]| u.w.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
            rep.eps_truncated = Some(probe.eps_masked(data, |x| dot(x) + b0 <= 0.0));
            // samples near the extreme line through the corner minimizing w.x
            let norm = u.w.iter().map(|v| v * v).sum::<f64>().sqrt();
            let extreme = feas[feas.len() - 1].0;
            let boundary: f64 = data
                .inputs
                .iter()
                .filter(|x| norm > 0.0 && ((dot(x) + extreme) / norm).abs() <= th.scan_step)
                .map(|x| u.contribution(x).abs())
                .sum();
            let interior = p > 0 && p < feas.len() - 1;
            if interior && boundary < th.gamma2 * eps {
                rep.verdict = Verdict::Local;
            }
        }
    }
    rep
}

/// Verdict for one unit. Tests run in the order inactivation, constant
/// term (tanh only), then the zero-error scan with the endpoint check.
pub fn classify_unit(net: &TwoLayerNet, unit: usize, data: &Dataset, th: &Thresholds) -> Result<UnitReport> {
    check_unit(net, unit, data)?;
    th.validate()?;
    let (eps, _) = effective_eps(net, data);
    Ok(classify_with(net, unit, data, th, eps))
}

/// Baseline error, replaced by 1e-12 * |targets| when the fit is exact.
fn effective_eps(net: &TwoLayerNet, data: &Dataset) -> (f64, bool) {
    let eps = baseline_eps(net, data);
    if eps > 0.0 {
        return (eps, false);
    }
    let norm = data.targets.iter().map(|v| v * v).sum::<f64>().sqrt();
    ((1e-12 * norm).max(f64::MIN_POSITIVE), true)
}

pub fn solution_mode(reports: &[UnitReport]) -> SolutionMode {
    if reports.iter().any(|r| r.verdict == Verdict::Local) {
        SolutionMode::GlobalApproximation
    } else {
        SolutionMode::LocalApproximation
    }
}

/// Classifies every unit; results are in unit order regardless of threads.
pub fn analyze(net: &TwoLayerNet, data: &Dataset, th: &Thresholds) -> Result<AnalysisReport> {
    analyze_with(Exec::default(), net, data, th)
}

pub fn analyze_with(exec: Exec, net: &TwoLayerNet, data: &Dataset, th: &Thresholds) -> Result<AnalysisReport> {
    th.validate()?;
    if net.dim() != data.dim() {
        return Err(Error::DimensionMismatch { expected: net.dim(), found: data.dim() });
    }
    let (eps, floored) = effective_eps(net, data);
    let units = par::map_range(exec, net.len(), |i| classify_with(net, i, data, th, eps));
    Ok(AnalysisReport {
        eps: baseline_eps(net, data),
        mode: solution_mode(&units),
        units,
        note: floored.then(|| format!("exact fit; relative tests use eps floor {eps:.3e}")),
    })
}

/// Long-format plot data: `series,unit,x1,x2,value`.
///
/// 1-D: `activation` curves at step 0.01, `marker` rows at zero-error
/// points, plus `target` and `output` at the data points. 2-D: `line`
/// rows give the two cube-boundary endpoints of each zero-error line.
pub fn write_plot_csv<W: Write>(net: &TwoLayerNet, data: &Dataset, report: &AnalysisReport, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let err = |e: csv::Error| Error::Data(e.to_string());
    out.write_record(["series", "unit", "x1", "x2", "value"]).map_err(err)?;
    let f = |v: f64| format!("{v:?}");
    let n = data.dim();
    let x2 = |x: &[f64]| if n > 1 { f(x[1]) } else { String::new() };
    for (x, y) in data.inputs.iter().zip(&data.targets) {
        out.write_record(["target".into(), String::new(), f(x[0]), x2(x), f(*y)]).map_err(err)?;
        out.write_record(["output".into(), String::new(), f(x[0]), x2(x), f(net.eval(x))]).map_err(err)?;
    }
    if n == 1 {
        for (i, u) in net.units.iter().enumerate() {
            for k in 0..=100 {
                let x = k as f64 / 100.0;
                out.write_record(["activation".into(), i.to_string(), f(x), String::new(), f(u.activation(&[x]))])
                    .map_err(err)?;
            }
        }
        for r in &report.units {
            if let (Verdict::Local, Some(z)) = (r.verdict, r.z) {
                let v = net.units[r.index].activation(&[z]);
                out.write_record(["marker".into(), r.index.to_string(), f(z), String::new(), f(v)]).map_err(err)?;
            }
        }
    } else if n == 2 {
        for r in &report.units {
            if let (Verdict::Local, Some(l)) = (r.verdict, &r.line) {
                for p in segment_in_square(&l.w, l.b0) {
                    out.write_record(["line".into(), r.index.to_string(), f(p[0]), f(p[1]), String::new()]).map_err(err)?;
                }
            }
        }
    }
    out.flush().map_err(|e| Error::Data(e.to_string()))
}

/// Intersection of w.x + b = 0 with the unit square's boundary.
pub fn segment_in_square(w: &[f64], b: f64) -> Vec<[f64; 2]> {
    let mut pts: Vec<[f64; 2]> = Vec::new();
    let mut push = |p: [f64; 2]| {
        if (0.0..=1.0).contains(&p[0]) && (0.0..=1.0).contains(&p[1]) && !pts.iter().any(|q| (q[0] - p[0]).abs() + (q[1] - p[1]).abs() < 1e-12) {
            pts.push(p);
        }
    };
    if w[1] != 0.0 {
        for x in [0.0, 1.0] {
            push([x, -(b + w[0] * x) / w[1]]);
        }
    }
    if w[0] != 0.0 {
        for y in [0.0, 1.0] {
            push([-(b + w[1] * y) / w[0], y]);
        }
    }
    pts.truncate(2);
    pts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activation::ActivationKind;
    use crate::net::Unit;

    fn sharp_pair() -> (TwoLayerNet, Dataset) {
        // a steep unit switching on at 0.5 plus a smooth one; data carry a
        // small perturbation so the fit is not exact
        let net = TwoLayerNet::new(vec![
            Unit::new(vec![60.0], -30.0 - 6.0, 2.0, ActivationKind::Logistic),
            Unit::new(vec![1.0], 0.0, 1.0, ActivationKind::Logistic),
            Unit::new(vec![3.0], -1.0, 0.0, ActivationKind::Logistic),
        ]);
        let data = Dataset::from_grid(&|x| net.eval(x) + 1e-3 * (37.0 * x[0]).sin(), 1, 0.01).unwrap();
        (net, data)
    }

    #[test]
    fn zero_lambda_is_inactivated_and_fully_feasible() {
        let (net, data) = sharp_pair();
        let th = Thresholds::default();
        assert_eq!(zero_error_point(&net, 2, &data, &th).unwrap(), Some(1.0));
        assert_eq!(classify_unit(&net, 2, &data, &th).unwrap().verdict, Verdict::Inactivated);
    }

    #[test]
    fn planted_local_unit() {
        let (net, data) = sharp_pair();
        let r = classify_unit(&net, 0, &data, &Thresholds::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Local);
        let z = r.z.unwrap();
        // the unit reaches noticeable size a little after w x + b = 0 - 6/60
        assert!(z > 0.4 && z < 0.62, "z = {z}");
        assert_eq!(classify_unit(&net, 1, &data, &Thresholds::default()).unwrap().verdict, Verdict::Global);
    }

    #[test]
    fn feasible_set_is_prefix() {
        let (net, data) = sharp_pair();
        let th = Thresholds::default();
        let eps = baseline_eps(&net, &data);
        let f = zero_error_feasibility(&net, 0, &data, &th, eps);
        let last = f.iter().rposition(|(_, ok)| *ok).unwrap();
        assert!(f[..=last].iter().all(|(_, ok)| *ok));
    }

    #[test]
    fn exact_fit_is_reported() {
        let (net, _) = sharp_pair();
        let data = Dataset::from_grid(&|x| net.eval(x), 1, 0.01).unwrap();
        assert_eq!(zero_error_point(&net, 0, &data, &Thresholds::default()), Err(Error::ExactFit));
        let rep = analyze(&net, &data, &Thresholds::default()).unwrap();
        assert!(rep.note.is_some());
    }

    #[test]
    fn modes() {
        let g = UnitReport { index: 0, verdict: Verdict::Global, z: None, line: None, eps_truncated: None, eps_without: 1.0 };
        let mut all = vec![g.clone(); 10];
        assert_eq!(solution_mode(&all), SolutionMode::LocalApproximation);
        all[3].verdict = Verdict::Local;
        assert_eq!(solution_mode(&all), SolutionMode::GlobalApproximation);
    }

    #[test]
    fn constant_tanh_unit() {
        let net = TwoLayerNet::new(vec![
            Unit::new(vec![1e-6], 5.0, 1.0, ActivationKind::Tanh),
            Unit::new(vec![20.0], -10.0, 1.0, ActivationKind::Tanh),
        ]);
        let data = Dataset::from_grid(&|x| (3.0 * x[0]).sin() + 0.5, 1, 0.01).unwrap();
        let th = Thresholds::default();
        assert!(is_constant_term(&net, 0, &data, &th));
        assert!(!is_constant_term(&net, 1, &data, &th));
        assert_eq!(constant_term_units(&net, &data, &th).unwrap(), vec![0]);
    }

    #[test]
    fn planted_line() {
        let net = TwoLayerNet::new(vec![
            Unit::new(vec![60.0, 0.0], -36.0, 1.0, ActivationKind::Logistic),
            Unit::new(vec![0.5, 0.5], 0.0, 1.0, ActivationKind::Logistic),
        ]);
        let data = Dataset::from_grid(&|x| net.eval(x) + 1e-3 * (17.0 * x[0] + 5.0 * x[1]).sin(), 2, 0.05).unwrap();
        let r = classify_unit(&net, 0, &data, &Thresholds::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Local);
        let l = r.line.unwrap();
        let x = -l.b0 / l.w[0];
        assert!(x > 0.45 && x < 0.65, "line at x = {x}");
        assert!(l.axis_alignment() > 0.99);
    }

    #[test]
    fn report_json_shape() {
        let (net, data) = sharp_pair();
        let rep = analyze(&net, &data, &Thresholds::default()).unwrap();
        let v: serde_json::Value = serde_json::from_str(&rep.to_json()).unwrap();
        assert_eq!(v["mode"], "global");
        assert_eq!(v["units"][0]["verdict"], "local");
        assert!(v["units"][1]["line"].is_null());
        assert!(v["eps"].is_number());
    }

    #[test]
    fn segment_endpoints() {
        let s = segment_in_square(&[1.0, 0.0], -0.5);
        assert_eq!(s.len(), 2);
        assert!(s.iter().all(|p| (p[0] - 0.5).abs() < 1e-12));
    }
}
