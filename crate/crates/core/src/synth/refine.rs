//! Levenberg-Marquardt polish of all network parameters against samples
//! of a target, keeping the unit count fixed.

use serde::Serialize;

use crate::grad;
use crate::linalg::{Mat, Vector};
use crate::net::TwoLayerNet;
use crate::par::Exec;

#[derive(Clone, Debug)]
pub struct RefineOptions {
    pub max_iter: usize,
    /// Stop once the rms residual drops below this.
    pub target_rms: f64,
    pub exec: Exec,
}

impl Default for RefineOptions {
    fn default() -> Self {
        RefineOptions { max_iter: 4000, target_rms: 0.0, exec: Exec::default() }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RefineSummary {
    pub iterations: usize,
    pub rms_before: f64,
    pub rms_after: f64,
}

fn rms(net: &TwoLayerNet, xs: &[Vec<f64>], ys: &[f64]) -> f64 {
    let s: f64 = xs.iter().zip(ys).map(|(x, y)| (net.eval(x) - y).powi(2)).sum();
    (s / xs.len().max(1) as f64).sqrt()
}

/// Damped Gauss-Newton with Marquardt scaling. Never returns a network
/// worse than the input.
pub fn refine(net: &TwoLayerNet, xs: &[Vec<f64>], ys: &[f64], opts: &RefineOptions) -> (TwoLayerNet, RefineSummary) {
    let mut cur = net.clone();
    let mut p = grad::params(&cur);
    let before = rms(&cur, xs, ys);
    let mut err = before;
    let mut mu = 1e-3;
    let mut iterations = 0;
    while iterations < opts.max_iter && err > opts.target_rms {
        let (r, j) = grad::residual_jacobian(opts.exec, &cur, xs, ys);
        let jt = j.transpose();
        let a: Mat = &jt * &j;
        let g: Vector = &jt * Vector::from_vec(r);
        let mut accepted = false;
        while mu < 1e14 {
            let mut damped = a.clone();
            for d in 0..p.len() {
                damped[(d, d)] += mu * (a[(d, d)] + 1e-9);
            }
            if let Some(step) = damped.lu().solve(&(-&g)) {
                let q: Vec<f64> = p.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
                let cand = grad::with_params(&cur, &q);
                let e = rms(&cand, xs, ys);
                if e.is_finite() && e < err {
                    err = e;
                    p = q;
                    cur = cand;
                    mu = (mu * 0.2).max(1e-14);
                    accepted = true;
                    break;
                }
            }
            mu *= 10.0;
        }
        iterations += 1;
        if !accepted {
            break;
        }
    }
    (cur, RefineSummary { iterations, rms_before: before, rms_after: err })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activation::ActivationKind;
    use crate::net::Unit;

    #[test]
    fn recovers_planted_net() {
        let truth = TwoLayerNet::new(vec![
            Unit::new(vec![4.0], -2.0, 1.5, ActivationKind::Logistic),
            Unit::new(vec![-3.0], 1.0, -0.7, ActivationKind::Logistic),
        ]);
        let xs: Vec<Vec<f64>> = (0..101).map(|i| vec![i as f64 / 100.0]).collect();
        let ys: Vec<f64> = xs.iter().map(|x| truth.eval(x)).collect();
        let mut start = truth.clone();
        start.units[0].b = -1.7;
        start.units[1].lambda = -0.5;
        let (fit, s) = refine(&start, &xs, &ys, &RefineOptions::default());
        assert!(s.rms_after < 1e-8, "{s:?}");
        assert!(s.rms_after <= s.rms_before);
        assert!((fit.units[0].b + 2.0).abs() < 1e-5);
    }

    #[test]
    fn zero_iterations_is_identity() {
        let n = TwoLayerNet::new(vec![Unit::new(vec![1.0], 0.0, 1.0, ActivationKind::Tanh)]);
        let xs = vec![vec![0.5]];
        let (fit, s) = refine(&n, &xs, &[0.0], &RefineOptions { max_iter: 0, ..Default::default() });
        assert_eq!(fit, n);
        assert_eq!(s.iterations, 0);
    }
}
