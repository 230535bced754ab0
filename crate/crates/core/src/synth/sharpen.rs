//! Weight scaling with bias correction that squeezes a unit's zero part.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::net::Unit;
use crate::quad;

#[derive(Clone, Debug, Serialize)]
pub struct SharpenResult {
    pub unit: Unit,
    pub rho: f64,
    /// Total bias shift gamma' + gamma''.
    pub gamma: f64,
    pub gamma_pin: f64,
    pub gamma_shift: f64,
    /// Auxiliary knot whose pinned value becomes the new level at the knot.
    pub aux_knot: f64,
    /// Tail-relative activation at the knot after sharpening.
    pub level: f64,
    pub c_k: f64,
    pub zero_part_l2: f64,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct OneUnitError {
    /// Norm of lambda * phi on the zero side of the knot.
    pub zero_side: f64,
    /// Distance to d (x - x_k)^m on the activation interval.
    pub active_side: f64,
    pub total: f64,
}

impl SharpenResult {
    /// Error of the single unit with lambda = d / c_k against d (x - x_k)_+^m
    /// on [0, next] (mirrored for w < 0), split at the knot.
    pub fn one_unit_error(&self, x_k: f64, next: f64, d: f64, m: usize) -> OneUnitError {
        let lam = d / self.c_k;
        let kind = &self.unit.kind;
        let f = |x: f64| lam * kind.eval_shifted(self.unit.pre_activation(&[x])) - d * (x - x_k).abs().powi(m as i32);
        let g = |x: f64| lam * kind.eval_shifted(self.unit.pre_activation(&[x]));
        let (zero_side, active_side) = if self.unit.w[0] > 0.0 {
            (quad::l2(&g, 0.0, x_k), quad::l2(&f, x_k, next))
        } else {
            (quad::l2(&g, x_k, 1.0), quad::l2(&f, next, x_k))
        };
        OneUnitError { zero_side, active_side, total: zero_side.hypot(active_side) }
    }
}

/// Sharpens a one-dimensional unit at knot `x_k`.
///
/// Step one scales by rho and pins the value at the knot
/// (gamma' = (w x_k + b)(1 - rho)); step two shifts by gamma'' so the value
/// at the knot drops to epsilon/rho, where epsilon is the current level.
/// `next` is the far end of the activation interval, used to measure c_k.
pub fn sharpen(unit: &Unit, x_k: f64, rho: f64, eps_level: f64, next: f64, m: usize) -> Result<SharpenResult> {
    if unit.w.len() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, found: unit.w.len() });
    }
    if !(rho >= 1.0 && rho.is_finite()) {
        return Err(Error::InvalidArgument(format!("rho {rho} must be >= 1")));
    }
    let w = unit.w[0];
    let kind = &unit.kind;
    let y_k = w * x_k + unit.b;
    let top = kind.eval_shifted(0.0);
    let positive = w > 0.0;
    let interior = x_k > 0.0 && x_k < 1.0;
    let toward = if positive { next > x_k } else { next < x_k };
    if w == 0.0 || !interior || y_k > 1e-12 || !toward {
        return Err(Error::InvalidArgument(format!("knot {x_k} not admissible for unit (w={w}, b={})", unit.b)));
    }
    let eps = kind.eval_shifted(y_k);
    if eps > eps_level * (1.0 + 1e-9) || eps_level > top * (1.0 + 1e-12) {
        return Err(Error::InvalidArgument(format!(
            "level {eps:.3e} at knot must not exceed eps_level {eps_level:.3e} <= {top}"
        )));
    }
    let gamma_pin = y_k * (1.0 - rho);
    let level = eps / rho;
    let y_new = kind.inverse_shifted(level)?.min(y_k);
    let gamma_shift = y_new - y_k;
    let sharpened = Unit::new(vec![rho * w], rho * unit.b + gamma_pin + gamma_shift, unit.lambda, kind.clone());
    let aux_knot = x_k + gamma_shift / (rho * w);

    let psi = |x: f64| kind.eval_shifted(sharpened.pre_activation(&[x]));
    let (lo, hi) = if positive { (x_k, next) } else { (next, x_k) };
    let (mut num, mut den) = (0.0, 0.0);
    for (x, wq) in quad::nodes(lo, hi, 100) {
        let t = (x - x_k).abs().powi(m as i32);
        num += wq * psi(x) * t;
        den += wq * t * t;
    }
    let c_k = num / den;
    let zero_part_l2 = if positive { quad::l2(&psi, 0.0, x_k) } else { quad::l2(&psi, x_k, 1.0) };
    Ok(SharpenResult {
        unit: sharpened,
        rho,
        gamma: gamma_pin + gamma_shift,
        gamma_pin,
        gamma_shift,
        aux_knot,
        level,
        c_k,
        zero_part_l2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activation::ActivationKind;

    fn demo() -> Unit {
        Unit::new(vec![6.0], -3.6, 1.0, ActivationKind::Logistic)
    }

    #[test]
    fn rho_one_is_identity() {
        let u = demo();
        let r = sharpen(&u, 0.4, 1.0, 0.25, 0.6, 3).unwrap();
        assert_eq!(r.gamma_pin, 0.0);
        assert!(r.gamma_shift.abs() < 1e-12);
        assert!((r.unit.b - u.b).abs() < 1e-12 && r.unit.w == u.w);
    }

    #[test]
    fn level_is_pinned() {
        let u = demo();
        for rho in [2.0, 4.0, 8.0] {
            let r = sharpen(&u, 0.4, rho, 0.25, 0.6, 3).unwrap();
            let v = ActivationKind::Logistic.eval(r.unit.pre_activation(&[0.4]));
            assert!((v - r.level).abs() < 1e-9);
            // step one alone keeps the value at the knot
            let pinned = ActivationKind::Logistic.eval(rho * (6.0 * 0.4 - 3.6) + r.gamma_pin);
            assert!((pinned - u.activation(&[0.4])).abs() < 1e-12);
            assert!(r.gamma_shift < 0.0 && r.aux_knot < 0.4);
        }
    }

    #[test]
    fn rejects_bad_input() {
        let u = demo();
        assert!(sharpen(&u, 0.4, 0.5, 0.25, 0.6, 3).is_err());
        assert!(sharpen(&u, 0.7, 2.0, 0.25, 0.9, 3).is_err());
        assert!(sharpen(&u, 0.4, 2.0, 0.1, 0.6, 3).is_err());
    }

    #[test]
    fn sweep_is_monotone() {
        let u = demo();
        let rs: Vec<_> = [2.0, 4.0, 8.0, 16.0, 32.0].iter().map(|&r| sharpen(&u, 0.4, r, 0.25, 0.6, 3).unwrap()).collect();
        for p in rs.windows(2) {
            assert!(p[1].zero_part_l2 < p[0].zero_part_l2);
            assert!(p[1].c_k > p[0].c_k);
            let (a, b) = (p[0].one_unit_error(0.4, 0.6, 1.0, 3), p[1].one_unit_error(0.4, 0.6, 1.0, 3));
            assert!(b.zero_side < a.zero_side);
        }
    }

    #[test]
    fn negative_weight_mirrors() {
        let u = Unit::new(vec![-6.0], 2.4, 1.0, ActivationKind::Logistic);
        let r = sharpen(&u, 0.6, 4.0, 0.25, 0.4, 2).unwrap();
        assert!(r.unit.w[0] < 0.0);
        assert!(r.zero_part_l2 < 0.05);
        assert!(r.c_k > 0.0);
    }
}
