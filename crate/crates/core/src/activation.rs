//! Smooth activations and derivative oracles.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{ensure_finite, Error, Result};
use crate::fd;

pub const DEFAULT_MAX_ORDER: usize = 6;

/// User-supplied activation. Derivatives always come from finite differences.
#[derive(Clone)]
pub struct CustomActivation {
    name: String,
    func: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    smoothness: usize,
}

impl CustomActivation {
    /// Validates smoothness and runs a monotonicity spot-check on (-inf, 0].
    pub fn new<F>(name: &str, smoothness: usize, f: F) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if smoothness < 1 {
            return Err(Error::InvalidArgument("custom activation needs smoothness >= 1".into()));
        }
        if name.is_empty() || name.contains(char::is_whitespace) {
            return Err(Error::InvalidArgument(format!("bad custom activation name {name:?}")));
        }
        // x = -t/(1-t) maps [0,1) onto (-inf, 0]
        let mut prev = f(0.0);
        for i in 1..400 {
            let t = i as f64 / 400.0;
            let x = -t / (1.0 - t);
            let v = f(x);
            if !v.is_finite() {
                return Err(Error::InvalidArgument(format!("custom activation not finite at {x}")));
            }
            if v > prev + 1e-12 * prev.abs().max(1.0) {
                return Err(Error::InvalidArgument(format!(
                    "custom activation {name} is not monotone increasing on (-inf,0] near x={x:.3}"
                )));
            }
            prev = v;
        }
        Ok(CustomActivation { name: name.into(), func: Arc::new(f), smoothness })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn smoothness(&self) -> usize {
        self.smoothness
    }
}

impl fmt::Debug for CustomActivation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Custom({}, C^{})", self.name, self.smoothness)
    }
}

#[derive(Clone, Debug, Default)]
pub enum ActivationKind {
    #[default]
    Logistic,
    Tanh,
    Custom(CustomActivation),
}

impl PartialEq for ActivationKind {
    fn eq(&self, other: &Self) -> bool {
        self.tag() == other.tag()
    }
}

#[inline]
fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl ActivationKind {
    pub fn tag(&self) -> String {
        match self {
            ActivationKind::Logistic => "logistic".into(),
            ActivationKind::Tanh => "tanh".into(),
            ActivationKind::Custom(c) => format!("custom:{}", c.name),
        }
    }

    pub fn from_tag(tag: &str) -> Result<Self> {
        match tag {
            "logistic" => Ok(ActivationKind::Logistic),
            "tanh" => Ok(ActivationKind::Tanh),
            t if t.starts_with("custom:") => Err(Error::InvalidArgument(format!(
                "custom activation {:?} has no registered function",
                &t[7..]
            ))),
            t => Err(Error::InvalidArgument(format!("unknown activation tag {t:?}"))),
        }
    }

    /// sigma(x) without input validation.
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            ActivationKind::Logistic => logistic(x),
            ActivationKind::Tanh => x.tanh(),
            ActivationKind::Custom(c) => (c.func)(x),
        }
    }

    /// (sigma(x), sigma'(x)); custom kinds use a central difference.
    #[inline]
    pub fn eval_with_slope(&self, x: f64) -> (f64, f64) {
        match self {
            ActivationKind::Logistic => {
                let s = logistic(x);
                (s, s * (1.0 - s))
            }
            ActivationKind::Tanh => {
                let t = x.tanh();
                (t, 1.0 - t * t)
            }
            ActivationKind::Custom(c) => {
                let h = 1e-6 * x.abs().max(1.0);
                ((c.func)(x), ((c.func)(x + h) - (c.func)(x - h)) / (2.0 * h))
            }
        }
    }

    pub fn try_eval(&self, x: f64) -> Result<f64> {
        ensure_finite(x, "activation input")?;
        Ok(self.eval(x))
    }

    /// Limit at -inf (the tanh-style constant; 0 for sigmoidal units).
    pub fn tail_constant(&self) -> f64 {
        match self {
            ActivationKind::Logistic => 0.0,
            ActivationKind::Tanh => -1.0,
            ActivationKind::Custom(c) => (c.func)(-1e3),
        }
    }

    /// Activation minus its tail constant, so the zero part tends to 0.
    #[inline]
    pub fn eval_shifted(&self, x: f64) -> f64 {
        match self {
            ActivationKind::Logistic => logistic(x),
            ActivationKind::Tanh => 2.0 * logistic(2.0 * x),
            ActivationKind::Custom(c) => (c.func)(x) - self.tail_constant(),
        }
    }

    /// Inverse of `eval_shifted` restricted to (-inf, 0].
    pub fn inverse_shifted(&self, level: f64) -> Result<f64> {
        let top = self.eval_shifted(0.0);
        if !(level > 0.0 && level <= top * (1.0 + 1e-12)) {
            return Err(Error::InvalidArgument(format!("level {level} outside (0, {top}]")));
        }
        Ok(match self {
            ActivationKind::Logistic => (level / (1.0 - level)).ln().min(0.0),
            ActivationKind::Tanh => 0.5 * (level / (2.0 - level)).ln().min(0.0),
            ActivationKind::Custom(_) => {
                let (mut lo, mut hi) = (-1e3, 0.0);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if self.eval_shifted(mid) < level {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            }
        })
    }

    pub fn is_tanh(&self) -> bool {
        matches!(self, ActivationKind::Tanh)
    }
}

impl Serialize for ActivationKind {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.tag())
    }
}

impl<'de> Deserialize<'de> for ActivationKind {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let tag = String::deserialize(d)?;
        ActivationKind::from_tag(&tag).map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DerivativeMode {
    Analytic,
    FiniteDifference,
}

/// Derivatives of an activation up to `max_order`.
///
/// Logistic derivatives are polynomials in s = sigma(x):
/// P_0 = s, P_{k+1} = P_k'(s) * s(1-s). Tanh reuses them through
/// tanh(x) = 2 sigma(2x) - 1.
#[derive(Clone, Debug)]
pub struct DerivativeOracle {
    kind: ActivationKind,
    max_order: usize,
    mode: DerivativeMode,
    fd_step: Option<f64>,
    polys: Vec<Vec<f64>>,
}

impl DerivativeOracle {
    pub fn new(kind: ActivationKind, max_order: usize) -> Self {
        let mode = match kind {
            ActivationKind::Custom(_) => DerivativeMode::FiniteDifference,
            _ => DerivativeMode::Analytic,
        };
        let mut polys = vec![vec![0.0, 1.0]];
        for k in 0..max_order {
            let p = &polys[k];
            // derivative of p in s
            let dp: Vec<f64> = (1..p.len()).map(|i| i as f64 * p[i]).collect();
            // multiply by s - s^2
            let mut q = vec![0.0; dp.len() + 2];
            for (i, c) in dp.iter().enumerate() {
                q[i + 1] += c;
                q[i + 2] -= c;
            }
            polys.push(q);
        }
        DerivativeOracle { kind, max_order, mode, fd_step: None, polys }
    }

    pub fn with_default(kind: ActivationKind) -> Self {
        Self::new(kind, DEFAULT_MAX_ORDER)
    }

    /// Forces finite differences, optionally with a fixed step.
    pub fn finite_difference(mut self, fd_step: Option<f64>) -> Self {
        self.mode = DerivativeMode::FiniteDifference;
        self.fd_step = fd_step;
        self
    }

    pub fn kind(&self) -> &ActivationKind {
        &self.kind
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn mode(&self) -> DerivativeMode {
        self.mode
    }

    fn logistic_deriv(&self, order: usize, x: f64) -> f64 {
        if order == 0 {
            return logistic(x);
        }
        // evaluate on the negative side where s is small, then reflect:
        // sigma^(k)(-x) = (-1)^(k+1) sigma^(k)(x)
        let s = logistic(-x.abs());
        let p = &self.polys[order];
        let v = p.iter().rev().fold(0.0, |acc, c| acc * s + c);
        if x > 0.0 && order.is_multiple_of(2) {
            -v
        } else {
            v
        }
    }

    /// Derivative without order or finiteness checks.
    pub fn derivative_unchecked(&self, order: usize, x: f64) -> f64 {
        match (self.mode, &self.kind) {
            (DerivativeMode::Analytic, ActivationKind::Logistic) => self.logistic_deriv(order, x),
            (DerivativeMode::Analytic, ActivationKind::Tanh) => {
                if order == 0 {
                    x.tanh()
                } else {
                    2f64.powi(order as i32 + 1) * self.logistic_deriv(order, 2.0 * x)
                }
            }
            _ => {
                if order == 0 {
                    return self.kind.eval(x);
                }
                let h = self.fd_step.unwrap_or_else(|| fd::default_step(order, fd::DEFAULT_ACCURACY, x));
                let k = &self.kind;
                fd::derivative(&|t| k.eval(t), x, order, h)
            }
        }
    }

    pub fn derivative(&self, order: usize, x: f64) -> Result<f64> {
        if order > self.max_order {
            return Err(Error::Capability { order, max: self.max_order });
        }
        if let ActivationKind::Custom(c) = &self.kind {
            if order > c.smoothness {
                return Err(Error::Capability { order, max: c.smoothness });
            }
        }
        ensure_finite(x, "derivative point")?;
        Ok(self.derivative_unchecked(order, x))
    }

    /// Mixed partial of sigma(w.x + b) for the exponent multi-index `alpha`:
    /// sigma^(|alpha|)(y) * prod w_j^alpha_j.
    pub fn composed_derivative(&self, alpha: &[u32], w: &[f64], b: f64, x: &[f64]) -> Result<f64> {
        if w.len() != x.len() {
            return Err(Error::DimensionMismatch { expected: w.len(), found: x.len() });
        }
        if alpha.len() != w.len() {
            return Err(Error::DimensionMismatch { expected: w.len(), found: alpha.len() });
        }
        let order: u32 = alpha.iter().sum();
        let y = w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + b;
        let d = self.derivative(order as usize, y)?;
        Ok(alpha.iter().zip(w).fold(d, |acc, (&a, &wj)| acc * wj.powi(a as i32)))
    }

    /// Point in [-3,3] maximizing |sigma^(order)|; order 0 searches [-3,0].
    pub fn argmax_abs(&self, order: usize) -> f64 {
        let hi: f64 = if order == 0 { 0.0 } else { 3.0 };
        let n = ((hi + 3.0) / 1e-3).round() as usize;
        let mut best = (-3.0, f64::MIN);
        for i in 0..=n {
            let y = -3.0 + i as f64 * 1e-3;
            let v = self.derivative_unchecked(order, y).abs();
            if v > best.1 + 1e-15 {
                best = (y, v);
            }
        }
        best.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_values() {
        assert_eq!(ActivationKind::Logistic.eval(0.0), 0.5);
        assert_eq!(ActivationKind::Tanh.eval(0.0), 0.0);
        assert!(ActivationKind::Logistic.eval(-50.0) < 1e-20);
        assert!(ActivationKind::Logistic.try_eval(f64::NAN).is_err());
        let o = DerivativeOracle::with_default(ActivationKind::Logistic);
        assert_eq!(o.derivative(1, 0.0).unwrap(), 0.25);
        assert_eq!(o.derivative(2, 0.0).unwrap(), 0.0);
        assert!(matches!(o.derivative(7, 0.0), Err(Error::Capability { .. })));
    }

    #[test]
    fn reflection_matches_direct() {
        let o = DerivativeOracle::with_default(ActivationKind::Logistic);
        for k in 1..=6 {
            for &x in &[0.3, 1.7, 4.0] {
                let s = logistic(x);
                let p = &o.polys[k];
                let direct = p.iter().rev().fold(0.0, |acc, c| acc * s + c);
                assert!((o.derivative(k, x).unwrap() - direct).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn composed() {
        let o = DerivativeOracle::with_default(ActivationKind::Logistic);
        assert_eq!(o.composed_derivative(&[1], &[2.0], 0.0, &[0.0]).unwrap(), 0.5);
        assert_eq!(o.composed_derivative(&[1, 1], &[1.0, 1.0], 0.0, &[0.0, 0.0]).unwrap(), 0.0);
        assert!(o.composed_derivative(&[1], &[1.0, 1.0], 0.0, &[0.0]).is_err());
    }

    #[test]
    fn tags_roundtrip() {
        for k in [ActivationKind::Logistic, ActivationKind::Tanh] {
            let s = serde_json::to_string(&k).unwrap();
            let back: ActivationKind = serde_json::from_str(&s).unwrap();
            assert_eq!(k, back);
        }
        let c = CustomActivation::new("soft", 3, |x: f64| 1.0 / (1.0 + (-x).exp())).unwrap();
        assert_eq!(ActivationKind::Custom(c).tag(), "custom:soft");
        assert!(CustomActivation::new("wave", 2, |x: f64| x.sin()).is_err());
    }

    #[test]
    fn inverse_levels() {
        for k in [ActivationKind::Logistic, ActivationKind::Tanh] {
            for &y in &[-4.0, -1.0, -0.1, 0.0] {
                let l = k.eval_shifted(y);
                assert!((k.inverse_shifted(l).unwrap() - y).abs() < 1e-9);
            }
        }
    }
}
