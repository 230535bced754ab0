//! Dense univariate and multivariate polynomials.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::func::{Field, Function1D};
use crate::terms::{binomial, multi_factorial, TermOrder};

/// Polynomial in x with ascending coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(transparent)]
pub struct Poly1D {
    pub coeffs: Vec<f64>,
}

fn falling(e: u32, k: u32) -> f64 {
    (0..k).map(|i| f64::from(e - i)).product()
}

impl Poly1D {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Poly1D { coeffs }
    }

    pub fn zero() -> Self {
        Poly1D { coeffs: vec![0.0] }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn coeff(&self, i: usize) -> f64 {
        self.coeffs.get(i).copied().unwrap_or(0.0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    pub fn derivative_poly(&self) -> Poly1D {
        if self.coeffs.len() <= 1 {
            return Poly1D::zero();
        }
        Poly1D::new((1..self.coeffs.len()).map(|i| i as f64 * self.coeffs[i]).collect())
    }

    /// k-th derivative evaluated at x.
    pub fn deriv_at(&self, k: usize, x: f64) -> f64 {
        let mut s = 0.0;
        for i in (k..self.coeffs.len()).rev() {
            s = s * x + self.coeffs[i] * falling(i as u32, k as u32);
        }
        s
    }

    /// Coefficients of the same polynomial in powers of (x - x0).
    pub fn shifted_coeffs(&self, x0: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.coeffs.len()];
        let mut fact = 1.0;
        for (k, o) in out.iter_mut().enumerate() {
            if k > 0 {
                fact *= k as f64;
            }
            *o = self.deriv_at(k, x0) / fact;
        }
        out
    }

    /// Builds sum c_k (x - x0)^k.
    pub fn from_shifted(x0: f64, c: &[f64]) -> Poly1D {
        let mut out = vec![0.0; c.len().max(1)];
        for (k, &ck) in c.iter().enumerate() {
            for j in 0..=k {
                out[j] += ck * binomial(k, j) as f64 * (-x0).powi((k - j) as i32);
            }
        }
        Poly1D::new(out)
    }

    /// Taylor polynomial from derivative values f^(k)(x0).
    pub fn from_taylor(x0: f64, derivs: &[f64]) -> Poly1D {
        let mut fact = 1.0;
        let c: Vec<f64> = derivs
            .iter()
            .enumerate()
            .map(|(k, d)| {
                if k > 0 {
                    fact *= k as f64;
                }
                d / fact
            })
            .collect();
        Poly1D::from_shifted(x0, &c)
    }

    /// (x - x0)^m expanded.
    pub fn power_of_shift(x0: f64, m: usize) -> Poly1D {
        let mut c = vec![0.0; m + 1];
        c[m] = 1.0;
        Poly1D::from_shifted(x0, &c)
    }

    pub fn add(&self, other: &Poly1D) -> Poly1D {
        let n = self.coeffs.len().max(other.coeffs.len());
        Poly1D::new((0..n).map(|i| self.coeff(i) + other.coeff(i)).collect())
    }

    pub fn sub(&self, other: &Poly1D) -> Poly1D {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> Poly1D {
        Poly1D::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    pub fn mul(&self, other: &Poly1D) -> Poly1D {
        let mut out = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly1D::new(out)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |a, c| a.max(c.abs()))
    }
}

impl Function1D for Poly1D {
    fn value(&self, x: f64) -> f64 {
        self.eval(x)
    }

    fn derivative(&self, k: usize, x: f64) -> f64 {
        self.deriv_at(k, x)
    }
}

/// Sparse multivariate polynomial keyed by exponent vectors.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct PolyND {
    pub n: usize,
    pub coeffs: BTreeMap<Vec<u32>, f64>,
}

#[derive(Serialize, Deserialize)]
struct TermRepr {
    exp: Vec<u32>,
    c: f64,
}

#[derive(Serialize, Deserialize)]
struct PolyNDRepr {
    n: usize,
    terms: Vec<TermRepr>,
}

impl Serialize for PolyND {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let terms = self.coeffs.iter().map(|(e, c)| TermRepr { exp: e.clone(), c: *c }).collect();
        PolyNDRepr { n: self.n, terms }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for PolyND {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let r = PolyNDRepr::deserialize(d)?;
        let mut p = PolyND::zero(r.n);
        for t in r.terms {
            if t.exp.len() != r.n {
                return Err(serde::de::Error::custom("exponent length differs from n"));
            }
            p.add_term(&t.exp, t.c);
        }
        Ok(p)
    }
}

impl PolyND {
    pub fn zero(n: usize) -> Self {
        PolyND { n, coeffs: BTreeMap::new() }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        let mut p = PolyND::zero(n);
        p.add_term(&vec![0; n], c);
        p
    }

    pub fn add_term(&mut self, exp: &[u32], c: f64) {
        *self.coeffs.entry(exp.to_vec()).or_insert(0.0) += c;
    }

    pub fn coeff(&self, exp: &[u32]) -> f64 {
        self.coeffs.get(exp).copied().unwrap_or(0.0)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.keys().map(|e| e.iter().sum::<u32>() as usize).max().unwrap_or(0)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.coeffs
            .iter()
            .map(|(e, c)| c * e.iter().zip(x).map(|(&k, &xi)| xi.powi(k as i32)).product::<f64>())
            .sum()
    }

    pub fn partial_at(&self, alpha: &[u32], x: &[f64]) -> f64 {
        let mut s = 0.0;
        for (e, c) in &self.coeffs {
            if e.iter().zip(alpha).any(|(ei, ai)| ei < ai) {
                continue;
            }
            let mut t = *c;
            for ((&ei, &ai), &xi) in e.iter().zip(alpha).zip(x) {
                t *= falling(ei, ai) * xi.powi((ei - ai) as i32);
            }
            s += t;
        }
        s
    }

    pub fn add(&self, other: &PolyND) -> PolyND {
        let mut out = self.clone();
        for (e, c) in &other.coeffs {
            out.add_term(e, *c);
        }
        out
    }

    pub fn sub(&self, other: &PolyND) -> PolyND {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> PolyND {
        PolyND { n: self.n, coeffs: self.coeffs.iter().map(|(e, c)| (e.clone(), c * s)).collect() }
    }

    pub fn mul(&self, other: &PolyND) -> PolyND {
        let mut out = PolyND::zero(self.n);
        for (e1, c1) in &self.coeffs {
            for (e2, c2) in &other.coeffs {
                let e: Vec<u32> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                out.add_term(&e, c1 * c2);
            }
        }
        out
    }

    /// (w.x + b)^m expanded.
    pub fn affine_power(w: &[f64], b: f64, m: usize) -> PolyND {
        let n = w.len();
        let mut lin = PolyND::constant(n, b);
        for (i, &wi) in w.iter().enumerate() {
            let mut e = vec![0; n];
            e[i] = 1;
            lin.add_term(&e, wi);
        }
        let mut out = PolyND::constant(n, 1.0);
        for _ in 0..m {
            out = out.mul(&lin);
        }
        out
    }

    /// Taylor polynomial from partial derivatives listed in `order`.
    pub fn from_taylor(x0: &[f64], order: &TermOrder, derivs: &[f64]) -> PolyND {
        let n = x0.len();
        let mut out = PolyND::zero(n);
        for (alpha, d) in order.terms.iter().zip(derivs) {
            let mut term = PolyND::constant(n, d / multi_factorial(alpha));
            for (i, &a) in alpha.iter().enumerate() {
                let mut e = vec![0; n];
                e[i] = 1;
                let mut lin = PolyND::constant(n, -x0[i]);
                lin.add_term(&e, 1.0);
                for _ in 0..a {
                    term = term.mul(&lin);
                }
            }
            out = out.add(&term);
        }
        out.prune(0.0)
    }

    /// Restriction to t -> p(x0 + t d) as a univariate polynomial.
    pub fn restrict_to_line(&self, x0: &[f64], d: &[f64]) -> Poly1D {
        let mut out = Poly1D::zero();
        for (e, c) in &self.coeffs {
            let mut t = Poly1D::new(vec![*c]);
            for ((&k, &o), &di) in e.iter().zip(x0).zip(d) {
                let lin = Poly1D::new(vec![o, di]);
                for _ in 0..k {
                    t = t.mul(&lin);
                }
            }
            out = out.add(&t);
        }
        out
    }

    /// Drops coefficients with magnitude <= tol.
    pub fn prune(mut self, tol: f64) -> PolyND {
        self.coeffs.retain(|_, c| c.abs() > tol);
        self
    }

    /// Largest |coefficient| over terms with two or more variables present.
    pub fn max_cross_term(&self) -> f64 {
        self.coeffs
            .iter()
            .filter(|(e, _)| e.iter().filter(|&&k| k > 0).count() >= 2)
            .fold(0.0, |a, (_, c)| a.max(c.abs()))
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.values().fold(0.0, |a, c| a.max(c.abs()))
    }
}

impl Field for PolyND {
    fn dim(&self) -> usize {
        self.n
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.eval(x)
    }

    fn partial(&self, alpha: &[u32], x: &[f64]) -> f64 {
        self.partial_at(alpha, x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shift_roundtrip() {
        let p = Poly1D::new(vec![1.0, -2.0, 0.5, 3.0]);
        let c = p.shifted_coeffs(0.4);
        let q = Poly1D::from_shifted(0.4, &c);
        for (a, b) in p.coeffs.iter().zip(&q.coeffs) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn nd_taylor_of_poly_is_identity() {
        let mut p = PolyND::zero(2);
        p.add_term(&[2, 1], 1.5);
        p.add_term(&[0, 1], -2.0);
        p.add_term(&[0, 0], 0.25);
        let order = TermOrder::new(2, 3);
        let x0 = [0.3, 0.6];
        let d: Vec<f64> = order.terms.iter().map(|a| p.partial_at(a, &x0)).collect();
        let q = PolyND::from_taylor(&x0, &order, &d);
        for pt in [[0.1, 0.9], [0.7, 0.2]] {
            assert!((p.eval(&pt) - q.eval(&pt)).abs() < 1e-12);
        }
    }

    #[test]
    fn line_restriction() {
        let p = PolyND::affine_power(&[1.0, 1.0], -1.0, 2);
        let l = p.restrict_to_line(&[0.5, 0.5], &[1.0, 0.0]);
        assert!((l.coeff(2) - 1.0).abs() < 1e-14 && l.coeff(1).abs() < 1e-14 && l.coeff(0).abs() < 1e-14);
    }
}
