//! Function traits used by the constructions. Derivatives default to
//! finite differences; exact implementors override them.

use crate::fd;

pub trait Function1D: Sync {
    fn value(&self, x: f64) -> f64;

    fn derivative(&self, k: usize, x: f64) -> f64 {
        fd::derivative_auto(&|t| self.value(t), x, k)
    }
}

pub trait Field: Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    fn partial(&self, alpha: &[u32], x: &[f64]) -> f64 {
        fd::partial(&|p: &[f64]| self.value(p), x, alpha)
    }
}

/// Closure adapter for one variable.
pub struct Fn1<F>(pub F);

impl<F: Fn(f64) -> f64 + Sync> Function1D for Fn1<F> {
    fn value(&self, x: f64) -> f64 {
        (self.0)(x)
    }
}

/// Closure adapter for n variables.
pub struct FieldFn<F> {
    pub n: usize,
    pub f: F,
}

impl<F: Fn(&[f64]) -> f64 + Sync> Field for FieldFn<F> {
    fn dim(&self) -> usize {
        self.n
    }

    fn value(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}

/// Restriction of a field to the line `origin + t * dir`.
pub struct OnLine<'a> {
    pub field: &'a dyn Field,
    pub origin: Vec<f64>,
    pub dir: Vec<f64>,
}

impl OnLine<'_> {
    fn point(&self, t: f64) -> Vec<f64> {
        self.origin.iter().zip(&self.dir).map(|(o, d)| o + t * d).collect()
    }
}

impl Function1D for OnLine<'_> {
    fn value(&self, t: f64) -> f64 {
        self.field.value(&self.point(t))
    }

    fn derivative(&self, k: usize, t: f64) -> f64 {
        // axis-aligned lines can use the field's own partials
        let nz: Vec<usize> = (0..self.dir.len()).filter(|&i| self.dir[i] != 0.0).collect();
        if nz.len() == 1 {
            let i = nz[0];
            let mut alpha = vec![0u32; self.dir.len()];
            alpha[i] = k as u32;
            return self.field.partial(&alpha, &self.point(t)) * self.dir[i].powi(k as i32);
        }
        fd::derivative_auto(&|s| self.value(s), t, k)
    }
}

/// A one-variable function viewed as a field on the line.
pub struct AsField<'a>(pub &'a dyn Function1D);

impl Field for AsField<'_> {
    fn dim(&self) -> usize {
        1
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.0.value(x[0])
    }

    fn partial(&self, alpha: &[u32], x: &[f64]) -> f64 {
        self.0.derivative(alpha[0] as usize, x[0])
    }
}
