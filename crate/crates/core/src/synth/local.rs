use crate::activation::ActivationKind;
use crate::error::{Error, Result};
use crate::func::Field;
use crate::net::TwoLayerNet;
use crate::poly::PolyND;
use crate::terms::TermOrder;
use crate::wronskian::{realize_with_sweep, Realization, SweepOptions};

/// Degree-m Taylor polynomial of `f` at `x0`, from its partial derivatives.
pub fn taylor_polynomial(f: &dyn Field, x0: &[f64], m: usize) -> Result<PolyND> {
    let n = f.dim();
    if x0.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: x0.len() });
    }
    let order = TermOrder::new(n, m);
    let mut derivs = Vec::with_capacity(order.len());
    for alpha in &order.terms {
        let d = f.partial(alpha, x0);
        if !d.is_finite() {
            return Err(Error::Domain(format!("derivative {alpha:?} at {x0:?} is not finite")));
        }
        derivs.push(d);
    }
    Ok(PolyND::from_taylor(x0, &order, &derivs))
}

/// C(n+m, m) units whose output matches the degree-m Taylor polynomial of
/// `f` at `x0`.
pub fn local_approx(f: &dyn Field, x0: &[f64], m: usize, kind: &ActivationKind) -> Result<TwoLayerNet> {
    Ok(local_approx_with(f, x0, m, kind, &SweepOptions::default())?.net)
}

pub fn local_approx_with(
    f: &dyn Field,
    x0: &[f64],
    m: usize,
    kind: &ActivationKind,
    sweep: &SweepOptions,
) -> Result<Realization> {
    let p = taylor_polynomial(f, x0, m)?;
    realize_with_sweep(&p, x0, m, kind, sweep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::func::FieldFn;

    #[test]
    fn constant_needs_one_unit() {
        let f = FieldFn { n: 1, f: |_: &[f64]| 3.0 };
        let net = local_approx(&f, &[0.5], 0, &ActivationKind::Logistic).unwrap();
        assert_eq!(net.len(), 1);
        let u = &net.units[0];
        assert!((u.lambda - 3.0 / u.activation(&[0.5])).abs() < 1e-12);
        assert!((net.eval(&[0.5]) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn exponential_near_center() {
        let f = FieldFn { n: 1, f: |x: &[f64]| (2.0 * x[0]).exp() };
        let net = local_approx(&f, &[0.5], 3, &ActivationKind::Logistic).unwrap();
        assert_eq!(net.len(), 4);
        for i in 0..=40 {
            let x = 0.48 + 0.001 * i as f64;
            assert!((net.eval(&[x]) - (2.0 * x).exp()).abs() < 1e-3);
        }
    }

    #[test]
    fn bivariate_taylor_match() {
        let f = FieldFn { n: 2, f: |x: &[f64]| x[0] * x[0] * x[1] };
        let x0 = [0.4, 0.6];
        let r = local_approx_with(&f, &x0, 3, &ActivationKind::Logistic, &SweepOptions::default()).unwrap();
        assert_eq!(r.net.len(), 10);
        assert!(r.diagnostics.residual < 1e-8, "{:?}", r.diagnostics);
    }
}
