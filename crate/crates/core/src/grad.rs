//! Flat parameter vectors and exact first derivatives of a network with
//! respect to its parameters. Per unit the layout is `w_1..w_n, b, lambda`.

use crate::linalg::Mat;
use crate::net::TwoLayerNet;
use crate::par::{self, Exec};

pub fn param_count(net: &TwoLayerNet) -> usize {
    net.len() * (net.dim() + 2)
}

pub fn params(net: &TwoLayerNet) -> Vec<f64> {
    let mut v = Vec::with_capacity(param_count(net));
    for u in &net.units {
        v.extend_from_slice(&u.w);
        v.push(u.b);
        v.push(u.lambda);
    }
    v
}

pub fn set_params(net: &mut TwoLayerNet, p: &[f64]) {
    let stride = net.dim() + 2;
    assert_eq!(p.len(), net.len() * stride, "parameter vector length");
    for (u, c) in net.units.iter_mut().zip(p.chunks(stride)) {
        let n = c.len() - 2;
        u.w.copy_from_slice(&c[..n]);
        u.b = c[n];
        u.lambda = c[n + 1];
    }
}

pub fn with_params(net: &TwoLayerNet, p: &[f64]) -> TwoLayerNet {
    let mut out = net.clone();
    set_params(&mut out, p);
    out
}

/// Writes d g(x) / d params into `out` and returns g(x).
pub fn output_and_partials(net: &TwoLayerNet, x: &[f64], out: &mut [f64]) -> f64 {
    let stride = net.dim() + 2;
    let mut g = net.output_bias;
    for (u, o) in net.units.iter().zip(out.chunks_mut(stride)) {
        let (s, ds) = u.kind.eval_with_slope(u.pre_activation(x));
        g += u.lambda * s;
        let ld = u.lambda * ds;
        let n = stride - 2;
        for j in 0..n {
            o[j] = ld * x[j];
        }
        o[n] = ld;
        o[n + 1] = s;
    }
    g
}

/// Residuals g(x_i) - y_i and their Jacobian, one row per sample.
pub fn residual_jacobian(exec: Exec, net: &TwoLayerNet, xs: &[Vec<f64>], ys: &[f64]) -> (Vec<f64>, Mat) {
    let p = param_count(net);
    let rows = par::map_range(exec, xs.len(), |i| {
        let mut row = vec![0.0; p];
        let g = output_and_partials(net, &xs[i], &mut row);
        (g - ys[i], row)
    });
    let mut j = Mat::zeros(xs.len(), p);
    let mut r = Vec::with_capacity(xs.len());
    for (i, (ri, row)) in rows.into_iter().enumerate() {
        r.push(ri);
        for (c, v) in row.into_iter().enumerate() {
            j[(i, c)] = v;
        }
    }
    (r, j)
}

/// Sum of squared residuals and its gradient. Partial sums are reduced in
/// chunk order, so results are identical with and without threads.
pub fn sse_and_gradient(exec: Exec, net: &TwoLayerNet, xs: &[Vec<f64>], ys: &[f64]) -> (f64, Vec<f64>) {
    let p = param_count(net);
    let acc = par::chunked_sum(exec, xs.len(), 64, p + 1, |range| {
        let mut acc = vec![0.0; p + 1];
        let mut row = vec![0.0; p];
        for i in range {
            let r = output_and_partials(net, &xs[i], &mut row) - ys[i];
            acc[p] += r * r;
            for (a, d) in acc.iter_mut().zip(&row) {
                *a += 2.0 * r * d;
            }
        }
        acc
    });
    let sse = acc[p];
    let mut grad = acc;
    grad.truncate(p);
    (sse, grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activation::ActivationKind;
    use crate::net::Unit;

    fn net(kind: ActivationKind) -> TwoLayerNet {
        TwoLayerNet::new(vec![
            Unit::new(vec![0.7, -1.3], 0.2, 1.5, kind.clone()),
            Unit::new(vec![-2.1, 0.4], -0.6, -0.8, kind),
        ])
    }

    #[test]
    fn params_roundtrip() {
        let n = net(ActivationKind::Logistic);
        let p = params(&n);
        assert_eq!(p.len(), 8);
        assert_eq!(with_params(&n, &p), n);
    }

    #[test]
    fn partials_match_differences() {
        for kind in [ActivationKind::Logistic, ActivationKind::Tanh] {
            let n = net(kind);
            let x = [0.3, 0.8];
            let mut d = vec![0.0; param_count(&n)];
            output_and_partials(&n, &x, &mut d);
            let p = params(&n);
            for c in 0..p.len() {
                let h = 1e-6;
                let mut a = p.clone();
                let mut b = p.clone();
                a[c] += h;
                b[c] -= h;
                let fd = (with_params(&n, &a).eval(&x) - with_params(&n, &b).eval(&x)) / (2.0 * h);
                assert!((fd - d[c]).abs() < 1e-8, "param {c}: {fd} vs {}", d[c]);
            }
        }
    }

    #[test]
    fn gradient_is_exec_independent() {
        let n = net(ActivationKind::Logistic);
        let xs: Vec<Vec<f64>> = (0..300).map(|i| vec![i as f64 / 300.0, 1.0 - i as f64 / 600.0]).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x[0] * x[1]).collect();
        let a = sse_and_gradient(Exec::Sequential, &n, &xs, &ys);
        let b = sse_and_gradient(Exec::default(), &n, &xs, &ys);
        assert_eq!(a, b);
    }
}
