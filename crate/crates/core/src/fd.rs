//! Central finite differences with Fornberg weights.

/// Accuracy order of the default stencils.
pub const DEFAULT_ACCURACY: usize = 6;

/// Fornberg's algorithm: weights for the `order`-th derivative at 0 on `nodes`.
pub fn fornberg_weights(order: usize, nodes: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    assert!(n > order, "need more nodes than the derivative order");
    let mut c = vec![vec![0.0; order + 1]; n];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = nodes[0];
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i];
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.iter().map(|row| row[order]).collect()
}

/// Symmetric integer offsets and weights (unit spacing) for a central stencil.
pub fn central_stencil(order: usize, accuracy: usize) -> (Vec<f64>, Vec<f64>) {
    let r = (order + accuracy).div_ceil(2).max(1);
    let nodes: Vec<f64> = (-(r as i64)..=r as i64).map(|j| j as f64).collect();
    let w = fornberg_weights(order, &nodes);
    (nodes, w)
}

/// Step heuristic `eps^(1/(order+accuracy)) * max(1,|x|)`.
pub fn default_step(order: usize, accuracy: usize, x: f64) -> f64 {
    f64::EPSILON.powf(1.0 / (order + accuracy) as f64) * x.abs().max(1.0)
}

/// k-th derivative of `f` at `x` with step `h`.
pub fn derivative<F: Fn(f64) -> f64 + ?Sized>(f: &F, x: f64, order: usize, h: f64) -> f64 {
    if order == 0 {
        return f(x);
    }
    let (nodes, w) = central_stencil(order, DEFAULT_ACCURACY);
    let mut s = 0.0;
    for (t, c) in nodes.iter().zip(&w) {
        if *c != 0.0 {
            s += c * f(x + t * h);
        }
    }
    s / h.powi(order as i32)
}

/// k-th derivative with the default step.
pub fn derivative_auto<F: Fn(f64) -> f64 + ?Sized>(f: &F, x: f64, order: usize) -> f64 {
    derivative(f, x, order, default_step(order, DEFAULT_ACCURACY, x))
}

/// Mixed partial derivative by nested one-dimensional stencils.
pub fn partial<F: Fn(&[f64]) -> f64 + ?Sized>(f: &F, x: &[f64], alpha: &[u32]) -> f64 {
    fn rec<F: Fn(&[f64]) -> f64 + ?Sized>(f: &F, x: &mut Vec<f64>, alpha: &[u32], axis: usize) -> f64 {
        if axis == alpha.len() {
            return f(x);
        }
        let k = alpha[axis] as usize;
        if k == 0 {
            return rec(f, x, alpha, axis + 1);
        }
        let x0 = x[axis];
        let h = default_step(k, DEFAULT_ACCURACY, x0) * 2.0;
        let (nodes, w) = central_stencil(k, DEFAULT_ACCURACY);
        let mut s = 0.0;
        for (t, c) in nodes.iter().zip(&w) {
            if *c != 0.0 {
                x[axis] = x0 + t * h;
                s += c * rec(f, x, alpha, axis + 1);
            }
        }
        x[axis] = x0;
        s / h.powi(k as i32)
    }
    let mut xv = x.to_vec();
    rec(f, &mut xv, alpha, 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classic_weights() {
        let w = fornberg_weights(2, &[-1.0, 0.0, 1.0]);
        assert!((w[0] - 1.0).abs() < 1e-14 && (w[1] + 2.0).abs() < 1e-14 && (w[2] - 1.0).abs() < 1e-14);
        let w = fornberg_weights(1, &[-2.0, -1.0, 0.0, 1.0, 2.0]);
        let expect = [1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0];
        for (a, b) in w.iter().zip(expect) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn derivatives_of_exp() {
        for k in 0..=5 {
            let d = derivative_auto(&f64::exp, 0.3, k);
            assert!((d - 0.3f64.exp()).abs() < 1e-6, "order {k}: {d}");
        }
    }

    #[test]
    fn mixed_partial() {
        let f = |x: &[f64]| x[0].sin() * x[1].exp();
        let d = partial(&f, &[0.4, 0.2], &[1, 2]);
        assert!((d - 0.4f64.cos() * 0.2f64.exp()).abs() < 1e-7);
    }
}
