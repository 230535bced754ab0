//! Composite Gauss-Legendre quadrature.

const GL5_X: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683_1,
    0.0,
    0.538_469_310_105_683_1,
    0.906_179_845_938_664,
];
const GL5_W: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

/// Nodes and weights of a composite 5-point rule with `panels` panels on [a,b].
pub fn nodes(a: f64, b: f64, panels: usize) -> Vec<(f64, f64)> {
    let h = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(panels * 5);
    for p in 0..panels {
        let c = a + (p as f64 + 0.5) * h;
        for (x, w) in GL5_X.iter().zip(GL5_W) {
            out.push((c + 0.5 * h * x, 0.5 * h * w));
        }
    }
    out
}

pub fn integrate<F: Fn(f64) -> f64 + ?Sized>(f: &F, a: f64, b: f64, panels: usize) -> f64 {
    if b <= a {
        return 0.0;
    }
    nodes(a, b, panels).into_iter().map(|(x, w)| w * f(x)).sum()
}

/// L2 norm of `f` on [a,b].
pub fn l2<F: Fn(f64) -> f64 + ?Sized>(f: &F, a: f64, b: f64) -> f64 {
    integrate(&|x| f(x).powi(2), a, b, 200).max(0.0).sqrt()
}

/// L2 norm on the unit square via a tensor rule.
pub fn l2_square<F: Fn(&[f64]) -> f64 + ?Sized>(f: &F, panels: usize) -> f64 {
    let nd = nodes(0.0, 1.0, panels);
    let mut s = 0.0;
    for &(x, wx) in &nd {
        for &(y, wy) in &nd {
            s += wx * wy * f(&[x, y]).powi(2);
        }
    }
    s.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_exact() {
        let v = integrate(&|x: f64| x.powi(9), 0.0, 1.0, 1);
        assert!((v - 0.1).abs() < 1e-14);
        assert!((l2(&|_| 1.0, 0.0, 0.25) - 0.5).abs() < 1e-14);
        assert!((l2_square(&|p: &[f64]| p[0] + p[1], 4) - (7.0f64 / 6.0).sqrt()).abs() < 1e-12);
    }
}
