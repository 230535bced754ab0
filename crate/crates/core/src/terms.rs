use std::collections::HashMap;

use serde::Serialize;

/// Monomials of degree <= m in n variables, ordered by total degree and
/// then by preference for larger exponents on earlier variables.
#[derive(Clone, Debug, Serialize)]
pub struct TermOrder {
    pub n: usize,
    pub m: usize,
    pub terms: Vec<Vec<u32>>,
    #[serde(skip)]
    index: HashMap<Vec<u32>, usize>,
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

fn with_degree(n: usize, d: u32, out: &mut Vec<Vec<u32>>) {
    fn rec(prefix: &mut Vec<u32>, n: usize, left: u32, out: &mut Vec<Vec<u32>>) {
        if prefix.len() == n - 1 {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for e in (0..=left).rev() {
            prefix.push(e);
            rec(prefix, n, left - e, out);
            prefix.pop();
        }
    }
    rec(&mut Vec::with_capacity(n), n, d, out);
}

impl TermOrder {
    pub fn new(n: usize, m: usize) -> Self {
        assert!(n >= 1, "dimension must be positive");
        let mut terms = Vec::with_capacity(binomial(n + m, m));
        for d in 0..=m as u32 {
            with_degree(n, d, &mut terms);
        }
        let index = terms.iter().cloned().enumerate().map(|(i, t)| (t, i)).collect();
        TermOrder { n, m, terms, index }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn index_of(&self, alpha: &[u32]) -> Option<usize> {
        self.index.get(alpha).copied()
    }

    /// Strict "is smaller than" relation between two exponent vectors.
    pub fn precedes(a: &[u32], b: &[u32]) -> bool {
        let da: u32 = a.iter().sum();
        let db: u32 = b.iter().sum();
        if da != db {
            return da < db;
        }
        for (x, y) in a.iter().zip(b) {
            if x != y {
                return x > y;
            }
        }
        false
    }
}

pub fn multi_factorial(alpha: &[u32]) -> f64 {
    alpha.iter().map(|&a| (1..=a).map(f64::from).product::<f64>()).product()
}
