//! Constant-term compensation for tanh-style units.

use crate::error::{Error, Result};
use crate::net::{TwoLayerNet, Unit};

/// Bias of the appended near-constant unit.
pub const CONSTANT_UNIT_BIAS: f64 = 5.0;
/// Weight magnitude of the appended near-constant unit.
pub const CONSTANT_UNIT_WEIGHT: f64 = 1e-6;
const BETA_FLOOR: f64 = 1e-8;

/// Appends a near-constant unit cancelling the tail constant carried by
/// the units in `local`, whose output weights were solved for the
/// tail-shifted activations.
pub fn tanh_constant_compensation(net: &TwoLayerNet, local: &[usize]) -> Result<TwoLayerNet> {
    let Some(first) = net.units.first() else {
        return Err(Error::InvalidArgument("empty network".into()));
    };
    let kind = first.kind.clone();
    if net.units.iter().any(|u| u.kind != kind) {
        return Err(Error::InvalidArgument("mixed activation kinds".into()));
    }
    let c = kind.tail_constant();
    let extra = -c * local.iter().map(|&i| net.units[i].lambda).sum::<f64>();
    let n = net.dim();
    let unit = Unit::new(vec![CONSTANT_UNIT_WEIGHT; n], CONSTANT_UNIT_BIAS, 0.0, kind.clone());
    let beta = unit.activation(&vec![0.5; n]);
    if beta.abs() < BETA_FLOOR {
        return Err(Error::Singular(format!("constant unit value {beta:.3e} below floor")));
    }
    let mut out = net.clone();
    out.units.push(Unit { lambda: extra / beta, ..unit });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activation::ActivationKind;

    #[test]
    fn zero_locals_give_zero_weight() {
        let u = Unit::new(vec![1.0], 0.0, 0.0, ActivationKind::Tanh);
        let net = TwoLayerNet::new(vec![u.clone(), u]);
        let out = tanh_constant_compensation(&net, &[1]).unwrap();
        assert_eq!(out.len(), 3);
        assert_eq!(out.units[2].lambda, 0.0);
        assert_eq!(ActivationKind::Tanh.tail_constant(), -1.0);
    }

    #[test]
    fn restores_shifted_output() {
        let g = Unit::new(vec![0.3], 0.1, 1.5, ActivationKind::Tanh);
        let l = Unit::new(vec![8.0], -4.0, -0.7, ActivationKind::Tanh);
        let net = TwoLayerNet::new(vec![g.clone(), l.clone()]);
        let out = tanh_constant_compensation(&net, &[1]).unwrap();
        for x in [0.0, 0.3, 1.0] {
            let want = g.contribution(&[x]) + l.lambda * ActivationKind::Tanh.eval_shifted(l.pre_activation(&[x]));
            assert!((out.eval1(x) - want).abs() < 1e-8);
        }
    }
}
