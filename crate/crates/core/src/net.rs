use serde::{Deserialize, Serialize};

use crate::activation::ActivationKind;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Unit {
    pub w: Vec<f64>,
    pub b: f64,
    pub lambda: f64,
    pub kind: ActivationKind,
}

impl Unit {
    pub fn new(w: Vec<f64>, b: f64, lambda: f64, kind: ActivationKind) -> Self {
        Unit { w, b, lambda, kind }
    }

    #[inline]
    pub fn pre_activation(&self, x: &[f64]) -> f64 {
        self.w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + self.b
    }

    /// sigma(w.x + b), without the output weight.
    #[inline]
    pub fn activation(&self, x: &[f64]) -> f64 {
        self.kind.eval(self.pre_activation(x))
    }

    /// lambda * sigma(w.x + b).
    #[inline]
    pub fn contribution(&self, x: &[f64]) -> f64 {
        self.lambda * self.activation(x)
    }
}

/// g(x) = sum lambda_i sigma(w_i.x + b_i) + output_bias.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
pub struct TwoLayerNet {
    pub units: Vec<Unit>,
    #[serde(default)]
    pub output_bias: f64,
}

impl TwoLayerNet {
    pub fn new(units: Vec<Unit>) -> Self {
        TwoLayerNet { units, output_bias: 0.0 }
    }

    pub fn dim(&self) -> usize {
        self.units.first().map(|u| u.w.len()).unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.units.iter().map(|u| u.contribution(x)).sum::<f64>() + self.output_bias
    }

    pub fn eval1(&self, x: f64) -> f64 {
        self.eval(&[x])
    }

    /// Checks finiteness and consistent input dimension.
    pub fn validate(&self) -> Result<()> {
        let n = self.dim();
        for (i, u) in self.units.iter().enumerate() {
            if u.w.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: u.w.len() });
            }
            if !(u.b.is_finite() && u.lambda.is_finite() && u.w.iter().all(|v| v.is_finite())) {
                return Err(Error::Domain(format!("unit {i} has non-finite parameters")));
            }
        }
        if !self.output_bias.is_finite() {
            return Err(Error::Domain("output bias not finite".into()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("network serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let net: TwoLayerNet = serde_json::from_str(s).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        net.validate()?;
        Ok(net)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_shape() {
        let net = TwoLayerNet::new(vec![Unit::new(vec![1.0], -0.5, 2.0, ActivationKind::Logistic)]);
        let v: serde_json::Value = serde_json::from_str(&net.to_json()).unwrap();
        assert_eq!(
            v,
            serde_json::json!({"units":[{"w":[1.0],"b":-0.5,"lambda":2.0,"kind":"logistic"}],"output_bias":0.0})
        );
        assert_eq!(TwoLayerNet::from_json(&net.to_json()).unwrap(), net);
        assert!((net.eval1(0.5) - 1.0).abs() < 1e-15);
    }
}
