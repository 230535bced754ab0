//! Full-batch gradient descent for two-layer networks.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::activation::ActivationKind;
use crate::error::{Error, Result};
use crate::grad;
use crate::net::{TwoLayerNet, Unit};
use crate::par::Exec;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub theta: usize,
    pub lr: f64,
    pub steps: usize,
    pub seed: u64,
    pub init: (f64, f64),
    pub kind: ActivationKind,
    /// Train an output bias as well (off in the reference protocol).
    pub output_bias: bool,
    #[serde(skip)]
    pub exec: Exec,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            theta: 10,
            lr: 0.05,
            steps: 5000,
            seed: 1,
            init: (-1.0, 1.0),
            kind: ActivationKind::Logistic,
            output_bias: false,
            exec: Exec::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(Error::InvalidArgument(format!("learning rate {} must be finite and >= 0", self.lr)));
        }
        if self.steps == 0 {
            return Err(Error::InvalidArgument("steps must be >= 1".into()));
        }
        if self.theta == 0 {
            return Err(Error::InvalidArgument("theta must be >= 1".into()));
        }
        if !(self.init.0 < self.init.1) {
            return Err(Error::InvalidArgument(format!("init range {:?} is empty", self.init)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
    /// Factor the targets were divided by, if normalized.
    pub scale: Option<f64>,
}

impl Dataset {
    pub fn new(inputs: Vec<Vec<f64>>, targets: Vec<f64>) -> Result<Self> {
        if inputs.len() != targets.len() {
            return Err(Error::DimensionMismatch { expected: inputs.len(), found: targets.len() });
        }
        if inputs.is_empty() {
            return Err(Error::Data("dataset is empty".into()));
        }
        let n = inputs[0].len();
        for x in &inputs {
            if x.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: x.len() });
            }
        }
        if inputs.iter().flatten().chain(&targets).any(|v| !v.is_finite()) {
            return Err(Error::Data("non-finite value in dataset".into()));
        }
        Ok(Dataset { inputs, targets, scale: None })
    }

    /// Samples `f` on a uniform grid of [0,1]^n with the given step.
    pub fn from_grid(f: &dyn Fn(&[f64]) -> f64, n: usize, step: f64) -> Result<Self> {
        if !(step > 0.0 && step <= 1.0) {
            return Err(Error::InvalidArgument(format!("grid step {step} outside (0,1]")));
        }
        let k = (1.0 / step).round() as usize + 1;
        let total = k.checked_pow(n as u32).ok_or_else(|| Error::InvalidArgument("grid too large".into()))?;
        let mut inputs = Vec::with_capacity(total);
        for i in 0..total {
            let mut r = i;
            let mut x = vec![0.0; n];
            for v in x.iter_mut() {
                *v = ((r % k) as f64 * step).min(1.0);
                r /= k;
            }
            inputs.push(x);
        }
        let targets = inputs.iter().map(|x| f(x)).collect();
        Dataset::new(inputs, targets)
    }

    pub fn dim(&self) -> usize {
        self.inputs[0].len()
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    /// Divides targets by their largest magnitude.
    pub fn normalized(&self) -> Result<Self> {
        let m = self.targets.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if m == 0.0 {
            return Err(Error::Data("cannot normalize all-zero targets".into()));
        }
        let prior = self.scale.unwrap_or(1.0);
        Ok(Dataset {
            inputs: self.inputs.clone(),
            targets: self.targets.iter().map(|v| v / m).collect(),
            scale: Some(prior * m),
        })
    }

    /// Undoes `normalized`.
    pub fn denormalized(&self) -> Self {
        let s = self.scale.unwrap_or(1.0);
        Dataset { inputs: self.inputs.clone(), targets: self.targets.iter().map(|v| v * s).collect(), scale: None }
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header: Vec<String> = (1..=self.dim()).map(|i| format!("x{i}")).collect();
        header.push("y".into());
        out.write_record(&header).map_err(csv_err)?;
        for (x, y) in self.inputs.iter().zip(&self.targets) {
            let row: Vec<String> = x.iter().chain(std::iter::once(y)).map(|v| format!("{v:?}")).collect();
            out.write_record(&row).map_err(csv_err)?;
        }
        out.flush().map_err(|e| Error::Data(e.to_string()))
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let header = rd.headers().map_err(csv_err)?.clone();
        let n = header.len().saturating_sub(1);
        let expected: Vec<String> = (1..=n).map(|i| format!("x{i}")).chain(std::iter::once("y".to_string())).collect();
        if n == 0 || header.iter().map(str::trim).ne(expected.iter().map(String::as_str)) {
            return Err(Error::Data(format!("header must be x1,...,xn,y; got {:?}", header.iter().collect::<Vec<_>>())));
        }
        let (mut inputs, mut targets) = (Vec::new(), Vec::new());
        for (line, rec) in rd.records().enumerate() {
            let rec = rec.map_err(csv_err)?;
            let vals: Vec<f64> = rec
                .iter()
                .map(|v| v.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Data(format!("row {}: {e}", line + 2)))?;
            if vals.len() != n + 1 {
                return Err(Error::Data(format!("row {} has {} fields, expected {}", line + 2, vals.len(), n + 1)));
            }
            targets.push(vals[n]);
            inputs.push(vals[..n].to_vec());
        }
        Dataset::new(inputs, targets)
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Data(e.to_string())
}

/// Theta units with every w, b and lambda drawn from U(lo, hi).
pub fn init_net(cfg: &TrainConfig, n: usize) -> TwoLayerNet {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (lo, hi) = cfg.init;
    let units = (0..cfg.theta)
        .map(|_| {
            let w = (0..n).map(|_| rng.random_range(lo..hi)).collect();
            let b = rng.random_range(lo..hi);
            let l = rng.random_range(lo..hi);
            Unit::new(w, b, l, cfg.kind.clone())
        })
        .collect();
    TwoLayerNet::new(units)
}

/// Root of the summed squared residuals.
pub fn loss(net: &TwoLayerNet, data: &Dataset) -> f64 {
    data.inputs.iter().zip(&data.targets).map(|(x, y)| (net.eval(x) - y).powi(2)).sum::<f64>().sqrt()
}

/// Gradient of the sum of squares, ordered like `grad::params`, with the
/// output-bias derivative appended when `with_bias` is set.
pub fn sse_gradient(exec: Exec, net: &TwoLayerNet, data: &Dataset, with_bias: bool) -> (f64, Vec<f64>) {
    let (sse, mut g) = grad::sse_and_gradient(exec, net, &data.inputs, &data.targets);
    if with_bias {
        let s: f64 = data.inputs.iter().zip(&data.targets).map(|(x, y)| 2.0 * (net.eval(x) - y)).sum();
        g.push(s);
    }
    (sse, g)
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub net: TwoLayerNet,
    /// Loss before step k for k = 0..steps, then the final loss.
    pub trace: Vec<f64>,
}

/// Plain gradient descent on the mean squared residual. The recorded loss
/// is the root of the summed squares.
pub fn train(net: &TwoLayerNet, data: &Dataset, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    if net.dim() != data.dim() {
        return Err(Error::DimensionMismatch { expected: net.dim(), found: data.dim() });
    }
    let mut cur = net.clone();
    let mut p = grad::params(&cur);
    let mut trace = Vec::with_capacity(cfg.steps + 1);
    let scale = 1.0 / data.len() as f64;
    for step in 0..cfg.steps {
        let (sse, g) = sse_gradient(cfg.exec, &cur, data, cfg.output_bias);
        let eps = sse.sqrt();
        trace.push(eps);
        if !eps.is_finite() || g.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { step, trace });
        }
        if cfg.lr == 0.0 {
            continue;
        }
        for (a, d) in p.iter_mut().zip(&g) {
            *a -= cfg.lr * scale * d;
        }
        grad::set_params(&mut cur, &p);
        if cfg.output_bias {
            cur.output_bias -= cfg.lr * scale * g[p.len()];
        }
    }
    let last = sse_gradient(cfg.exec, &cur, data, false).0.sqrt();
    trace.push(last);
    if !last.is_finite() {
        return Err(Error::Divergence { step: cfg.steps, trace });
    }
    Ok(TrainOutcome { net: cur, trace })
}

/// Largest relative difference between the analytic gradient of the sum
/// of squares and central differences with h = 1e-6 max(1, |p|).
pub fn gradient_check(net: &TwoLayerNet, data: &Dataset) -> f64 {
    let (_, g) = sse_gradient(Exec::Sequential, net, data, false);
    let p = grad::params(net);
    let sse = |q: &[f64]| loss(&grad::with_params(net, q), data).powi(2);
    let mut worst = 0.0f64;
    for i in 0..p.len() {
        let h = 1e-6 * p[i].abs().max(1.0);
        let mut a = p.clone();
        let mut b = p.clone();
        a[i] += h;
        b[i] -= h;
        let fd = (sse(&a) - sse(&b)) / (2.0 * h);
        let rel = (fd - g[i]).abs() / g[i].abs().max(fd.abs()).max(1e-8);
        worst = worst.max(rel);
    }
    worst
}

pub fn write_trace_csv<W: Write>(trace: &[f64], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["step", "eps"]).map_err(csv_err)?;
    for (i, e) in trace.iter().enumerate() {
        out.write_record([i.to_string(), format!("{e:?}")]).map_err(csv_err)?;
    }
    out.flush().map_err(|e| Error::Data(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cubic() -> Dataset {
        Dataset::from_grid(&|x| x[0].powi(3) + 3.0, 1, 0.01).unwrap()
    }

    #[test]
    fn grid_has_endpoints() {
        let d = cubic();
        assert_eq!(d.len(), 101);
        assert_eq!(d.inputs[100][0], 1.0);
        let d2 = Dataset::from_grid(&|x| x[0] + x[1], 2, 0.25).unwrap();
        assert_eq!(d2.len(), 25);
    }

    #[test]
    fn loss_of_zero_net() {
        let d = Dataset::new((0..100).map(|i| vec![i as f64 / 100.0]).collect(), vec![1.0; 100]).unwrap();
        let net = TwoLayerNet::new(vec![Unit::new(vec![1.0], 0.0, 0.0, ActivationKind::Logistic)]);
        assert!((loss(&net, &d) - 10.0).abs() < 1e-12);
    }

    #[test]
    fn init_is_seeded() {
        let cfg = TrainConfig { theta: 10, ..Default::default() };
        let a = init_net(&cfg, 1);
        assert_eq!(a, init_net(&cfg, 1));
        assert_eq!(a.len(), 10);
        assert!(a.units.iter().all(|u| u.w.len() == 1));
        assert_ne!(a, init_net(&TrainConfig { seed: 2, ..cfg }, 1));
    }

    #[test]
    fn zero_rate_keeps_net() {
        let d = cubic();
        let cfg = TrainConfig { lr: 0.0, steps: 5, ..Default::default() };
        let net = init_net(&cfg, 1);
        let out = train(&net, &d, &cfg).unwrap();
        assert_eq!(out.net, net);
        assert_eq!(out.trace.len(), 6);
        assert!(out.trace.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn divergence_is_reported() {
        let d = cubic();
        let cfg = TrainConfig { lr: 1e6, steps: 50, ..Default::default() };
        let err = train(&init_net(&cfg, 1), &d, &cfg).unwrap_err();
        assert!(matches!(err, Error::Divergence { .. }));
    }

    #[test]
    fn normalization_roundtrip() {
        let d = cubic().normalized().unwrap();
        assert_eq!(d.scale, Some(4.0));
        assert!((d.targets[100] - 1.0).abs() < 1e-15);
        let back = d.denormalized();
        assert!((back.targets[100] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn csv_roundtrip() {
        let d = Dataset::from_grid(&|x| x[0] * x[1] + 0.1, 2, 0.5).unwrap();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x1,x2,y\n"));
        assert_eq!(Dataset::read_csv(&buf[..]).unwrap(), d);
        assert!(Dataset::read_csv("a,b\n1,2\n".as_bytes()).is_err());
    }

    #[test]
    fn gradient_matches_differences() {
        let d = cubic();
        let net = init_net(&TrainConfig::default(), 1);
        assert!(gradient_check(&net, &d) < 1e-5);
    }
}
