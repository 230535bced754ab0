//! Experiment description: one JSON document, overridable from flags.

use serde::{Deserialize, Serialize};
use smoothnet::activation::ActivationKind;
use smoothnet::analyzer::Thresholds;
use smoothnet::expr::Expr;
use smoothnet::trainer::TrainConfig;

use crate::catalog;
use crate::error::{RunError, RunResult};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunMode {
    Synthesize,
    Train,
    Analyze,
    #[default]
    Full,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub m: usize,
    /// Equal pieces per axis (interior knots = pieces - 1).
    pub pieces: usize,
    /// L2 tolerance; 1e-3 in 1-D and 1e-2 otherwise when absent.
    pub tol: Option<f64>,
    pub kind: ActivationKind,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec { m: 3, pieces: 5, tol: None, kind: ActivationKind::Logistic }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: String,
    /// Catalog key or an expression in x (and y).
    pub function: String,
    pub dim: Option<usize>,
    /// Sampling step of the training grid.
    pub grid: f64,
    /// Scale targets to max |y| = 1 before training.
    pub normalize: bool,
    pub train: TrainConfig,
    pub thresholds: Thresholds,
    pub seeds: Vec<u64>,
    pub mode: RunMode,
    pub synth: SynthSpec,
    /// Seeds trained at once.
    pub workers: usize,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            name: "experiment".into(),
            function: String::new(),
            dim: None,
            grid: 0.01,
            normalize: false,
            train: TrainConfig::default(),
            thresholds: Thresholds::default(),
            seeds: (1..=10).collect(),
            mode: RunMode::Full,
            synth: SynthSpec::default(),
            workers: 4,
        }
    }
}

impl ExperimentSpec {
    /// Catalog settings for a known key or expression, defaults otherwise.
    pub fn for_function(f: &str) -> Self {
        match catalog::lookup(f) {
            Some(e) => catalog::spec_for(e),
            None => ExperimentSpec { name: "custom".into(), function: f.to_string(), ..Default::default() },
        }
    }

    /// Parses a spec document. When `function` names a catalog entry the
    /// document is laid over that entry's settings.
    pub fn from_json(text: &str) -> RunResult<Self> {
        let usage = |e: serde_json::Error| RunError::Usage(format!("spec: {e}"));
        let user: serde_json::Value = serde_json::from_str(text).map_err(usage)?;
        let entry = user.get("function").and_then(|f| f.as_str()).and_then(catalog::lookup);
        let Some(e) = entry else {
            return serde_json::from_value(user).map_err(usage);
        };
        let mut base = serde_json::to_value(catalog::spec_for(e)).expect("spec serializes");
        merge(&mut base, user);
        let mut s: ExperimentSpec = serde_json::from_value(base).map_err(usage)?;
        s.function = e.expr.to_string();
        s.dim.get_or_insert(e.dim);
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    /// Parsed target with the spec's dimension.
    pub fn target(&self) -> RunResult<Expr> {
        let text = catalog::lookup(&self.function).map_or(self.function.as_str(), |e| e.expr);
        let e = Expr::parse(text)?;
        match self.dim {
            Some(n) => Ok(e.with_dim(n)?),
            None => Ok(e),
        }
    }

    pub fn validate(&self) -> RunResult<()> {
        if self.function.trim().is_empty() {
            return Err(RunError::Usage("no target function given".into()));
        }
        let t = self.target()?;
        let n = smoothnet::func::Field::dim(&t);
        if !(1..=2).contains(&n) {
            return Err(RunError::Usage(format!("dimension {n} unsupported; use 1 or 2")));
        }
        if !(self.grid > 0.0 && self.grid <= 0.5) {
            return Err(RunError::Usage(format!("grid step {} must lie in (0, 0.5]", self.grid)));
        }
        if self.seeds.is_empty() && matches!(self.mode, RunMode::Train | RunMode::Full) {
            return Err(RunError::Usage("seed list is empty".into()));
        }
        if self.workers == 0 {
            return Err(RunError::Usage("workers must be >= 1".into()));
        }
        self.train.validate()?;
        self.thresholds.validate()?;
        if self.synth.m == 0 || self.synth.pieces == 0 {
            return Err(RunError::Usage("synth.m and synth.pieces must be >= 1".into()));
        }
        Ok(())
    }
}

fn merge(base: &mut serde_json::Value, over: serde_json::Value) {
    match (base, over) {
        (serde_json::Value::Object(b), serde_json::Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}
