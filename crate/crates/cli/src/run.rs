//! Experiment pipelines and their artifacts.
//!
//! Layout of an output directory:
//!
//! ```text
//! spec.json  dataset.csv  summary.json  metadata.json
//! seed_<s>/  network.json  trace.csv  report.json  plot.csv  status.json
//! ```
//!
//! Synthesis writes `spline.json`, `network.json` and `construction.json`
//! instead of the seed directories. Everything except `metadata.json` is
//! a pure function of the spec.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use smoothnet::analyzer::{self, AnalysisReport, SolutionMode, Thresholds, Verdict};
use smoothnet::func::Field;
use smoothnet::par::{self, Exec};
use smoothnet::polyspline::{construct_spline_from_derivative, construct_spline_nd, KnotSet1D, StandardPartitionSpline};
use smoothnet::synth::{implement_spline_1d, implement_spline_nd, NdOptions, SplineOptions};
use smoothnet::trainer::{self, Dataset, TrainConfig};
use smoothnet::{Error, TwoLayerNet};

use crate::error::{RunError, RunResult};
use crate::spec::{ExperimentSpec, RunMode};

/// Lines counted as axis-dominant when |cos| to the nearest axis exceeds this.
pub const AXIS_COS: f64 = 0.9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedStatus {
    pub seed: u64,
    pub ok: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub reason: Option<String>,
    /// Artifact name to "ok" or the reason it is missing.
    pub artifacts: BTreeMap<String, String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedSummary {
    pub seed: u64,
    pub ok: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub reason: Option<String>,
    pub eps_initial: Option<f64>,
    pub eps_final: Option<f64>,
    pub mode: Option<SolutionMode>,
    pub local: usize,
    pub global: usize,
    pub inactivated: usize,
    pub constant_term: usize,
    /// Local units whose zero-error line is close to an axis direction.
    pub axis_local: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub runs: usize,
    pub succeeded: usize,
    pub local_approximation: usize,
    pub with_local: usize,
    pub with_constant_term: usize,
    pub with_three_axis_local: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub name: String,
    pub function: String,
    pub seeds: Vec<SeedSummary>,
    pub aggregate: Aggregate,
}

impl Summary {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes")
    }
}

fn write(path: &Path, text: impl AsRef<[u8]>) -> RunResult<()> {
    fs::write(path, text).map_err(|e| RunError::io(path, e))
}

fn read(path: &Path) -> RunResult<String> {
    fs::read_to_string(path).map_err(|e| RunError::io(path, e))
}

fn mkdir(path: &Path) -> RunResult<()> {
    fs::create_dir_all(path).map_err(|e| RunError::io(path, e))
}

fn seed_dir(out: &Path, seed: u64) -> PathBuf {
    out.join(format!("seed_{seed}"))
}

fn write_metadata(out: &Path, command: &str) -> RunResult<()> {
    let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let meta = serde_json::json!({
        "command": command,
        "created_unix": secs,
        "version": env!("CARGO_PKG_VERSION"),
    });
    write(&out.join("metadata.json"), serde_json::to_string_pretty(&meta).unwrap())
}

/// Training grid for the spec, normalized when requested.
pub fn dataset(spec: &ExperimentSpec) -> RunResult<Dataset> {
    let t = spec.target()?;
    let d = Dataset::from_grid(&|x| t.eval(x), t.dim(), spec.grid)?;
    Ok(if spec.normalize { d.normalized()? } else { d })
}

/// Runs the spec's pipeline into `out` and returns the summary.
pub fn run(spec: &ExperimentSpec, out: &Path) -> RunResult<Summary> {
    spec.validate()?;
    mkdir(out)?;
    write(&out.join("spec.json"), spec.to_json())?;
    write_metadata(out, &format!("{:?}", spec.mode).to_lowercase())?;
    match spec.mode {
        RunMode::Synthesize => synthesize(spec, out),
        RunMode::Train | RunMode::Full => {
            let data = dataset(spec)?;
            write_dataset(&data, &out.join("dataset.csv"))?;
            let analyze = spec.mode == RunMode::Full;
            for batch in spec.seeds.chunks(spec.workers) {
                let done = par::map(Exec::default(), batch, |&s| run_seed(spec, &data, s, out, analyze));
                for d in done {
                    d?;
                }
            }
            aggregate(out)
        }
        RunMode::Analyze => {
            let data = Dataset::read_csv(fs::File::open(out.join("dataset.csv")).map_err(|e| RunError::io(out.join("dataset.csv"), e))?)?;
            for &s in &spec.seeds {
                reanalyze_seed(spec, &data, s, out)?;
            }
            aggregate(out)
        }
    }
}

fn write_dataset(d: &Dataset, path: &Path) -> RunResult<()> {
    let mut buf = Vec::new();
    d.write_csv(&mut buf)?;
    write(path, buf)
}

fn write_trace(trace: &[f64], path: &Path) -> RunResult<()> {
    let mut buf = Vec::new();
    trainer::write_trace_csv(trace, &mut buf)?;
    write(path, buf)
}

fn write_analysis(net: &TwoLayerNet, data: &Dataset, th: &Thresholds, dir: &Path, st: &mut SeedStatus) -> RunResult<()> {
    match analyzer::analyze(net, data, th) {
        Ok(rep) => {
            write(&dir.join("report.json"), rep.to_json())?;
            let mut buf = Vec::new();
            analyzer::write_plot_csv(net, data, &rep, &mut buf)?;
            write(&dir.join("plot.csv"), buf)?;
            st.artifacts.insert("report.json".into(), "ok".into());
            st.artifacts.insert("plot.csv".into(), "ok".into());
        }
        Err(e) => {
            st.ok = false;
            st.reason = Some(e.to_string());
            st.artifacts.insert("report.json".into(), format!("analysis failed: {e}"));
            st.artifacts.insert("plot.csv".into(), format!("analysis failed: {e}"));
        }
    }
    Ok(())
}

fn run_seed(spec: &ExperimentSpec, data: &Dataset, seed: u64, out: &Path, analyze: bool) -> RunResult<()> {
    let dir = seed_dir(out, seed);
    mkdir(&dir)?;
    let cfg = TrainConfig { seed, ..spec.train.clone() };
    let init = trainer::init_net(&cfg, data.dim());
    let mut st = SeedStatus { seed, ok: true, reason: None, artifacts: BTreeMap::new() };
    match trainer::train(&init, data, &cfg) {
        Ok(o) => {
            write(&dir.join("network.json"), o.net.to_json())?;
            write_trace(&o.trace, &dir.join("trace.csv"))?;
            st.artifacts.insert("network.json".into(), "ok".into());
            st.artifacts.insert("trace.csv".into(), "ok".into());
            if analyze {
                write_analysis(&o.net, data, &spec.thresholds, &dir, &mut st)?;
            }
        }
        Err(Error::Divergence { step, trace }) => {
            // the partial trace is kept; the network is not
            write_trace(&trace, &dir.join("trace.csv"))?;
            let why = format!("training diverged at step {step}");
            st.ok = false;
            st.artifacts.insert("trace.csv".into(), "ok (partial)".into());
            st.artifacts.insert("network.json".into(), why.clone());
            if analyze {
                st.artifacts.insert("report.json".into(), why.clone());
                st.artifacts.insert("plot.csv".into(), why.clone());
            }
            st.reason = Some(why);
        }
        Err(e) => return Err(e.into()),
    }
    write(&dir.join("status.json"), serde_json::to_string_pretty(&st).unwrap())
}

fn reanalyze_seed(spec: &ExperimentSpec, data: &Dataset, seed: u64, out: &Path) -> RunResult<()> {
    let dir = seed_dir(out, seed);
    let status_path = dir.join("status.json");
    let mut st: SeedStatus = serde_json::from_str(&read(&status_path)?).map_err(|e| RunError::Usage(format!("{}: {e}", status_path.display())))?;
    let net_path = dir.join("network.json");
    if net_path.exists() {
        let net = TwoLayerNet::from_json(&read(&net_path)?)?;
        write_analysis(&net, data, &spec.thresholds, &dir, &mut st)?;
        write(&status_path, serde_json::to_string_pretty(&st).unwrap())?;
    }
    Ok(())
}

fn seed_summary(out: &Path, seed: u64) -> RunResult<SeedSummary> {
    let dir = seed_dir(out, seed);
    let mut s = SeedSummary {
        seed,
        ok: false,
        reason: None,
        eps_initial: None,
        eps_final: None,
        mode: None,
        local: 0,
        global: 0,
        inactivated: 0,
        constant_term: 0,
        axis_local: 0,
    };
    let status_path = dir.join("status.json");
    if !status_path.exists() {
        s.reason = Some("missing status.json".into());
        return Ok(s);
    }
    let st: SeedStatus = serde_json::from_str(&read(&status_path)?).map_err(|e| RunError::Usage(format!("{}: {e}", status_path.display())))?;
    s.ok = st.ok;
    s.reason = st.reason;
    let trace_path = dir.join("trace.csv");
    if trace_path.exists() {
        let text = read(&trace_path)?;
        let eps: Vec<f64> = text.lines().skip(1).filter_map(|l| l.split(',').nth(1)?.parse().ok()).collect();
        s.eps_initial = eps.first().copied();
        s.eps_final = eps.last().copied();
    }
    let rep_path = dir.join("report.json");
    if rep_path.exists() {
        let rep: AnalysisReport = serde_json::from_str(&read(&rep_path)?).map_err(|e| RunError::Usage(format!("{}: {e}", rep_path.display())))?;
        s.mode = Some(rep.mode);
        s.local = rep.count(Verdict::Local);
        s.global = rep.count(Verdict::Global);
        s.inactivated = rep.count(Verdict::Inactivated);
        s.constant_term = rep.count(Verdict::ConstantTerm);
        s.axis_local = rep
            .units
            .iter()
            .filter(|u| u.verdict == Verdict::Local && u.line.as_ref().is_some_and(|l| l.axis_alignment() > AXIS_COS))
            .count();
    }
    Ok(s)
}

/// Rebuilds `summary.json` from the seed directories, folding in seed order.
pub fn aggregate(out: &Path) -> RunResult<Summary> {
    let spec = ExperimentSpec::from_json(&read(&out.join("spec.json"))?)?;
    let mut seeds = Vec::new();
    for &s in &spec.seeds {
        seeds.push(seed_summary(out, s)?);
    }
    let mut a = Aggregate { runs: seeds.len(), ..Default::default() };
    for s in &seeds {
        a.succeeded += s.ok as usize;
        a.local_approximation += (s.mode == Some(SolutionMode::LocalApproximation)) as usize;
        a.with_local += (s.local >= 1) as usize;
        a.with_constant_term += (s.constant_term >= 1) as usize;
        a.with_three_axis_local += (s.axis_local >= 3) as usize;
    }
    let summary = Summary { name: spec.name.clone(), function: spec.function.clone(), seeds, aggregate: a };
    write(&out.join("summary.json"), summary.to_json())?;
    Ok(summary)
}

#[derive(Clone, Debug, Serialize)]
pub struct SynthesisSummary {
    pub units: usize,
    pub l2_error: f64,
    pub max_error: f64,
}

/// Spline approximation of the target implemented as a network.
fn synthesize(spec: &ExperimentSpec, out: &Path) -> RunResult<Summary> {
    let t = spec.target()?;
    let sy = &spec.synth;
    let (net, construction, spline) = if t.dim() == 1 {
        let s = construct_spline_from_derivative(&t, sy.m, &KnotSet1D::uniform(sy.pieces), None)?;
        let imp = implement_spline_1d(&s, &sy.kind, sy.tol.unwrap_or(1e-3), &SplineOptions::default())?;
        (imp.net, serde_json::to_string_pretty(&imp.report).unwrap(), serde_json::to_string_pretty(&s).unwrap())
    } else {
        let grid = StandardPartitionSpline::uniform_grid(&vec![sy.pieces; t.dim()]);
        let s = construct_spline_nd(&t, sy.m, &grid)?;
        let imp = implement_spline_nd(&s, &sy.kind, sy.tol.unwrap_or(1e-2), &NdOptions::default())?;
        (imp.net, serde_json::to_string_pretty(&imp.report).unwrap(), serde_json::to_string_pretty(&s).unwrap())
    };
    write(&out.join("spline.json"), spline)?;
    write(&out.join("network.json"), net.to_json())?;
    write(&out.join("construction.json"), construction)?;
    let summary = Summary { name: spec.name.clone(), function: spec.function.clone(), seeds: vec![], aggregate: Aggregate::default() };
    write(&out.join("summary.json"), summary.to_json())?;
    Ok(summary)
}

/// Classifies a stored network on a stored dataset; writes the report and
/// plot data into `out`.
pub fn analyze_files(net: &Path, data: &Path, th: &Thresholds, out: &Path) -> RunResult<AnalysisReport> {
    th.validate()?;
    let n = TwoLayerNet::from_json(&read(net)?)?;
    let d = Dataset::read_csv(fs::File::open(data).map_err(|e| RunError::io(data, e))?)?;
    mkdir(out)?;
    let rep = analyzer::analyze(&n, &d, th)?;
    write(&out.join("report.json"), rep.to_json())?;
    let mut buf = Vec::new();
    analyzer::write_plot_csv(&n, &d, &rep, &mut buf)?;
    write(&out.join("plot.csv"), buf)?;
    write_metadata(out, "analyze")?;
    Ok(rep)
}
