use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use smoothnet::activation::ActivationKind;
use smoothnet::analyzer::Thresholds;
use smoothnet_cli::run::{self, Summary};
use smoothnet_cli::{ExperimentSpec, RunError, RunMode, RunResult};

#[derive(Parser)]
#[command(name = "smoothnet", version, about = "Synthesize, train and analyze two-layer smooth networks")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build a network implementing a spline approximation of the target.
    Synthesize(Opts),
    /// Train networks for each seed, without analysis.
    Train(Opts),
    /// Classify units of a stored network, or of every seed in --out.
    Analyze {
        #[command(flatten)]
        opts: Opts,
        /// Network JSON to analyze (with --data).
        #[arg(long, requires = "data")]
        net: Option<PathBuf>,
        /// Dataset CSV with header x1,...,xn,y.
        #[arg(long, requires = "net")]
        data: Option<PathBuf>,
    },
    /// Train and analyze every seed, then summarize.
    Experiment(Opts),
    /// Rebuild summary.json from an output directory.
    Report {
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args, Clone)]
struct Opts {
    /// Experiment spec (JSON); flags override its values.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Catalog key (cubic, cubic32, exp2, exp8, sin15, sin6, cubic2d, sin2d, sin20) or expression.
    #[arg(long)]
    function: Option<String>,
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    dim: Option<u8>,
    /// Seed list such as 3, 1,2,5 or 1-10.
    #[arg(long, alias = "seed", value_parser = parse_seeds)]
    seeds: Option<SeedList>,
    #[arg(long)]
    theta: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    gamma1: Option<f64>,
    #[arg(long)]
    gamma2: Option<f64>,
    #[arg(long)]
    gamma3: Option<f64>,
    #[arg(long)]
    gamma4: Option<f64>,
    /// Scan step of the zero-error search.
    #[arg(long)]
    step: Option<f64>,
    /// Sampling step of the training grid.
    #[arg(long)]
    grid: Option<f64>,
    /// logistic or tanh.
    #[arg(long)]
    kind: Option<String>,
    #[arg(long)]
    normalize: bool,
    #[arg(long)]
    workers: Option<usize>,
    /// Spline pieces per axis for synthesis.
    #[arg(long)]
    pieces: Option<usize>,
    /// Spline degree for synthesis.
    #[arg(long)]
    degree: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
struct SeedList(Vec<u64>);

fn parse_seeds(s: &str) -> Result<SeedList, String> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((a, b)) = part.split_once('-') {
            let a: u64 = a.trim().parse().map_err(|_| format!("bad seed '{a}'"))?;
            let b: u64 = b.trim().parse().map_err(|_| format!("bad seed '{b}'"))?;
            if a > b {
                return Err(format!("empty seed range {part}"));
            }
            out.extend(a..=b);
        } else {
            out.push(part.parse().map_err(|_| format!("bad seed '{part}'"))?);
        }
    }
    Ok(SeedList(out))
}

fn parse_kind(s: &str) -> RunResult<ActivationKind> {
    match s {
        "logistic" => Ok(ActivationKind::Logistic),
        "tanh" => Ok(ActivationKind::Tanh),
        _ => Err(RunError::Usage(format!("unknown activation '{s}'"))),
    }
}

impl Opts {
    fn spec(&self, mode: RunMode) -> RunResult<ExperimentSpec> {
        let mut s = match (&self.spec, &self.function) {
            (Some(p), _) => {
                let text = std::fs::read_to_string(p).map_err(|e| RunError::io(p, e))?;
                ExperimentSpec::from_json(&text)?
            }
            (None, Some(f)) => ExperimentSpec::for_function(f),
            (None, None) => return Err(RunError::Usage("give --spec or --function".into())),
        };
        if let (Some(_), Some(f)) = (&self.spec, &self.function) {
            s.function = f.clone();
        }
        s.mode = mode;
        if let Some(d) = self.dim {
            s.dim = Some(d as usize);
        }
        if let Some(v) = &self.seeds {
            s.seeds = v.0.clone();
        }
        let t = &mut s.train;
        if let Some(v) = self.theta {
            t.theta = v;
        }
        if let Some(v) = self.lr {
            t.lr = v;
        }
        if let Some(v) = self.steps {
            t.steps = v;
        }
        if let Some(k) = &self.kind {
            t.kind = parse_kind(k)?;
            s.synth.kind = t.kind.clone();
        }
        s.thresholds = self.thresholds(s.thresholds);
        if let Some(v) = self.grid {
            s.grid = v;
        }
        s.normalize |= self.normalize;
        if let Some(v) = self.workers {
            s.workers = v;
        }
        if let Some(v) = self.pieces {
            s.synth.pieces = v;
        }
        if let Some(v) = self.degree {
            s.synth.m = v;
        }
        Ok(s)
    }

    fn thresholds(&self, mut th: Thresholds) -> Thresholds {
        if let Some(v) = self.gamma1 {
            th.gamma1 = v;
        }
        if let Some(v) = self.gamma2 {
            th.gamma2 = v;
        }
        if let Some(v) = self.gamma3 {
            th.gamma3 = v;
        }
        if let Some(v) = self.gamma4 {
            th.gamma4 = v;
        }
        if let Some(v) = self.step {
            th.scan_step = v;
        }
        th
    }
}

fn print_summary(s: &Summary) {
    for r in &s.seeds {
        match &r.reason {
            Some(why) => println!("seed {:>3}: {why}", r.seed),
            None => println!(
                "seed {:>3}: eps {:.4e} -> {:.4e}  local {} global {} inactivated {} constant {} axis-local {}",
                r.seed,
                r.eps_initial.unwrap_or(f64::NAN),
                r.eps_final.unwrap_or(f64::NAN),
                r.local,
                r.global,
                r.inactivated,
                r.constant_term,
                r.axis_local
            ),
        }
    }
    let a = &s.aggregate;
    if a.runs > 0 {
        println!(
            "{}: {}/{} ok, local-approximation {}, with local unit {}, with constant term {}, with >=3 axis-local {}",
            s.name, a.succeeded, a.runs, a.local_approximation, a.with_local, a.with_constant_term, a.with_three_axis_local
        );
    }
}

fn dispatch(cli: Cli) -> RunResult<()> {
    match cli.cmd {
        Cmd::Synthesize(o) => {
            let spec = o.spec(RunMode::Synthesize)?;
            run::run(&spec, &o.out)?;
            println!("wrote {}", o.out.join("network.json").display());
        }
        Cmd::Train(o) => print_summary(&run::run(&o.spec(RunMode::Train)?, &o.out)?),
        Cmd::Experiment(o) => print_summary(&run::run(&o.spec(RunMode::Full)?, &o.out)?),
        Cmd::Analyze { opts, net: Some(net), data: Some(data) } => {
            let th = match &opts.spec {
                Some(_) => opts.thresholds(opts.spec(RunMode::Analyze)?.thresholds),
                None => opts.thresholds(Thresholds::default()),
            };
            let rep = run::analyze_files(&net, &data, &th, &opts.out)?;
            println!("{}", rep.to_json());
        }
        Cmd::Analyze { opts, .. } => {
            // re-analyze a previous train run stored in --out
            let mut spec = match &opts.spec {
                Some(_) => opts.spec(RunMode::Analyze)?,
                None => {
                    let p = opts.out.join("spec.json");
                    let text = std::fs::read_to_string(&p).map_err(|e| RunError::io(&p, e))?;
                    ExperimentSpec::from_json(&text)?
                }
            };
            spec.mode = RunMode::Analyze;
            spec.thresholds = opts.thresholds(spec.thresholds);
            print_summary(&run::run(&spec, &opts.out)?);
        }
        Cmd::Report { out } => print_summary(&run::aggregate(&out)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_lists() {
        assert_eq!(parse_seeds("3").unwrap().0, vec![3]);
        assert_eq!(parse_seeds("1,2,5").unwrap().0, vec![1, 2, 5]);
        assert_eq!(parse_seeds("1-4").unwrap().0, vec![1, 2, 3, 4]);
        assert!(parse_seeds("4-1").is_err());
        assert!(parse_seeds("a").is_err());
    }

    #[test]
    fn flags_override_catalog() {
        let cli = Cli::parse_from(["smoothnet", "experiment", "--function", "cubic32", "--theta", "7", "--gamma1", "0.02", "--seeds", "1-3"]);
        let Cmd::Experiment(o) = cli.cmd else { panic!() };
        let s = o.spec(RunMode::Full).unwrap();
        assert_eq!(s.train.theta, 7);
        assert_eq!(s.thresholds.gamma1, 0.02);
        assert_eq!(s.thresholds.gamma3, 0.05);
        assert_eq!(s.seeds, vec![1, 2, 3]);
    }
}
