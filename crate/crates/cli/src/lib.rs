//! Command line front end: turns flags or spec files into experiment runs.

pub mod spec;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use chameleon_core::experiments::{
    entropy_records, entropy_sweep, entropy_table, eviction_study, profile_study, vc_noise_study,
    EvictionParams, ProfileParams,
};
use chameleon_core::metrics::EntropyParams;
use chameleon_core::report::{fmt_f64, write_records_json, Record, Table};
use chameleon_core::seed::derive_seed;
use chameleon_core::trace::{load_trace, run_trace_warm, synth_trace, SynthKind};
use chameleon_core::{CacheConfig, Model};
use clap::{Args, Parser, Subcommand};
use thiserror::Error;

pub use spec::{Experiment, ExperimentSpec};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid spec: {0}")]
    Spec(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Spec(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

impl From<chameleon_core::Error> for CliError {
    fn from(e: chameleon_core::Error) -> Self {
        use chameleon_core::Error as E;
        match e {
            E::InvalidConfig(_) | E::Parse(_) | E::ParseLine { .. } | E::Precision(_) => {
                CliError::Spec(e.to_string())
            }
            E::Consistency(_) | E::Io(_) => CliError::Runtime(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "chameleon",
    version,
    about = "Randomized cache simulator experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Relative eviction entropy per config.
    Entropy(RunArgs),
    /// Eviction success rates of PPP sets against random sets.
    Evict(RunArgs),
    /// Welch's t between PPP and random eviction-set success rates.
    Ttest(RunArgs),
    /// PPP profiling: true-positive rate and reads per true conflict.
    Ppp {
        #[command(flatten)]
        run: RunArgs,
        /// Which metric the run is filed under.
        #[arg(long, value_parser = ["tpr", "cost"], default_value = "tpr")]
        metric: String,
    },
    /// Noise added by flushing the victim cache during profiling.
    Vcnoise(RunArgs),
    /// Miss rates on a trace file or a synthetic trace.
    Trace(RunArgs),
    /// Runs the experiment named in a spec file.
    Run(RunArgs),
    /// Checks a spec without running it.
    Validate(RunArgs),
    /// Lists the cache models.
    Models,
}

#[derive(Debug, Args, Default, Clone)]
pub struct RunArgs {
    /// Spec file; flags override its values.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Inline config, e.g. `model=CHAMELEON,s=64,w=8,d=8,w_vc=2`. Repeatable;
    /// replaces any configs given by `--spec`.
    #[arg(long = "config", short = 'c')]
    pub configs: Vec<String>,
    /// Outer repetitions.
    #[arg(short = 'M', long = "m")]
    pub m: Option<usize>,
    /// Inner repetitions.
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// CSV output; stdout when absent.
    #[arg(long, short = 'o')]
    pub output: Option<PathBuf>,
    /// Summary records as JSON.
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// PPP addresses to collect per victim.
    #[arg(long)]
    pub target_size: Option<usize>,
    /// Trace file of hex line addresses.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Synthetic trace: `uniform:N`, `zipf:ALPHA:N` or `loop:K`.
    #[arg(long)]
    pub synth: Option<String>,
    /// Synthetic trace length.
    #[arg(long)]
    pub length: Option<usize>,
    /// Leading accesses not counted.
    #[arg(long)]
    pub warmup: Option<usize>,
}

/// Builds the effective spec from an optional spec file and flags.
pub fn resolve(experiment: Option<Experiment>, args: &RunArgs) -> Result<ExperimentSpec, CliError> {
    let mut spec = match &args.spec {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Spec(format!("{}: {e}", path.display())))?;
            let s = ExperimentSpec::parse(&text)?;
            if let Some(e) = experiment {
                if s.experiment != e && !compatible(s.experiment, e) {
                    return Err(CliError::Spec(format!(
                        "spec runs {} but the subcommand runs {e}",
                        s.experiment
                    )));
                }
            }
            s
        }
        None => ExperimentSpec::new(
            experiment.ok_or_else(|| CliError::Spec("a spec file is required".into()))?,
            Vec::new(),
        ),
    };
    if !args.configs.is_empty() {
        spec.configs = args
            .configs
            .iter()
            .map(|c| CacheConfig::from_kv(c).map_err(|e| CliError::Spec(format!("{c:?}: {e}"))))
            .collect::<Result<_, _>>()?;
    }
    if let Some(m) = args.m {
        spec.m = m;
    }
    if let Some(t) = args.trials {
        spec.trials = t;
    }
    if let Some(s) = args.seed {
        spec.seed = s;
    }
    if let Some(o) = &args.output {
        spec.output = Some(o.clone());
    }
    let extras = [
        ("json", args.json.as_ref().map(|p| p.display().to_string())),
        ("target_size", args.target_size.map(|v| v.to_string())),
        (
            "trace",
            args.trace.as_ref().map(|p| p.display().to_string()),
        ),
        ("synth", args.synth.clone()),
        ("length", args.length.map(|v| v.to_string())),
        ("warmup", args.warmup.map(|v| v.to_string())),
    ];
    for (k, v) in extras {
        if let Some(v) = v {
            spec.extra.insert(k.to_string(), v);
        }
    }
    Ok(spec)
}

/// Subcommands that file one computation under either of two names.
fn compatible(a: Experiment, b: Experiment) -> bool {
    use Experiment::*;
    matches!(
        (a, b),
        (EvictionRate, Ttest) | (Ttest, EvictionRate) | (PppTpr, PppCost) | (PppCost, PppTpr)
    )
}

/// Output of one experiment run.
pub struct RunOutput {
    pub table: Table,
    pub records: Vec<Record>,
}

/// Runs a validated spec. Config `i` uses `derive_seed(spec.seed, i)`.
pub fn run_spec(spec: &ExperimentSpec) -> Result<RunOutput, CliError> {
    spec.validate()?;
    let cell_seed = |i: usize| derive_seed(spec.seed, i as u64);
    match spec.experiment {
        Experiment::Entropy => {
            let params = EntropyParams {
                trials: spec.trials,
                replicates: spec.m,
                seed: spec.seed,
                ..EntropyParams::default()
            };
            let r = entropy_sweep(&spec.configs, &params)?;
            Ok(RunOutput {
                table: entropy_table(&r, spec.seed),
                records: entropy_records(&r),
            })
        }
        Experiment::EvictionRate | Experiment::Ttest => {
            let mut tables = Vec::new();
            let mut records = Vec::new();
            for (i, c) in spec.configs.iter().enumerate() {
                let p = EvictionParams {
                    m: spec.m,
                    trials: spec.trials,
                    set_factor: spec.extra_num("set_factor", 4)?,
                    seed: cell_seed(i),
                    ..EvictionParams::default()
                };
                let st = eviction_study(c, &p)?;
                tables.push(st.table());
                records.extend(st.records()?);
            }
            Ok(RunOutput {
                table: concat(tables),
                records,
            })
        }
        Experiment::PppTpr | Experiment::PppCost | Experiment::VcNoise => {
            let mut tables = Vec::new();
            let mut records = Vec::new();
            for (i, c) in spec.configs.iter().enumerate() {
                let p = ProfileParams {
                    victims: spec.m,
                    max_rounds: spec.trials,
                    target_size: spec.extra_num("target_size", 64)?,
                    seed: cell_seed(i),
                    ..ProfileParams::default()
                };
                let st = if spec.experiment == Experiment::VcNoise {
                    vc_noise_study(c, &p)?
                } else {
                    profile_study(c, &p)?
                };
                tables.push(st.table());
                records.extend(st.records());
            }
            Ok(RunOutput {
                table: concat(tables),
                records,
            })
        }
        Experiment::Trace => run_trace_spec(spec),
    }
}

fn run_trace_spec(spec: &ExperimentSpec) -> Result<RunOutput, CliError> {
    let trace = match (spec.extra.get("trace"), spec.extra.get("synth")) {
        (Some(path), None) => load_trace(Path::new(path))?,
        (None, Some(kind)) => {
            let kind: SynthKind = kind.parse()?;
            synth_trace(kind, spec.extra_num("length", 1_000_000)?, spec.seed)?
        }
        _ => {
            return Err(CliError::Spec(
                "TRACE needs exactly one of trace or synth".into(),
            ))
        }
    };
    let configs: Vec<CacheConfig> = spec
        .configs
        .iter()
        .enumerate()
        .map(|(i, c)| c.clone().with_seed(derive_seed(spec.seed, i as u64)))
        .collect();
    let reports = run_trace_warm(&trace, &configs, spec.extra_num("warmup", 0)?)?;
    let mut table = Table::new(
        "trace",
        1,
        &["model", "accesses", "misses", "miss_rate", "relative"],
    );
    let mut records = Vec::new();
    for r in &reports {
        table.push(vec![
            r.model.clone(),
            r.accesses.to_string(),
            r.misses.to_string(),
            fmt_f64(r.miss_rate),
            fmt_f64(r.relative),
        ]);
        records.push(Record::point(
            "miss_rate",
            &r.model,
            r.miss_rate,
            r.accesses as usize,
        ));
        records.push(Record::point(
            "relative_miss_rate",
            &r.model,
            r.relative,
            r.accesses as usize,
        ));
    }
    Ok(RunOutput { table, records })
}

fn concat(tables: Vec<Table>) -> Table {
    let mut it = tables.into_iter();
    let mut first = it.next().expect("at least one config");
    for t in it {
        first.rows.extend(t.rows);
    }
    first
}

fn write_output(spec: &ExperimentSpec, out: &RunOutput) -> Result<(), CliError> {
    let runtime = |p: &Path, e: io::Error| CliError::Runtime(format!("{}: {e}", p.display()));
    match &spec.output {
        Some(p) => fs::write(p, out.table.to_csv_string()).map_err(|e| runtime(p, e))?,
        None => io::stdout()
            .write_all(out.table.to_csv_string().as_bytes())
            .map_err(|e| CliError::Runtime(e.to_string()))?,
    }
    if let Some(p) = spec.extra.get("json") {
        let p = Path::new(p);
        let mut buf = Vec::new();
        write_records_json(&mut buf, &out.records).map_err(|e| runtime(p, e))?;
        fs::write(p, buf).map_err(|e| runtime(p, e))?;
    }
    for r in &out.records {
        eprintln!(
            "{} {} = {} [{}, {}] n={}",
            r.metric,
            r.config,
            fmt_f64(r.value),
            fmt_f64(r.ci_low),
            fmt_f64(r.ci_high),
            r.n
        );
    }
    Ok(())
}

pub fn model_catalog() -> String {
    Model::ALL
        .iter()
        .map(|m| format!("{:<24} {}\n", m.name(), m.description()))
        .collect()
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let (experiment, args) = match cli.command {
        Command::Models => {
            print!("{}", model_catalog());
            return Ok(());
        }
        Command::Validate(args) => {
            let spec = resolve(None, &args)?;
            let problems = spec.problems();
            if problems.is_empty() {
                println!(
                    "ok: {} with {} config(s), M={}, trials={}, seed={}",
                    spec.experiment,
                    spec.configs.len(),
                    spec.m,
                    spec.trials,
                    spec.seed
                );
                return Ok(());
            }
            for p in &problems {
                println!("error: {p}");
            }
            return Err(CliError::Spec(format!("{} problem(s)", problems.len())));
        }
        Command::Entropy(a) => (Some(Experiment::Entropy), a),
        Command::Evict(a) => (Some(Experiment::EvictionRate), a),
        Command::Ttest(a) => (Some(Experiment::Ttest), a),
        Command::Ppp { run, metric } => (
            Some(if metric == "cost" {
                Experiment::PppCost
            } else {
                Experiment::PppTpr
            }),
            run,
        ),
        Command::Vcnoise(a) => (Some(Experiment::VcNoise), a),
        Command::Trace(a) => (Some(Experiment::Trace), a),
        Command::Run(a) => (None, a),
    };
    let spec = resolve(experiment, &args)?;
    let out = run_spec(&spec)?;
    write_output(&spec, &out)
}
