use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use qcompile::agent::{
    compile_with_policy, load_model, save_model, train, PolicyModel, TrainConfig,
};
use qcompile::bench::{
    compare, default_suite, desk_suite, evaluate_all, generate_all, run_baseline, suite,
    write_suite, Baseline, Benchmark, BenchmarkSpec, Comparator, Family,
};
use qcompile::circuit::{emit_qasm, parse_qasm};
use qcompile::device::{default_registry_dir, list_devices};
use qcompile::env::{Env, EnvConfig};
use qcompile::features::{extract_features, RewardKind, CSV_HEADER};
use qcompile::optimize::check_commutation_table;
use qcompile::sim::equivalent;
use qcompile::synthesis::check_rule_table;
use qcompile::{Circuit, Error};

const TOLERANCE: f64 = 1e-9;

#[derive(Debug, Parser)]
#[command(
    name = "qcompile",
    version,
    about = "Quantum circuit compiler driven by a learned pass policy"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Inspect the device registry.
    #[command(subcommand)]
    Devices(DevicesCommand),
    /// Generate benchmark circuits.
    #[command(subcommand)]
    Bench(BenchCommand),
    /// Print the feature vector of a circuit as CSV.
    Features { qasm: PathBuf },
    /// Compile a circuit with a trained model or a fixed baseline.
    Compile(CompileArgs),
    /// Train a policy for one reward.
    Train(TrainArgs),
    /// Compare trained models against the baselines.
    Compare(CompareArgs),
    /// Check two circuits for equivalence with the simulator.
    Verify(VerifyArgs),
}

#[derive(Debug, Subcommand)]
enum DevicesCommand {
    List {
        /// Directory of device JSON files; defaults to the shipped registry.
        #[arg(long)]
        registry: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SuiteKind {
    /// Four families at 2, 3, 4, 6 and 8 qubits.
    Desk,
    /// Four families at 2..=8 qubits.
    Default,
    /// Four families at 2..=20 qubits.
    Full,
}

impl SuiteKind {
    fn specs(self, seed: u64) -> Vec<BenchmarkSpec> {
        match self {
            SuiteKind::Desk => desk_suite(seed),
            SuiteKind::Default => default_suite(seed),
            SuiteKind::Full => suite(&(2..=20).collect::<Vec<_>>(), seed),
        }
    }
}

#[derive(Debug, Subcommand)]
enum BenchCommand {
    Generate {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "default")]
        suite: SuiteKind,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("compiler").required(true).args(["model", "baseline"])))]
struct CompileArgs {
    qasm: PathBuf,
    /// Trained model file.
    #[arg(long)]
    model: Option<PathBuf>,
    /// baseline-A or baseline-B.
    #[arg(long)]
    baseline: Option<String>,
    /// Device name or path to a device JSON file.
    #[arg(long)]
    device: String,
    /// Write the compiled QASM here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Step cap for model-driven compilation.
    #[arg(long, default_value_t = 50)]
    max_steps: usize,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    reward: RewardKind,
    /// JSON file with optional `env`, `train` and `suite` sections.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Training log (JSON lines); defaults to the model path with a `.log.jsonl` extension.
    #[arg(long)]
    log: Option<PathBuf>,
    /// Overrides the seeds in the config file.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `train.total_timesteps`.
    #[arg(long)]
    timesteps: Option<usize>,
}

#[derive(Debug, Args)]
struct CompareArgs {
    /// Comma-separated model files, at most one per reward.
    #[arg(long, value_delimiter = ',', required = true)]
    models: Vec<PathBuf>,
    #[arg(long)]
    device: String,
    /// `desk`, `default`, `full`, or a directory of QASM files.
    #[arg(long, default_value = "desk")]
    suite: String,
    /// Write the CSV here; otherwise it goes to stdout and the summary to stderr.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 50)]
    max_steps: usize,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    a: PathBuf,
    b: PathBuf,
    /// Read the second circuit through its layout metadata. Implied when
    /// either file carries a layout.
    #[arg(long)]
    layout_aware: bool,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct TrainFile {
    env: EnvConfig,
    train: TrainConfig,
    suite: SuiteSection,
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SuiteSection {
    sizes: Vec<usize>,
    seed: u64,
    /// Directory of QASM files; replaces the generated suite.
    dir: Option<PathBuf>,
}

impl Default for SuiteSection {
    fn default() -> Self {
        SuiteSection {
            sizes: vec![2, 3, 4, 6, 8],
            seed: 0,
            dir: None,
        }
    }
}

fn read_circuit(path: &Path) -> anyhow::Result<Circuit> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_qasm(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Every `*.qasm` file in `dir`, name-sorted. The family is the file name
/// prefix up to the first underscore.
fn read_suite_dir(dir: &Path) -> anyhow::Result<Vec<Benchmark>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "qasm"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        bail!("no .qasm files in {}", dir.display());
    }
    paths
        .iter()
        .map(|p| {
            let name = p
                .file_stem()
                .unwrap_or_default()
                .to_string_lossy()
                .into_owned();
            let prefix = name.split('_').next().unwrap_or_default();
            let family: Family = prefix
                .parse()
                .with_context(|| format!("cannot infer the benchmark family of {}", p.display()))?;
            Ok(Benchmark {
                name,
                family,
                circuit: read_circuit(p)?,
            })
        })
        .collect()
}

fn load_suite(arg: &str, seed: u64) -> anyhow::Result<Vec<Benchmark>> {
    let kind = match arg {
        "desk" => Some(SuiteKind::Desk),
        "default" => Some(SuiteKind::Default),
        "full" => Some(SuiteKind::Full),
        _ => None,
    };
    match kind {
        Some(k) => Ok(generate_all(&k.specs(seed))?),
        None => read_suite_dir(Path::new(arg)),
    }
}

fn device_env(
    device: &str,
    reward: RewardKind,
    max_steps: usize,
    seed: u64,
) -> anyhow::Result<Env> {
    if max_steps == 0 {
        bail!("--max-steps must be positive");
    }
    Ok(Env::new(EnvConfig {
        reward,
        fixed_device: Some(device.to_string()),
        max_steps,
        seed,
    })?)
}

fn rewards_line(r: &[f64; 3]) -> String {
    RewardKind::ALL
        .iter()
        .zip(r)
        .map(|(k, v)| format!("{}={v:.6}", k.name()))
        .collect::<Vec<_>>()
        .join(" ")
}

fn write_or_print(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn devices_list(registry: Option<PathBuf>) -> anyhow::Result<u8> {
    let dir = registry.unwrap_or_else(default_registry_dir);
    let reg = list_devices(&dir).with_context(|| format!("reading registry {}", dir.display()))?;
    println!(
        "{:<18} {:<9} {:>6} {:>6}",
        "name", "platform", "qubits", "edges"
    );
    for s in reg.summaries() {
        let edges = s
            .num_edges
            .map_or_else(|| "all".to_string(), |e| e.to_string());
        println!(
            "{:<18} {:<9} {:>6} {:>6}",
            s.name,
            s.platform.name(),
            s.num_qubits,
            edges
        );
    }
    for (path, e) in &reg.warnings {
        eprintln!("warning: skipped {}: {e}", path.display());
    }
    Ok(0)
}

fn compile_cmd(args: CompileArgs) -> anyhow::Result<u8> {
    let c = read_circuit(&args.qasm)?;
    let (compiled, rewards) = if let Some(name) = &args.baseline {
        let b: Baseline = name.parse()?;
        let env = device_env(
            &args.device,
            RewardKind::Fidelity,
            args.max_steps,
            args.seed,
        )?;
        let d = env.fixed_device().expect("fixed device set");
        let r = run_baseline(b, &c, d, args.seed)?;
        eprintln!("passes: {}", b.passes().join(" "));
        (r.circuit, r.rewards)
    } else {
        let path = args
            .model
            .as_ref()
            .expect("clap requires --model or --baseline");
        let m = load_model(path).with_context(|| format!("loading {}", path.display()))?;
        let env = device_env(&args.device, m.reward, args.max_steps, args.seed)?;
        let out = compile_with_policy(&m, &env, &c, true, args.seed)?;
        eprintln!("passes: {}", out.trace.join(" "));
        if !out.finished {
            eprintln!("policy did not finish within {} steps", args.max_steps);
            return Ok(1);
        }
        let d = env.fixed_device().expect("fixed device set");
        let r = evaluate_all(&out.circuit, d)?;
        (out.circuit, r)
    };
    eprintln!("{}", rewards_line(&rewards));
    write_or_print(args.out.as_deref(), &emit_qasm(&compiled))?;
    Ok(0)
}

fn train_cmd(args: TrainArgs) -> anyhow::Result<u8> {
    let mut file = match &args.config {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str::<TrainFile>(&text)
                .with_context(|| format!("parsing {}", p.display()))?
        }
        None => TrainFile::default(),
    };
    file.env.reward = args.reward;
    if let Some(seed) = args.seed {
        file.env.seed = seed;
        file.train.seed = seed;
    }
    if let Some(t) = args.timesteps {
        file.train.total_timesteps = t;
    }
    if file.env.max_steps == 0 {
        bail!("env.max_steps must be positive");
    }
    let circuits: Vec<Circuit> = match &file.suite.dir {
        Some(dir) => read_suite_dir(dir)?
            .into_iter()
            .map(|b| b.circuit)
            .collect(),
        None => generate_all(&suite(&file.suite.sizes, file.suite.seed))?
            .into_iter()
            .map(|b| b.circuit)
            .collect(),
    };
    let env = Env::new(file.env)?;
    let (model, log) = train(&circuits, &env, &file.train)?;
    save_model(&model, &args.out).with_context(|| format!("writing {}", args.out.display()))?;
    let log_path = args
        .log
        .unwrap_or_else(|| args.out.with_extension("log.jsonl"));
    fs::write(&log_path, log.to_jsonl())
        .with_context(|| format!("writing {}", log_path.display()))?;
    if let Some(last) = log.entries.last() {
        eprintln!(
            "trained {} steps over {} rollouts; last mean episode reward {}",
            last.timesteps,
            log.entries.len(),
            last.mean_episode_reward
                .map_or_else(|| "n/a".into(), |r| format!("{r:.4}"))
        );
    }
    Ok(0)
}

fn compare_cmd(args: CompareArgs) -> anyhow::Result<u8> {
    let models: Vec<PolicyModel> = args
        .models
        .iter()
        .map(|p| load_model(p).with_context(|| format!("loading {}", p.display())))
        .collect::<anyhow::Result<_>>()?;
    let benches = load_suite(&args.suite, args.seed)?;
    let env = device_env(
        &args.device,
        RewardKind::Fidelity,
        args.max_steps,
        args.seed,
    )?;
    let comparators: Vec<Comparator> = Baseline::ALL
        .into_iter()
        .map(Comparator::baseline)
        .collect();
    let report = compare(&models, &comparators, &benches, &env, args.seed)?;
    match &args.out {
        Some(p) => {
            fs::write(p, report.to_csv()).with_context(|| format!("writing {}", p.display()))?;
            print!("{}", report.summary());
        }
        None => {
            print!("{}", report.to_csv());
            eprint!("{}", report.summary());
        }
    }
    Ok(0)
}

fn verify_cmd(args: VerifyArgs) -> anyhow::Result<u8> {
    let a = read_circuit(&args.a)?;
    let b = read_circuit(&args.b)?;
    let layout_aware = args.layout_aware || a.has_layout() || b.has_layout();
    // The layout belongs to the second argument.
    let (a, b) = if a.has_layout() && !b.has_layout() {
        (b, a)
    } else {
        (a, b)
    };
    if equivalent(&a, &b, layout_aware, TOLERANCE)? {
        println!("equivalent");
        Ok(0)
    } else {
        println!("not equivalent");
        Ok(1)
    }
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    check_rule_table()?;
    check_commutation_table()?;
    match cli.command {
        Command::Devices(DevicesCommand::List { registry }) => devices_list(registry),
        Command::Bench(BenchCommand::Generate { out, suite, seed }) => {
            let paths = write_suite(&out, &suite.specs(seed))?;
            eprintln!("wrote {} circuits to {}", paths.len(), out.display());
            Ok(0)
        }
        Command::Features { qasm } => {
            let c = read_circuit(&qasm)?;
            println!("{CSV_HEADER}");
            println!("{}", extract_features(&c).to_csv_row());
            Ok(0)
        }
        Command::Compile(args) => compile_cmd(args),
        Command::Train(args) => train_cmd(args),
        Command::Compare(args) => compare_cmd(args),
        Command::Verify(args) => verify_cmd(args),
    }
}

/// Failures of the tool itself rather than of its input.
fn is_internal(e: &anyhow::Error) -> bool {
    matches!(
        e.downcast_ref::<Error>(),
        Some(Error::RuleValidation(_) | Error::NonFiniteLoss(_) | Error::NonUnitary(_))
    )
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(u8::from(e.use_stderr()));
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if is_internal(&e) { 2 } else { 1 })
        }
    }
}
