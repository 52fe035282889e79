use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use obsrl::data::{collect_adversarial, collect_benign_inadmissible, collect_eps_greedy, load_dataset, save_dataset};
use obsrl::envs::{make_adversarial_lock, make_binary_tree, make_comb_lock, ObservationMode};
use obsrl::harness::{
    default_output_root, eval_report, run_preset, summarize, write_summary, Algorithm, ExperimentConfig, Preset,
    RunReport,
};
use obsrl::mdp::{load_mdp, load_policy, save_mdp};
use obsrl::rng::stream;
use obsrl::{Error, Result};

#[derive(Parser)]
#[command(name = "obsrl", version, about = "Hybrid RL from observation-only offline data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build an environment and its offline dataset; writes mdp.txt and data.txt.
    GenData(GenArgs),
    /// Forward distribution matching followed by trace-model policy search.
    RunFoobar(RunArgs),
    /// Policy search with a reset model on the offline states.
    RunPsdp(RunArgs),
    /// Interactive matching then conservative policy iteration on the stationary lock.
    RunCpi(RunArgs),
    /// Interactive distribution matching on the stationary lock.
    RunInterfail(RunArgs),
    /// Separation demos on the binary tree or the one-step construction.
    Hardness(HardnessArgs),
    /// Exact coverage and divergence report of a stored policy.
    Eval(EvalArgs),
    /// Median and quartiles of per-seed record files.
    Summarize(SummarizeArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum EnvKind {
    Lock,
    AdversarialLock,
    Tree,
}

#[derive(Clone, Copy, ValueEnum)]
enum DataKind {
    EpsGreedy,
    Benign,
    Adversarial,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum, default_value = "lock")]
    env: EnvKind,
    #[arg(long, value_enum, default_value = "eps-greedy")]
    kind: DataKind,
    /// Lock transitions, or tree depth.
    #[arg(long, default_value_t = 10)]
    transitions: usize,
    #[arg(long, default_value_t = 2000)]
    samples: usize,
    /// `1 / transitions` when absent.
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    /// TOML experiment config.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    preset: Option<Preset>,
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[arg(long)]
    scale: Option<f64>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Output root; `$OBSRL_OUTPUT_DIR` or `results` when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Latent,
    Rich,
}

#[derive(Clone, Copy, ValueEnum)]
enum Construction {
    Tree,
    Onestep,
}

#[derive(Args)]
struct HardnessArgs {
    #[arg(long, value_enum, default_value = "tree")]
    construction: Construction,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    budget: Option<u64>,
    /// `random` or `breadth`.
    #[arg(long)]
    strategy: Option<String>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    mdp: PathBuf,
    #[arg(long)]
    policy: PathBuf,
    #[arg(long)]
    dataset: PathBuf,
}

#[derive(Args)]
struct SummarizeArgs {
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// Write here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load_config(args: &RunArgs, default: Preset) -> Result<ExperimentConfig> {
    let mut c = match &args.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
            ExperimentConfig::from_toml(&text)?
        }
        None => ExperimentConfig::new(args.preset.unwrap_or(default)),
    };
    if let Some(p) = args.preset {
        c.preset = p;
    }
    if let Some(s) = &args.seeds {
        c.seeds = s.clone();
    }
    if let Some(k) = args.scale {
        c.scale = k;
    }
    if let Some(m) = args.mode {
        c.lock.mode = match m {
            ModeArg::Latent => ObservationMode::Latent,
            ModeArg::Rich => ObservationMode::Rich,
        };
    }
    if let Some(o) = &args.out {
        c.output_dir = Some(o.clone());
    }
    Ok(c)
}

fn execute(c: &ExperimentConfig) -> Result<RunReport> {
    let root = c.output_dir.clone().unwrap_or_else(default_output_root);
    let report = run_preset(c, &root)?;
    println!("output {}", report.dir.display());
    println!("seeds completed {}", report.completed.len());
    for (seed, msg) in &report.failures {
        println!("seed {seed} failed: {msg}");
    }
    for r in &report.summary {
        if matches!(r.phase.as_str(), "forward" | "backward" | "cpi" | "trace-search" | "reset-solver") {
            continue;
        }
        println!(
            "{} {} {} median {} q25 {} q75 {} n {}",
            r.phase, r.step, r.metric, r.median, r.q25, r.q75, r.n
        );
    }
    if c.preset == Preset::HardnessTree {
        print_tree_headline(&report)?;
    }
    Ok(report)
}

fn print_tree_headline(report: &RunReport) -> Result<()> {
    let rows: Vec<_> = report
        .summary
        .iter()
        .filter(|r| r.phase == "trace-search" || r.phase == "reset-solver")
        .collect();
    let mut records = vec![];
    for seed in &report.completed {
        let text = std::fs::read_to_string(obsrl::harness::seed_file(&report.dir, *seed))?;
        records.extend(obsrl::harness::parse_records(&text)?);
    }
    let count = |phase: &str, metric: &str, ok: &dyn Fn(f64) -> bool| {
        let v: Vec<f64> = records
            .iter()
            .filter(|r| r.phase == phase && r.metric == metric)
            .map(|r| r.value)
            .collect();
        (v.iter().filter(|x| ok(**x)).count(), v.len())
    };
    let (far, n) = count("trace-search", "tv", &|x| x >= 0.5);
    println!("trace search runs with tv >= 1/2: {far}/{n}");
    let (rec, n) = count("reset-solver", "recovered", &|x| x == 1.0);
    println!("reset solver runs recovering the path: {rec}/{n}");
    let max_q = records
        .iter()
        .filter(|r| r.metric == "queries")
        .map(|r| r.value)
        .fold(0.0, f64::max);
    println!("largest reset query count: {max_q} ({} summary rows)", rows.len());
    Ok(())
}

fn gen_data(a: &GenArgs) -> Result<()> {
    let out = a.out.clone().unwrap_or_else(|| default_output_root().join("data"));
    std::fs::create_dir_all(&out)?;
    let eps = a.epsilon.unwrap_or(1.0 / a.transitions.max(1) as f64);
    let (mdp, data) = match a.env {
        EnvKind::Tree => {
            let (tree, data) = make_binary_tree(a.transitions, a.seed)?;
            (tree.latent_mdp()?, data)
        }
        EnvKind::Lock | EnvKind::AdversarialLock => {
            let lock = match a.env {
                EnvKind::Lock => make_comb_lock(a.transitions, a.seed, ObservationMode::Latent)?,
                _ => make_adversarial_lock(a.transitions, a.seed, ObservationMode::Latent)?,
            };
            let data = match a.kind {
                DataKind::EpsGreedy => {
                    let mut sim = lock.latent_sim(stream(a.seed, "offline-sim", 0));
                    collect_eps_greedy(&mut sim, "comb-lock", &lock.optimal_policy(), eps, a.samples, a.seed)?
                }
                DataKind::Benign => collect_benign_inadmissible(&lock, a.samples, a.seed)?,
                DataKind::Adversarial => collect_adversarial(&lock, a.samples, a.seed)?,
            };
            ((*lock.mdp).clone(), data)
        }
    };
    save_mdp(&mdp, &out.join("mdp.txt"))?;
    save_dataset(&data, &out.join("data.txt"))?;
    println!("wrote {} and {}", out.join("mdp.txt").display(), out.join("data.txt").display());
    Ok(())
}

fn eval(a: &EvalArgs) -> Result<()> {
    let mdp = load_mdp(&a.mdp)?;
    let policy = load_policy(&a.policy)?;
    let data = load_dataset::<usize>(&a.dataset)?;
    for (k, v) in eval_report(&mdp, &policy, &data)? {
        println!("{k} {v}");
    }
    Ok(())
}

fn summarize_cmd(a: &SummarizeArgs) -> Result<()> {
    let text = write_summary(&summarize(&a.inputs)?)?;
    match &a.out {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn with_algorithms(args: &RunArgs, default: Preset, algorithms: &[Algorithm]) -> Result<ExperimentConfig> {
    let mut c = load_config(args, default)?;
    c.algorithms = Some(algorithms.to_vec());
    Ok(c)
}

fn run(cli: Cli) -> Result<bool> {
    let report = match cli.command {
        Command::GenData(a) => return gen_data(&a).map(|_| true),
        Command::Eval(a) => return eval(&a).map(|_| true),
        Command::Summarize(a) => return summarize_cmd(&a).map(|_| true),
        Command::RunFoobar(a) => execute(&with_algorithms(&a, Preset::LockAdmissible, &[Algorithm::Foobar])?)?,
        Command::RunPsdp(a) => execute(&with_algorithms(&a, Preset::LockBenign, &[Algorithm::PsdpReset])?)?,
        Command::RunCpi(a) => execute(&with_algorithms(
            &a,
            Preset::StationaryLock,
            &[Algorithm::InterFail, Algorithm::Cpi],
        )?)?,
        Command::RunInterfail(a) => execute(&with_algorithms(&a, Preset::StationaryLock, &[Algorithm::InterFail])?)?,
        Command::Hardness(a) => {
            let preset = match a.construction {
                Construction::Tree => Preset::HardnessTree,
                Construction::Onestep => Preset::HardnessOnestep,
            };
            let mut c = load_config(&a.run, preset)?;
            c.preset = preset;
            if let Some(d) = a.depth {
                c.tree.depth = d;
            }
            if let Some(r) = a.runs {
                c.tree.runs = r;
            }
            if let Some(b) = a.budget {
                c.tree.budget = b;
            }
            if let Some(s) = a.strategy {
                c.tree.strategy = s;
            }
            execute(&c)?
        }
    };
    Ok(report.failures.is_empty())
}

fn is_config_error(e: &Error) -> bool {
    match e {
        Error::Config(_) | Error::Parse(_) | Error::DatasetLoad { .. } => true,
        Error::Phase { source, .. } => is_config_error(source),
        _ => false,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            if is_config_error(&e) {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
