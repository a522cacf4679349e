//! `jrp`: simulate online policies, solve instances offline, play the
//! adversary games and run seeded ALG/OPT experiments.
//!
//! Exit codes: 0 success, 1 usage, 2 infeasible input, 3 exact-solver cap
//! refusal.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use jrp_core::adversary::{self, GameReport};
use jrp_core::experiment::{self, records_csv, summarize, summary_csv, CSV_HEADER};
use jrp_core::model::parse_instances;
use jrp_core::offline::{pregular_opt_result, BRUTE_FORCE_CAP};
use jrp_core::online::{policy_by_name, simulate_instance, POLICY_NAMES};
use jrp_core::{
    block_partition_greedy, brute_force_opt, threshold_dp_opt, Cost, ExperimentConfig, Game, GenKind, GenSpec,
    Instance, OptChoice, OptMethod, OptResult, SimOptions, SolverError, Time,
};

#[derive(Parser)]
#[command(
    name = "jrp",
    version,
    about = "Online joint replenishment and single machine scheduling"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run an online policy and print its cost.
    Simulate(SimulateArgs),
    /// Compute the offline optimum.
    Solve(SolveArgs),
    /// Generate instances and compare ALG with OPT.
    Experiment(ExperimentArgs),
    /// Play an adaptive lower-bound game against a policy.
    Adversary(AdversaryArgs),
    /// Print generated instances in the text format.
    Generate(GenerateArgs),
}

/// Where instances come from: a file, an inline instance, or a generator.
#[derive(Args)]
struct InputArgs {
    /// Instance file: one `K;r1,r2,...` per line (`#` comments), or JSON.
    file: Option<PathBuf>,
    /// Inline instance, e.g. `3;0,5`.
    #[arg(long, conflicts_with = "file")]
    instance: Option<String>,
    /// Generator kind, used when no file or inline instance is given.
    #[arg(long, value_parser = parse_kind)]
    kind: Option<GenKind>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    p: Option<Time>,
    #[arg(long)]
    beta: Option<f64>,
    /// Replenishment cost; overrides the cost stored in a file.
    #[arg(long = "K")]
    k: Option<Cost>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, default_value = "algorithm1", value_parser = clap::builder::PossibleValuesParser::new(POLICY_NAMES))]
    policy: String,
    /// Also print the decision log.
    #[arg(long)]
    trace: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    input: InputArgs,
    /// auto, brute_force, threshold_dp, greedy_heuristic or closed_form.
    #[arg(long, default_value = "auto")]
    method: String,
    /// Also print the optimal start times.
    #[arg(long)]
    starts: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long, default_value = "geometric", value_parser = parse_kind)]
    kind: GenKind,
    #[arg(long, value_delimiter = ',', default_value = "100")]
    n: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    p: Vec<Time>,
    #[arg(long, value_delimiter = ',', default_value = "0.01")]
    beta: Vec<f64>,
    #[arg(long = "K", value_delimiter = ',', default_value = "1")]
    k: Vec<Cost>,
    #[arg(long, default_value_t = 100)]
    replication: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// auto, brute_force, threshold_dp, greedy_heuristic or closed_form.
    #[arg(long = "opt-method", default_value = "auto")]
    opt_method: String,
    #[arg(long, default_value = "algorithm1", value_parser = clap::builder::PossibleValuesParser::new(POLICY_NAMES))]
    policy: String,
    /// Per-instance CSV; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-cell summary CSV; printed to standard error when absent.
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Worker threads. Results do not depend on it.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Fill the runtime_ms column with wall-clock times.
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct AdversaryArgs {
    #[arg(long, value_parser = parse_game)]
    game: Game,
    #[arg(long, default_value = "algorithm1", value_parser = clap::builder::PossibleValuesParser::new(POLICY_NAMES))]
    policy: String,
    /// One or more costs, e.g. `2` or `1,2,5` or `1..100`.
    #[arg(long = "K", default_value = "1", value_parser = parse_cost_range)]
    k: CostRange,
    /// Idle time units before a policy is declared divergent.
    #[arg(long)]
    horizon: Option<Time>,
    /// Also print the game transcript.
    #[arg(long)]
    trace: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_parser = parse_kind)]
    kind: GenKind,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    p: Option<Time>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long = "K", default_value_t = 1)]
    k: Cost,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of instances; seeds are derived from `--seed`.
    #[arg(long, default_value_t = 1)]
    count: u64,
    #[arg(long)]
    json: bool,
}

#[derive(Clone)]
struct CostRange(Vec<Cost>);

fn parse_kind(s: &str) -> Result<GenKind, String> {
    s.parse()
}

fn parse_game(s: &str) -> Result<Game, String> {
    s.parse()
}

fn parse_cost_range(s: &str) -> Result<CostRange, String> {
    let bad = || format!("expected a cost list like 2, 1,2,5 or 1..100, got {s:?}");
    let costs = if let Some((a, b)) = s.split_once("..") {
        let a: Cost = a.trim().parse().map_err(|_| bad())?;
        let b: Cost = b.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
        (a..=b).collect()
    } else {
        s.split(',')
            .map(|x| x.trim().parse::<Cost>().map_err(|_| bad()))
            .collect::<Result<Vec<_>, _>>()?
    };
    if costs.is_empty() {
        return Err(bad());
    }
    Ok(CostRange(costs))
}

/// An error with the exit code it maps to.
struct Failure {
    code: u8,
    err: anyhow::Error,
}

impl Failure {
    fn usage(err: impl Into<anyhow::Error>) -> Self {
        Failure {
            code: 1,
            err: err.into(),
        }
    }
    fn input(err: impl Into<anyhow::Error>) -> Self {
        Failure {
            code: 2,
            err: err.into(),
        }
    }
    fn cap(err: impl Into<anyhow::Error>) -> Self {
        Failure {
            code: 3,
            err: err.into(),
        }
    }
}

impl From<SolverError> for Failure {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::CapExceeded { .. } => Failure::cap(e),
            _ => Failure::input(e),
        }
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn read_instances(args: &InputArgs) -> CliResult<Vec<Instance>> {
    let mut out = if let Some(path) = &args.file {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display()))
            .map_err(Failure::input)?;
        parse_file(&text).map_err(Failure::input)?
    } else if let Some(s) = &args.instance {
        vec![s.parse::<Instance>().map_err(Failure::input)?]
    } else if let Some(kind) = args.kind {
        let n = args.n.ok_or_else(|| Failure::usage(anyhow!("--kind needs --n")))?;
        let spec = GenSpec {
            kind,
            n,
            p: args.p,
            k: args.k.unwrap_or(1),
            beta: args.beta,
            seed: args.seed,
        };
        vec![spec.generate().map_err(Failure::input)?]
    } else {
        return Err(Failure::usage(anyhow!(
            "give an instance file, --instance, or a generator (--kind and --n)"
        )));
    };
    if let (Some(k), true) = (args.k, args.kind.is_none()) {
        out = out
            .iter()
            .map(|i| i.with_cost(k))
            .collect::<Result<_, _>>()
            .map_err(Failure::input)?;
    }
    if out.is_empty() {
        return Err(Failure::input(anyhow!("no instances in input")));
    }
    Ok(out)
}

fn parse_file(text: &str) -> anyhow::Result<Vec<Instance>> {
    let trimmed = text.trim_start();
    if trimmed.starts_with('[') {
        Ok(serde_json::from_str(trimmed)?)
    } else if trimmed.starts_with('{') {
        Ok(vec![serde_json::from_str(trimmed)?])
    } else {
        Ok(parse_instances(text)?)
    }
}

fn emit(out: Option<&Path>, text: &str) -> CliResult {
    match out {
        Some(path) => fs::write(path, text)
            .with_context(|| format!("writing {}", path.display()))
            .map_err(Failure::input),
        None => {
            print!("{text}");
            std::io::stdout().flush().ok();
            Ok(())
        }
    }
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(" ")
}

fn cmd_simulate(args: SimulateArgs) -> CliResult {
    let instances = read_instances(&args.input)?;
    let mut text = String::from("policy,n,K,alg_cost,alg_q,f_max,replenishments\n");
    let mut logs = String::new();
    for inst in &instances {
        let mut policy = policy_by_name(&args.policy, inst.k())
            .ok_or_else(|| Failure::usage(anyhow!("unknown policy {:?}", args.policy)))?;
        // Idle steps are only worth stepping through when they are logged.
        let options = SimOptions {
            skip_idle: !args.trace,
            ..Default::default()
        };
        let out = simulate_instance(inst, &mut policy, options).map_err(Failure::input)?;
        text.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            args.policy,
            inst.len(),
            inst.k(),
            out.cost.total,
            out.cost.repl_count,
            out.cost.f_max,
            join(&out.solution.replenishments)
        ));
        if args.trace {
            logs.push_str(&out.trace.to_log());
        }
    }
    emit(args.out.as_deref(), &text)?;
    if args.trace {
        print!("{logs}");
    }
    Ok(())
}

fn solve_one(inst: &Instance, method: &str) -> CliResult<OptResult> {
    let method = if method == "auto" {
        if inst.len() <= BRUTE_FORCE_CAP {
            OptMethod::BruteForce
        } else {
            OptMethod::ThresholdDp
        }
    } else {
        method.parse::<OptMethod>().map_err(|e| Failure::usage(anyhow!(e)))?
    };
    Ok(match method {
        OptMethod::BruteForce => brute_force_opt(inst)?,
        OptMethod::ThresholdDp => threshold_dp_opt(inst)?,
        OptMethod::GreedyHeuristic => block_partition_greedy(inst)?,
        OptMethod::ClosedForm => {
            let p = if inst.len() > 1 {
                inst.releases()[1] - inst.releases()[0]
            } else {
                1
            };
            if inst.first_release() != 0 || !inst.is_p_regular(p) {
                return Err(Failure::input(anyhow!(
                    "closed_form needs releases 0, p, 2p, ...; got {inst}"
                )));
            }
            pregular_opt_result(inst.len() as i64, p, inst.k())?
        }
    })
}

fn cmd_solve(args: SolveArgs) -> CliResult {
    let instances = read_instances(&args.input)?;
    let mut text = String::from("method,n,K,cost,q,replenishments");
    text.push_str(if args.starts { ",starts\n" } else { "\n" });
    for inst in &instances {
        let res = solve_one(inst, &args.method)?;
        text.push_str(&format!(
            "{},{},{},{},{},{}",
            res.method,
            inst.len(),
            inst.k(),
            res.cost,
            res.q,
            join(&res.solution.replenishments)
        ));
        if args.starts {
            text.push_str(&format!(",{}", join(&res.solution.starts)));
        }
        text.push('\n');
    }
    emit(args.out.as_deref(), &text)
}

fn cmd_experiment(args: ExperimentArgs) -> CliResult {
    let opt: OptChoice = args
        .opt_method
        .parse()
        .map_err(|e: String| Failure::usage(anyhow!(e)))?;
    if args.jobs == 0 {
        return Err(Failure::usage(anyhow!("--jobs must be at least 1")));
    }
    let cfg = ExperimentConfig {
        kind: args.kind,
        n: args.n,
        p: args.p,
        beta: args.beta,
        k: args.k,
        replication: args.replication,
        seed: args.seed,
        opt,
        policy: args.policy,
        timing: args.timing,
    };
    let records = experiment::run_experiment(&cfg, args.jobs).map_err(|e| {
        if e.is_cap_refusal() {
            Failure::cap(e)
        } else {
            Failure::input(e)
        }
    })?;
    debug_assert!(records_csv(&records).starts_with(CSV_HEADER));
    emit(args.out.as_deref(), &records_csv(&records))?;
    let summary = summary_csv(&summarize(&records));
    match &args.summary {
        Some(path) => emit(Some(path), &summary),
        None => {
            eprint!("{summary}");
            Ok(())
        }
    }
}

fn cmd_adversary(args: AdversaryArgs) -> CliResult {
    let mut text = format!("{}\n", GameReport::CSV_HEADER);
    let mut transcripts = String::new();
    for &k in &args.k.0 {
        let mut policy = policy_by_name(&args.policy, k)
            .ok_or_else(|| Failure::usage(anyhow!("unknown policy {:?}", args.policy)))?;
        let horizon = args.horizon.unwrap_or_else(|| adversary::default_horizon(k));
        let rep = adversary::play(args.game, &mut policy, k, horizon).map_err(Failure::input)?;
        text.push_str(&rep.csv_row());
        text.push('\n');
        if args.trace {
            transcripts.push_str(&format!("# {} vs {} K={k}\n", rep.game, rep.policy));
            for line in &rep.transcript {
                transcripts.push_str(line);
                transcripts.push('\n');
            }
        }
    }
    emit(args.out.as_deref(), &text)?;
    print!("{transcripts}");
    Ok(())
}

fn cmd_generate(args: GenerateArgs) -> CliResult {
    let mut instances = Vec::new();
    for i in 0..args.count {
        let seed = if args.count == 1 {
            args.seed
        } else {
            jrp_core::generators::derive_seed(args.seed, i)
        };
        let spec = GenSpec {
            kind: args.kind,
            n: args.n,
            p: args.p,
            k: args.k,
            beta: args.beta,
            seed,
        };
        instances.push(spec.generate().map_err(Failure::input)?);
    }
    let text = if args.json {
        serde_json::to_string_pretty(&instances).map_err(Failure::input)? + "\n"
    } else {
        instances.iter().map(|i| format!("{i}\n")).collect()
    };
    emit(None, &text)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let res = match cli.cmd {
        Cmd::Simulate(a) => cmd_simulate(a),
        Cmd::Solve(a) => cmd_solve(a),
        Cmd::Experiment(a) => cmd_experiment(a),
        Cmd::Adversary(a) => cmd_adversary(a),
        Cmd::Generate(a) => cmd_generate(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.err);
            ExitCode::from(f.code)
        }
    }
}
