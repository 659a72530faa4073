use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use tracing_subscriber::EnvFilter;

use mapf_dp::ame::{solve, AmeOptions, SearchLimits, SolveOutcome, Solver};
use mapf_dp::bench::{generate_instances, run_bench, BenchConfig, BenchError, Experiment};
use mapf_dp::io::{read_instance, write_instance, DependencySummary, PlanFile};
use mapf_dp::model::{validate_plan, Instance};
use mapf_dp::sim::{monte_carlo, run_execution, ExecConfig, Policy, SimError};

const EXIT_NO_SOLUTION: u8 = 2;
const EXIT_TIMEOUT: u8 = 3;
const EXIT_INVALID: u8 = 4;

#[derive(Parser, Debug)]
#[command(name = "mapf-dp", version, about = "Plan, validate and execute multi-agent paths under delay probabilities")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Master seed (instance generation, simulation).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Wall-clock limit per solve, in seconds.
    #[arg(long, global = true)]
    time_limit: Option<f64>,
    /// Monte Carlo runs per plan and policy.
    #[arg(long, global = true)]
    runs: Option<usize>,
    /// Execution policies, comma separated (mcp, fsp, dummy).
    #[arg(long, global = true, value_delimiter = ',')]
    policy: Vec<Policy>,
    /// Solvers, comma separated (ame, adapted-cbs).
    #[arg(long, global = true, value_delimiter = ',')]
    solver: Vec<Solver>,
    /// Report dependency-graph and message statistics.
    #[arg(long, global = true)]
    emit_deps: bool,
    /// Refresh every agent's labels after each re-plan (AME only).
    #[arg(long, global = true)]
    recompute_labels: bool,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Bench/generate configuration file (TOML); flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write map and agents files for an experiment's instance set.
    Generate {
        #[arg(long, default_value = "exp1")]
        experiment: Experiment,
    },
    /// Solve an instance and write its plan file.
    Solve { map: PathBuf, agents: PathBuf },
    /// Check a plan file against its instance.
    Validate { map: PathBuf, agents: PathBuf, plan: PathBuf },
    /// Execute a plan repeatedly and report statistics.
    Simulate {
        map: PathBuf,
        agents: PathBuf,
        plan: PathBuf,
        /// Also write the step-by-step trace of run 0 (first policy) as CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Run an experiment and write results.csv and report.txt.
    Bench {
        #[arg(long, default_value = "exp1")]
        experiment: Experiment,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("warn")))
        .with_writer(std::io::stderr)
        .init();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    let g = &cli.global;
    match &cli.command {
        Command::Generate { experiment } => cmd_generate(g, *experiment),
        Command::Solve { map, agents } => cmd_solve(g, map, agents),
        Command::Validate { map, agents, plan } => cmd_validate(g, map, agents, plan),
        Command::Simulate { map, agents, plan, trace } => cmd_simulate(g, map, agents, plan, trace.as_deref()),
        Command::Bench { experiment } => cmd_bench(g, *experiment),
    }
}

/// Preset for the experiment named in the file (or `fallback`), overlaid
/// with the file's keys, then with command-line flags.
fn load_config(g: &Global, fallback: Experiment) -> Result<BenchConfig> {
    let mut config = match &g.config {
        None => BenchConfig::preset(fallback),
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let user: toml::Table = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
            let experiment = match user.get("experiment") {
                Some(v) => v.as_str().context("experiment must be a string")?.parse()?,
                None => fallback,
            };
            let mut merged = toml::Table::try_from(BenchConfig::preset(experiment))?;
            merged.extend(user);
            toml::Value::Table(merged).try_into().with_context(|| format!("invalid config {}", path.display()))?
        }
    };
    if let Some(seed) = g.seed {
        config.seed = seed;
    }
    if let Some(t) = g.time_limit {
        config.time_limit_secs = t;
    }
    if let Some(n) = g.runs {
        config.n_runs = n;
    }
    if !g.policy.is_empty() {
        config.policies = g.policy.clone();
    }
    if !g.solver.is_empty() {
        config.solvers = g.solver.clone();
    }
    config.recompute_labels |= g.recompute_labels;
    config.validate()?;
    Ok(config)
}

fn out_dir(g: &Global) -> Result<PathBuf> {
    let dir = g.out.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn single<T: Copy + std::fmt::Debug>(values: &[T], default: T, what: &str) -> Result<T> {
    match values {
        [] => Ok(default),
        [v] => Ok(*v),
        _ => bail!("exactly one {what} expected, got {values:?}"),
    }
}

fn cmd_generate(g: &Global, experiment: Experiment) -> Result<u8> {
    let config = load_config(g, experiment)?;
    let dir = out_dir(g)?;
    for bi in generate_instances(&config)? {
        let stem = format!("{}-a{}-t{}", bi.label, bi.agents, bi.t_max);
        let map = dir.join(format!("{stem}.map"));
        let agents = dir.join(format!("{stem}.agents"));
        write_instance(&bi.instance, &map, &agents)?;
        println!("{}  {}", bi.instance.checksum(), stem);
    }
    Ok(0)
}

fn cmd_solve(g: &Global, map: &Path, agents: &Path) -> Result<u8> {
    let instance = read_instance(map, agents)?;
    let solver = single(&g.solver, Solver::Ame, "solver")?;
    let limits =
        SearchLimits { time: Some(Duration::from_secs_f64(g.time_limit.unwrap_or(60.0))), ..SearchLimits::default() };
    let report = solve(&instance, solver, &limits, AmeOptions { recompute_labels: g.recompute_labels });
    println!("instance {}", instance.checksum());
    println!(
        "solver={} outcome={} hl_expanded={} ll_expanded={} runtime={:.3}s",
        solver,
        report.outcome.name(),
        report.stats.hl_expanded,
        report.stats.ll_expanded,
        report.stats.runtime.as_secs_f64()
    );
    match report.outcome {
        SolveOutcome::NoSolution => return Ok(EXIT_NO_SOLUTION),
        SolveOutcome::Timeout => return Ok(EXIT_TIMEOUT),
        SolveOutcome::Solved => {}
    }
    let plan = report.plan.as_ref().expect("solved report carries a plan");
    if let Some(a) = report.approx_makespan {
        println!("approx_makespan={a:.4}");
    }
    println!("max_index={} sum_index={}", plan.max_last_index(), plan.sum_last_index());
    let mut file = PlanFile::new(&instance, solver.name(), plan);
    if g.emit_deps {
        file = file.with_dependencies()?;
        print_deps(file.dependencies.as_ref().expect("just computed"));
    }
    let stem = agents.file_stem().and_then(|s| s.to_str()).unwrap_or("plan");
    let path = out_dir(g)?.join(format!("{stem}.plan.json"));
    file.write(&path)?;
    println!("plan {}", path.display());
    Ok(0)
}

fn print_deps(d: &DependencySummary) {
    println!(
        "dependency edges={} inter_agent={} reduced={} reduced_inter_agent={} mcp_messages={} fsp_messages={}",
        d.edges, d.inter_agent_edges, d.reduced_edges, d.reduced_inter_agent_edges, d.mcp_messages, d.fsp_messages
    );
}

/// Loads the instance and the plan file, checking that they belong together.
fn load_plan(map: &Path, agents: &Path, plan: &Path) -> Result<(Instance, mapf_dp::model::Plan), u8> {
    let instance = read_instance(map, agents).map_err(|e| {
        eprintln!("error: {e}");
        1
    })?;
    let file = PlanFile::read(plan).map_err(|e| {
        eprintln!("error: {e}");
        1
    })?;
    let plan = file.plan_for(&instance).map_err(|e| {
        eprintln!("invalid: {e}");
        EXIT_INVALID
    })?;
    Ok((instance, plan))
}

fn cmd_validate(g: &Global, map: &Path, agents: &Path, plan: &Path) -> Result<u8> {
    let (instance, plan) = match load_plan(map, agents, plan) {
        Ok(v) => v,
        Err(code) => return Ok(code),
    };
    let report = match validate_plan(&instance, &plan) {
        Ok(r) => r,
        Err(e) => {
            println!("invalid: {e}");
            return Ok(EXIT_INVALID);
        }
    };
    if !report.is_valid() {
        println!("invalid: {} conflicts", report.conflicts.len());
        for c in &report.conflicts {
            println!(
                "  {:?} agents {} and {} at vertex {} index {}",
                c.kind, c.agents.0, c.agents.1, c.vertex, c.index
            );
        }
        return Ok(EXIT_INVALID);
    }
    println!("valid: {} agents, max_index={}", plan.num_agents(), plan.max_last_index());
    if g.emit_deps {
        print_deps(&DependencySummary::for_plan(&plan)?);
    }
    Ok(0)
}

fn cmd_simulate(g: &Global, map: &Path, agents: &Path, plan: &Path, trace: Option<&Path>) -> Result<u8> {
    let (instance, plan) = match load_plan(map, agents, plan) {
        Ok(v) => v,
        Err(code) => return Ok(code),
    };
    let policies = if g.policy.is_empty() { vec![Policy::Mcp] } else { g.policy.clone() };
    let runs = g.runs.unwrap_or(200);
    let seed = g.seed.unwrap_or(1);
    for &policy in &policies {
        match monte_carlo(&instance, &plan, policy, runs, seed, ExecConfig::default()) {
            Ok(stats) => println!("{stats}"),
            Err(e @ (SimError::InvalidPlan(_) | SimError::Plan(_))) => {
                println!("invalid: {e}");
                return Ok(EXIT_INVALID);
            }
            Err(e) => return Err(e.into()),
        }
    }
    if let Some(path) = trace {
        let config = ExecConfig { record_trace: true, ..ExecConfig::default() };
        let t = run_execution(&instance, &plan, policies[0], seed, config)?;
        fs::write(path, t.dump(&plan)).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(0)
}

fn cmd_bench(g: &Global, experiment: Experiment) -> Result<u8> {
    let config = load_config(g, experiment)?;
    let report = match run_bench(&config) {
        Ok(r) => r,
        Err(e @ BenchError::InvalidPlan { .. }) => {
            eprintln!("invalid: {e}");
            return Ok(EXIT_INVALID);
        }
        Err(e) => return Err(e.into()),
    };
    let text = report.to_text();
    print!("{text}");
    let dir = out_dir(g)?;
    fs::write(dir.join("results.csv"), report.to_csv()).context("writing results.csv")?;
    fs::write(dir.join("report.txt"), text).context("writing report.txt")?;
    Ok(0)
}
