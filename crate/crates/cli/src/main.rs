use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use rkaco::bench::{read_references, run_bench, write_csv};
use rkaco::milp::{build_linearized, build_original, write_lp, ModelKind};
use rkaco::oracle::brute_force;
use rkaco::par::Exec;
use rkaco::qlearn::{ParamSpace, QlConfig};
use rkaco::{
    generate_instance, parse_instance, solve, AssignRule, Budget, CostShape, PairCounting, Problem,
    ProblemOptions, RunConfig,
};

#[derive(Parser)]
#[command(name = "rkaco", version, about = "Random-key ACO for variable-sized bin packing with linked items")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance.
    Solve(SolveArgs),
    /// Solve every instance in a directory and write a CSV report.
    Bench(BenchArgs),
    /// Generate a random instance.
    Gen(GenArgs),
    /// Write the quadratic or linearized model in LP format.
    ExportLp(ExportArgs),
    /// Find an optimal packing by exhaustive search (at most 10 items).
    Oracle(OracleArgs),
}

#[derive(Args)]
struct ModelOpts {
    /// Optional TOML file with `pair_counting`, `assign_rule`, `t_max`,
    /// a `[ql]` table and a `[params]` table of value lists.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    assign_rule: Option<AssignRule>,
    #[arg(long)]
    pair_counting: Option<PairCounting>,
}

#[derive(Args)]
struct RunOpts {
    /// Wall-clock limit in seconds.
    #[arg(long, default_value_t = 10.0)]
    time_limit: f64,
    /// Run a fixed number of generations per worker instead of a time limit.
    #[arg(long, conflicts_with = "time_limit")]
    generations: Option<u64>,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    pool_size: usize,
    /// Budget fraction at which the search restarts (1 disables it).
    #[arg(long, default_value_t = 0.5)]
    restart_frac: f64,
    #[arg(long)]
    no_cache: bool,
    /// Stop once this objective is reached.
    #[arg(long)]
    target: Option<f64>,
    /// Decode batches on the calling thread only.
    #[arg(long)]
    sequential: bool,
    #[command(flatten)]
    model: ModelOpts,
}

#[derive(Args)]
struct SolveArgs {
    instance: PathBuf,
    #[command(flatten)]
    run: RunOpts,
    /// Write the best packing here.
    #[arg(long)]
    dump_solution: Option<PathBuf>,
    /// Write the event log here.
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    dir: PathBuf,
    #[arg(long, default_value_t = 1)]
    runs: usize,
    /// CSV with columns instance,bks,lb[,bkg].
    #[arg(long = "ref")]
    references: Option<PathBuf>,
    /// Report path; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Extension of the instance files to pick up.
    #[arg(long, default_value = "txt")]
    ext: String,
    #[command(flatten)]
    run: RunOpts,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    m: usize,
    #[arg(long)]
    d: usize,
    #[arg(long, default_value = "linear")]
    shape: CostShape,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExportArgs {
    instance: PathBuf,
    #[arg(long, default_value = "linearized")]
    model: ModelKind,
    #[arg(long)]
    out: PathBuf,
    /// Leave out diagonal and zero-cost linearization variables.
    #[arg(long)]
    prune_z: bool,
    #[arg(long)]
    pair_counting: Option<PairCounting>,
}

#[derive(Args)]
struct OracleArgs {
    instance: PathBuf,
    #[arg(long)]
    pair_counting: Option<PairCounting>,
    #[arg(long)]
    dump_solution: Option<PathBuf>,
}

/// Bad input: unreadable or malformed files, invalid settings.
#[derive(Debug)]
struct InputError(String);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

fn input_err(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(InputError(msg.into()))
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    pair_counting: Option<PairCounting>,
    assign_rule: Option<AssignRule>,
    t_max: Option<usize>,
    #[serde(default)]
    ql: QlTable,
    #[serde(default)]
    params: ParamsTable,
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct QlTable {
    alpha: Option<f64>,
    gamma: Option<f64>,
    epsilon0: Option<f64>,
    epsilon_min: Option<f64>,
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamsTable {
    archive_size: Option<Vec<usize>>,
    ants: Option<Vec<usize>>,
    q: Option<Vec<f64>>,
    xi: Option<Vec<f64>>,
}

impl ParamsTable {
    fn is_empty(&self) -> bool {
        self.archive_size.is_none() && self.ants.is_none() && self.q.is_none() && self.xi.is_none()
    }
}

struct Settings {
    options: ProblemOptions,
    ql: QlConfig,
    params: ParamsTable,
}

impl Settings {
    fn load(opts: &ModelOpts) -> Result<Self> {
        let file = match &opts.config {
            Some(path) => {
                let text = read_text(path)?;
                toml::from_str::<ConfigFile>(&text)
                    .map_err(|e| input_err(format!("{}: {e}", path.display())))?
            }
            None => ConfigFile::default(),
        };
        let defaults = ProblemOptions::default();
        let options = ProblemOptions {
            pair_counting: opts.pair_counting.or(file.pair_counting).unwrap_or(defaults.pair_counting),
            assign_rule: opts.assign_rule.or(file.assign_rule).unwrap_or(defaults.assign_rule),
            t_max: file.t_max.unwrap_or(defaults.t_max),
        };
        let d = QlConfig::default();
        let ql = QlConfig {
            alpha: file.ql.alpha.unwrap_or(d.alpha),
            gamma: file.ql.gamma.unwrap_or(d.gamma),
            epsilon0: file.ql.epsilon0.unwrap_or(d.epsilon0),
            epsilon_min: file.ql.epsilon_min.unwrap_or(d.epsilon_min),
        };
        ql.validate().map_err(input_err)?;
        Ok(Settings {
            options,
            ql,
            params: file.params,
        })
    }

    /// Parameter grid for an instance with `n` items, or `None` to let the
    /// solver use its default.
    fn space(&self, n: usize) -> Result<Option<ParamSpace>> {
        if self.params.is_empty() {
            return Ok(None);
        }
        let d = ParamSpace::for_items(n);
        let p = &self.params;
        let space = ParamSpace {
            archive_size: p.archive_size.clone().unwrap_or(d.archive_size),
            ants: p.ants.clone().unwrap_or(d.ants),
            q: p.q.clone().unwrap_or(d.q),
            xi: p.xi.clone().unwrap_or(d.xi),
        };
        space.validate().map_err(input_err)?;
        Ok(Some(space))
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| input_err(format!("{}: {e}", path.display())))
}

fn load_problem(path: &Path, options: ProblemOptions) -> Result<Problem> {
    let text = read_text(path)?;
    let inst = parse_instance(&text).map_err(|e| input_err(format!("{}: {e}", path.display())))?;
    Ok(Problem::new(inst, options))
}

fn run_config(run: &RunOpts, settings: &Settings, n: usize) -> Result<RunConfig> {
    let budget = match run.generations {
        Some(g) => Budget::Generations(g),
        None if run.time_limit.is_finite() && run.time_limit > 0.0 => {
            Budget::Time(Duration::from_secs_f64(run.time_limit))
        }
        None => return Err(input_err("--time-limit must be positive")),
    };
    let cfg = RunConfig {
        budget,
        workers: run.workers,
        seed: run.seed,
        pool_size: run.pool_size,
        restart_fraction: run.restart_frac,
        cache: !run.no_cache,
        ql: settings.ql,
        space: settings.space(n)?,
        target: run.target,
        exec: if run.sequential { Exec::Sequential } else { Exec::Parallel },
        ..RunConfig::default()
    };
    cfg.validate().map_err(input_err)?;
    Ok(cfg)
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => io::stdout().write_all(text.as_bytes()).context("writing to standard output"),
    }
}

fn cmd_solve(args: SolveArgs) -> Result<()> {
    let settings = Settings::load(&args.run.model)?;
    let problem = load_problem(&args.instance, settings.options)?;
    let cfg = run_config(&args.run, &settings, problem.n())?;
    let out = solve(&problem, &cfg);

    if let Some(path) = &args.dump_solution {
        write_output(Some(path), &out.best.dump(&problem))?;
    }
    if let Some(path) = &args.log {
        let mut text = out.log_lines().join("\n");
        text.push('\n');
        write_output(Some(path), &text)?;
    }
    let summary = format!(
        "objective: {}\nbins: {}\ntime_to_best_s: {:.6}\ngenerations: {}\nrestarts: {}\n",
        out.objective(),
        out.best.num_bins(),
        out.time_to_best_s,
        out.generations.iter().sum::<u64>(),
        out.restarts
    );
    write_output(None, &summary)
}

fn cmd_bench(args: BenchArgs) -> Result<()> {
    if args.runs == 0 {
        return Err(input_err("--runs must be positive"));
    }
    let settings = Settings::load(&args.run.model)?;
    let entries = fs::read_dir(&args.dir).map_err(|e| input_err(format!("{}: {e}", args.dir.display())))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == args.ext.as_str()))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(input_err(format!("no .{} instances in {}", args.ext, args.dir.display())));
    }

    let mut instances = Vec::with_capacity(paths.len());
    for path in &paths {
        let name = path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        instances.push((name, load_problem(path, settings.options)?));
    }
    let refs = match &args.references {
        Some(path) => {
            let file = fs::File::open(path).map_err(|e| input_err(format!("{}: {e}", path.display())))?;
            let mut refs = read_references(file).map_err(|e| input_err(format!("{}: {e}", path.display())))?;
            // let references name instances with or without the extension
            for (name, _) in &instances {
                let stem = Path::new(name).file_stem().map(|s| s.to_string_lossy().into_owned());
                if let Some(r) = stem.and_then(|s| refs.get(&s).copied()) {
                    refs.entry(name.clone()).or_insert(r);
                }
            }
            refs
        }
        None => Default::default(),
    };

    let n_max = instances.iter().map(|(_, p)| p.n()).max().unwrap_or(1);
    let cfg = run_config(&args.run, &settings, n_max)?;
    let cfg = RunConfig {
        space: if settings.params.is_empty() { None } else { cfg.space },
        ..cfg
    };
    let report = run_bench(&instances, &cfg, args.runs, &refs, cfg.exec);
    let mut buf = Vec::new();
    write_csv(&report, &mut buf)?;
    write_output(args.out.as_deref(), &String::from_utf8(buf)?)
}

fn cmd_gen(args: GenArgs) -> Result<()> {
    if args.n == 0 || args.m == 0 || args.d == 0 {
        return Err(input_err("--n, --m and --d must be positive"));
    }
    let inst = generate_instance(args.n, args.m, args.d, args.shape, args.seed);
    write_output(args.out.as_deref(), &inst.to_text())
}

fn cmd_export(args: ExportArgs) -> Result<()> {
    let counting = args.pair_counting.unwrap_or_default();
    let text = read_text(&args.instance)?;
    let inst = parse_instance(&text).map_err(|e| input_err(format!("{}: {e}", args.instance.display())))?;
    let model = match args.model {
        ModelKind::Original => build_original(&inst, counting),
        ModelKind::Linearized => build_linearized(&inst, counting, args.prune_z),
    };
    let file = fs::File::create(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let mut w = io::BufWriter::new(file);
    write_lp(&model, &mut w)?;
    w.flush()?;
    Ok(())
}

fn cmd_oracle(args: OracleArgs) -> Result<()> {
    let options = ProblemOptions {
        pair_counting: args.pair_counting.unwrap_or_default(),
        ..Default::default()
    };
    let problem = load_problem(&args.instance, options)?;
    let opt = brute_force(&problem).map_err(|e| input_err(e.to_string()))?;
    if let Some(path) = &args.dump_solution {
        write_output(Some(path), &opt.solution.dump(&problem))?;
    }
    let summary = format!(
        "objective: {}\nbins: {}\nfeasible_partitions: {}\n",
        opt.objective,
        opt.solution.num_bins(),
        opt.feasible_partitions
    );
    write_output(None, &summary)
}

fn is_broken_pipe(e: &anyhow::Error) -> bool {
    e.chain()
        .filter_map(|c| c.downcast_ref::<io::Error>())
        .any(|io| io.kind() == io::ErrorKind::BrokenPipe)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Gen(a) => cmd_gen(a),
        Command::ExportLp(a) => cmd_export(a),
        Command::Oracle(a) => cmd_oracle(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if is_broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<InputError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
