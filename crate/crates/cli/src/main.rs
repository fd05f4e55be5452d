use std::fs::{self, File};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use fdrepair::conflict::{self, CoverStrategy};
use fdrepair::eval::{perturb_data, perturb_fds, relative_budget, score_repair};
use fdrepair::fd::{FdSet, WeightKind};
use fdrepair::multi::{materialize_frontier, sweep_in};
use fdrepair::relation::{load_csv, CsvOptions, VInstance};
use fdrepair::repair::repair_in;
use fdrepair::report::{
    frontier_table, inject_table, repair_table, scores_table, FrontierReport, InjectReport,
    RepairReport, RunSettings,
};
use fdrepair::search::{SearchConfig, SearchSpace, DEFAULT_HEURISTIC_K};

const EXIT_INPUT: u8 = 1;
const EXIT_EMPTY: u8 = 2;

#[derive(Parser, Debug)]
#[command(name = "fdrepair", version, about = "Joint repair of functional dependencies and data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Cheapest FD modification within a cell-change budget, plus the data repair.
    Repair(RepairArgs),
    /// Every distinct repair for budgets in a range.
    RepairRange(RangeArgs),
    /// Inject seeded errors into clean data and FDs.
    Inject(InjectArgs),
    /// Score a repair against the clean data and FDs.
    Score(ScoreArgs),
    /// Dump the conflict graph and difference sets.
    Graph(GraphArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Weight {
    Count,
    Distinct,
}

impl From<Weight> for WeightKind {
    fn from(w: Weight) -> Self {
        match w {
            Weight::Count => WeightKind::Count,
            Weight::Distinct => WeightKind::Distinct,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Cover {
    Greedy,
    Pruned,
}

impl From<Cover> for CoverStrategy {
    fn from(c: Cover) -> Self {
        match c {
            Cover::Greedy => CoverStrategy::Greedy,
            Cover::Pruned => CoverStrategy::Pruned,
        }
    }
}

#[derive(Args, Debug)]
struct InputArgs {
    /// CSV file with a header row.
    #[arg(long)]
    data: PathBuf,
    /// One FD per line, e.g. `A, B -> C`.
    #[arg(long)]
    fds: PathBuf,
    /// Field delimiter of the CSV file.
    #[arg(long, default_value_t = ',')]
    delimiter: char,
}

#[derive(Args, Debug)]
struct SearchArgs {
    #[arg(long, value_enum, default_value_t = Weight::Distinct)]
    weight: Weight,
    /// Difference sets consulted by the heuristic per state.
    #[arg(long, default_value_t = DEFAULT_HEURISTIC_K)]
    heuristic_k: usize,
    #[arg(long, value_enum, default_value_t = Cover::Pruned)]
    cover: Cover,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct OutputArgs {
    /// Report destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args, Debug)]
struct RepairArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Absolute budget on changed cells.
    #[arg(long, conflicts_with = "tau_rel", required_unless_present = "tau_rel")]
    tau: Option<u64>,
    /// Budget as a fraction of the data-change bound of the input FDs.
    #[arg(long)]
    tau_rel: Option<f64>,
    #[command(flatten)]
    search: SearchArgs,
    #[command(flatten)]
    output: OutputArgs,
    /// Write the repaired instance here.
    #[arg(long)]
    repaired_out: Option<PathBuf>,
    /// Write the modified FDs here.
    #[arg(long)]
    fds_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RangeArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, default_value_t = 0)]
    tau_min: u64,
    /// Defaults to the data-change bound of the input FDs.
    #[arg(long)]
    tau_max: Option<u64>,
    #[command(flatten)]
    search: SearchArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct InjectArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, default_value_t = 0.0)]
    data_rate: f64,
    #[arg(long, default_value_t = 0.0)]
    fd_rate: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Perturbed instance.
    #[arg(long)]
    data_out: PathBuf,
    /// Perturbed FDs.
    #[arg(long)]
    fds_out: PathBuf,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct ScoreArgs {
    #[arg(long)]
    clean: PathBuf,
    #[arg(long)]
    dirty: PathBuf,
    #[arg(long)]
    repaired: PathBuf,
    #[arg(long)]
    fds_clean: PathBuf,
    #[arg(long)]
    fds_dirty: PathBuf,
    #[arg(long)]
    fds_repaired: PathBuf,
    #[arg(long, default_value_t = ',')]
    delimiter: char,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct GraphArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn delimiter(c: char) -> Result<u8> {
    u8::try_from(c).ok().filter(u8::is_ascii).context("delimiter must be a single ASCII character")
}

fn read_instance(path: &Path, delim: char, parse_variables: bool) -> Result<VInstance> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let options = CsvOptions {
        delimiter: delimiter(delim)?,
        parse_variables,
        ..CsvOptions::default()
    };
    load_csv(file, options).with_context(|| format!("cannot read {}", path.display()))
}

fn read_fds(path: &Path, instance: &VInstance) -> Result<FdSet> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot open {}", path.display()))?;
    let fds = FdSet::parse(&text, instance.schema()).with_context(|| format!("in {}", path.display()))?;
    fds.validate_for(instance.schema())?;
    Ok(fds)
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("cannot write {}", path.display())),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn render<T: Serialize>(output: &OutputArgs, value: &T, table: impl FnOnce(&T) -> String) -> Result<String> {
    Ok(match output.format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(value)?;
            s.push('\n');
            s
        }
        Format::Table => table(value),
    })
}

fn settings(args: &SearchArgs) -> (RunSettings, SearchConfig) {
    let config = SearchConfig {
        k: args.heuristic_k,
        cover: args.cover.into(),
    };
    let settings = RunSettings {
        weight: args.weight.into(),
        heuristic_k: config.k.max(1),
        cover: config.cover,
        seed: args.seed,
    };
    (settings, config)
}

fn write_instance(path: &Path, instance: &VInstance, delim: char) -> Result<()> {
    let file = File::create(path).with_context(|| format!("cannot write {}", path.display()))?;
    instance.write_csv(file, delimiter(delim)?)?;
    Ok(())
}

fn cmd_repair(args: RepairArgs) -> Result<u8> {
    let instance = Arc::new(read_instance(&args.input.data, args.input.delimiter, false)?);
    let fds = read_fds(&args.input.fds, &instance)?;
    let (settings, config) = settings(&args.search);
    let weight = settings.weight.build(&instance);
    let space = SearchSpace::new(&fds, &instance, weight.as_ref(), config)?;
    let delta_p_input = space.delta_p(&space.root());
    let tau = match (args.tau, args.tau_rel) {
        (Some(t), _) => t,
        (None, Some(r)) => relative_budget(r, delta_p_input)?,
        (None, None) => bail!("one of --tau or --tau-rel is required"),
    };
    let run = repair_in(&space, tau, settings.seed)?;
    let report = RepairReport::new(
        &run.outcome,
        run.stats,
        instance.schema(),
        tau,
        args.tau_rel,
        delta_p_input,
        settings,
    );
    if let Some(result) = run.outcome.result() {
        if let Some(path) = &args.repaired_out {
            write_instance(path, &result.instance_prime, args.input.delimiter)?;
        }
        if let Some(path) = &args.fds_out {
            fs::write(path, result.sigma_prime.render(instance.schema()))
                .with_context(|| format!("cannot write {}", path.display()))?;
        }
    }
    emit(&args.output.out, &render(&args.output, &report, repair_table)?)?;
    if let Some(reason) = &report.reason {
        eprintln!("fdrepair: {reason}");
        return Ok(EXIT_EMPTY);
    }
    Ok(0)
}

fn cmd_repair_range(args: RangeArgs) -> Result<u8> {
    let instance = Arc::new(read_instance(&args.input.data, args.input.delimiter, false)?);
    let fds = read_fds(&args.input.fds, &instance)?;
    let (settings, config) = settings(&args.search);
    let weight = settings.weight.build(&instance);
    let space = SearchSpace::new(&fds, &instance, weight.as_ref(), config)?;
    let delta_p_input = space.delta_p(&space.root());
    let tau_max = args.tau_max.unwrap_or(delta_p_input);
    let sweep = sweep_in(&space, args.tau_min, tau_max)?;
    let frontier = materialize_frontier(&space, &sweep.points, tau_max, settings.seed)?;
    let report = FrontierReport::new(&frontier, sweep.stats, instance.schema(), delta_p_input, settings);
    emit(&args.output.out, &render(&args.output, &report, frontier_table)?)?;
    if report.is_empty() {
        eprintln!(
            "fdrepair: no FD modification brings the data-change bound within [{}, {}]",
            args.tau_min, tau_max
        );
        return Ok(EXIT_EMPTY);
    }
    Ok(0)
}

fn cmd_inject(args: InjectArgs) -> Result<u8> {
    let instance = read_instance(&args.input.data, args.input.delimiter, false)?;
    let fds = read_fds(&args.input.fds, &instance)?;
    let data = perturb_data(&instance, &fds, args.data_rate, args.seed)?;
    let fd = perturb_fds(&fds, args.fd_rate, args.seed)?;
    write_instance(&args.data_out, &data.instance, args.input.delimiter)?;
    fs::write(&args.fds_out, fd.fds.render(instance.schema()))
        .with_context(|| format!("cannot write {}", args.fds_out.display()))?;
    if data.shortfall > 0 {
        log::warn!("{} requested injections found no opportunity", data.shortfall);
    }
    let report = InjectReport::new(&data, &fd, instance.schema(), (args.data_rate, args.fd_rate), args.seed);
    emit(&args.output.out, &render(&args.output, &report, inject_table)?)?;
    Ok(0)
}

fn cmd_score(args: ScoreArgs) -> Result<u8> {
    let clean = read_instance(&args.clean, args.delimiter, false)?;
    let dirty = read_instance(&args.dirty, args.delimiter, false)?;
    let repaired = read_instance(&args.repaired, args.delimiter, true)?;
    let fds_clean = read_fds(&args.fds_clean, &clean)?;
    let fds_dirty = read_fds(&args.fds_dirty, &clean)?;
    let fds_repaired = read_fds(&args.fds_repaired, &clean)?;
    let scores = score_repair(&clean, &dirty, &repaired, &fds_clean, &fds_dirty, &fds_repaired)?;
    emit(&args.output.out, &render(&args.output, &scores, scores_table)?)?;
    Ok(0)
}

fn cmd_graph(args: GraphArgs) -> Result<u8> {
    let instance = read_instance(&args.input.data, args.input.delimiter, false)?;
    let fds = read_fds(&args.input.fds, &instance)?;
    let mut text = serde_json::to_string_pretty(&conflict::dump(&instance, &fds))?;
    text.push('\n');
    emit(&args.out, &text)?;
    Ok(0)
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Repair(a) => cmd_repair(a),
        Command::RepairRange(a) => cmd_repair_range(a),
        Command::Inject(a) => cmd_inject(a),
        Command::Score(a) => cmd_score(a),
        Command::Graph(a) => cmd_graph(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INPUT } else { 0 });
        }
    };
    let started = Instant::now();
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("fdrepair: {e:#}");
            EXIT_INPUT
        }
    };
    log::info!("wall time {:.3}s", started.elapsed().as_secs_f64());
    ExitCode::from(code)
}
