//! `btrank`: rank teams from paired-comparison data.

mod render;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use btrank::ranking::{ConferenceSeeds, SweepReport};
use btrank::{
    check_condition_a, check_condition_b, check_condition_c, extract_ranking, fit, fit_map_em,
    run_consistency, select_seeds, sweep_epsilon, ConsistencyConfig, ConsistencyReport, Dataset,
    Epsilon, Error, FitResult, InputFormat, LeagueStructure, MapPriorSpec, Model, ModelSpec,
    Normalization, PartitionWitness, PerturbationSpec, Ranking, SeedingRule, SolverConfig,
};
use clap::{Args, Parser, Subcommand};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

#[derive(Parser)]
#[command(name = "btrank", version, about = "Bradley-Terry-epsilon rankings from paired comparisons")]
struct Cli {
    /// Worker threads for sweeps and simulations.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Report connectivity conditions A, B and C.
    Check {
        #[command(flatten)]
        io: Io,
        /// Conditions that must hold for exit status 0 (e.g. `a,b`).
        #[arg(long, value_delimiter = ',')]
        require: Vec<String>,
    },
    /// Fit one model at one epsilon.
    Fit {
        #[command(flatten)]
        io: Io,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value = "auto")]
        epsilon: String,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Fit over a grid of epsilons and compare the rankings.
    Sweep {
        #[command(flatten)]
        io: Io,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        epsilons: Vec<String>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// MAP-EM under a gamma prior on the merits.
    Map {
        #[command(flatten)]
        io: Io,
        /// Prior shape d; a comma-separated list fits each in turn.
        #[arg(long, value_delimiter = ',')]
        shape: Vec<f64>,
        /// Prior rate b (default d*t - 1).
        #[arg(long)]
        rate: Option<f64>,
        #[arg(long, default_value = "simplex")]
        normalization: String,
        /// JSON file with `data`, `shapes` and optional `rate`/`normalization`.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Playoff seeds by fitted merit and by win percentage.
    Seeds {
        #[command(flatten)]
        io: Io,
        /// League structure JSON (conferences of divisions of team ids).
        #[arg(long)]
        structure: PathBuf,
        #[arg(long, default_value = "david")]
        model: String,
        #[arg(long, default_value = "auto")]
        epsilon: String,
        #[arg(long, default_value_t = 6)]
        seeds: usize,
        #[arg(long, default_value_t = 4)]
        division_winners: usize,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Consistency experiment on simulated round robins.
    Simulate {
        #[arg(long, value_delimiter = ',', default_value = "20,50,100")]
        t_grid: Vec<usize>,
        #[arg(long, default_value_t = 50)]
        replicas: usize,
        #[arg(long, default_value_t = 4)]
        games_per_pair: u64,
        #[arg(long, env = "BTRANK_SEED", default_value_t = 0)]
        seed: u64,
        /// `table`, `json`, or a file path to write the JSON report to.
        #[arg(long, default_value = "table")]
        out: String,
    },
}

#[derive(Args)]
struct Io {
    #[arg(long)]
    data: Option<PathBuf>,
    /// csv, records-json or matrix-json (guessed from content if omitted).
    #[arg(long)]
    format: Option<String>,
    /// `table`, `json`, or a file path to write JSON to.
    #[arg(long, default_value = "table")]
    out: String,
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long, default_value = "bt")]
    model: String,
    /// improved, conner-grant or matrix:<file>
    #[arg(long, default_value = "improved")]
    perturbation: String,
    /// reference, reference:<team> or simplex
    #[arg(long, default_value = "reference")]
    normalization: String,
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, default_value_t = 1e-8)]
    grad_tol: f64,
    #[arg(long, default_value_t = 10_000)]
    max_iters: usize,
    #[arg(long, default_value_t = 0)]
    restarts: usize,
    #[arg(long, env = "BTRANK_SEED", default_value_t = 0)]
    seed: u64,
}

impl SolverArgs {
    fn config(&self) -> SolverConfig {
        SolverConfig {
            grad_tol: self.grad_tol,
            max_iters: self.max_iters,
            restarts: self.restarts,
            seed: self.seed,
            ..SolverConfig::default()
        }
    }
}

enum Out {
    Table,
    Json,
    File(PathBuf),
}

impl Out {
    fn parse(s: &str) -> Out {
        match s {
            "table" => Out::Table,
            "json" => Out::Json,
            path => Out::File(path.into()),
        }
    }

    fn emit<T: Serialize>(&self, value: &T, table: impl FnOnce() -> String) -> Result<(), Failure> {
        match self {
            Out::Table => print!("{}", table()),
            Out::Json => println!("{}", to_json(value)),
            Out::File(path) => std::fs::write(path, to_json(value) + "\n")
                .map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))?,
        }
        Ok(())
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report serializes")
}

/// A fit together with the ranking it induces.
#[derive(Serialize, Deserialize)]
struct FitReport {
    fit: FitResult,
    ranking: Ranking,
}

impl FitReport {
    fn new(mut fit: FitResult) -> Self {
        fit.trace.clear();
        let ranking = extract_ranking(&fit);
        Self { fit, ranking }
    }
}

#[derive(Serialize)]
struct ConditionReport {
    pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    witness: Option<PartitionWitness>,
    #[serde(skip_serializing_if = "Option::is_none")]
    description: Option<String>,
}

#[derive(Serialize)]
struct CheckReport {
    teams: Vec<String>,
    a: ConditionReport,
    b: ConditionReport,
    /// Absent for data without venue information.
    c: Option<ConditionReport>,
}

#[derive(Serialize)]
struct MapEntry {
    shape: f64,
    rate: f64,
    fit: FitResult,
    ranking: Ranking,
}

#[derive(Serialize)]
struct SeedsReport {
    model: Model,
    epsilon: f64,
    by_merit: Vec<ConferenceSeeds>,
    by_win_percentage: Vec<ConferenceSeeds>,
}

#[derive(Deserialize)]
struct MapConfig {
    data: PathBuf,
    shapes: Vec<f64>,
    rate: Option<f64>,
    normalization: Option<String>,
}

enum Failure {
    Lib(Error),
    Io(String),
    /// A requested condition failed in `check`.
    Requirement,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn exit_code(e: &Error) -> u8 {
    match e.root() {
        Error::Existence { .. } | Error::NoTies { .. } | Error::VenuelessData(_) => 1,
        Error::Parse { .. }
        | Error::SelfPlay { .. }
        | Error::Shape(_)
        | Error::NegativeCount { .. }
        | Error::EmptyInput => 2,
        Error::NonConvergence(_) => 3,
        _ => 4,
    }
}

fn config_error(msg: impl Into<String>) -> Failure {
    Failure::Lib(Error::Config(msg.into()))
}

fn load(io: &Io) -> Result<Dataset, Failure> {
    let path = io.data.as_ref().ok_or_else(|| config_error("--data is required"))?;
    let format = io.format.as_deref().map(InputFormat::from_str).transpose()?;
    Ok(btrank::load_path(path, format)?)
}

fn parse_normalization(s: &str, data: &Dataset) -> Result<Normalization, Failure> {
    match s.split_once(':') {
        None if s == "simplex" => Ok(Normalization::Simplex),
        None if s == "reference" => Ok(Normalization::Reference { index: 0 }),
        Some(("reference", team)) => data
            .team_index(team)
            .map(|index| Normalization::Reference { index })
            .ok_or_else(|| config_error(format!("unknown reference team {team:?}"))),
        _ => Err(config_error(format!(
            "unknown normalization {s:?} (expected reference, reference:<team> or simplex)"
        ))),
    }
}

fn read_matrix(path: &Path) -> Result<Array2<f64>, Failure> {
    let bytes = std::fs::read(path)
        .map_err(|e| Failure::Io(format!("cannot read {}: {e}", path.display())))?;
    let rows: Vec<Vec<f64>> = serde_json::from_slice(&bytes).map_err(|e| {
        Failure::Lib(Error::Parse {
            location: btrank::Location::Document,
            message: format!("{}: {e}", path.display()),
        })
    })?;
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(Failure::Lib(Error::Shape(format!(
            "perturbation matrix in {} is not square",
            path.display()
        ))));
    }
    Ok(Array2::from_shape_fn((n, n), |(i, j)| rows[i][j]))
}

fn parse_perturbation(s: &str, epsilon: f64) -> Result<PerturbationSpec, Failure> {
    match s.split_once(':') {
        None if s == "improved" => Ok(PerturbationSpec::Improved { epsilon }),
        None if s == "conner-grant" => Ok(PerturbationSpec::ConnerGrant { epsilon }),
        Some(("matrix", file)) => Ok(PerturbationSpec::Matrix {
            a0: read_matrix(Path::new(file))?,
        }),
        _ => Err(config_error(format!(
            "unknown perturbation {s:?} (expected improved, conner-grant or matrix:<file>)"
        ))),
    }
}

fn model_spec(args: &ModelArgs, data: &Dataset, epsilon: f64) -> Result<ModelSpec, Failure> {
    let model = Model::from_str(&args.model)?;
    Ok(ModelSpec::new(model, parse_perturbation(&args.perturbation, epsilon)?)
        .with_normalization(parse_normalization(&args.normalization, data)?))
}

fn condition(verdict: btrank::Verdict, names: &[String]) -> ConditionReport {
    let witness = verdict.witness().cloned();
    ConditionReport {
        pass: verdict.is_pass(),
        description: witness.as_ref().map(|w| w.describe(Some(names))),
        witness,
    }
}

fn cmd_check(io: &Io, require: &[String]) -> Result<(), Failure> {
    let data = load(io)?;
    let names = data.teams();
    let report = CheckReport {
        teams: names.to_vec(),
        a: condition(check_condition_a(&data), names),
        b: condition(check_condition_b(&data), names),
        c: match check_condition_c(&data) {
            Ok(v) => Some(condition(v, names)),
            Err(Error::VenuelessData(_)) => None,
            Err(e) => return Err(e.into()),
        },
    };
    let mut failed = false;
    for r in require {
        let ok = match r.to_ascii_lowercase().as_str() {
            "a" => report.a.pass,
            "b" => report.b.pass,
            "c" => match &report.c {
                Some(c) => c.pass,
                None => return Err(Error::VenuelessData("condition C").into()),
            },
            other => return Err(config_error(format!("unknown condition {other:?}"))),
        };
        failed |= !ok;
    }
    Out::parse(&io.out).emit(&report, || render::check(&report))?;
    if failed {
        return Err(Failure::Requirement);
    }
    Ok(())
}

fn cmd_fit(io: &Io, args: &ModelArgs, epsilon: &str, solver: &SolverArgs) -> Result<(), Failure> {
    let data = load(io)?;
    let epsilon = Epsilon::from_str(epsilon)?.resolve(data.num_teams());
    let spec = model_spec(args, &data, epsilon)?;
    let report = FitReport::new(fit(&spec, &data, &solver.config())?);
    Out::parse(&io.out).emit(&report, || render::fit(&report))
}

fn cmd_sweep(io: &Io, args: &ModelArgs, epsilons: &[String], solver: &SolverArgs) -> Result<(), Failure> {
    let data = load(io)?;
    let eps = epsilons
        .iter()
        .map(|e| Epsilon::from_str(e).map(|e| e.resolve(data.num_teams())))
        .collect::<Result<Vec<_>, _>>()?;
    let spec = model_spec(args, &data, eps[0])?;
    let mut report: SweepReport = sweep_epsilon(&spec, &data, &eps, &solver.config())?;
    report.entries.iter_mut().for_each(|e| e.fit.trace.clear());
    Out::parse(&io.out).emit(&report, || render::sweep(&report))
}

fn cmd_map(
    io: &Io,
    shapes: &[f64],
    rate: Option<f64>,
    normalization: &str,
    config: Option<&Path>,
    solver: &SolverArgs,
) -> Result<(), Failure> {
    let (data, shapes, rate, normalization) = match config {
        Some(path) => {
            let bytes = std::fs::read(path)
                .map_err(|e| Failure::Io(format!("cannot read {}: {e}", path.display())))?;
            let cfg: MapConfig = serde_json::from_slice(&bytes)
                .map_err(|e| config_error(format!("{}: {e}", path.display())))?;
            let data_path = path.parent().unwrap_or(Path::new(".")).join(&cfg.data);
            let data = btrank::load_path(&data_path, None)?;
            let shapes = if shapes.is_empty() { cfg.shapes } else { shapes.to_vec() };
            let norm = cfg.normalization.unwrap_or_else(|| normalization.to_string());
            (data, shapes, rate.or(cfg.rate), norm)
        }
        None => (load(io)?, shapes.to_vec(), rate, normalization.to_string()),
    };
    if shapes.is_empty() {
        return Err(config_error("map needs --shape or --config"));
    }
    let norm = parse_normalization(&normalization, &data)?;
    let t = data.num_teams();
    let entries = shapes
        .iter()
        .map(|&d| {
            let prior = match rate {
                Some(b) => MapPriorSpec::with_rate(d, b),
                None => MapPriorSpec::new(d),
            };
            let mut f = fit_map_em(&data, &prior, norm, &solver.config())?;
            f.trace.clear();
            Ok(MapEntry {
                shape: d,
                rate: prior.resolved_rate(t),
                ranking: extract_ranking(&f),
                fit: f,
            })
        })
        .collect::<Result<Vec<_>, Error>>()?;
    Out::parse(&io.out).emit(&entries, || render::map(&entries))
}

#[allow(clippy::too_many_arguments)]
fn cmd_seeds(
    io: &Io,
    structure: &Path,
    model: &str,
    epsilon: &str,
    seeds: usize,
    division_winners: usize,
    solver: &SolverArgs,
) -> Result<(), Failure> {
    let data = load(io)?;
    let bytes = std::fs::read(structure)
        .map_err(|e| Failure::Io(format!("cannot read {}: {e}", structure.display())))?;
    let league: LeagueStructure = serde_json::from_slice(&bytes)
        .map_err(|e| config_error(format!("{}: {e}", structure.display())))?;
    let model = Model::from_str(model)?;
    let epsilon = Epsilon::from_str(epsilon)?.resolve(data.num_teams());
    let f = fit(&ModelSpec::improved(model, epsilon), &data, &solver.config())?;
    let rule = SeedingRule {
        seeds_per_conference: seeds,
        division_winners,
    };
    let report = SeedsReport {
        model,
        epsilon,
        by_merit: select_seeds(data.teams(), &f.merits, &league, &rule)?,
        by_win_percentage: select_seeds(data.teams(), &data.win_percentages(), &league, &rule)?,
    };
    Out::parse(&io.out).emit(&report, || {
        render::seeds(&report.by_merit, &report.by_win_percentage)
    })
}

fn cmd_simulate(t_grid: Vec<usize>, replicas: usize, games_per_pair: u64, seed: u64, out: &str) -> Result<(), Failure> {
    let config = ConsistencyConfig {
        t_grid,
        replicas,
        games_per_pair,
        seed,
        ..ConsistencyConfig::default()
    };
    let report: ConsistencyReport = run_consistency(&config, &SolverConfig::default())?;
    Out::parse(out).emit(&report, || render::simulate(&report))
}

fn run(cli: Cli) -> Result<(), Failure> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs.max(1))
        .build_global()
        .map_err(|e| config_error(e.to_string()))?;
    match cli.command {
        Command::Check { io, require } => cmd_check(&io, &require),
        Command::Fit { io, model, epsilon, solver } => cmd_fit(&io, &model, &epsilon, &solver),
        Command::Sweep { io, model, epsilons, solver } => cmd_sweep(&io, &model, &epsilons, &solver),
        Command::Map { io, shape, rate, normalization, config, solver } => {
            cmd_map(&io, &shape, rate, &normalization, config.as_deref(), &solver)
        }
        Command::Seeds { io, structure, model, epsilon, seeds, division_winners, solver } => {
            cmd_seeds(&io, &structure, &model, &epsilon, seeds, division_winners, &solver)
        }
        Command::Simulate { t_grid, replicas, games_per_pair, seed, out } => {
            cmd_simulate(t_grid, replicas, games_per_pair, seed, &out)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(4);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Requirement) => ExitCode::from(1),
        Err(Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
