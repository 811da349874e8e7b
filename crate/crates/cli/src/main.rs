//! `qsep`: command-line front end for qsep-core.

use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use qsep_core::algebra::{Dyson, DEFAULT_PSD_TOL};
use qsep_core::bloore::{Sampler, System};
use qsep_core::eigenspace::{
    eigen_scan, model_probability, probability_from_table, region_probability, solve_power, EigenGrid, EigenMeasure,
    EigenMetric, EigenModel, PowerFamily, Rank, Region, CHAMBER_REL_TOL, DEFAULT_GRID_M,
};
use qsep_core::qmc::StreamKind;
use qsep_core::registry::{andai_volume, conjectures, lookup, pipeline_probability, r2_constant, R2Options};
use qsep_core::scans::{fmt17, r1_estimate, scan, RunControl, ScanGrid, ScanParams};
use qsep_core::scenarios::{scenario_report, Scenario, SCENARIO_REL_TOL};
use qsep_core::sepfit::{csv_table_data, fit_family, Family};
use qsep_core::{Error, Result};
use serde::Serialize;
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "qsep", version, about = "Separability functions and probabilities of two-qubit and qubit-qutrit states")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate a separability function over the ratio-variable grid.
    #[command(subcommand)]
    Scan(ScanCommand),
    /// Estimate R1, the separable fraction at the symmetric point.
    R1(SampleArgs),
    /// Compute R2 from the closed-form separability-function model.
    R2(R2Args),
    /// Separability probability R1 (estimated) x R2 (exact).
    Probability(SampleArgs),
    /// Volumes and probability of a low-dimensional scenario.
    Scenario(ScenarioArgs),
    /// Eigenvalue-space separability functions and measures.
    #[command(subcommand)]
    Eigen(EigenCommand),
    /// Least-squares fit of a model family to a saved table.
    Fit(FitArgs),
    /// Exact constants and conjectures.
    #[command(subcommand)]
    Registry(RegistryCommand),
    /// Hilbert-Schmidt volume of n x n density matrices.
    Volume(VolumeArgs),
}

#[derive(Subcommand)]
enum ScanCommand {
    /// Two-qubit table over mu.
    TwoQubit(ScanArgs),
    /// Qubit-qutrit table over (nu1, nu2).
    QubitQutrit(ScanArgs),
}

#[derive(Subcommand)]
enum EigenCommand {
    /// Haar sweep over the eigenvalue lattice.
    Scan(EigenScanArgs),
    /// Probability from a saved eigen table.
    Probability(EigenProbabilityArgs),
    /// Measures of the certified-separable regions.
    Bounds(EigenBoundsArgs),
    /// Probability under a model separability function.
    Model(EigenModelArgs),
    /// Exponent of a power family that reproduces a target probability.
    SolvePower(SolvePowerArgs),
}

#[derive(Subcommand)]
enum RegistryCommand {
    /// All entries as JSON.
    List,
    /// One entry by name.
    Get { name: String },
}

#[derive(Args, Serialize)]
struct RunArgs {
    /// Worker threads; results do not depend on it (default: available cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Top-level seed for every random stream.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for data, summary and metadata files.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn workers(&self) -> usize {
        self.workers
            .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
    }
}

#[derive(Args, Serialize)]
struct ScanArgs {
    /// Dyson index (1 real, 2 complex, 3 truncated quaternion, 4 quaternion).
    #[arg(long, value_parser = parse_dyson)]
    beta: Dyson,
    /// Number of draws.
    #[arg(long, default_value_t = 1_000_000)]
    samples: u64,
    /// Grid points per axis (default 201 for mu, 21 for nu).
    #[arg(long)]
    points: Option<usize>,
    /// cube, ball, hyperspherical or onion (default onion; ball for beta 3).
    #[arg(long)]
    sampler: Option<Sampler>,
    /// sobol or pseudo-random.
    #[arg(long, default_value = "sobol")]
    stream: StreamKind,
    /// PSD tolerance relative to trace / dimension.
    #[arg(long, default_value_t = DEFAULT_PSD_TOL)]
    psd_tol: f64,
    /// Samples per parallel block.
    #[arg(long, default_value_t = 4096)]
    block: u64,
    /// Write checkpoints to this file.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Samples between checkpoint writes.
    #[arg(long, default_value_t = 1 << 20)]
    checkpoint_interval: u64,
    /// Continue from this checkpoint.
    #[arg(long)]
    resume: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    run: RunArgs,
}

#[derive(Args, Serialize)]
struct SampleArgs {
    /// two-qubit or qubit-qutrit.
    #[arg(long, default_value = "two-qubit")]
    system: System,
    #[arg(long, value_parser = parse_dyson)]
    beta: Dyson,
    #[arg(long, default_value_t = 1_000_000)]
    samples: u64,
    #[arg(long)]
    sampler: Option<Sampler>,
    #[arg(long, default_value = "sobol")]
    stream: StreamKind,
    #[command(flatten)]
    #[serde(flatten)]
    run: RunArgs,
}

#[derive(Args, Serialize)]
struct R2Args {
    #[arg(long, default_value = "two-qubit")]
    system: System,
    #[arg(long, value_parser = parse_dyson)]
    beta: Dyson,
    /// Relative tolerance of the two-qubit quadrature.
    #[arg(long, default_value_t = 1e-8)]
    rel_tol: f64,
    /// QMC points for the qubit-qutrit expectation.
    #[arg(long, default_value_t = 1 << 20)]
    qmc_points: u64,
    #[command(flatten)]
    #[serde(flatten)]
    run: RunArgs,
}

#[derive(Args, Serialize)]
struct ScenarioArgs {
    /// Scenario name, e.g. hs-23-real or bures-1423-quat.
    #[arg(required_unless_present = "all")]
    name: Option<Scenario>,
    /// Every scenario with a volume element.
    #[arg(long, conflicts_with = "name")]
    all: bool,
    #[arg(long, default_value_t = SCENARIO_REL_TOL)]
    rel_tol: f64,
    #[command(flatten)]
    #[serde(flatten)]
    run: RunArgs,
}

#[derive(Args, Serialize)]
struct EigenScanArgs {
    /// Lattice denominator.
    #[arg(long, default_value_t = DEFAULT_GRID_M)]
    m: u32,
    /// full or degenerate.
    #[arg(long, default_value = "full")]
    rank: Rank,
    /// Haar unitaries per lattice point.
    #[arg(long, default_value_t = 50_000)]
    unitaries: u64,
    #[command(flatten)]
    #[serde(flatten)]
    run: RunArgs,
}

#[derive(Args, Serialize)]
struct EigenProbabilityArgs {
    /// CSV written by `eigen scan`.
    #[arg(long)]
    table: PathBuf,
    /// hs, bures or uniform.
    #[arg(long, default_value = "hs")]
    metric: EigenMetric,
    #[arg(long, default_value_t = 2)]
    beta: u32,
    #[command(flatten)]
    #[serde(flatten)]
    run: RunArgs,
}

#[derive(Args, Serialize)]
struct MeasureArgs {
    #[arg(long, default_value = "hs")]
    metric: EigenMetric,
    #[arg(long, default_value_t = 2)]
    beta: u32,
    #[arg(long, default_value = "full")]
    rank: Rank,
}

impl MeasureArgs {
    fn measure(&self) -> Result<EigenMeasure> {
        EigenMeasure::new(self.metric, self.beta, self.rank)
    }
}

#[derive(Args, Serialize)]
struct EigenBoundsArgs {
    #[command(flatten)]
    #[serde(flatten)]
    measure: MeasureArgs,
    #[arg(long, default_value_t = CHAMBER_REL_TOL)]
    rel_tol: f64,
    #[command(flatten)]
    #[serde(flatten)]
    run: RunArgs,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum ModelKind {
    RPower,
    VadPower,
    BetaS2,
    BetaVad,
    One,
}

#[derive(Args, Serialize)]
struct EigenModelArgs {
    #[arg(long, value_enum)]
    model: ModelKind,
    /// Exponent of the power families.
    #[arg(long, default_value_t = 1.0)]
    p: f64,
    /// First beta-function parameter.
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    /// Second beta-function parameter.
    #[arg(long, default_value_t = 1.0)]
    b: f64,
    #[command(flatten)]
    #[serde(flatten)]
    measure: MeasureArgs,
    #[arg(long, default_value_t = CHAMBER_REL_TOL)]
    rel_tol: f64,
    #[command(flatten)]
    #[serde(flatten)]
    run: RunArgs,
}

#[derive(Args, Serialize)]
struct SolvePowerArgs {
    /// r-power or vad-power.
    #[arg(long)]
    family: PowerFamily,
    #[arg(long)]
    target: f64,
    #[command(flatten)]
    #[serde(flatten)]
    measure: MeasureArgs,
    #[command(flatten)]
    #[serde(flatten)]
    run: RunArgs,
}

#[derive(Args, Serialize)]
struct FitArgs {
    /// CSV written by `scan` or `eigen scan`.
    #[arg(long)]
    table: PathBuf,
    /// qq-one-param, qq-two-param, r-power or vad-power.
    #[arg(long)]
    family: Family,
    #[command(flatten)]
    #[serde(flatten)]
    run: RunArgs,
}

#[derive(Args, Serialize)]
struct VolumeArgs {
    #[arg(long)]
    n: u32,
    #[arg(long, value_parser = parse_dyson)]
    beta: Dyson,
    #[command(flatten)]
    #[serde(flatten)]
    run: RunArgs,
}

fn parse_dyson(s: &str) -> std::result::Result<Dyson, String> {
    let b: u32 = s.parse().map_err(|_| format!("beta must be 1, 2, 3 or 4, got '{s}'"))?;
    Dyson::from_beta(b).map_err(|e| e.to_string())
}

/// Where a command's results go.
struct Emitter<'a> {
    name: &'static str,
    run: &'a RunArgs,
    config: Value,
    started: SystemTime,
    clock: Instant,
}

impl<'a> Emitter<'a> {
    fn new<T: Serialize>(name: &'static str, args: &T, run: &'a RunArgs) -> Result<Self> {
        let mut config = serde_json::to_value(args)?;
        config["command"] = json!(name);
        config["workers"] = json!(run.workers());
        Ok(Emitter {
            name,
            run,
            config,
            started: SystemTime::now(),
            clock: Instant::now(),
        })
    }

    fn file(&self, dir: &Path, ext: &str) -> PathBuf {
        dir.join(format!("{}.{ext}", self.name.replace(' ', "-")))
    }

    /// Writes the optional CSV body, the summary (with the resolved config)
    /// and, in the output directory only, a metadata file with timestamps.
    fn finish(self, result: Value, csv: Option<Vec<u8>>) -> Result<()> {
        let summary = json!({"config": self.config, "result": result});
        let text = serde_json::to_string_pretty(&summary)?;
        match &self.run.out {
            Some(dir) => {
                std::fs::create_dir_all(dir)?;
                if let Some(body) = &csv {
                    std::fs::write(self.file(dir, "csv"), body)?;
                }
                std::fs::write(self.file(dir, "json"), format!("{text}\n"))?;
                let started = self.started.duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0);
                let meta = json!({
                    "started_unix": started,
                    "elapsed_seconds": self.clock.elapsed().as_secs_f64(),
                    "version": env!("CARGO_PKG_VERSION"),
                    "argv": std::env::args().collect::<Vec<_>>(),
                });
                std::fs::write(self.file(dir, "meta.json"), format!("{}\n", serde_json::to_string_pretty(&meta)?))?;
                print_out(format!("{text}\n").as_bytes())?;
            }
            None => match csv {
                Some(body) => {
                    print_out(&body)?;
                    eprintln!("{text}");
                }
                None => print_out(format!("{text}\n").as_bytes())?,
            },
        }
        Ok(())
    }
}

/// Writes to stdout; a closed pipe is not an error.
fn print_out(bytes: &[u8]) -> Result<()> {
    let mut out = std::io::stdout().lock();
    match out.write_all(bytes).and_then(|_| out.flush()) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}

fn scan_cmd(system: System, args: &ScanArgs, interrupt: Arc<AtomicBool>) -> Result<()> {
    let name = match system {
        System::TwoQubit => "scan two-qubit",
        System::QubitQutrit => "scan qubit-qutrit",
    };
    let em = Emitter::new(name, args, &args.run)?;
    let mut p = ScanParams::new(system, args.beta);
    if let Some(s) = args.sampler {
        p.sampler = s;
    }
    p.stream = args.stream;
    p.seed = args.run.seed;
    p.psd_tol = args.psd_tol;
    if let Some(n) = args.points {
        p.grid = match system {
            System::TwoQubit => ScanGrid::Mu { points: n },
            System::QubitQutrit => ScanGrid::Nu { points: n },
        };
    }
    let ctl = RunControl {
        workers: args.run.workers(),
        block: args.block,
        checkpoint: args.checkpoint.clone(),
        checkpoint_interval: args.checkpoint_interval,
        resume: args.resume.clone(),
        interrupt: Some(interrupt),
    };
    let table = scan(&p, args.samples, &ctl)?;
    let mut body = Vec::new();
    table.write_csv(&mut body)?;
    let result = json!({
        "table": table.metadata(),
        "feasible_fraction": table.feasible_fraction(),
        "symmetric_point_fraction": table.raw().last().copied(),
    });
    em.finish(result, Some(body))
}

fn sample_params(args: &SampleArgs) -> ScanParams {
    let mut p = ScanParams::new(args.system, args.beta);
    if let Some(s) = args.sampler {
        p.sampler = s;
    }
    p.stream = args.stream;
    p.seed = args.run.seed;
    p
}

fn eigen_cmd(cmd: &EigenCommand) -> Result<()> {
    match cmd {
        EigenCommand::Scan(a) => {
            let em = Emitter::new("eigen scan", a, &a.run)?;
            let grid = eigen_scan(a.m, a.rank, a.unitaries, a.run.seed, a.run.workers())?;
            let mut body = Vec::new();
            grid.write_csv(&mut body)?;
            em.finish(grid.metadata(), Some(body))
        }
        EigenCommand::Probability(a) => {
            let em = Emitter::new("eigen probability", a, &a.run)?;
            let grid = EigenGrid::read_csv(BufReader::new(open(&a.table)?))?;
            let measure = EigenMeasure::new(a.metric, a.beta, grid.rank)?;
            let p = probability_from_table(&grid, measure)?;
            em.finish(serde_json::to_value(p)?, None)
        }
        EigenCommand::Bounds(a) => {
            let em = Emitter::new("eigen bounds", a, &a.run)?;
            let m = a.measure.measure()?;
            let mut out = serde_json::Map::new();
            for (name, region) in [("ball", Region::SeparableBall), ("vad", Region::VadNegative), ("pittenger", Region::Pittenger)] {
                out.insert(name.into(), json!(region_probability(region, m, a.rel_tol)?));
            }
            em.finish(Value::Object(out), None)
        }
        EigenCommand::Model(a) => {
            let em = Emitter::new("eigen model", a, &a.run)?;
            let model = match a.model {
                ModelKind::RPower => EigenModel::RPower { p: a.p },
                ModelKind::VadPower => EigenModel::VadPower { p: a.p },
                ModelKind::BetaS2 => EigenModel::BetaS2 { a: a.a, b: a.b },
                ModelKind::BetaVad => EigenModel::BetaVad { a: a.a, b: a.b },
                ModelKind::One => EigenModel::One,
            };
            let p = model_probability(model, a.measure.measure()?, a.rel_tol)?;
            em.finish(json!({"model": model, "probability": p}), None)
        }
        EigenCommand::SolvePower(a) => {
            let em = Emitter::new("eigen solve-power", a, &a.run)?;
            let p = solve_power(a.target, a.family, a.measure.measure()?)?;
            em.finish(json!({"family": a.family, "target": a.target, "exponent": p}), None)
        }
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::InvalidArgument(format!("cannot open {}: {e}", path.display())))
}

fn run(cli: Cli, interrupt: Arc<AtomicBool>) -> Result<()> {
    match &cli.command {
        Command::Scan(ScanCommand::TwoQubit(a)) => scan_cmd(System::TwoQubit, a, interrupt),
        Command::Scan(ScanCommand::QubitQutrit(a)) => scan_cmd(System::QubitQutrit, a, interrupt),
        Command::R1(a) => {
            let em = Emitter::new("r1", a, &a.run)?;
            let r1 = r1_estimate(&sample_params(a), a.samples, a.run.workers())?;
            em.finish(serde_json::to_value(r1)?, None)
        }
        Command::Probability(a) => {
            let em = Emitter::new("probability", a, &a.run)?;
            let r1 = r1_estimate(&sample_params(a), a.samples, a.run.workers())?;
            let p = pipeline_probability(a.system, a.beta, &r1)?;
            em.finish(json!({"r1": r1, "probability": p}), None)
        }
        Command::R2(a) => {
            let em = Emitter::new("r2", a, &a.run)?;
            let opts = R2Options {
                rel_tol: a.rel_tol,
                qmc_points: a.qmc_points,
                seed: a.run.seed,
            };
            em.finish(serde_json::to_value(r2_constant(a.system, a.beta, opts)?)?, None)
        }
        Command::Scenario(a) => {
            let em = Emitter::new("scenario", a, &a.run)?;
            let result = match a.name {
                Some(sc) => serde_json::to_value(scenario_report(sc, a.rel_tol)?)?,
                None => {
                    let reports = Scenario::ALL
                        .iter()
                        .filter_map(|&sc| scenario_report(sc, a.rel_tol).ok())
                        .collect::<Vec<_>>();
                    serde_json::to_value(reports)?
                }
            };
            em.finish(result, None)
        }
        Command::Eigen(cmd) => eigen_cmd(cmd),
        Command::Fit(a) => {
            let em = Emitter::new("fit", a, &a.run)?;
            let data = csv_table_data(BufReader::new(open(&a.table)?))?;
            let fit = fit_family(&data, a.family)?;
            em.finish(fit.report(json!({"table": a.table})), None)
        }
        Command::Registry(RegistryCommand::List) => {
            print_out(format!("{}\n", serde_json::to_string_pretty(&conjectures())?).as_bytes())
        }
        Command::Registry(RegistryCommand::Get { name }) => {
            print_out(format!("{}\n", serde_json::to_string_pretty(&lookup(name)?)?).as_bytes())
        }
        Command::Volume(a) => {
            let em = Emitter::new("volume", a, &a.run)?;
            let v = andai_volume(a.n, a.beta)?;
            em.finish(json!({"expression": v.to_string(), "value": fmt17(v.to_f64())}), None)
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Interrupted(_) => 130,
        Error::Io(_) | Error::Json(_) => 2,
        _ if e.is_validation() => 2,
        _ => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let interrupt = Arc::new(AtomicBool::new(false));
    let flag = interrupt.clone();
    if let Err(e) = ctrlc::set_handler(move || flag.store(true, Ordering::SeqCst)) {
        eprintln!("warning: cannot install the interrupt handler: {e}");
    }
    match run(cli, interrupt) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let Error::Interrupted(k) = e {
                eprintln!("stopped at sample {k}; rerun with --resume <checkpoint> to continue");
            }
            ExitCode::from(exit_code(&e))
        }
    }
}
