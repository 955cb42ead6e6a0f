//! `fj-bench`: validate instances, simulate trajectories, sweep sigma_max and
//! run seeded random campaigns. CSV goes to stdout, diagnostics to stderr.

mod format;

use std::path::Path;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use fj_core::instance::{self, Instance, LoadOptions};
use fj_core::{campaign, model, sweep, Error, OpinionVector};

use format::{row, sig12};

const DEFAULT_GRID: &str = "0.2,0.05,0.01,0.001";
const DEFAULT_K_MAX: usize = 100;

#[derive(Parser)]
#[command(name = "fj-bench", version, about = "Friedkin-Johnsen opinion dynamics workbench")]
struct Cli {
    /// Instance file, or one of the built-ins `ex1`, `ex2`
    #[arg(long, global = true, default_value = "ex1")]
    instance: String,

    /// Overrides the instance's sigma_max
    #[arg(long, global = true)]
    sigma_max: Option<f64>,

    /// Comma separated, strictly decreasing sigma_max values
    #[arg(long, global = true, default_value = DEFAULT_GRID)]
    grid: String,

    #[arg(long, global = true, default_value_t = DEFAULT_K_MAX)]
    k_max: usize,

    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Accept sigma_tilde entries equal to 0
    #[arg(long, global = true)]
    allow_zero_sigma: bool,

    /// Divide sigma_tilde by its maximum instead of rejecting it
    #[arg(long, global = true)]
    renormalize_sigma_tilde: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the model assumptions and report primitivity
    Validate,
    /// Trajectory CSV: k,y1,...,yn
    Simulate {
        #[arg(long, value_enum, default_value_t = Model::Fj)]
        model: Model,
    },
    /// One row per grid point: sigma_max,gain_gap,quasi_gap,settling_time
    Sweep,
    /// FJ and DeGroot trajectories side by side
    Compare,
    /// Invariant checks over random instances
    Campaign {
        #[arg(long, default_value_t = 4)]
        n: usize,
        #[arg(long, default_value_t = 100)]
        count: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    Fj,
    Degroot,
}

/// Failure carrying the process exit status.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Parse(_) | Error::InvalidArgument(_) | Error::GridNotDecreasing | Error::DimensionMismatch(_) => 2,
            _ => 1,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

type CmdResult = std::result::Result<ExitCode, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: &Cli) -> CmdResult {
    let opts = LoadOptions {
        allow_zero_sigma: cli.allow_zero_sigma,
        renormalize_sigma_tilde: cli.renormalize_sigma_tilde,
    };
    match &cli.command {
        Command::Validate => validate(cli, opts),
        Command::Simulate { model } => simulate(cli, opts, *model),
        Command::Sweep => sweep_cmd(cli, opts),
        Command::Compare => compare(cli, opts),
        Command::Campaign { n, count } => campaign_cmd(*n, *count, cli.seed),
    }
}

fn load(cli: &Cli, opts: LoadOptions) -> Result<Instance, Failure> {
    let inst = instance::load(&cli.instance, opts)?;
    for note in &inst.notes {
        eprintln!("{}: {}", inst.name, note);
    }
    Ok(inst)
}

fn sigma_max(cli: &Cli, inst: &Instance) -> Result<f64, Failure> {
    cli.sigma_max
        .or(inst.sigma_max)
        .ok_or_else(|| usage(format!("instance {} has no sigma_max; pass --sigma-max", inst.name)))
}

fn parse_grid(text: &str) -> Result<Vec<f64>, Failure> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| usage(format!("bad grid value {:?}", s.trim())))
        })
        .collect()
}

fn header(prefix: &str, n: usize) -> impl Iterator<Item = String> + '_ {
    (1..=n).map(move |i| format!("{}y{}", prefix, i))
}

fn validate(cli: &Cli, opts: LoadOptions) -> CmdResult {
    let raw = match instance::builtin_raw(&cli.instance) {
        Some(raw) => raw,
        None => instance::read_raw(Path::new(&cli.instance))?,
    };
    let report = instance::validate(&raw, opts)?;
    for f in &report.findings {
        println!("{}: {} ({})", f.check, if f.ok { "ok" } else { "FAIL" }, f.detail);
    }
    match (report.primitive, report.period) {
        (Some(p), Some(d)) => {
            println!("primitive: {}", p);
            println!("period: {}", d);
        }
        _ => println!("primitive: unknown"),
    }
    if let Some(v) = report.first_violation() {
        eprintln!("assumption violated: {}: {}", v.check, v.detail);
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}

fn simulate(cli: &Cli, opts: LoadOptions, which: Model) -> CmdResult {
    let inst = load(cli, opts)?;
    let y0 = inst.opinions()?;
    let traj = match which {
        Model::Fj => {
            let prof = inst.profile(sigma_max(cli, &inst)?)?;
            model::fj_simulate(&inst.influence, &prof, &y0, cli.k_max)?
        }
        Model::Degroot => model::degroot_simulate(&inst.influence, &y0, cli.k_max)?,
    };
    println!("{}", row(std::iter::once("k".to_string()).chain(header("", y0.len()))));
    for (k, y) in traj.steps.iter().enumerate() {
        println!("{}", row(std::iter::once(k.to_string()).chain(y.iter().map(|&v| sig12(v)))));
    }
    Ok(ExitCode::SUCCESS)
}

fn sweep_cmd(cli: &Cli, opts: LoadOptions) -> CmdResult {
    let inst = load(cli, opts)?;
    let y0 = inst.opinions()?;
    let grid = parse_grid(&cli.grid)?;
    let rows = sweep::sweep(&inst.influence, &inst.sigma_tilde, &y0, &grid, inst.options)?;
    println!("sigma_max,gain_gap,quasi_gap,settling_time");
    for r in rows {
        println!(
            "{}",
            row([
                sig12(r.sigma_max),
                sig12(r.gain_gap),
                sig12(r.quasi_gap),
                r.settling_time.to_string()
            ])
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn compare(cli: &Cli, opts: LoadOptions) -> CmdResult {
    let inst = load(cli, opts)?;
    let y0: OpinionVector = inst.opinions()?;
    let prof = inst.profile(sigma_max(cli, &inst)?)?;
    let fj = model::fj_simulate(&inst.influence, &prof, &y0, cli.k_max)?;
    let dg = model::degroot_simulate(&inst.influence, &y0, cli.k_max)?;
    let n = y0.len();
    println!(
        "{}",
        row(std::iter::once("k".to_string()).chain(header("fj_", n)).chain(header("dg_", n)))
    );
    for (k, (a, b)) in fj.steps.iter().zip(&dg.steps).enumerate() {
        let cells = a.iter().chain(b).map(|&v| sig12(v));
        println!("{}", row(std::iter::once(k.to_string()).chain(cells)));
    }
    Ok(ExitCode::SUCCESS)
}

fn campaign_cmd(n: usize, count: usize, seed: u64) -> CmdResult {
    let summary = campaign::run_campaign(n, count, seed)?;
    println!("check,passed,failed");
    for t in &summary.tallies {
        println!("{},{},{}", t.name, t.passed, t.failed);
    }
    if summary.errors > 0 {
        eprintln!("{} of {} instances raised numerical errors", summary.errors, count);
    }
    Ok(if summary.all_passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}
