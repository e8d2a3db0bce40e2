use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use openqmc::output::{read_trajectory, write_bath, write_variance};
use openqmc::{run_experiment, variance_harness, write_outputs, CliError, CliResult, Method, RunConfig, RunFile};
use openqmc_core::bath::{discretize_bath, BathCorrelation};
use openqmc_core::pairings::PairingFamily;
use openqmc_core::CorrelationMode;

#[derive(Parser)]
#[command(name = "openqmc", version, about = "Diagrammatic Monte Carlo for spin-boson dynamics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its trajectory CSV and metadata.
    Run(RunArgs),
    /// Variance of Dyson-reuse and BTB against high-budget references.
    Variance(VarianceArgs),
    /// Pairing enumeration.
    Pairings {
        #[command(subcommand)]
        command: PairingsCommand,
    },
    /// Tabulate the bath correlation `B(Δτ)` and print the automatic bound.
    Bath(BathArgs),
}

#[derive(Args)]
struct Overrides {
    #[arg(long)]
    method: Option<Method>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    output: Option<PathBuf>,
    /// Evaluate `B` by linear interpolation on this many grid points.
    #[arg(long)]
    b_table: Option<usize>,
}

impl Overrides {
    fn apply(self, file: &mut RunFile) {
        if let Some(m) = self.method {
            file.method = m;
        }
        if let Some(s) = self.seed {
            file.seed = s;
        }
        if let Some(t) = self.threads {
            file.threads = t;
        }
        if let Some(o) = self.output {
            file.output = o;
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    overrides: Overrides,
    /// Also write the bold propagator table (BTB only).
    #[arg(long)]
    bold_table: bool,
}

#[derive(Args)]
struct VarianceArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    repeats: usize,
    /// Reference trajectory CSV for Dyson-reuse (and BTB unless given separately).
    #[arg(long)]
    reference: PathBuf,
    #[arg(long)]
    reference_btb: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    All,
    Connected,
    Btb,
}

#[derive(Subcommand)]
enum PairingsCommand {
    /// Print the number of pairings of `m` points.
    Count {
        #[arg(long)]
        m: usize,
        /// Split index for the BTB family; all of `1..=m` when omitted.
        #[arg(long)]
        ell: Option<usize>,
        #[arg(long, value_enum, default_value = "all")]
        family: FamilyArg,
    },
}

#[derive(Args)]
struct BathArgs {
    #[arg(long)]
    config: PathBuf,
    /// Largest `|Δτ|`; defaults to twice the run horizon.
    #[arg(long)]
    max_tau: Option<f64>,
    #[arg(long, default_value_t = 801)]
    points: usize,
    #[arg(long)]
    output: Option<PathBuf>,
}

fn load(path: &PathBuf, overrides: Overrides) -> CliResult<RunConfig> {
    let mut file = RunFile::load(path)?;
    let b_table = overrides.b_table;
    overrides.apply(&mut file);
    let mut config = file.resolve()?;
    if let Some(points) = b_table {
        config.solver.correlation = CorrelationMode::Tabulated { points };
        config.solver.validate()?;
    }
    Ok(config)
}

fn run(args: RunArgs) -> CliResult<()> {
    let config = load(&args.config, args.overrides)?;
    let out = run_experiment(&config)?;
    write_outputs(&config, &out, args.bold_table)?;
    let last = out.trajectory.points.last().map_or(f64::NAN, |p| p.observable);
    println!(
        "{} steps={} B={} obs(T)={last} bold={:.3}s march={:.3}s total={:.3}s -> {}",
        config.method.name(),
        config.solver.steps,
        out.b_bound,
        out.wall_times.bold_s,
        out.wall_times.march_s,
        out.wall_times.total_s,
        config.output.display()
    );
    Ok(())
}

fn variance(args: VarianceArgs) -> CliResult<()> {
    let config = load(&args.config, args.overrides)?;
    let dyson = read_trajectory(&args.reference)?;
    let btb = match &args.reference_btb {
        Some(p) => read_trajectory(p)?,
        None => dyson.clone(),
    };
    let table = variance_harness(&config, args.repeats, &dyson, &btb)?;
    write_variance(&config.output, &table)?;
    let n = table.times.len() - 1;
    println!(
        "t={} var_dyson={} var_btb={} ratio={} -> {}",
        table.times[n],
        table.dyson[n],
        table.btb[n],
        table.ratio(n),
        config.output.display()
    );
    Ok(())
}

fn pairings(m: usize, ell: Option<usize>, family: FamilyArg) -> CliResult<()> {
    let count = |f: PairingFamily| f.enumerate().map(|v| v.len()).map_err(CliError::from);
    match (family, ell) {
        (FamilyArg::All, _) => println!("{}", count(PairingFamily::all(m))?),
        (FamilyArg::Connected, _) => println!("{}", count(PairingFamily::connected(m))?),
        (FamilyArg::Btb, Some(ell)) => println!("{}", count(PairingFamily::btb(m, ell))?),
        (FamilyArg::Btb, None) => {
            let counts = (1..=m).map(|l| count(PairingFamily::btb(m, l))).collect::<CliResult<Vec<_>>>()?;
            let min = counts.iter().min().copied().unwrap_or(0);
            let max = counts.iter().max().copied().unwrap_or(0);
            println!("min={min} max={max} per_ell={counts:?}");
        }
    }
    Ok(())
}

fn bath(args: BathArgs) -> CliResult<()> {
    let config = RunFile::load(&args.config)?.resolve()?;
    let modes = discretize_bath(&config.solver.bath)?;
    let corr = BathCorrelation::new(&modes, config.solver.bath.beta)?;
    let horizon = config.solver.horizon();
    println!("b_bound={}", corr.default_bound(2.0 * horizon));
    if let Some(path) = args.output {
        if args.points < 2 {
            return Err(CliError::config("points", "need at least two points"));
        }
        let max = args.max_tau.unwrap_or(2.0 * horizon);
        let samples: Vec<_> = (0..args.points)
            .map(|k| {
                let tau = -max + 2.0 * max * k as f64 / (args.points - 1) as f64;
                (tau, corr.at_delta(tau))
            })
            .collect();
        write_bath(&path, &samples)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let result = match Cli::parse().command {
        Command::Run(args) => run(args),
        Command::Variance(args) => variance(args),
        Command::Pairings { command: PairingsCommand::Count { m, ell, family } } => pairings(m, ell, family),
        Command::Bath(args) => bath(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
