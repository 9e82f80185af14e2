use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use aquifer_game::agronomy::{fit_surrogate, SurrogateModel};
use aquifer_game::econ::fit_exponential_trend;
use aquifer_game::io::config::{baseline_config, load_config, RunConfig};
use aquifer_game::io::report::{Command as RunCommand, RunReport};
use aquifer_game::io::run::{execute, rerender, rerun};
use aquifer_game::io::tables::{read_series, read_training, write_surrogate};
use aquifer_game::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "aquifer-game", version, about = "Nash-equilibrium irrigation strategies on a shared aquifer")]
struct Cli {
    /// JSON configuration, or a previous run's report.json. The shipped baseline when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed of the random initial strategy.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Relaxation step size.
    #[arg(long, global = true)]
    eta: Option<f64>,
    /// Stopping threshold on the sup-norm residual.
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    #[arg(long, global = true)]
    max_iters: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Yearly discount factor.
    #[arg(long, global = true)]
    discount: Option<f64>,
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Fit quadratic crop surrogates to a training CSV.
    FitSurrogate {
        #[arg(long)]
        training: PathBuf,
    },
    /// Fit an exponential trend to a `year,value` CSV.
    FitTrends {
        #[arg(long)]
        series: PathBuf,
    },
    /// Simulate a fixed strategy.
    Simulate {
        /// Strategy table in the `strategies.csv` format.
        #[arg(long)]
        strategy: Option<PathBuf>,
        /// Share of the first rotation crop when no table is given.
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        /// Share of the free crop when no table is given.
        #[arg(long, default_value_t = 0.5)]
        free: f64,
    },
    /// Compute and certify the Nash equilibrium.
    Solve,
    /// Solve under a built-in scenario.
    Scenario { name: String },
    /// Solve under LEMA pumping limits for each configured fraction.
    LemaSweep,
    /// Redraw the charts of a run directory, or re-execute it.
    Report {
        run_dir: PathBuf,
        /// Re-execute the recorded command into `--out` (default RUN_DIR/rerun).
        #[arg(long)]
        rerun: bool,
    },
}

fn load(cli: &Cli) -> Result<RunConfig> {
    let cfg = match &cli.config {
        Some(p) => load_config(p)?,
        None => baseline_config(),
    };
    let mut file = cfg.file.clone();
    let before = file.clone();
    if let Some(s) = cli.seed {
        file.solver.rng_seed = s;
    }
    if let Some(v) = cli.eta {
        file.solver.eta = v;
    }
    if let Some(v) = cli.epsilon {
        file.solver.epsilon = v;
    }
    if let Some(v) = cli.max_iters {
        file.solver.max_iters = v;
    }
    if let Some(v) = cli.discount {
        file.discount = v;
    }
    if file == before {
        Ok(cfg)
    } else {
        RunConfig::reload(file)
    }
}

fn out_dir(cli: &Cli, cfg: Option<&RunConfig>, default: &str) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| cfg.and_then(|c| c.file.output_dir.clone()))
        .unwrap_or_else(|| PathBuf::from(default))
}

fn summary(report: &RunReport, out: &Path) {
    println!("{} -> {}", report.command.label(), out.display());
    for (i, u) in report.utilities.iter().enumerate() {
        println!("agent {}: utility {u:.6e}", i + 1);
    }
    println!("aggregate utility {:.6e}", report.aggregate_utility);
    for p in &report.lema_sweep {
        println!("lema {:.2}: aggregate utility {:.6e}", p.fraction, p.aggregate_utility);
    }
}

fn run(cli: &Cli) -> Result<bool> {
    let quiet = cli.quiet;
    let mut log = |m: &str| {
        if !quiet {
            eprintln!("{m}");
        }
    };
    let cmd = match &cli.command {
        Cmd::FitSurrogate { training } => {
            let set = read_training(std::fs::File::open(training)?, Some(training))?;
            let mut crops = Vec::new();
            for (name, rows) in &set {
                let fit = fit_surrogate(rows, name)?;
                log(&format!("{name}: rmse {:?}, ridge {}", fit.rmse, fit.ridge_fallback));
                crops.push(fit.surrogate);
            }
            let out = out_dir(cli, None, ".");
            std::fs::create_dir_all(&out)?;
            let path = out.join("surrogate.csv");
            write_surrogate(std::fs::File::create(&path)?, &SurrogateModel { crops })?;
            if !quiet {
                println!("{}", path.display());
            }
            return Ok(true);
        }
        Cmd::FitTrends { series } => {
            let s = read_series(std::fs::File::open(series)?, Some(series))?;
            let t0 = s.first().map_or(0.0, |p| p.0);
            let shifted: Vec<(f64, f64)> = s.iter().map(|(t, v)| (t - t0, *v)).collect();
            let fit = fit_exponential_trend(&shifted)?;
            let json = serde_json::json!({
                "origin": t0,
                "init": fit.init,
                "rate": fit.rate,
                "time_constant": fit.time_constant(),
            });
            println!("{}", serde_json::to_string_pretty(&json)?);
            return Ok(true);
        }
        Cmd::Report { run_dir, rerun: again } => {
            let output = if *again {
                let out = cli.out.clone().unwrap_or_else(|| run_dir.join("rerun"));
                let o = rerun(run_dir, &out, &mut log)?;
                if !quiet {
                    summary(&o.report, &out);
                }
                o
            } else {
                let o = rerender(run_dir)?;
                if !quiet {
                    summary(&o.report, run_dir);
                }
                o
            };
            return Ok(output.report.converged());
        }
        Cmd::Simulate { strategy, alpha, free } => RunCommand::Simulate {
            strategy: match strategy {
                Some(p) => Some(p.canonicalize().map_err(|e| Error::InvalidInput(format!("{}: {e}", p.display())))?),
                None => None,
            },
            alpha: *alpha,
            free: *free,
        },
        Cmd::Solve => RunCommand::Solve,
        Cmd::Scenario { name } => RunCommand::Scenario { scenario: name.clone() },
        Cmd::LemaSweep => RunCommand::LemaSweep,
    };
    let cfg = load(cli)?;
    let out = out_dir(cli, Some(&cfg), &format!("runs/{}", cmd.label()));
    std::fs::create_dir_all(&out)?;
    let o = execute(&cmd, &cfg, &out, &mut log)?;
    if !quiet {
        summary(&o.report, &out);
    }
    Ok(o.report.converged())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("solver did not converge; results were written");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
