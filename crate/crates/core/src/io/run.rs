//! Command execution shared by the binary and the tests.

use std::path::Path;

use super::config::{load_config, RunConfig};
use super::plot::{render_plots, render_run_plots};
use super::report::{write_results, write_tables, Command, RunReport, SweepPoint, REPORT_JSON, STRATEGIES_CSV};
use super::tables::read_strategy;
use crate::error::{Error, Result};
use crate::game::{lema_limits, relax_to_equilibrium, verify_equilibrium, EquilibriumReport};
use crate::scenarios::{builtin_scenario, resolve_scenario, ResolvedScenario};
use crate::sim::{run_simulation, JointStrategy, SimulationResult};

/// Everything a command produced.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: RunReport,
    pub strategy: JointStrategy<f64>,
    pub result: SimulationResult<f64>,
}

fn solve(
    res: &ResolvedScenario<f64>,
    cfg: &RunConfig,
    log: &mut dyn FnMut(&str),
) -> Result<(JointStrategy<f64>, EquilibriumReport, EquilibriumReport)> {
    let (x, eq) = relax_to_equilibrium(None, &res.inputs, None, &cfg.solver)?;
    log(&format!(
        "relaxation: {} iterations, residual {:.3e}, converged {}",
        eq.iterations, eq.residual, eq.converged
    ));
    let cert = verify_equilibrium(&x, &res.inputs, None, &cfg.verify)?;
    log(&format!(
        "certification: largest relative improvement {:.3e}, certified {}",
        cert.max_relative_improvement(),
        cert.converged
    ));
    Ok((x, eq, cert))
}

fn fraction_dir(f: f64) -> String {
    format!("lema_{f:.2}")
}

/// Runs `cmd` under `cfg` and writes tables, charts and `report.json` to `out`.
pub fn execute(cmd: &Command, cfg: &RunConfig, out: &Path, log: &mut dyn FnMut(&str)) -> Result<RunOutput> {
    let cfg = match cmd {
        Command::Scenario { scenario } => cfg.with_scenario(builtin_scenario(scenario, cfg.file.horizon)?)?,
        _ => cfg.clone(),
    };
    let res = resolve_scenario(&cfg.weather, &cfg.base, &cfg.scenario)?;
    if res.out_of_domain > 0 {
        log(&format!("warning: {} weather years outside the surrogate range", res.out_of_domain));
    }
    let inputs = &res.inputs;
    let (strategy, equilibrium, certification) = match cmd {
        Command::Simulate { strategy, alpha, free } => {
            let x = match strategy {
                Some(p) => read_strategy(std::fs::File::open(p)?, Some(p))?,
                None => JointStrategy::from_shares(inputs.n_agents(), inputs.layout()?, inputs.horizon, |_, _| (*alpha, *free)),
            };
            (x, None, None)
        }
        _ => {
            let (x, eq, cert) = solve(&res, &cfg, log)?;
            (x, Some(eq), Some(cert))
        }
    };
    let result = run_simulation(&strategy, inputs)?;

    let mut lema_sweep = Vec::new();
    if *cmd == Command::LemaSweep {
        let fractions = if cfg.scenario.lema_fractions.is_empty() {
            builtin_scenario("lema_sweep", cfg.file.horizon)?.lema_fractions
        } else {
            cfg.scenario.lema_fractions.clone()
        };
        // each solve starts from the previous fraction's equilibrium
        let mut warm = strategy.clone();
        for f in fractions {
            let c = lema_limits(&result, f)?;
            let (y, r) = relax_to_equilibrium(Some(&warm), inputs, Some(&c), &cfg.solver)?;
            let sim = run_simulation(&y, inputs)?;
            let dir = fraction_dir(f);
            write_tables(&out.join(&dir), &y, &sim)?;
            render_run_plots(&out.join(&dir), &y, &sim, &crop_names(&cfg))?;
            let p = SweepPoint {
                fraction: f,
                dir,
                aggregate_utility: sim.utilities.iter().sum(),
                utilities: sim.utilities.clone(),
                iterations: r.iterations,
                residual: r.residual,
                converged: r.converged,
                feasible: r.feasible,
                worst_relative_violation: c.worst_relative_violation(inputs, &y),
                penalty_weight: r.penalty_weight,
            };
            log(&format!(
                "lema {f:.2}: aggregate utility {:.6e}, converged {}, worst relative violation {:.2e}",
                p.aggregate_utility, p.converged, p.worst_relative_violation
            ));
            lema_sweep.push(p);
            warm = y;
        }
    }

    let report = RunReport {
        command: cmd.clone(),
        config: cfg.file.clone(),
        scenario: cfg.scenario.clone(),
        crops: crop_names(&cfg),
        equilibrium,
        certification,
        utilities: result.utilities.clone(),
        aggregate_utility: result.utilities.iter().sum(),
        final_heads: result.heads.last().map(|s| s.heads.clone()).unwrap_or_default(),
        floored_pumping: result.floored_pumping,
        out_of_domain: res.out_of_domain,
        clamped: res.clamped,
        lema_sweep,
    };
    write_results(out, &strategy, &result, &report)?;
    render_plots(out, &strategy, &result, &report)?;
    Ok(RunOutput { report, strategy, result })
}

fn crop_names(cfg: &RunConfig) -> Vec<String> {
    cfg.file.crops.iter().map(|c| c.name.clone()).collect()
}

/// Re-executes the run recorded in `run_dir/report.json` into `out`.
pub fn rerun(run_dir: &Path, out: &Path, log: &mut dyn FnMut(&str)) -> Result<RunOutput> {
    let path = run_dir.join(REPORT_JSON);
    let report = RunReport::load(&path)?;
    let cfg = load_config(&path)?;
    execute(&report.command, &cfg, out, log)
}

/// Re-simulates the strategy stored in a run directory and redraws its charts.
pub fn rerender(run_dir: &Path) -> Result<RunOutput> {
    let path = run_dir.join(REPORT_JSON);
    let report = RunReport::load(&path)?;
    let cfg = load_config(&path)?;
    let res = resolve_scenario(&cfg.weather, &cfg.base, &cfg.scenario)?;
    let sp = run_dir.join(STRATEGIES_CSV);
    let strategy = read_strategy(std::fs::File::open(&sp)?, Some(&sp))?;
    if strategy.n_agents() != res.inputs.n_agents() || strategy.horizon() != res.inputs.horizon {
        return Err(Error::invalid("strategies.csv does not match the recorded configuration"));
    }
    let result = run_simulation(&strategy, &res.inputs)?;
    render_plots(run_dir, &strategy, &result, &report)?;
    Ok(RunOutput { report, strategy, result })
}
