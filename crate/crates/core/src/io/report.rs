//! Run outputs: strategy, panel and head tables plus `report.json`.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ConfigFile;
use super::tables::{write_heads, write_panel, write_strategy};
use crate::error::Result;
use crate::game::EquilibriumReport;
use crate::scenarios::ScenarioSpec;
use crate::sim::{JointStrategy, SimulationResult};

pub const STRATEGIES_CSV: &str = "strategies.csv";
pub const PANEL_CSV: &str = "panel.csv";
pub const HEADS_CSV: &str = "heads.csv";
pub const REPORT_JSON: &str = "report.json";

/// The command that produced a run, with its arguments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Command {
    /// Simulates a fixed strategy: read from a CSV, or constant shares.
    Simulate {
        strategy: Option<PathBuf>,
        alpha: f64,
        free: f64,
    },
    Solve,
    Scenario {
        scenario: String,
    },
    LemaSweep,
}

impl Command {
    pub fn label(&self) -> &'static str {
        match self {
            Command::Simulate { .. } => "simulate",
            Command::Solve => "solve",
            Command::Scenario { .. } => "scenario",
            Command::LemaSweep => "lema-sweep",
        }
    }
}

/// One constrained solve of a LEMA sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub fraction: f64,
    /// Subdirectory holding this solve's tables and charts.
    pub dir: String,
    pub aggregate_utility: f64,
    pub utilities: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
    pub feasible: bool,
    pub worst_relative_violation: f64,
    pub penalty_weight: Option<f64>,
}

/// Contents of `report.json`. Its `config` is the complete resolved
/// configuration, so the file can be passed back as `--config`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunReport {
    pub command: Command,
    pub config: ConfigFile,
    pub scenario: ScenarioSpec,
    pub crops: Vec<String>,
    pub equilibrium: Option<EquilibriumReport>,
    pub certification: Option<EquilibriumReport>,
    /// Discounted utility per agent of the written strategy.
    pub utilities: Vec<f64>,
    pub aggregate_utility: f64,
    pub final_heads: Vec<f64>,
    /// Agent-years whose pumping cost was floored at zero.
    pub floored_pumping: usize,
    /// Weather years outside the surrogate's fitted range.
    pub out_of_domain: usize,
    /// Surrogate evaluations clamped to physical bounds.
    pub clamped: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub lema_sweep: Vec<SweepPoint>,
}

impl RunReport {
    /// True when every solve in the run converged.
    pub fn converged(&self) -> bool {
        self.equilibrium.as_ref().is_none_or(|e| e.converged) && self.lema_sweep.iter().all(|p| p.converged)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

/// Writes the strategy, panel and head tables into `dir`.
pub fn write_tables(dir: &Path, strategy: &JointStrategy<f64>, result: &SimulationResult<f64>) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_strategy(create(dir, STRATEGIES_CSV)?, strategy)?;
    write_panel(create(dir, PANEL_CSV)?, result)?;
    write_heads(create(dir, HEADS_CSV)?, result)?;
    Ok(())
}

/// Writes `strategies.csv`, `panel.csv`, `heads.csv` and `report.json`.
pub fn write_results(
    dir: &Path,
    strategy: &JointStrategy<f64>,
    result: &SimulationResult<f64>,
    report: &RunReport,
) -> Result<()> {
    write_tables(dir, strategy, result)?;
    report.save(&dir.join(REPORT_JSON))
}
