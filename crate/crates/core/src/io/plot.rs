//! Charts of a run, written as standalone SVG files.

use std::path::Path;

use super::report::{RunReport, SweepPoint};
use super::svg::{Chart, Series, Style};
use crate::error::Result;
use crate::sim::{CropLayout, JointStrategy, SimulationResult};

pub const STRATEGIES_SVG: &str = "strategies_vs_year.svg";
pub const UTILITIES_SVG: &str = "utilities_vs_year.svg";
pub const HEADS_SVG: &str = "heads_vs_year.svg";
pub const PUMPED_SVG: &str = "pumped_vs_utility.svg";
pub const SWEEP_SVG: &str = "utility_vs_fraction.svg";

fn crop_name(names: &[String], k: usize) -> String {
    names.get(k).cloned().unwrap_or_else(|| format!("crop {}", k + 1))
}

/// Planted share per agent and year: the first crop of the rotation pair
/// as solid lines, the free crop as dashed lines.
pub fn strategies_chart(x: &JointStrategy<f64>, crops: &[String]) -> Chart {
    let mut series = Vec::new();
    if let Ok(layout) = CropLayout::new(x.n_crops()) {
        for i in 0..x.n_agents() {
            let line = |k: usize, style| Series {
                name: format!("agent {} {}", i + 1, crop_name(crops, k)),
                points: (0..x.horizon()).map(|t| ((t + 1) as f64, x.get(i, k, t))).collect(),
                style,
            };
            if let Some((a, _)) = layout.pair() {
                series.push(line(a, Style::Line));
            }
            if let Some(c) = layout.free() {
                series.push(line(c, Style::Dashed));
            }
        }
    }
    Chart {
        title: "Planted share by year".into(),
        x_label: "year".into(),
        y_label: "share of area".into(),
        series,
        x_ticks: None,
    }
}

pub fn utilities_chart(res: &SimulationResult<f64>) -> Chart {
    let series = (0..res.n_agents())
        .map(|i| Series {
            name: format!("agent {}", i + 1),
            points: res.years.iter().enumerate().map(|(t, y)| ((t + 1) as f64, y[i].net_gain)).collect(),
            style: Style::Line,
        })
        .collect();
    Chart {
        title: "Net gain by year".into(),
        x_label: "year".into(),
        y_label: "net gain ($)".into(),
        series,
        x_ticks: None,
    }
}

pub fn heads_chart(res: &SimulationResult<f64>) -> Chart {
    let mut series = vec![Series {
        name: "boundary".into(),
        points: res.heads.iter().enumerate().map(|(t, s)| (t as f64, s.boundary_head)).collect(),
        style: Style::Dashed,
    }];
    series.extend((0..res.n_agents()).map(|i| Series {
        name: format!("agent {}", i + 1),
        points: res.heads.iter().enumerate().map(|(t, s)| (t as f64, s.heads[i])).collect(),
        style: Style::Line,
    }));
    Chart {
        title: "Groundwater head by year".into(),
        x_label: "year".into(),
        y_label: "head (m)".into(),
        series,
        x_ticks: None,
    }
}

pub fn pumped_chart(res: &SimulationResult<f64>) -> Chart {
    let series = (0..res.n_agents())
        .map(|i| Series {
            name: format!("agent {}", i + 1),
            points: vec![(res.years.iter().map(|y| y[i].pumped).sum(), res.utilities[i])],
            style: Style::Points,
        })
        .collect();
    Chart {
        title: "Total pumped volume and utility".into(),
        x_label: "pumped (m3)".into(),
        y_label: "utility ($)".into(),
        series,
        x_ticks: None,
    }
}

/// Aggregate utility per LEMA fraction, one x tick per fraction.
pub fn sweep_chart(points: &[SweepPoint]) -> Chart {
    let mut pts: Vec<(f64, f64)> = points.iter().map(|p| (p.fraction, p.aggregate_utility)).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    Chart {
        title: "Aggregate utility by LEMA fraction".into(),
        x_label: "fraction of unconstrained pumping".into(),
        y_label: "aggregate utility ($)".into(),
        x_ticks: Some(pts.iter().map(|p| p.0).collect()),
        series: vec![Series {
            name: "all agents".into(),
            points: pts,
            style: Style::Line,
        }],
    }
}

/// Writes the per-run charts, and the sweep chart when the report has one.
pub fn render_plots(dir: &Path, x: &JointStrategy<f64>, res: &SimulationResult<f64>, report: &RunReport) -> Result<()> {
    render_run_plots(dir, x, res, &report.crops)?;
    if !report.lema_sweep.is_empty() {
        std::fs::write(dir.join(SWEEP_SVG), sweep_chart(&report.lema_sweep).render())?;
    }
    Ok(())
}

pub fn render_run_plots(dir: &Path, x: &JointStrategy<f64>, res: &SimulationResult<f64>, crops: &[String]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(STRATEGIES_SVG), strategies_chart(x, crops).render())?;
    std::fs::write(dir.join(UTILITIES_SVG), utilities_chart(res).render())?;
    std::fs::write(dir.join(HEADS_SVG), heads_chart(res).render())?;
    std::fs::write(dir.join(PUMPED_SVG), pumped_chart(res).render())?;
    Ok(())
}
