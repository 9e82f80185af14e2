//! CSV schemas for weather, surrogate training data, surrogate coefficients,
//! trend series and run outputs.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use crate::agronomy::{quadratic_len, Channel, CropResponse, CropSurrogate, SurrogateModel, TrainingRow, WeatherYear, FEATURE_NAMES, N_FEATURES};
use crate::error::{Error, Result};
use crate::sim::{JointStrategy, SimulationResult};

pub const WEATHER_HEADER: [&str; 8] = [
    "year",
    "precip_annual_mm",
    "precip_summer_mm",
    "precip_winter_mm",
    "solar_summer",
    "solar_winter",
    "tmax_mean_c",
    "tmin_mean_c",
];
pub const TRAINING_RESPONSE_COLUMNS: [&str; 5] = ["tr_mm", "ir_mm", "et_mm", "p_mm", "yield_bu_acre"];
pub const SURROGATE_HEADER: [&str; 5] = ["crop", "kind", "channel", "term", "value"];
pub const STRATEGY_HEADER: [&str; 4] = ["agent", "crop", "year", "x"];
pub const PANEL_HEADER: [&str; 7] = ["agent", "year", "revenue", "extraction_cost", "production_cost", "net", "pumped_m3"];

/// Fixed 17-significant-digit float formatting used in every output file.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn label(path: Option<&Path>) -> String {
    path.map(|p| p.display().to_string()).unwrap_or_else(|| "<embedded>".into())
}

fn csv_err(path: &str, row: usize, message: impl Into<String>) -> Error {
    Error::Csv {
        path: path.to_string(),
        row,
        message: message.into(),
    }
}

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r)
}

fn check_header<R: Read>(rd: &mut csv::Reader<R>, expected: &[&str], path: &str) -> Result<()> {
    let h = rd.headers().map_err(|e| csv_err(path, 1, e.to_string()))?;
    let got: Vec<&str> = h.iter().collect();
    if got != expected {
        for name in expected {
            if !got.contains(name) {
                return Err(csv_err(path, 1, format!("missing column `{name}`")));
            }
        }
        return Err(csv_err(path, 1, format!("header must be exactly `{}`", expected.join(","))));
    }
    Ok(())
}

/// Row numbers in messages count the header as row 1.
fn records<R: Read>(rd: &mut csv::Reader<R>, path: &str) -> Result<Vec<(usize, csv::StringRecord)>> {
    rd.records()
        .enumerate()
        .map(|(n, r)| r.map(|rec| (n + 2, rec)).map_err(|e| csv_err(path, n + 2, e.to_string())))
        .collect()
}

fn num(rec: &csv::StringRecord, col: usize, name: &str, path: &str, row: usize) -> Result<f64> {
    let s = rec.get(col).ok_or_else(|| csv_err(path, row, format!("missing `{name}`")))?;
    let v: f64 = s
        .parse()
        .map_err(|_| csv_err(path, row, format!("`{name}` is not a number: `{s}`")))?;
    if !v.is_finite() {
        return Err(csv_err(path, row, format!("`{name}` is not finite")));
    }
    Ok(v)
}

fn index(rec: &csv::StringRecord, col: usize, name: &str, path: &str, row: usize) -> Result<usize> {
    let s = rec.get(col).ok_or_else(|| csv_err(path, row, format!("missing `{name}`")))?;
    s.parse()
        .map_err(|_| csv_err(path, row, format!("`{name}` is not a non-negative integer: `{s}`")))
}

pub fn read_weather<R: Read>(r: R, path: Option<&Path>) -> Result<Vec<WeatherYear<f64>>> {
    let p = label(path);
    let mut rd = reader(r);
    check_header(&mut rd, &WEATHER_HEADER, &p)?;
    let mut out: Vec<WeatherYear<f64>> = Vec::new();
    for (row, rec) in records(&mut rd, &p)? {
        let ys = rec.get(0).unwrap_or("");
        let year: i32 = ys
            .parse()
            .map_err(|_| csv_err(&p, row, format!("`year` is not an integer: `{ys}`")))?;
        let mut v = [0.0; N_FEATURES];
        for (j, slot) in v.iter_mut().enumerate() {
            *slot = num(&rec, j + 1, WEATHER_HEADER[j + 1], &p, row)?;
        }
        let w = WeatherYear {
            year,
            precip_annual: v[0],
            precip_summer: v[1],
            precip_winter: v[2],
            solar_summer: v[3],
            solar_winter: v[4],
            tmax_mean: v[5],
            tmin_mean: v[6],
        };
        w.validate().map_err(|e| csv_err(&p, row, e.to_string()))?;
        if let Some(prev) = out.last() {
            if year != prev.year + 1 {
                return Err(csv_err(&p, row, format!("year gap: {} followed by {year}", prev.year)));
            }
        }
        out.push(w);
    }
    if out.is_empty() {
        return Err(csv_err(&p, 1, "no weather rows"));
    }
    Ok(out)
}

pub fn load_weather_csv(path: &Path) -> Result<Vec<WeatherYear<f64>>> {
    read_weather(std::fs::File::open(path)?, Some(path))
}

/// Training rows grouped by crop name, in order of first appearance.
pub type TrainingSet = Vec<(String, Vec<TrainingRow<f64>>)>;

pub fn read_training<R: Read>(r: R, path: Option<&Path>) -> Result<TrainingSet> {
    let p = label(path);
    let mut rd = reader(r);
    let mut header = vec!["crop", "year"];
    header.extend(FEATURE_NAMES);
    header.extend(TRAINING_RESPONSE_COLUMNS);
    check_header(&mut rd, &header, &p)?;
    let mut out: TrainingSet = Vec::new();
    for (row, rec) in records(&mut rd, &p)? {
        let crop = rec.get(0).unwrap_or("").to_string();
        if crop.is_empty() {
            return Err(csv_err(&p, row, "empty crop name"));
        }
        let mut features = [0.0; N_FEATURES];
        for (j, f) in features.iter_mut().enumerate() {
            *f = num(&rec, j + 2, FEATURE_NAMES[j], &p, row)?;
        }
        let mut response = CropResponse::default();
        for (j, c) in Channel::ALL.iter().enumerate() {
            response.set(*c, num(&rec, 2 + N_FEATURES + j, TRAINING_RESPONSE_COLUMNS[j], &p, row)?);
        }
        let tr = TrainingRow { features, response };
        match out.iter_mut().find(|(n, _)| *n == crop) {
            Some((_, rows)) => rows.push(tr),
            None => out.push((crop, vec![tr])),
        }
    }
    Ok(out)
}

/// Names of the quadratic basis terms: `1`, each feature, then `a*b` for `a <= b`.
pub fn term_names() -> Vec<String> {
    let mut v = vec!["1".to_string()];
    v.extend(FEATURE_NAMES.iter().map(|s| s.to_string()));
    for i in 0..N_FEATURES {
        for j in i..N_FEATURES {
            v.push(format!("{}*{}", FEATURE_NAMES[i], FEATURE_NAMES[j]));
        }
    }
    v
}

fn term_index(term: &str) -> Option<usize> {
    if let Some((a, b)) = term.split_once('*') {
        let (i, j) = (feature_index(a)?, feature_index(b)?);
        let (i, j) = (i.min(j), i.max(j));
        // offset of pair (i, j) in the upper-triangular ordering
        let before: usize = (0..i).map(|r| N_FEATURES - r).sum();
        Some(1 + N_FEATURES + before + (j - i))
    } else if term == "1" {
        Some(0)
    } else {
        feature_index(term).map(|i| i + 1)
    }
}

fn feature_index(name: &str) -> Option<usize> {
    FEATURE_NAMES.iter().position(|f| *f == name)
}

/// Reads a coefficient file. Terms absent from the file are zero; features
/// without a center/scale default to 0/1 and without a range to unbounded.
pub fn read_surrogate<R: Read>(r: R, path: Option<&Path>) -> Result<SurrogateModel<f64>> {
    let p = label(path);
    let mut rd = reader(r);
    check_header(&mut rd, &SURROGATE_HEADER, &p)?;
    let mut order: Vec<String> = Vec::new();
    let mut crops: BTreeMap<String, CropSurrogate<f64>> = BTreeMap::new();
    let len = quadratic_len(N_FEATURES);
    for (row, rec) in records(&mut rd, &p)? {
        let name = rec.get(0).unwrap_or("").to_string();
        if name.is_empty() {
            return Err(csv_err(&p, row, "empty crop name"));
        }
        let kind = rec.get(1).unwrap_or("");
        let channel = rec.get(2).unwrap_or("");
        let term = rec.get(3).unwrap_or("");
        let value = num(&rec, 4, "value", &p, row)?;
        let entry = crops.entry(name.clone()).or_insert_with(|| {
            order.push(name.clone());
            CropSurrogate {
                name: name.clone(),
                center: vec![0.0; N_FEATURES],
                scale: vec![1.0; N_FEATURES],
                feature_min: vec![f64::NEG_INFINITY; N_FEATURES],
                feature_max: vec![f64::INFINITY; N_FEATURES],
                channels: vec![vec![0.0; len]; Channel::ALL.len()],
            }
        });
        if kind == "coef" {
            let c = Channel::from_name(channel).ok_or_else(|| csv_err(&p, row, format!("unknown channel `{channel}`")))?;
            let t = term_index(term).ok_or_else(|| csv_err(&p, row, format!("unknown term `{term}`")))?;
            entry.channels[c.index()][t] = value;
            continue;
        }
        let f = feature_index(term).ok_or_else(|| csv_err(&p, row, format!("unknown feature `{term}`")))?;
        match kind {
            "center" => entry.center[f] = value,
            "scale" => entry.scale[f] = value,
            "min" => entry.feature_min[f] = value,
            "max" => entry.feature_max[f] = value,
            other => return Err(csv_err(&p, row, format!("unknown kind `{other}`"))),
        }
    }
    let model = SurrogateModel {
        crops: order.iter().filter_map(|n| crops.remove(n)).collect(),
    };
    model.validate()?;
    Ok(model)
}

pub fn write_surrogate<W: Write>(w: W, model: &SurrogateModel<f64>) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(SURROGATE_HEADER).map_err(csv_io)?;
    let terms = term_names();
    for c in &model.crops {
        for (kind, vals) in [
            ("center", &c.center),
            ("scale", &c.scale),
            ("min", &c.feature_min),
            ("max", &c.feature_max),
        ] {
            for (f, v) in vals.iter().enumerate() {
                if v.is_finite() {
                    wr.write_record([c.name.as_str(), kind, "", FEATURE_NAMES[f], &fmt_f64(*v)])
                        .map_err(csv_io)?;
                }
            }
        }
        for ch in Channel::ALL {
            for (t, v) in c.channels[ch.index()].iter().enumerate() {
                wr.write_record([c.name.as_str(), "coef", ch.name(), &terms[t], &fmt_f64(*v)])
                    .map_err(csv_io)?;
            }
        }
    }
    wr.flush()?;
    Ok(())
}

/// `year,value` series for trend fitting.
pub fn read_series<R: Read>(r: R, path: Option<&Path>) -> Result<Vec<(f64, f64)>> {
    let p = label(path);
    let mut rd = reader(r);
    check_header(&mut rd, &["year", "value"], &p)?;
    records(&mut rd, &p)?
        .into_iter()
        .map(|(row, rec)| Ok((num(&rec, 0, "year", &p, row)?, num(&rec, 1, "value", &p, row)?)))
        .collect()
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

pub fn write_strategy<W: Write>(w: W, x: &JointStrategy<f64>) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(STRATEGY_HEADER).map_err(csv_io)?;
    for i in 0..x.n_agents() {
        for k in 0..x.n_crops() {
            for t in 0..x.horizon() {
                wr.write_record([
                    (i + 1).to_string(),
                    (k + 1).to_string(),
                    (t + 1).to_string(),
                    fmt_f64(x.get(i, k, t)),
                ])
                .map_err(csv_io)?;
            }
        }
    }
    wr.flush()?;
    Ok(())
}

/// Reads `strategies.csv`; every (agent, crop, year) cell must appear once.
pub fn read_strategy<R: Read>(r: R, path: Option<&Path>) -> Result<JointStrategy<f64>> {
    let p = label(path);
    let mut rd = reader(r);
    check_header(&mut rd, &STRATEGY_HEADER, &p)?;
    let mut cells = Vec::new();
    let (mut n, mut k, mut h) = (0, 0, 0);
    for (row, rec) in records(&mut rd, &p)? {
        let i = index(&rec, 0, "agent", &p, row)?;
        let c = index(&rec, 1, "crop", &p, row)?;
        let t = index(&rec, 2, "year", &p, row)?;
        if i == 0 || c == 0 || t == 0 {
            return Err(csv_err(&p, row, "indices are 1-based"));
        }
        let v = num(&rec, 3, "x", &p, row)?;
        n = n.max(i);
        k = k.max(c);
        h = h.max(t);
        cells.push((row, i - 1, c - 1, t - 1, v));
    }
    let mut x = JointStrategy::filled(n, k, h, f64::NAN);
    for (row, i, c, t, v) in cells {
        if !x.get(i, c, t).is_nan() {
            return Err(csv_err(&p, row, "duplicate cell"));
        }
        x.set(i, c, t, v);
    }
    if x.as_slice().iter().any(|v| v.is_nan()) {
        return Err(csv_err(&p, 1, "strategy table has missing cells"));
    }
    Ok(x)
}

pub fn write_panel<W: Write>(w: W, res: &SimulationResult<f64>) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(PANEL_HEADER).map_err(csv_io)?;
    for (t, year) in res.years.iter().enumerate() {
        for (i, a) in year.iter().enumerate() {
            wr.write_record([
                (i + 1).to_string(),
                (t + 1).to_string(),
                fmt_f64(a.revenue),
                fmt_f64(a.extraction_cost),
                fmt_f64(a.production_cost),
                fmt_f64(a.net_gain),
                fmt_f64(a.pumped),
            ])
            .map_err(csv_io)?;
        }
    }
    wr.flush()?;
    Ok(())
}

/// One parsed `panel.csv` row.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelRow {
    pub agent: usize,
    pub year: usize,
    pub revenue: f64,
    pub extraction_cost: f64,
    pub production_cost: f64,
    pub net: f64,
    pub pumped: f64,
}

pub fn read_panel<R: Read>(r: R, path: Option<&Path>) -> Result<Vec<PanelRow>> {
    let p = label(path);
    let mut rd = reader(r);
    check_header(&mut rd, &PANEL_HEADER, &p)?;
    records(&mut rd, &p)?
        .into_iter()
        .map(|(row, rec)| {
            Ok(PanelRow {
                agent: index(&rec, 0, "agent", &p, row)?,
                year: index(&rec, 1, "year", &p, row)?,
                revenue: num(&rec, 2, "revenue", &p, row)?,
                extraction_cost: num(&rec, 3, "extraction_cost", &p, row)?,
                production_cost: num(&rec, 4, "production_cost", &p, row)?,
                net: num(&rec, 5, "net", &p, row)?,
                pumped: num(&rec, 6, "pumped_m3", &p, row)?,
            })
        })
        .collect()
}

pub fn heads_header(n_agents: usize) -> Vec<String> {
    let mut h = vec!["year".to_string(), "g0".to_string()];
    h.extend((1..=n_agents).map(|i| format!("g{i}")));
    h
}

/// One row per year boundary; year 0 is the initial state.
pub fn write_heads<W: Write>(w: W, res: &SimulationResult<f64>) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(heads_header(res.n_agents())).map_err(csv_io)?;
    for (t, s) in res.heads.iter().enumerate() {
        let mut rec = vec![t.to_string(), fmt_f64(s.boundary_head)];
        rec.extend(s.heads.iter().map(|h| fmt_f64(*h)));
        wr.write_record(rec).map_err(csv_io)?;
    }
    wr.flush()?;
    Ok(())
}

/// Reads `heads.csv` into rows of `[g0, g1, ..]`.
pub fn read_heads<R: Read>(r: R, path: Option<&Path>) -> Result<Vec<Vec<f64>>> {
    let p = label(path);
    let mut rd = reader(r);
    let h = rd.headers().map_err(|e| csv_err(&p, 1, e.to_string()))?.clone();
    if h.len() < 3 || h.get(0) != Some("year") || h.get(1) != Some("g0") {
        return Err(csv_err(&p, 1, "header must start with `year,g0,g1`"));
    }
    let cols = h.len();
    records(&mut rd, &p)?
        .into_iter()
        .map(|(row, rec)| (1..cols).map(|c| num(&rec, c, &h[c], &p, row)).collect())
        .collect()
}
