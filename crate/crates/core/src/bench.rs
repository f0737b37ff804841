//! Repeated runs over an instance set, summarized as a CSV report.

use std::collections::HashMap;
use std::io::{Read, Write};

use serde::Deserialize;
use thiserror::Error;

use crate::metrics;
use crate::par::Exec;
use crate::problem::Problem;
use crate::solver::{solve, RunConfig};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("reference file: {0}")]
    References(#[from] csv::Error),
    #[error("report: {0}")]
    Io(#[from] std::io::Error),
}

/// Reference values for one instance. Any of them may be missing.
#[derive(Clone, Copy, Debug, Default, PartialEq, Deserialize)]
pub struct Reference {
    pub bks: Option<f64>,
    pub lb: Option<f64>,
    pub bkg: Option<f64>,
}

#[derive(Deserialize)]
struct RefRecord {
    instance: String,
    #[serde(default)]
    bks: Option<f64>,
    #[serde(default)]
    lb: Option<f64>,
    #[serde(default)]
    bkg: Option<f64>,
}

/// Reads a CSV with header `instance,bks,lb[,bkg]`; empty cells are missing
/// values.
pub fn read_references<R: Read>(reader: R) -> Result<HashMap<String, Reference>, BenchError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut refs = HashMap::new();
    for record in rdr.deserialize() {
        let r: RefRecord = record?;
        refs.insert(
            r.instance,
            Reference {
                bks: r.bks,
                lb: r.lb,
                bkg: r.bkg,
            },
        );
    }
    Ok(refs)
}

pub const CSV_HEADER: [&str; 12] = [
    "instance",
    "n",
    "m",
    "d",
    "shape",
    "best",
    "time_to_best_s",
    "runs",
    "arpd",
    "brpd",
    "lb",
    "gap",
];

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub instance: String,
    pub n: usize,
    pub m: usize,
    pub d: usize,
    pub shape: Option<String>,
    pub best: f64,
    /// Time to best of the first run reaching `best`.
    pub time_to_best_s: f64,
    pub run_objectives: Vec<f64>,
    pub arpd: Option<f64>,
    pub brpd: Option<f64>,
    pub lb: Option<f64>,
    pub gap: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchSummary {
    pub instances: usize,
    pub runs: usize,
    pub mean_time_to_best_s: f64,
    pub mean_arpd: Option<f64>,
    pub mean_brpd: Option<f64>,
    pub mean_gap: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub summary: BenchSummary,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    (count > 0).then(|| sum / count as f64)
}

/// Solves every instance `runs` times, run `r` with seed `cfg.seed + r`.
/// Runs are spread over `exec`.
pub fn run_bench(
    instances: &[(String, Problem)],
    cfg: &RunConfig,
    runs: usize,
    refs: &HashMap<String, Reference>,
    exec: Exec,
) -> BenchReport {
    let jobs: Vec<(usize, usize)> = (0..instances.len())
        .flat_map(|i| (0..runs).map(move |r| (i, r)))
        .collect();
    let results = exec.map(&jobs, |&(i, r)| {
        let run_cfg = RunConfig {
            seed: cfg.seed.wrapping_add(r as u64),
            ..cfg.clone()
        };
        let out = solve(&instances[i].1, &run_cfg);
        (out.objective(), out.time_to_best_s)
    });

    let rows: Vec<BenchRow> = instances
        .iter()
        .enumerate()
        .map(|(i, (name, problem))| {
            let mine = &results[i * runs..(i + 1) * runs];
            let objectives: Vec<f64> = mine.iter().map(|r| r.0).collect();
            let (best, time_to_best_s) = mine
                .iter()
                .copied()
                .fold((f64::INFINITY, 0.0), |acc, r| if r.0 < acc.0 { r } else { acc });
            let reference = refs.get(name).copied().unwrap_or_default();
            let m = metrics::metrics(&objectives, time_to_best_s, reference.bks, None, None).ok();
            let inst = problem.instance();
            BenchRow {
                instance: name.clone(),
                n: inst.n(),
                m: inst.m(),
                d: inst.d(),
                shape: inst.shape().map(|s| s.to_string()),
                best,
                time_to_best_s,
                run_objectives: objectives,
                arpd: m.as_ref().and_then(|m| m.arpd),
                brpd: m.as_ref().and_then(|m| m.brpd),
                lb: reference.lb,
                gap: reference.lb.and_then(|lb| metrics::gap(best, lb).ok()),
            }
        })
        .collect();

    let summary = BenchSummary {
        instances: rows.len(),
        runs: rows.len() * runs,
        mean_time_to_best_s: mean(rows.iter().map(|r| r.time_to_best_s)).unwrap_or(0.0),
        mean_arpd: mean(rows.iter().filter_map(|r| r.arpd)),
        mean_brpd: mean(rows.iter().filter_map(|r| r.brpd)),
        mean_gap: mean(rows.iter().filter_map(|r| r.gap)),
    };
    BenchReport { rows, summary }
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes one row per instance and a final `summary` row holding means
/// over the instances.
pub fn write_csv<W: Write>(report: &BenchReport, out: W) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in &report.rows {
        w.write_record([
            r.instance.clone(),
            r.n.to_string(),
            r.m.to_string(),
            r.d.to_string(),
            r.shape.clone().unwrap_or_default(),
            r.best.to_string(),
            r.time_to_best_s.to_string(),
            r.run_objectives.len().to_string(),
            cell(r.arpd),
            cell(r.brpd),
            cell(r.lb),
            cell(r.gap),
        ])?;
    }
    let s = &report.summary;
    w.write_record([
        "summary".to_string(),
        String::new(),
        String::new(),
        String::new(),
        String::new(),
        String::new(),
        s.mean_time_to_best_s.to_string(),
        s.runs.to_string(),
        cell(s.mean_arpd),
        cell(s.mean_brpd),
        String::new(),
        cell(s.mean_gap),
    ])?;
    w.flush()?;
    Ok(())
}
