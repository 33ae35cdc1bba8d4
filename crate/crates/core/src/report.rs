//! Comparison metrics and report files.
//!
//! `emit_report` writes into one directory:
//!
//! ```text
//! summary.csv              one row per run, columns in SUMMARY_COLUMNS order
//! runs/<run>.json          full report
//! losses/<run>.csv         epoch,loss (one row per epoch run)
//! scatter/<run>.csv        epoch,node,p for a fixed node sample
//! scatter/<run>.svg        the same data drawn as assignment-score tracks
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gnn::{binarize, TrainTrace};
use crate::pipeline::{RunReport, Variant};

pub mod duration_secs {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let secs = f64::deserialize(d)?;
        Ok(Duration::from_secs_f64(secs.max(0.0)))
    }
}

/// `(|loss_am| − |loss_mr|) / |loss_mr| · 100`. Positive means the guided run
/// reached a lower (more negative) loss.
pub fn delta_rel(loss_am: f64, loss_mr: f64) -> Result<f64> {
    if loss_mr == 0.0 || !loss_mr.is_finite() || !loss_am.is_finite() {
        return Err(Error::invalid(format!("delta_rel undefined for ({loss_am}, {loss_mr})")));
    }
    Ok((loss_am.abs() - loss_mr.abs()) / loss_mr.abs() * 100.0)
}

/// `(time_am − time_mr) / time_mr · 100`. Positive means mrGNN was faster.
pub fn delta_t(time_am: f64, time_mr: f64) -> Result<f64> {
    if !(time_mr > 0.0 && time_mr.is_finite() && time_am.is_finite()) {
        return Err(Error::invalid(format!("delta_t undefined for ({time_am}, {time_mr})")));
    }
    Ok((time_am - time_mr) / time_mr * 100.0)
}

/// Final-loss difference of a restricted run against the reference run
/// (the level ablation compares binarized Hamiltonians).
pub fn loss_delta(reference: f64, other: f64) -> f64 {
    other - reference
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ShiftAnalysis {
    /// Share of shifts in the early, mid and late third of training.
    pub proportions: [f64; 3],
    pub total_shifts: usize,
}

/// Count nodes whose binarized assignment flips between consecutive
/// snapshots. A flip belongs to the third of `0..epochs_run` that contains
/// the later snapshot.
pub fn shift_analysis(trace: &TrainTrace, threshold: f64) -> Result<ShiftAnalysis> {
    let snaps = &trace.snapshots;
    if snaps.len() < 2 {
        return Err(Error::invalid(format!(
            "shift analysis needs at least 2 snapshots, got {}",
            snaps.len()
        )));
    }
    let span = trace.epochs_run.max(snaps.last().unwrap().epoch + 1);
    let mut counts = [0usize; 3];
    let mut prev = binarize(&snaps[0].p, threshold);
    for s in &snaps[1..] {
        let cur = binarize(&s.p, threshold);
        if cur.len() != prev.len() {
            return Err(Error::DimensionMismatch {
                expected: prev.len(),
                actual: cur.len(),
            });
        }
        let flips = prev.iter().zip(&cur).filter(|(a, b)| a != b).count();
        counts[(3 * s.epoch / span).min(2)] += flips;
        prev = cur;
    }
    let total: usize = counts.iter().sum();
    let proportions = if total == 0 {
        [0.0; 3]
    } else {
        counts.map(|c| c as f64 / total as f64)
    };
    Ok(ShiftAnalysis {
        proportions,
        total_shifts: total,
    })
}

/// Summary CSV header, in order. Frozen: append new columns at the end.
pub const SUMMARY_COLUMNS: [&str; 30] = [
    "run",
    "variant",
    "problem",
    "n",
    "d",
    "graph_seed",
    "graph_source",
    "master_seed",
    "objective",
    "violations",
    "balance",
    "cut_size",
    "set_size",
    "loss_final",
    "loss_min",
    "time_local_am",
    "time_local_gnn",
    "time_main",
    "time_total",
    "time_louvain",
    "shift_early",
    "shift_mid",
    "shift_late",
    "total_shifts",
    "levels_used",
    "level_sizes",
    "sample_selected",
    "samples",
    "epochs_run",
    "solution",
];

pub fn run_id(index: usize, r: &RunReport) -> String {
    format!("{index:03}_{}_{}_s{}", r.variant.key(), r.problem, r.master_seed)
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(";")
}

fn summary_row(index: usize, r: &RunReport) -> Vec<String> {
    let m = &r.metrics;
    vec![
        run_id(index, r),
        r.variant.key().to_string(),
        r.problem.to_string(),
        r.graph.n.to_string(),
        opt(r.graph.d),
        opt(r.graph.seed),
        r.graph.source.clone().unwrap_or_default(),
        r.master_seed.to_string(),
        r.objective.to_string(),
        m.violations.to_string(),
        opt(m.balance),
        opt(m.cut_size),
        opt(m.set_size),
        r.loss_final.to_string(),
        r.loss_min.to_string(),
        r.time_local_am.to_string(),
        r.time_local_gnn.to_string(),
        r.time_main.to_string(),
        r.time_total.to_string(),
        r.time_louvain.to_string(),
        r.shift.proportions[0].to_string(),
        r.shift.proportions[1].to_string(),
        r.shift.proportions[2].to_string(),
        r.shift.total_shifts.to_string(),
        join(&r.levels_used),
        join(&r.level_sizes),
        r.sample_selected.to_string(),
        r.samples.to_string(),
        r.epochs_run.to_string(),
        r.x.iter().map(|b| char::from(b'0' + b)).collect(),
    ]
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Serde(format!("{}: {other:?}", path.display())),
    }
}

fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Evenly spaced node sample of at most `k` nodes.
pub fn sample_nodes(n: usize, k: usize) -> Vec<usize> {
    if k >= n {
        return (0..n).collect();
    }
    (0..k).map(|i| i * n / k).collect()
}

fn scatter_svg(trace: &TrainTrace, nodes: &[usize]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 360.0;
    const PAD: f64 = 40.0;
    let last = trace.snapshots.last().map_or(1, |s| s.epoch.max(1)) as f64;
    let px = |epoch: usize| PAD + (W - 2.0 * PAD) * epoch as f64 / last;
    let py = |p: f64| H - PAD - (H - 2.0 * PAD) * p;
    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    )
    .unwrap();
    writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    writeln!(
        out,
        r#"<g stroke="black" stroke-width="1"><line x1="{PAD}" y1="{y0}" x2="{x1}" y2="{y0}"/><line x1="{PAD}" y1="{PAD}" x2="{PAD}" y2="{y0}"/></g>"#,
        y0 = H - PAD,
        x1 = W - PAD
    )
    .unwrap();
    writeln!(
        out,
        r#"<line x1="{PAD}" y1="{y}" x2="{x1}" y2="{y}" stroke="gray" stroke-dasharray="4 4"/>"#,
        y = py(0.5),
        x1 = W - PAD
    )
    .unwrap();
    writeln!(
        out,
        r#"<g font-family="sans-serif" font-size="11"><text x="{}" y="{}">epoch</text><text x="4" y="{PAD}">p=1</text><text x="4" y="{}">p=0</text><text x="{}" y="{}">{}</text></g>"#,
        W / 2.0,
        H - 10.0,
        H - PAD,
        W - PAD - 20.0,
        H - PAD + 14.0,
        last
    )
    .unwrap();
    writeln!(out, r#"<g fill="steelblue" fill-opacity="0.35">"#).unwrap();
    for s in &trace.snapshots {
        for &v in nodes {
            writeln!(out, r#"<circle cx="{:.1}" cy="{:.1}" r="1.2"/>"#, px(s.epoch), py(s.p[v])).unwrap();
        }
    }
    out.push_str("</g>\n</svg>\n");
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmitOptions {
    /// Nodes per assignment-score scatter.
    pub scatter_nodes: usize,
}

impl Default for EmitOptions {
    fn default() -> Self {
        Self { scatter_nodes: 200 }
    }
}

#[derive(Debug, Clone, Default)]
pub struct EmittedFiles {
    pub summary: PathBuf,
    pub runs: Vec<PathBuf>,
    pub losses: Vec<PathBuf>,
    pub scatter_csv: Vec<PathBuf>,
    pub scatter_svg: Vec<PathBuf>,
}

#[derive(Serialize, Deserialize)]
struct RunFile {
    meta: RunMeta,
    report: RunReport,
}

#[derive(Serialize, Deserialize)]
struct RunMeta {
    run: String,
    /// Seconds since the Unix epoch. The only non-reproducible field.
    written_at: f64,
}

fn mkdir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub fn emit_report(reports: &[RunReport], out_dir: &Path, opts: &EmitOptions) -> Result<EmittedFiles> {
    if reports.is_empty() {
        return Err(Error::invalid("no reports to emit"));
    }
    for sub in ["runs", "losses", "scatter"] {
        mkdir(&out_dir.join(sub))?;
    }
    let mut files = EmittedFiles {
        summary: out_dir.join("summary.csv"),
        ..EmittedFiles::default()
    };
    write_csv(
        &files.summary,
        &SUMMARY_COLUMNS,
        reports.iter().enumerate().map(|(i, r)| summary_row(i, r)),
    )?;

    let now = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64());
    for (i, r) in reports.iter().enumerate() {
        let id = run_id(i, r);
        let json = out_dir.join("runs").join(format!("{id}.json"));
        // snapshots only survive as the sampled scatter export
        let mut slim = r.clone();
        slim.trace.snapshots.clear();
        let body = serde_json::to_string_pretty(&RunFile {
            meta: RunMeta {
                run: id.clone(),
                written_at: now,
            },
            report: slim,
        })
        .map_err(|e| Error::Serde(e.to_string()))?;
        fs::write(&json, body).map_err(|e| Error::io(&json, e))?;
        files.runs.push(json);

        let losses = out_dir.join("losses").join(format!("{id}.csv"));
        write_csv(
            &losses,
            &["epoch", "loss"],
            r.trace.losses.iter().enumerate().map(|(e, l)| vec![e.to_string(), l.to_string()]),
        )?;
        files.losses.push(losses);

        let nodes = sample_nodes(r.graph.n, opts.scatter_nodes);
        let scatter = out_dir.join("scatter").join(format!("{id}.csv"));
        write_csv(
            &scatter,
            &["epoch", "node", "p"],
            r.trace
                .snapshots
                .iter()
                .flat_map(|s| nodes.iter().map(move |&v| vec![s.epoch.to_string(), v.to_string(), s.p[v].to_string()])),
        )?;
        files.scatter_csv.push(scatter);

        let svg = out_dir.join("scatter").join(format!("{id}.svg"));
        fs::write(&svg, scatter_svg(&r.trace, &nodes)).map_err(|e| Error::io(&svg, e))?;
        files.scatter_svg.push(svg);
    }
    Ok(files)
}

/// Read every `runs/*.json` report under `dir`, ordered by file name.
pub fn load_reports(dir: &Path) -> Result<Vec<RunReport>> {
    let runs = dir.join("runs");
    let mut paths: Vec<PathBuf> = fs::read_dir(&runs)
        .map_err(|e| Error::io(&runs, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            let file: RunFile = serde_json::from_str(&text).map_err(|e| Error::Serde(format!("{}: {e}", p.display())))?;
            Ok(file.report)
        })
        .collect()
}

/// mrGNN+AM against mrGNN on one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub problem: String,
    pub n: usize,
    pub master_seed: u64,
    pub loss_mrgnn: f64,
    pub loss_mrgnn_am: f64,
    pub time_mrgnn: f64,
    pub time_mrgnn_am: f64,
    pub delta_rel: Option<f64>,
    pub delta_t: Option<f64>,
}

/// Pair mrGNN and mrGNN+AM reports that share problem, graph size and master
/// seed. Δ_rel uses the Hamiltonian of the binarized solutions, ΔT the total
/// time.
pub fn compare(reports: &[RunReport]) -> Vec<Comparison> {
    let key = |r: &RunReport| (r.problem.to_string(), r.graph.n, r.graph.seed, r.master_seed);
    let mut out = Vec::new();
    for am in reports.iter().filter(|r| r.variant == Variant::MrgnnAm) {
        let Some(mr) = reports.iter().find(|r| r.variant == Variant::Mrgnn && key(r) == key(am)) else {
            continue;
        };
        out.push(Comparison {
            problem: am.problem.to_string(),
            n: am.graph.n,
            master_seed: am.master_seed,
            loss_mrgnn: mr.objective,
            loss_mrgnn_am: am.objective,
            time_mrgnn: mr.time_total,
            time_mrgnn_am: am.time_total,
            delta_rel: delta_rel(am.objective, mr.objective).ok(),
            delta_t: delta_t(am.time_total, mr.time_total).ok(),
        });
    }
    out
}

pub const COMPARISON_COLUMNS: [&str; 9] = [
    "problem",
    "n",
    "master_seed",
    "loss_mrgnn",
    "loss_mrgnn_am",
    "time_mrgnn",
    "time_mrgnn_am",
    "delta_rel",
    "delta_t",
];

pub fn write_comparison(rows: &[Comparison], path: &Path) -> Result<()> {
    write_csv(
        path,
        &COMPARISON_COLUMNS,
        rows.iter().map(|c| {
            vec![
                c.problem.clone(),
                c.n.to_string(),
                c.master_seed.to_string(),
                c.loss_mrgnn.to_string(),
                c.loss_mrgnn_am.to_string(),
                c.time_mrgnn.to_string(),
                c.time_mrgnn_am.to_string(),
                opt(c.delta_rel),
                opt(c.delta_t),
            ]
        }),
    )
}
