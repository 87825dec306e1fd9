use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::runner::{mean, RunRecord};
use super::stats::phase_distribution;
use super::{ControllerKind, ExperimentConfig};
use crate::scenario::{read_json, write_json};
use crate::{Error, Result};

pub const EPISODES_CSV: &str = "episodes.csv";
pub const AGENTS_CSV: &str = "agents.csv";
pub const QUEUES_CSV: &str = "queues.csv";
pub const PHASES_CSV: &str = "phases.csv";
pub const TURNING_CSV: &str = "turning.csv";
pub const MT_LOSSES_CSV: &str = "mt_losses.csv";
pub const SUMMARY_CSV: &str = "summary.csv";
pub const CHART_SVG: &str = "att.svg";
pub const RECORDS_JSON: &str = "records.json";
pub const MANIFEST_JSON: &str = "manifest.json";

/// Replay information for a run directory.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub tool_version: String,
    pub configs: Vec<ExperimentConfig>,
    pub config_hashes: Vec<String>,
    pub seeds: Vec<u64>,
    /// SHA-256 of every metric file written.
    pub files: BTreeMap<String, String>,
    pub wall_clock_secs: f64,
}

/// Per-controller mean over seeds of the final and best episode ATT.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub controller: ControllerKind,
    pub seeds: usize,
    pub mean_final_att: f64,
    pub mean_best_att: f64,
}

pub fn summarize(records: &[RunRecord]) -> Vec<SummaryRow> {
    let mut by: BTreeMap<ControllerKind, Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        by.entry(r.controller).or_default().push(r);
    }
    by.into_iter()
        .map(|(controller, rs)| SummaryRow {
            controller,
            seeds: rs.len(),
            mean_final_att: mean(&rs.iter().map(|r| r.final_att()).collect::<Vec<_>>()),
            mean_best_att: mean(&rs.iter().map(|r| r.best_att()).collect::<Vec<_>>()),
        })
        .collect()
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Config(format!("writing {}: {other:?}", path.display())),
    }
}

fn write_csv<F>(path: &Path, header: &[&str], fill: F) -> Result<()>
where
    F: FnOnce(&mut dyn FnMut(Vec<String>) -> std::result::Result<(), csv::Error>) -> std::result::Result<(), csv::Error>,
{
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(header).map_err(|e| csv_error(path, e))?;
    fill(&mut |row| w.write_record(&row)).map_err(|e| csv_error(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

fn f(x: f64) -> String {
    format!("{x}")
}

fn opt(x: Option<f64>) -> String {
    x.map(f).unwrap_or_default()
}

/// Writes the metric CSVs, the chart and `records.json` into `dir`.
/// Returns the paths written. Output depends only on the records'
/// simulated content, never on wall-clock time.
pub fn export_records(dir: &Path, records: &[RunRecord]) -> Result<Vec<PathBuf>> {
    if records.is_empty() {
        return Err(Error::Contract("nothing to export".into()));
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let p = |name: &str| dir.join(name);

    write_csv(
        &p(EPISODES_CSV),
        &[
            "controller",
            "seed",
            "episode",
            "average_travel_time",
            "spawned",
            "completed",
            "mean_reward",
            "epsilon",
            "mt_loss_flow",
            "mt_loss_travel",
            "mt_loss_queue",
            "mt_loss_on_road",
        ],
        |emit| {
            for r in records {
                for e in &r.episodes {
                    let l = e.mt_loss;
                    emit(vec![
                        r.controller.to_string(),
                        r.seed.to_string(),
                        e.episode.to_string(),
                        f(e.average_travel_time),
                        e.spawned.to_string(),
                        e.completed.to_string(),
                        f(e.mean_reward),
                        f(e.epsilon),
                        opt(l.map(|l| l.flow)),
                        opt(l.map(|l| l.travel)),
                        opt(l.map(|l| l.queue)),
                        opt(l.map(|l| l.on_road)),
                    ])?;
                }
            }
            Ok(())
        },
    )?;

    write_csv(&p(AGENTS_CSV), &["controller", "seed", "episode", "agent", "cumulative_reward", "epsilon"], |emit| {
        for r in records {
            for e in &r.episodes {
                for (a, rew) in e.agent_rewards.iter().enumerate() {
                    let eps = e.agent_epsilons.get(a).or(e.agent_epsilons.first()).copied();
                    emit(vec![
                        r.controller.to_string(),
                        r.seed.to_string(),
                        e.episode.to_string(),
                        a.to_string(),
                        f(*rew),
                        opt(eps),
                    ])?;
                }
            }
        }
        Ok(())
    })?;

    write_csv(&p(QUEUES_CSV), &["controller", "seed", "epoch", "queue_total"], |emit| {
        for r in records {
            for (t, q) in r.queue_series.iter().enumerate() {
                emit(vec![r.controller.to_string(), r.seed.to_string(), t.to_string(), f(*q)])?;
            }
        }
        Ok(())
    })?;

    write_csv(&p(PHASES_CSV), &["controller", "seed", "agent", "phase", "count", "percent"], |emit| {
        for r in records {
            let pct = phase_distribution(&r.phase_counts);
            for (a, (counts, pcts)) in r.phase_counts.iter().zip(pct).enumerate() {
                for (k, (c, pc)) in counts.iter().zip(pcts).enumerate() {
                    emit(vec![
                        r.controller.to_string(),
                        r.seed.to_string(),
                        a.to_string(),
                        k.to_string(),
                        c.to_string(),
                        f(pc),
                    ])?;
                }
            }
        }
        Ok(())
    })?;

    write_csv(
        &p(TURNING_CSV),
        &["controller", "seed", "left", "straight", "right", "left_pct", "straight_pct"],
        |emit| {
            for r in records {
                let (l, s) = r.turning.left_straight_pct();
                emit(vec![
                    r.controller.to_string(),
                    r.seed.to_string(),
                    r.turning.left.to_string(),
                    r.turning.straight.to_string(),
                    r.turning.right.to_string(),
                    f(l),
                    f(s),
                ])?;
            }
            Ok(())
        },
    )?;

    write_csv(
        &p(MT_LOSSES_CSV),
        &["controller", "seed", "episode", "event", "flow", "travel", "queue", "on_road", "total"],
        |emit| {
            for r in records {
                for m in &r.mt_losses {
                    let l = m.losses;
                    emit(vec![
                        r.controller.to_string(),
                        r.seed.to_string(),
                        m.episode.to_string(),
                        m.event.to_string(),
                        f(l.flow),
                        f(l.travel),
                        f(l.queue),
                        f(l.on_road),
                        f(l.total()),
                    ])?;
                }
            }
            Ok(())
        },
    )?;

    write_csv(&p(SUMMARY_CSV), &["controller", "seeds", "mean_final_att", "mean_best_att"], |emit| {
        for row in summarize(records) {
            emit(vec![
                row.controller.to_string(),
                row.seeds.to_string(),
                f(row.mean_final_att),
                f(row.mean_best_att),
            ])?;
        }
        Ok(())
    })?;

    let (svg, _) = att_chart(records);
    std::fs::write(p(CHART_SVG), svg).map_err(|e| Error::io(&p(CHART_SVG), e))?;
    write_json(&p(RECORDS_JSON), &records)?;

    Ok([
        EPISODES_CSV,
        AGENTS_CSV,
        QUEUES_CSV,
        PHASES_CSV,
        TURNING_CSV,
        MT_LOSSES_CSV,
        SUMMARY_CSV,
        CHART_SVG,
        RECORDS_JSON,
    ]
    .iter()
    .map(|n| p(n))
    .collect())
}

/// Exports records and writes a manifest describing how they were made.
pub fn export_run(dir: &Path, configs: &[ExperimentConfig], records: &[RunRecord]) -> Result<Manifest> {
    let written = export_records(dir, records)?;
    let mut files = BTreeMap::new();
    for path in &written {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let name = path.file_name().expect("file name").to_string_lossy().into_owned();
        files.insert(name, hex::encode(Sha256::digest(&bytes)));
    }
    let mut seeds: Vec<u64> = records.iter().map(|r| r.seed).collect();
    seeds.sort_unstable();
    seeds.dedup();
    let manifest = Manifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config_hashes: configs.iter().map(ExperimentConfig::config_hash).collect(),
        configs: configs.to_vec(),
        seeds,
        files,
        wall_clock_secs: records.iter().map(|r| r.wall_clock_secs).sum(),
    };
    write_json(&dir.join(MANIFEST_JSON), &manifest)?;
    Ok(manifest)
}

pub fn load_records(dir: &Path) -> Result<Vec<RunRecord>> {
    let path = dir.join(RECORDS_JSON);
    if !path.exists() {
        return Err(Error::Config(format!("{} has no {RECORDS_JSON}", dir.display())));
    }
    read_json(&path)
}

/// Value range shown on a chart axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AxisRange {
    pub min: f64,
    pub max: f64,
}

/// Mean-over-seeds ATT per episode for each controller.
pub fn att_series(records: &[RunRecord]) -> Vec<(String, Vec<f64>)> {
    let mut by: BTreeMap<ControllerKind, Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        by.entry(r.controller).or_default().push(r);
    }
    by.into_iter()
        .map(|(k, rs)| {
            let len = rs.iter().map(|r| r.episodes.len()).min().unwrap_or(0);
            let ys = (0..len)
                .map(|e| mean(&rs.iter().map(|r| r.episodes[e].average_travel_time).collect::<Vec<_>>()))
                .collect();
            (k.to_string(), ys)
        })
        .collect()
}

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"];

/// Line chart of average travel time against episode, one line per
/// controller. Returns the SVG text and the y-axis range.
pub fn att_chart(records: &[RunRecord]) -> (String, AxisRange) {
    line_chart("Average travel time by episode", "episode", "average travel time (s)", &att_series(records))
}

pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[(String, Vec<f64>)]) -> (String, AxisRange) {
    let (w, h) = (720.0, 420.0);
    let (left, right, top, bottom) = (70.0, 150.0, 40.0, 50.0);
    let pw = w - left - right;
    let ph = h - top - bottom;
    let all = series.iter().flat_map(|(_, ys)| ys.iter().copied());
    let (mut lo, mut hi) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), y| (a.min(y), b.max(y)));
    if !lo.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    if hi - lo < 1e-9 {
        lo -= 1.0;
        hi += 1.0;
    }
    let n = series.iter().map(|(_, ys)| ys.len()).max().unwrap_or(1).max(2);
    let sx = |i: usize| left + pw * i as f64 / (n - 1) as f64;
    let sy = |y: f64| top + ph * (hi - y) / (hi - lo);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">{title}</text>"#, left + pw / 2.0);
    let _ = writeln!(
        s,
        r#"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for k in 0..=4 {
        let v = lo + (hi - lo) * k as f64 / 4.0;
        let y = sy(v);
        let _ = writeln!(
            s,
            r##"<line x1="{left}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="#ddd"/><text x="{}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="end">{v:.1}</text>"##,
            left + pw,
            left - 6.0,
            y + 4.0
        );
    }
    for k in 0..=4 {
        let i = (n - 1) * k / 4;
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{}" font-family="sans-serif" font-size="11" text-anchor="middle">{i}</text>"#,
            sx(i),
            top + ph + 16.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">{x_label}</text>"#,
        left + pw / 2.0,
        h - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle" transform="rotate(-90 16 {})">{y_label}</text>"#,
        top + ph / 2.0,
        top + ph / 2.0
    );
    for (j, (name, ys)) in series.iter().enumerate() {
        let color = PALETTE[j % PALETTE.len()];
        let pts: Vec<String> = ys.iter().enumerate().map(|(i, &y)| format!("{:.2},{:.2}", sx(i), sy(y))).collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            pts.join(" ")
        );
        let ly = top + 14.0 + 18.0 * j as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}" font-family="sans-serif" font-size="12">{name}</text>"#,
            w - right + 10.0,
            w - right + 30.0,
            w - right + 36.0,
            ly + 4.0
        );
    }
    s.push_str("</svg>\n");
    (s, AxisRange { min: lo, max: hi })
}
