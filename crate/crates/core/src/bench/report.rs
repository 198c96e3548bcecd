use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{rank_table, win_table, ResultRow};
use crate::error::{Error, Result};
use crate::taskdist::scenario;

/// Plot-data files written under `plotdata/`.
pub const PLOT_FILES: [&str; 6] =
    ["breadth.csv", "shift-within.csv", "shift-across.csv", "diversity-gain.csv", "distance-gain.csv", "domain-count.csv"];

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    scenario: String,
    learner: String,
    seed: u64,
    train_digest: String,
    test_point: String,
    ber: f64,
    stderr: f64,
    wall_time_s: f64,
    diversity: f64,
    shift_distance: f64,
    /// `;`-separated per-episode BERs.
    episode_bers: String,
}

impl From<&ResultRow> for CsvRow {
    fn from(r: &ResultRow) -> Self {
        Self {
            scenario: r.scenario.clone(),
            learner: r.learner.clone(),
            seed: r.seed,
            train_digest: r.train_digest.clone(),
            test_point: r.test_point.clone(),
            ber: r.ber,
            stderr: r.stderr,
            wall_time_s: r.wall_time_s,
            diversity: r.diversity,
            shift_distance: r.shift_distance,
            episode_bers: r.episode_bers.iter().map(f64::to_string).collect::<Vec<_>>().join(";"),
        }
    }
}

impl TryFrom<CsvRow> for ResultRow {
    type Error = Error;

    fn try_from(r: CsvRow) -> Result<Self> {
        let episode_bers = if r.episode_bers.is_empty() {
            Vec::new()
        } else {
            r.episode_bers
                .split(';')
                .map(|s| s.parse::<f64>().map_err(|e| Error::Format(format!("episode BER `{s}`: {e}"))))
                .collect::<Result<Vec<_>>>()?
        };
        if !(0.0..=1.0).contains(&r.ber) {
            return Err(Error::Format(format!("BER {} outside [0, 1]", r.ber)));
        }
        Ok(ResultRow {
            scenario: r.scenario,
            learner: r.learner,
            seed: r.seed,
            train_digest: r.train_digest,
            test_point: r.test_point,
            ber: r.ber,
            stderr: r.stderr,
            wall_time_s: r.wall_time_s,
            diversity: r.diversity,
            shift_distance: r.shift_distance,
            episode_bers,
        })
    }
}

pub fn write_results_csv(rows: &[ResultRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(CsvRow::from(r))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_results_csv(path: &Path) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize::<CsvRow>().map(|row| ResultRow::try_from(row?)).collect()
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let se = if xs.len() > 1 { (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt() } else { 0.0 };
    (m, se)
}

fn write_csv<S: Serialize>(path: &Path, header: &[&str], rows: &[S]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn is_breadth(s: &str) -> bool {
    s.ends_with("-focused") || s.ends_with("-expanded") || s == "mixed" || s.starts_with("mixed-")
}

/// Mean BER per (scenario, learner) over seeds and test points.
fn aggregate(rows: &[ResultRow], keep: impl Fn(&str) -> bool) -> Vec<(String, String, f64, f64, usize)> {
    let mut groups: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
    for r in rows.iter().filter(|r| keep(&r.scenario)) {
        groups.entry((r.scenario.clone(), r.learner.clone())).or_default().push(r.ber);
    }
    groups
        .into_iter()
        .map(|((s, l), b)| {
            let (m, se) = mean_se(&b);
            (s, l, m, se, b.len())
        })
        .collect()
}

/// BER of ERM minus BER of the learner at the same (scenario, seed, test
/// point); positive means the learner did better.
fn gains<'a>(rows: &'a [ResultRow], baseline: &str) -> Vec<(&'a ResultRow, f64)> {
    let base: BTreeMap<(&str, u64, &str), f64> = rows
        .iter()
        .filter(|r| r.learner == baseline)
        .map(|r| ((r.scenario.as_str(), r.seed, r.test_point.as_str()), r.ber))
        .collect();
    rows.iter()
        .filter(|r| r.learner != baseline)
        .filter_map(|r| base.get(&(r.scenario.as_str(), r.seed, r.test_point.as_str())).map(|b| (r, b - r.ber)))
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReportFiles {
    pub results: PathBuf,
    pub summary: PathBuf,
    pub plots: Vec<PathBuf>,
}

/// Write `results.csv`, `summary.json` and `plotdata/*.csv` under `dir`.
/// Gains are measured against ERM, the win table against `baseline`.
pub fn emit_reports(rows: &[ResultRow], dir: &Path, baseline: &str) -> Result<ReportFiles> {
    let plot_dir = dir.join("plotdata");
    fs::create_dir_all(&plot_dir)?;
    let results = dir.join("results.csv");
    write_results_csv(rows, &results)?;

    let summary = dir.join("summary.json");
    let doc = serde_json::json!({
        "metadata": {
            "gain": "ber_erm - ber_learner (positive: learner better than ERM)",
            "significance": "two-sided Welch t-test on per-episode BER, win iff lower mean and p < 0.05",
            "rank": "ascending BER within (scenario, seed, test point); ties share the mean rank",
            "baseline": baseline,
            "rows": rows.len(),
        },
        "win_table": win_table(rows, baseline),
        "rank_table": rank_table(rows),
    });
    fs::write(&summary, serde_json::to_string_pretty(&doc)?)?;

    let mut plots = Vec::new();
    let mut path = |name: &str| {
        let p = plot_dir.join(name);
        plots.push(p.clone());
        p
    };

    write_csv(&path(PLOT_FILES[0]), &["scenario", "learner", "mean_ber", "stderr", "rows"], &aggregate(rows, is_breadth))?;

    let points = |prefix: &str| -> Vec<(String, String, u64, String, f64, f64)> {
        rows.iter()
            .filter(|r| r.scenario.starts_with(prefix))
            .map(|r| (r.scenario.clone(), r.learner.clone(), r.seed, r.test_point.clone(), r.ber, r.stderr))
            .collect()
    };
    let header = ["scenario", "learner", "seed", "test_point", "ber", "stderr"];
    write_csv(&path(PLOT_FILES[1]), &header, &points("bursty-shift-"))?;
    write_csv(&path(PLOT_FILES[2]), &header, &points("across-"))?;

    let g = gains(rows, "erm");
    let mut per_run: BTreeMap<(String, String, u64), (f64, Vec<f64>)> = BTreeMap::new();
    for (r, gain) in &g {
        per_run.entry((r.scenario.clone(), r.learner.clone(), r.seed)).or_insert((r.diversity, Vec::new())).1.push(*gain);
    }
    let div: Vec<_> = per_run.into_iter().map(|((s, l, seed), (d, gs))| (s, l, seed, d, mean_se(&gs).0)).collect();
    write_csv(&path(PLOT_FILES[3]), &["scenario", "learner", "seed", "diversity", "gain"], &div)?;

    let dist: Vec<_> = g
        .iter()
        .map(|(r, gain)| (r.scenario.clone(), r.learner.clone(), r.seed, r.test_point.clone(), r.shift_distance, *gain))
        .collect();
    write_csv(&path(PLOT_FILES[4]), &["scenario", "learner", "seed", "test_point", "shift_distance", "gain"], &dist)?;

    let dc: Vec<_> = aggregate(rows, |s| s.starts_with("domain-count-"))
        .into_iter()
        .map(|(s, l, m, se, n)| {
            let setups = scenario(&s).map(|sc| sc.train_counts.setups).unwrap_or(0);
            (s, setups, l, m, se, n)
        })
        .collect();
    write_csv(&path(PLOT_FILES[5]), &["scenario", "setups", "learner", "mean_ber", "stderr", "rows"], &dc)?;

    Ok(ReportFiles { results, summary, plots })
}
