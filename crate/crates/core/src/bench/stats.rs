use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::ResultRow;

/// Significance level of a win.
pub const ALPHA: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Welch {
    pub t: f64,
    pub df: f64,
    /// Two-sided.
    pub p: f64,
}

fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    (m, x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0))
}

/// Welch's unequal-variance t-test of `mean(a) − mean(b)`. `None` when
/// either sample has fewer than two values.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Option<Welch> {
    if a.len() < 2 || b.len() < 2 {
        return None;
    }
    let ((ma, va), (mb, vb)) = (mean_var(a), mean_var(b));
    let (sa, sb) = (va / a.len() as f64, vb / b.len() as f64);
    let se2 = sa + sb;
    if se2 == 0.0 {
        // both samples constant: identical means are indistinguishable,
        // different ones are separated with certainty
        let (t, p) = if ma == mb { (0.0, 1.0) } else { ((ma - mb).signum() * f64::INFINITY, 0.0) };
        return Some(Welch { t, df: f64::INFINITY, p });
    }
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2 / (sa * sa / (a.len() as f64 - 1.0) + sb * sb / (b.len() as f64 - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
    let p = (2.0 * (1.0 - dist.cdf(t.abs()))).clamp(0.0, 1.0);
    Some(Welch { t, df, p })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WinCell {
    pub scenario: String,
    pub learner: String,
    /// `None` when the cell lacks replicates or is the baseline itself.
    pub p: Option<f64>,
    pub win: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WinTable {
    pub baseline: String,
    pub cells: Vec<WinCell>,
    /// Percentage of scenarios each learner significantly beats the
    /// baseline in; `None` (N/A) when no cell was decidable.
    pub win_pct: BTreeMap<String, Option<f64>>,
}

/// Per (learner, scenario): Welch test of pooled per-episode BERs against
/// the baseline's. A win needs a lower mean and `p < 0.05`; cells with
/// fewer than two seeds on either side are N/A.
pub fn win_table(rows: &[ResultRow], baseline: &str) -> WinTable {
    let mut eps: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
    let mut seeds: BTreeMap<(String, String), BTreeSet<u64>> = BTreeMap::new();
    // sort so pooled samples do not depend on row order
    let mut sorted: Vec<&ResultRow> = rows.iter().collect();
    sorted.sort_by(|a, b| (&a.scenario, &a.learner, a.seed, &a.test_point).cmp(&(&b.scenario, &b.learner, b.seed, &b.test_point)));
    for r in sorted {
        let key = (r.learner.clone(), r.scenario.clone());
        eps.entry(key.clone()).or_default().extend(&r.episode_bers);
        seeds.entry(key).or_default().insert(r.seed);
    }
    let learners: BTreeSet<String> = rows.iter().map(|r| r.learner.clone()).collect();
    let scenarios: BTreeSet<String> = rows.iter().map(|r| r.scenario.clone()).collect();
    let mut cells = Vec::new();
    let mut win_pct = BTreeMap::new();
    for l in &learners {
        let (mut wins, mut decided) = (0usize, 0usize);
        for s in &scenarios {
            let own = (l.clone(), s.clone());
            let base = (baseline.to_string(), s.clone());
            let enough = |k: &(String, String)| seeds.get(k).is_some_and(|v| v.len() >= 2);
            let test = if l == baseline || !enough(&own) || !enough(&base) {
                None
            } else {
                welch_t_test(&eps[&own], &eps[&base])
            };
            let (p, win) = match test {
                Some(w) => {
                    decided += 1;
                    let win = w.t < 0.0 && w.p < ALPHA;
                    wins += usize::from(win);
                    (Some(w.p), Some(win))
                }
                None => (None, None),
            };
            if eps.contains_key(&own) {
                cells.push(WinCell { scenario: s.clone(), learner: l.clone(), p, win });
            }
        }
        win_pct.insert(l.clone(), (decided > 0).then(|| 100.0 * wins as f64 / decided as f64));
    }
    WinTable { baseline: baseline.to_string(), cells, win_pct }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankEntry {
    pub learner: String,
    pub mean_rank: f64,
    pub stderr: f64,
    pub cells: usize,
}

/// Ranks `values` ascending, 1-based; tied values share their mean rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &t in &idx[i..=j] {
            ranks[t] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Average rank per learner over (scenario, seed, test point) cells.
pub fn rank_table(rows: &[ResultRow]) -> Vec<RankEntry> {
    let mut cells: BTreeMap<(String, u64, String), BTreeMap<String, f64>> = BTreeMap::new();
    for r in rows {
        cells.entry((r.scenario.clone(), r.seed, r.test_point.clone())).or_default().insert(r.learner.clone(), r.ber);
    }
    let mut per: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for cell in cells.values() {
        let (names, bers): (Vec<&String>, Vec<f64>) = cell.iter().map(|(k, v)| (k, *v)).unzip();
        for (name, r) in names.into_iter().zip(average_ranks(&bers)) {
            per.entry(name.clone()).or_default().push(r);
        }
    }
    per.into_iter()
        .map(|(learner, r)| {
            let n = r.len() as f64;
            let mean = r.iter().sum::<f64>() / n;
            let stderr = if r.len() > 1 { (r.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt() } else { 0.0 };
            RankEntry { learner, mean_rank: mean, stderr, cells: r.len() }
        })
        .collect()
}
