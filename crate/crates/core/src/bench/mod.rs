//! Experiment orchestration: train each learner on a scenario, evaluate it on
//! the scenario's test points, and aggregate the comparison.

mod report;
mod stats;

use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channel::ChannelSpec;
use crate::error::{Error, Result};
use crate::infometrics::{diversity_score, shift_distance, ShiftMode, DEFAULT_CODEWORDS, DEFAULT_NEIGHBOURS, DEFAULT_SAMPLES};
use crate::metalearn::{evaluate, evaluate_viterbi, train, Algorithm, MetaConfig, DESK_ITERATIONS};
use crate::rng::{derive_seed, stream};
use crate::taskdist::{
    build_dataset, build_dataset_with_setups, sample_episode_from_setup, scenario, BenchmarkDataset, Episode, Role,
    Scenario, TaskDistributionSpec,
};

pub use report::{emit_reports, read_results_csv, write_results_csv, ReportFiles, PLOT_FILES};
pub use stats::{average_ranks, rank_table, welch_t_test, win_table, RankEntry, Welch, WinCell, WinTable, ALPHA};

/// Name of the classical decoder in learner lists.
pub const VITERBI: &str = "viterbi";

/// A learner in an experiment: a meta-learner or the Viterbi decoder.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Learner {
    Viterbi,
    Meta(Algorithm),
}

impl Learner {
    pub fn parse(s: &str) -> Result<Self> {
        if s == VITERBI {
            return Ok(Learner::Viterbi);
        }
        Algorithm::parse(s).map(Learner::Meta).map_err(|_| Error::UnknownLearner {
            name: s.to_string(),
            valid: std::iter::once(VITERBI).chain(Algorithm::ALL.iter().map(|a| a.name())).collect::<Vec<_>>().join(", "),
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Learner::Viterbi => VITERBI,
            Learner::Meta(a) => a.name(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsBudget {
    /// Annotate rows with diversity and shift scores.
    pub enabled: bool,
    pub codewords: usize,
    pub samples: usize,
    pub k: usize,
}

impl Default for MetricsBudget {
    fn default() -> Self {
        Self { enabled: true, codewords: DEFAULT_CODEWORDS, samples: DEFAULT_SAMPLES, k: DEFAULT_NEIGHBOURS }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenarios: Vec<String>,
    pub learners: Vec<String>,
    pub seeds: Vec<u64>,
    /// Training hyper-parameters; the algorithm field is set per learner.
    pub meta: MetaConfig,
    /// Replace the iteration count with [`DESK_ITERATIONS`].
    pub desk_scale: bool,
    pub out: Option<PathBuf>,
    /// Evaluation episodes drawn from each meta-test setup.
    pub episodes_per_setup: usize,
    pub metrics: MetricsBudget,
    /// Reference learner of the win table.
    pub baseline: String,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scenarios: vec!["awgn-focused".into()],
            learners: vec!["erm".into(), "fomaml".into(), VITERBI.into()],
            seeds: vec![0],
            meta: MetaConfig::default(),
            desk_scale: false,
            out: None,
            episodes_per_setup: 4,
            metrics: MetricsBudget::default(),
            baseline: "erm".into(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.learners.is_empty() || self.seeds.is_empty() || self.scenarios.is_empty() {
            return Err(Error::Config("need at least one scenario, learner and seed".into()));
        }
        if self.episodes_per_setup == 0 {
            return Err(Error::Config("episodes_per_setup must be positive".into()));
        }
        for l in &self.learners {
            Learner::parse(l)?;
        }
        for s in &self.scenarios {
            scenario(s)?;
        }
        self.training_config(Algorithm::Fomaml).validate()
    }

    /// Training configuration of one meta-learner.
    pub fn training_config(&self, algorithm: Algorithm) -> MetaConfig {
        let iterations = if self.desk_scale { DESK_ITERATIONS } else { self.meta.iterations };
        MetaConfig { algorithm, iterations, ..self.meta.clone() }
    }
}

/// One learner evaluated at one test point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub scenario: String,
    pub learner: String,
    pub seed: u64,
    pub train_digest: String,
    pub test_point: String,
    pub ber: f64,
    pub stderr: f64,
    pub wall_time_s: f64,
    /// Diversity of the training distribution (NaN when not computed).
    pub diversity: f64,
    /// Shift distance from the training distribution to the test point
    /// (NaN when not computed).
    pub shift_distance: f64,
    pub episode_bers: Vec<f64>,
}

/// Hex SHA-256 of a distribution's canonical JSON, truncated to 16 digits.
pub fn spec_digest(spec: &TaskDistributionSpec) -> String {
    let json = serde_json::to_vec(spec).expect("distribution serializes");
    Sha256::digest(&json).iter().take(8).map(|b| format!("{b:02x}")).collect()
}

fn fmt_num(v: f64) -> String {
    let r = (v * 1e6).round() / 1e6;
    if r == 0.0 { "0".into() } else { r.to_string() }
}

/// Stable label of a test channel, e.g. `bursty(6,-14,0.1)`.
pub fn point_label(ch: &ChannelSpec) -> String {
    let parts: Vec<String> = ch.omega().into_iter().map(fmt_num).collect();
    format!("{}({})", ch.family().name(), parts.join(","))
}

/// Meta-test data of `sc` for one seed: the test points cycled over the
/// meta-test setups.
pub fn test_dataset(sc: &Scenario, k: usize, seed: u64) -> Result<BenchmarkDataset> {
    build_dataset_with_setups(sc.meta_test_setups(), sc.test_counts, k, Role::MetaTest, derive_seed(seed, "meta-test"))
}

/// Evaluation episodes grouped by test point (in `sc.test_points()` order).
pub fn test_episodes(sc: &Scenario, k: usize, seed: u64, per_setup: usize) -> Result<Vec<(ChannelSpec, Vec<Episode>)>> {
    let ds = test_dataset(sc, k, seed)?;
    let setups = ds.setups.clone();
    let shape = MetaConfig::default().episode;
    let mut rng = stream(derive_seed(seed, "test-episodes"), 0);
    let mut all = Vec::with_capacity(setups.len());
    for s in 0..setups.len() {
        let eps = (0..per_setup)
            .map(|_| sample_episode_from_setup(&ds, s, shape.n_way, shape.k_shot, shape.l_query, &mut rng))
            .collect::<Result<Vec<_>>>()?;
        all.push(eps);
    }
    Ok(sc
        .test_points()
        .into_iter()
        .map(|p| {
            let eps = setups.iter().zip(&all).filter(|(s, _)| **s == p).flat_map(|(_, e)| e.clone()).collect();
            (p, eps)
        })
        .collect())
}

/// Meta-training data of `sc` for one seed.
pub fn train_dataset(sc: &Scenario, seed: u64) -> Result<BenchmarkDataset> {
    build_dataset(&sc.train, sc.train_counts, Role::MetaTrain, derive_seed(seed, "meta-train"))
}

struct Annotations {
    diversity: f64,
    shift: Vec<f64>,
}

fn annotate(sc: &Scenario, seed: u64, budget: &MetricsBudget) -> Result<Annotations> {
    let points = sc.test_points();
    if !budget.enabled {
        return Ok(Annotations { diversity: f64::NAN, shift: vec![f64::NAN; points.len()] });
    }
    let digest = spec_digest(&sc.train);
    let mut rng = stream(derive_seed(seed, &format!("diversity:{digest}")), 0);
    let diversity = diversity_score(&sc.train, budget.codewords, budget.samples, budget.k, &mut rng)?.value;
    let shift = points
        .iter()
        .map(|p| {
            let test = TaskDistributionSpec::point(p);
            let mut rng = stream(derive_seed(seed, &format!("shift:{digest}:{}", spec_digest(&test))), 0);
            Ok(shift_distance(&sc.train, &test, budget.codewords, budget.samples, budget.k, ShiftMode::Symmetric, &mut rng)?.value)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Annotations { diversity, shift })
}

fn run_one(
    cfg: &ExperimentConfig,
    sc: &Scenario,
    seed: u64,
    learner: Learner,
    ds: Option<&BenchmarkDataset>,
    tests: &[(ChannelSpec, Vec<Episode>)],
    ann: &Annotations,
) -> Result<Vec<ResultRow>> {
    let start = Instant::now();
    let evals = match learner {
        Learner::Viterbi => tests.iter().map(|(_, eps)| evaluate_viterbi(eps)).collect::<Result<Vec<_>>>()?,
        Learner::Meta(alg) => {
            let mcfg = cfg.training_config(alg);
            let ds = ds.ok_or_else(|| Error::InsufficientData("meta-learner without training data".into()))?;
            let state = train(&mcfg, ds, derive_seed(seed, alg.name()), |_, _| {})?;
            tests.iter().map(|(_, eps)| evaluate(&state, eps, true, &mcfg)).collect::<Result<Vec<_>>>()?
        }
    };
    let wall = start.elapsed().as_secs_f64();
    let digest = spec_digest(&sc.train);
    Ok(tests
        .iter()
        .zip(evals)
        .enumerate()
        .map(|(i, ((p, _), e))| ResultRow {
            scenario: sc.name.clone(),
            learner: learner.name().to_string(),
            seed,
            train_digest: digest.clone(),
            test_point: point_label(p),
            ber: e.mean_ber,
            stderr: e.stderr,
            wall_time_s: wall,
            diversity: ann.diversity,
            shift_distance: ann.shift[i],
            episode_bers: e.episode_bers,
        })
        .collect())
}

/// Train and evaluate every (scenario, seed, learner) combination. Rows are
/// ordered by scenario, seed, learner (config order) and test point, and
/// everything except `wall_time_s` is deterministic in the seeds.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let learners = cfg.learners.iter().map(|l| Learner::parse(l)).collect::<Result<Vec<_>>>()?;
    let needs_data = learners.iter().any(|l| matches!(l, Learner::Meta(_)));
    let mut rows = Vec::new();
    for name in &cfg.scenarios {
        let sc = scenario(name)?;
        for &seed in &cfg.seeds {
            let ds = if needs_data { Some(train_dataset(&sc, seed)?) } else { None };
            let tests = test_episodes(&sc, crate::codec::DEFAULT_K, seed, cfg.episodes_per_setup)?;
            let ann = annotate(&sc, seed, &cfg.metrics)?;
            let per = learners
                .par_iter()
                .map(|&l| run_one(cfg, &sc, seed, l, ds.as_ref(), &tests, &ann))
                .collect::<Result<Vec<_>>>()?;
            rows.extend(per.into_iter().flatten());
        }
    }
    Ok(rows)
}
