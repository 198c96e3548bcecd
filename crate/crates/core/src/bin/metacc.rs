use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use metacc::bench::{
    emit_reports, point_label, read_results_csv, run_experiment, spec_digest, test_dataset, test_episodes,
    train_dataset, write_results_csv, ExperimentConfig, Learner, ResultRow,
};
use metacc::codec::DEFAULT_K;
use metacc::infometrics::{diversity_score, shift_distance, MetricRow, ShiftMode};
use metacc::metalearn::{evaluate, evaluate_viterbi, train, MetaState};
use metacc::rng::{derive_seed, stream};
use metacc::taskdist::format::write_dataset;
use metacc::taskdist::{scenario, TaskDistributionSpec};
use metacc::tensor::checkpoint;
use metacc::{Error, Result};

#[derive(Parser)]
#[command(name = "metacc", version, about = "Channel-coding meta-learning benchmark")]
struct Cli {
    /// Experiment configuration (JSON); flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Use the reduced meta-iteration count.
    #[arg(long, global = true)]
    desk_scale: bool,
    /// Scenario name(s), comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    scenario: Vec<String>,
    /// Learner name(s), comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    learner: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write meta-train and meta-test datasets.
    GenData,
    /// Meta-train learners and write checkpoints.
    Train,
    /// Evaluate checkpoints written by `train` on the scenario test points.
    Eval,
    /// Estimate diversity or shift scores.
    Metrics {
        #[arg(value_enum)]
        kind: MetricKind,
        /// Asymmetric shift (train ‖ test) instead of the symmetrized one.
        #[arg(long)]
        asymmetric: bool,
    },
    /// Run the full comparison and write results, summary and plot data.
    Report {
        /// Re-aggregate an existing results.csv instead of running.
        #[arg(long)]
        results: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricKind {
    Diversity,
    Shift,
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seeds = vec![s];
    }
    if !cli.scenario.is_empty() {
        cfg.scenarios = cli.scenario.clone();
    }
    if !cli.learner.is_empty() {
        cfg.learners = cli.learner.clone();
    }
    if cli.desk_scale {
        cfg.desk_scale = true;
    }
    if cli.out.is_some() {
        cfg.out = cli.out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn out_dir(cfg: &ExperimentConfig) -> Result<PathBuf> {
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("metacc-out"));
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn checkpoint_path(dir: &Path, scenario: &str, learner: &str, seed: u64) -> PathBuf {
    dir.join(scenario).join(format!("{learner}-seed{seed}.mccp"))
}

fn gen_data(cfg: &ExperimentConfig, dir: &Path) -> Result<()> {
    for name in &cfg.scenarios {
        let sc = scenario(name)?;
        for &seed in &cfg.seeds {
            let sub = dir.join(name).join(format!("seed{seed}"));
            fs::create_dir_all(&sub)?;
            write_dataset(&train_dataset(&sc, seed)?, &sub.join("meta-train.mcc1"))?;
            write_dataset(&test_dataset(&sc, DEFAULT_K, seed)?, &sub.join("meta-test.mcc1"))?;
            eprintln!("wrote {}", sub.display());
        }
    }
    Ok(())
}

fn meta_learners(cfg: &ExperimentConfig) -> Result<Vec<metacc::metalearn::Algorithm>> {
    Ok(cfg
        .learners
        .iter()
        .map(|l| Learner::parse(l))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .filter_map(|l| match l {
            Learner::Meta(a) => Some(a),
            Learner::Viterbi => None,
        })
        .collect())
}

fn train_cmd(cfg: &ExperimentConfig, dir: &Path) -> Result<()> {
    let algs = meta_learners(cfg)?;
    for name in &cfg.scenarios {
        let sc = scenario(name)?;
        fs::create_dir_all(dir.join(name))?;
        for &seed in &cfg.seeds {
            let ds = train_dataset(&sc, seed)?;
            for &alg in &algs {
                let mcfg = cfg.training_config(alg);
                let mut log = String::from("iteration,loss\n");
                let state = train(&mcfg, &ds, derive_seed(seed, alg.name()), |it, s| {
                    log.push_str(&format!("{},{}\n", it + 1, s.loss));
                    if (it + 1) % 100 == 0 || it + 1 == mcfg.iterations {
                        eprintln!("{name} {alg} seed {seed}: iteration {}/{} loss {:.4}", it + 1, mcfg.iterations, s.loss);
                    }
                })?;
                let path = checkpoint_path(dir, name, alg.name(), seed);
                checkpoint::save(&state.to_checkpoint(), &path)?;
                fs::write(path.with_extension("loss.csv"), log)?;
                eprintln!("wrote {}", path.display());
            }
        }
    }
    Ok(())
}

fn eval_cmd(cfg: &ExperimentConfig, dir: &Path) -> Result<()> {
    let learners = cfg.learners.iter().map(|l| Learner::parse(l)).collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for name in &cfg.scenarios {
        let sc = scenario(name)?;
        for &seed in &cfg.seeds {
            let tests = test_episodes(&sc, DEFAULT_K, seed, cfg.episodes_per_setup)?;
            for &l in &learners {
                let start = std::time::Instant::now();
                let evals = match l {
                    Learner::Viterbi => tests.iter().map(|(_, e)| evaluate_viterbi(e)).collect::<Result<Vec<_>>>()?,
                    Learner::Meta(alg) => {
                        let path = checkpoint_path(dir, name, alg.name(), seed);
                        let ck = checkpoint::load(&path).map_err(|e| Error::Config(format!("{}: {e}; run `train` first", path.display())))?;
                        let mcfg = cfg.training_config(alg);
                        let state = MetaState::from_checkpoint(&ck, mcfg.outer_lr)?;
                        tests.iter().map(|(_, e)| evaluate(&state, e, true, &mcfg)).collect::<Result<Vec<_>>>()?
                    }
                };
                let wall = start.elapsed().as_secs_f64();
                for ((p, _), e) in tests.iter().zip(evals) {
                    println!("{name} {} seed {seed} {}: BER {:.4} ± {:.4}", l.name(), point_label(p), e.mean_ber, e.stderr);
                    rows.push(ResultRow {
                        scenario: name.clone(),
                        learner: l.name().into(),
                        seed,
                        train_digest: spec_digest(&sc.train),
                        test_point: point_label(p),
                        ber: e.mean_ber,
                        stderr: e.stderr,
                        wall_time_s: wall,
                        diversity: f64::NAN,
                        shift_distance: f64::NAN,
                        episode_bers: e.episode_bers,
                    });
                }
            }
        }
    }
    write_results_csv(&rows, &dir.join("eval-results.csv"))
}

fn metrics_cmd(cfg: &ExperimentConfig, dir: &Path, kind: MetricKind, asymmetric: bool) -> Result<()> {
    let b = &cfg.metrics;
    let mut rows = Vec::new();
    for name in &cfg.scenarios {
        let sc = scenario(name)?;
        for &seed in &cfg.seeds {
            let mut rng = stream(derive_seed(seed, &format!("metrics:{name}")), 0);
            match kind {
                MetricKind::Diversity => {
                    let d = diversity_score(&sc.train, b.codewords, b.samples, b.k, &mut rng)?;
                    println!("{name} seed {seed}: diversity {:.4} ± {:.4}", d.value, d.stderr);
                    rows.push(MetricRow::new(name, "diversity", &d, seed));
                }
                MetricKind::Shift => {
                    let mode = if asymmetric { ShiftMode::Asymmetric } else { ShiftMode::Symmetric };
                    for p in sc.test_points() {
                        let s = shift_distance(&sc.train, &TaskDistributionSpec::point(&p), b.codewords, b.samples, b.k, mode, &mut rng)?;
                        println!("{name} seed {seed} → {}: shift {:.4} ± {:.4}", point_label(&p), s.value, s.stderr);
                        rows.push(MetricRow::new(name, &format!("shift:{}", point_label(&p)), &s, seed));
                    }
                }
            }
        }
    }
    let file = match kind {
        MetricKind::Diversity => "metrics-diversity.json",
        MetricKind::Shift => "metrics-shift.json",
    };
    fs::write(dir.join(file), serde_json::to_string_pretty(&rows)?)?;
    Ok(())
}

fn report_cmd(cfg: &ExperimentConfig, dir: &Path, results: Option<&Path>) -> Result<()> {
    let rows = match results {
        Some(p) => read_results_csv(p)?,
        None => run_experiment(cfg)?,
    };
    let files = emit_reports(&rows, dir, &cfg.baseline)?;
    eprintln!("wrote {} and {}", files.results.display(), files.summary.display());
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = load_config(cli)?;
    let dir = out_dir(&cfg)?;
    match &cli.command {
        Command::GenData => gen_data(&cfg, &dir),
        Command::Train => train_cmd(&cfg, &dir),
        Command::Eval => eval_cmd(&cfg, &dir),
        Command::Metrics { kind, asymmetric } => metrics_cmd(&cfg, &dir, *kind, *asymmetric),
        Command::Report { results } => report_cmd(&cfg, &dir, results.as_deref()),
    }
}

fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var("METACC_THREADS") {
        let n: usize = v.parse().map_err(|_| Error::Config(format!("METACC_THREADS=`{v}` is not a thread count")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match init_threads().and_then(|_| run(&cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let config_error = matches!(e, Error::Config(_) | Error::UnknownScenario { .. } | Error::UnknownLearner { .. });
            ExitCode::from(if config_error { 2 } else { 3 })
        }
    }
}
