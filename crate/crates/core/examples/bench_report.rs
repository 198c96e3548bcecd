//! A short comparison run: ERM, FOMAML, Reptile and Viterbi on one regime,
//! followed by the win and rank tables and the report files.
//!
//! cargo run --release --example bench_report -- [out-dir]

use std::path::PathBuf;

use metacc::bench::{emit_reports, run_experiment, ExperimentConfig, MetricsBudget};
use metacc::metalearn::MetaConfig;

fn main() -> metacc::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("metacc-report"));
    let cfg = ExperimentConfig {
        scenarios: vec!["awgn-focused".into()],
        learners: vec!["erm".into(), "fomaml".into(), "reptile".into(), "viterbi".into()],
        seeds: vec![0, 1],
        meta: MetaConfig { iterations: 30, ..MetaConfig::default() },
        episodes_per_setup: 2,
        metrics: MetricsBudget { codewords: 4, samples: 300, ..MetricsBudget::default() },
        ..ExperimentConfig::default()
    };
    let rows = run_experiment(&cfg)?;
    for r in &rows {
        println!("{} {:<8} seed {} {}: BER {:.4} ± {:.4}", r.scenario, r.learner, r.seed, r.test_point, r.ber, r.stderr);
    }
    let files = emit_reports(&rows, &out, &cfg.baseline)?;
    let summary = std::fs::read_to_string(&files.summary)?;
    let doc: serde_json::Value = serde_json::from_str(&summary)?;
    println!("win % vs {}: {}", cfg.baseline, doc["win_table"]["win_pct"]);
    for e in doc["rank_table"].as_array().into_iter().flatten() {
        println!("rank {:<8} {:.3}", e["learner"].as_str().unwrap_or(""), e["mean_rank"]);
    }
    println!("reports in {}", out.display());
    Ok(())
}
