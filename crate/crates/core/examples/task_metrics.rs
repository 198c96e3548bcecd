//! Diversity and shift scores for a few scenarios, next to the Monte-Carlo
//! oracles computed from the channel densities.
//!
//! cargo run --release --example task_metrics

use metacc::infometrics::{
    diversity_score, mc_kl_oracle, mc_mi_oracle, shift_distance, ShiftMode, DEFAULT_CODEWORDS, DEFAULT_NEIGHBOURS,
    DEFAULT_OMEGA_DRAWS, DEFAULT_SAMPLES,
};
use metacc::rng::stream;
use metacc::taskdist::{scenario, Interval, Prior, TaskDistributionSpec};

fn main() -> metacc::Result<()> {
    let (m, n, k) = (DEFAULT_CODEWORDS, DEFAULT_SAMPLES, DEFAULT_NEIGHBOURS);
    let mut rng = stream(1, 0);

    println!("diversity (KSG) vs mutual-information oracle, nats");
    for name in ["awgn-focused", "awgn-expanded", "mixed"] {
        let spec = scenario(name)?.train;
        let d = diversity_score(&spec, m, n, k, &mut rng)?;
        let o = mc_mi_oracle(&spec, m, 500, DEFAULT_OMEGA_DRAWS, &mut rng)?;
        println!("  {name:<16} {:>8.4} ± {:.4}   oracle {:>8.4} ± {:.4}", d.value, d.stderr, o.value, o.stderr);
    }

    println!("shift AWGN(SNR 0) vs AWGN(SNR g), symmetric k-NN KL vs oracle");
    let point = |snr| TaskDistributionSpec::single(Prior::Awgn { snr_db: Interval::point(snr) });
    for gap in [0.0, 2.0, 4.0, 6.0] {
        let s = shift_distance(&point(0.0), &point(gap), m, n, k, ShiftMode::Symmetric, &mut rng)?;
        let o = mc_kl_oracle(&point(0.0), &point(gap), ShiftMode::Symmetric, m, 500, 1, &mut rng)?;
        println!("  gap {gap:>3} dB   {:>8.4} ± {:.4}   oracle {:>8.4} ± {:.4}", s.value, s.stderr, o.value, o.stderr);
    }
    Ok(())
}
