//! Meta-train FOMAML on the focused AWGN scenario and compare query BER
//! before and after adaptation against Viterbi.
//!
//! cargo run --release --example meta_learning -- [iterations]

use std::time::Instant;

use metacc::metalearn::{evaluate, evaluate_viterbi, train, Algorithm, MetaConfig};
use metacc::rng::stream;
use metacc::taskdist::{build_dataset, sample_episode, scenario, DatasetCounts, Role};

fn main() -> metacc::Result<()> {
    let iterations = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(200);
    let sc = scenario("awgn-focused")?;
    let train_ds = build_dataset(&sc.train, DatasetCounts::META_TRAIN, Role::MetaTrain, 1)?;
    let test_ds = build_dataset(&sc.test, DatasetCounts::META_TEST, Role::MetaTest, 2)?;

    let cfg = MetaConfig { iterations, ..MetaConfig::for_algorithm(Algorithm::Fomaml) };
    let t0 = Instant::now();
    let state = train(&cfg, &train_ds, 3, |it, s| {
        if (it + 1) % 50 == 0 {
            println!("iter {:>5}  query loss {:.4}  {:.1}s", it + 1, s.loss, t0.elapsed().as_secs_f64());
        }
    })?;

    let mut rng = stream(4, 0);
    let e = cfg.episode;
    let episodes = (0..200)
        .map(|_| sample_episode(&test_ds, e.n_way, e.k_shot, e.l_query, &mut rng))
        .collect::<metacc::Result<Vec<_>>>()?;
    let pre = evaluate(&state, &episodes, false, &cfg)?;
    let post = evaluate(&state, &episodes, true, &cfg)?;
    let vit = evaluate_viterbi(&episodes)?;
    println!("BER before adaptation {:.4} ± {:.4}", pre.mean_ber, pre.stderr);
    println!("BER after adaptation  {:.4} ± {:.4}", post.mean_ber, post.stderr);
    println!("Viterbi               {:.4} ± {:.4}", vit.mean_ber, vit.stderr);
    Ok(())
}
