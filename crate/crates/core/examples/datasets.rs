//! Build a small meta-train dataset, round-trip it through the MCC1 file
//! format and draw one 5-way 5-shot episode.
//!
//! cargo run --release --example datasets

use metacc::rng::stream;
use metacc::taskdist::format::{read_dataset, write_dataset};
use metacc::taskdist::{build_dataset, sample_episode, scenario, DatasetCounts, Role};

fn main() -> metacc::Result<()> {
    let sc = scenario("mixed")?;
    let counts = DatasetCounts { setups: 8, messages: 20, examples: 20 };
    let ds = build_dataset(&sc.train, counts, Role::MetaTrain, 42)?;
    for (i, s) in ds.setups.iter().enumerate() {
        println!("setup {i}: {} ω = {:?}", s.family().name(), s.omega());
    }

    let dir = std::env::temp_dir().join("metacc-datasets-example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("meta-train.mcc1");
    write_dataset(&ds, &path)?;
    let back = read_dataset(&path)?;
    println!("{} bytes written, round trip equal: {}", std::fs::metadata(&path)?.len(), back == ds);

    let ep = sample_episode(&ds, 5, 5, 15, &mut stream(1, 0))?;
    println!(
        "episode on {:?}: {} support and {} query pairs, support messages {:?}",
        ep.channel.omega(),
        ep.support.len(),
        ep.query.len(),
        ep.support_index
    );
    Ok(())
}
