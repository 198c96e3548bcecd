//! Sample each channel family, print the empirical noise moments and the
//! exact log-density of one received word.
//!
//! cargo run --release --example channels

use metacc::channel::{empirical_moments, log_density, transmit, ChannelSpec};
use metacc::codec::{conv_encode, MessageBits};
use metacc::rng::stream;

fn main() -> metacc::Result<()> {
    let c = conv_encode(&MessageBits::new(vec![1, 1, 0, 1, 0, 0, 0, 1, 1, 0])?);
    let channels = [
        ChannelSpec::awgn_db(0.0),
        ChannelSpec::bursty_db(6.0, -14.0, 0.1),
        ChannelSpec::memory_db(0.0, 0.5),
        ChannelSpec::multipath_db(0.0, 0.5),
    ];
    let mut rng = stream(11, 0);
    for spec in &channels {
        let m = empirical_moments(spec, &c, 20_000, &mut rng)?;
        let var = m.variance.iter().sum::<f64>() / m.variance.len() as f64;
        let y = transmit(&c, spec, &mut rng)?;
        println!(
            "{:<10} ω = {:?}\n  mean noise variance {var:.3}, ln p(y|c) = {:.3}",
            spec.family().name(),
            spec.omega(),
            log_density(&y, &c, spec)?
        );
    }
    Ok(())
}
